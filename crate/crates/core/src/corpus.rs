//! Built-in example germs with known embedding status.
//!
//! The corpus drives most integration tests: model quadrics of every
//! signature for n ≤ 2 (each with its tautological linear certificate), the
//! circular germs `|z|² + |z|^{2k}` whose certificates `(z, z^k, w)` embed
//! them into the sphere of `C³`, the uncertified `|z|² + |z|⁴ + |z|⁶`, and
//! seeded random polynomial germs.  Random germs are built over a
//! Levi-nondegenerate quadric part by adding conjugate-symmetric pairs of
//! higher monomials, so reality and nondegeneracy hold by construction and
//! the same seed always reproduces the same germ.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hypersurface::{EmbeddingCertificate, RealDefining};
use crate::multiindex::Multiindex;
use crate::parser::PolyMap;
use crate::rational::GaussianRational;

/// A named germ, optionally with an embedding witness.
#[derive(Debug, Clone)]
pub struct CorpusMember {
    pub name: String,
    pub germ: RealDefining,
    pub certificate: Option<EmbeddingCertificate>,
}

fn poly(n_slots: usize, terms: &[(&[u32], GaussianRational)]) -> PolyMap {
    let mut map = PolyMap::new();
    for (exps, c) in terms {
        assert_eq!(exps.len(), n_slots);
        map.insert(Multiindex::new(exps.to_vec()), c.clone());
    }
    map
}

/// Certificate `(z_{σ(1)}, …, z_{σ(m)}, w)` with the identity on a quadric
/// target: components are single variables of `(z_1..z_n, w)`.
fn linear_certificate(n: usize, slots: &[usize], signature_l: usize) -> EmbeddingCertificate {
    let one = GaussianRational::one();
    let mut maps = Vec::with_capacity(slots.len() + 1);
    for &s in slots {
        let mut e = vec![0u32; n + 1];
        e[s] = 1;
        maps.push(poly(n + 1, &[(&e, one.clone())]));
    }
    let mut w = vec![0u32; n + 1];
    w[n] = 1;
    maps.push(poly(n + 1, &[(&w, one)]));
    EmbeddingCertificate::new(slots.len(), signature_l, maps).expect("valid by construction")
}

/// Certificate `(z, z^k, w)` for `|z|² + |z|^{2k}` (n = 1) into the sphere
/// of `C³`.
fn power_certificate(k: u32) -> EmbeddingCertificate {
    let one = GaussianRational::one();
    let maps = vec![
        poly(2, &[(&[1, 0], one.clone())]),
        poly(2, &[(&[k, 0], one.clone())]),
        poly(2, &[(&[0, 1], one)]),
    ];
    EmbeddingCertificate::new(2, 0, maps).expect("valid by construction")
}

/// Deterministic random germ: `Σ z_i c_i` plus `extra_terms` random
/// conjugate-symmetric monomial pairs of total degree 3..=degree.
pub fn random_germ(n: usize, degree: u32, extra_terms: usize, seed: u64) -> RealDefining {
    assert!(degree >= 3, "random germs carry higher-order terms");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = 2 * n + 1;
    let mut map = PolyMap::new();
    for i in 0..n {
        let mut e = vec![0u32; nv];
        e[i] = 1;
        e[n + i] = 1;
        map.insert(Multiindex::new(e), GaussianRational::one());
    }
    let mut added = 0;
    while added < extra_terms {
        let d = rng.gen_range(3..=degree);
        let mut e = vec![0u32; nv];
        for _ in 0..d {
            e[rng.gen_range(0..nv)] += 1;
        }
        let mi = Multiindex::new(e.clone());
        let mut swapped = e;
        for i in 0..n {
            swapped.swap(i, n + i);
        }
        let swapped = Multiindex::new(swapped);
        let re_num = rng.gen_range(-3..=3i64);
        let im_num = rng.gen_range(-3..=3i64);
        let den = rng.gen_range(1..=3i64);
        let c = if swapped == mi {
            // Self-conjugate monomial: the coefficient must be real.
            GaussianRational::from_ratio(re_num, den)
        } else {
            &GaussianRational::from_ratio(re_num, den)
                + &(&GaussianRational::from_ratio(im_num, den) * &GaussianRational::i())
        };
        if c.is_zero() {
            continue;
        }
        let add = |map: &mut PolyMap, mi: &Multiindex, c: GaussianRational| {
            let entry = map
                .entry(mi.clone())
                .or_insert_with(GaussianRational::zero);
            *entry = &*entry + &c;
            if entry.is_zero() {
                map.remove(mi);
            }
        };
        if swapped == mi {
            add(&mut map, &mi, c);
        } else {
            add(&mut map, &mi, c.clone());
            add(&mut map, &swapped, c.conj());
        }
        added += 1;
    }
    RealDefining::new(n, map).expect("symmetrized construction is real and normalized")
}

/// The built-in corpus, in a fixed order.
pub fn corpus() -> Vec<CorpusMember> {
    let member = |name: &str, text: &str, n: usize, cert: Option<EmbeddingCertificate>| {
        CorpusMember {
            name: name.to_string(),
            germ: RealDefining::parse(text, n).expect("corpus germs are well-formed"),
            certificate: cert,
        }
    };
    vec![
        member("sphere", "z1*c1", 1, Some(linear_certificate(1, &[0], 0))),
        member(
            "quadric-n1-neg",
            "-z1*c1",
            1,
            Some(linear_certificate(1, &[0], 1)),
        ),
        member(
            "quadric-n2-pos",
            "z1*c1 + z2*c2",
            2,
            Some(linear_certificate(2, &[0, 1], 0)),
        ),
        member(
            "quadric-n2-mixed",
            "z1*c1 - z2*c2",
            2,
            // Im w = −|z₂|² + |z₁|²: the negative square comes first.
            Some(linear_certificate(2, &[1, 0], 1)),
        ),
        member(
            "quadric-n2-neg",
            "-z1*c1 - z2*c2",
            2,
            Some(linear_certificate(2, &[0, 1], 2)),
        ),
        member(
            "abs4",
            "z1*c1 + z1^2*c1^2",
            1,
            Some(power_certificate(2)),
        ),
        member(
            "abs6",
            "z1*c1 + z1^3*c1^3",
            1,
            Some(power_certificate(3)),
        ),
        member("abs246", "z1*c1 + z1^2*c1^2 + z1^3*c1^3", 1, None),
        CorpusMember {
            name: "random-n1-d8".to_string(),
            germ: random_germ(1, 8, 4, 101),
            certificate: None,
        },
        CorpusMember {
            name: "random-n2-d4".to_string(),
            germ: random_germ(2, 4, 4, 202),
            certificate: None,
        },
    ]
}
