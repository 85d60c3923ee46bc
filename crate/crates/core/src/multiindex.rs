//! Multi-indices over an ordered variable list.
//!
//! A [`Multiindex`] stores one exponent per variable.  The derived order is
//! graded lexicographic: indices compare first by total degree, then
//! lexicographically on the exponent vector.  This order is the canonical
//! enumeration order used everywhere in the crate (series printing, basis
//! monomials, derivative multi-index searches), so determinism of reports
//! reduces to determinism of this `Ord`.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Multiindex(Vec<u32>);

impl Multiindex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Multiindex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        Multiindex(vec![0; nvars])
    }

    /// The unit index `e_k` (1 in slot `k`).
    pub fn unit(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Multiindex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, k: usize) -> u32 {
        self.0[k]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn plus(&self, other: &Multiindex) -> Multiindex {
        assert_eq!(self.len(), other.len());
        Multiindex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn plus_unit(&self, k: usize) -> Multiindex {
        let mut e = self.0.clone();
        e[k] += 1;
        Multiindex(e)
    }

    /// `self - e_k`, or `None` if slot `k` is zero.
    pub fn minus_unit(&self, k: usize) -> Option<Multiindex> {
        if self.0[k] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[k] -= 1;
        Some(Multiindex(e))
    }

    /// Largest slot with a nonzero exponent.
    pub fn max_nonzero_slot(&self) -> Option<usize> {
        (0..self.len()).rev().find(|&k| self.0[k] > 0)
    }

    /// Expands into the nondecreasing list of slots, with multiplicity:
    /// `(2,1)` over two variables becomes `[0, 0, 1]`.
    pub fn slot_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.degree() as usize);
        for (k, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                seq.push(k);
            }
        }
        seq
    }
}

impl PartialOrd for Multiindex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Multiindex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Multiindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices over `nvars` variables with total degree exactly `d`,
/// in graded-lex order.
pub fn multiindices_of_degree(nvars: usize, d: u32) -> Vec<Multiindex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fill(&mut out, &mut current, 0, d);
    fn fill(out: &mut Vec<Multiindex>, current: &mut Vec<u32>, slot: usize, remaining: u32) {
        if slot + 1 == current.len() {
            current[slot] = remaining;
            out.push(Multiindex::new(current.clone()));
            current[slot] = 0;
            return;
        }
        for e in 0..=remaining {
            current[slot] = e;
            fill(out, current, slot + 1, remaining - e);
            current[slot] = 0;
        }
    }
    out.sort();
    out
}

/// All multi-indices with `lo <= degree <= hi`, in graded-lex order.
pub fn multiindices_in_degree_range(nvars: usize, lo: u32, hi: u32) -> Vec<Multiindex> {
    let mut out = Vec::new();
    for d in lo..=hi {
        out.extend(multiindices_of_degree(nvars, d));
    }
    out
}
