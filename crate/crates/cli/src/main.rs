//! Command-line surface of the exact obstruction engine.
//!
//! Every command parses a defining function (inline `--phi` or a `--input`
//! file in the same DSL), runs one pipeline stage, and emits a canonical
//! JSON report: keys in sorted order, every rational as its exact display
//! string, the seed always echoed, and nothing time- or host-dependent — so
//! identical configurations produce byte-identical reports.
//!
//! Exit codes: 0 = test satisfied, 1 = obstructed, 2 = inconclusive (for
//! `check`; other commands use 0 for success), 64 = usage errors,
//! 65 = malformed or degenerate input, 70 = internal failures.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hyperquad_core::assoc_pde::{derive_pde, PdeSystem};
use hyperquad_core::bounds::{nu_of, p_of, s_bound, sharp_mu, weighted_cap, BoundReport};
use hyperquad_core::corpus::corpus;
use hyperquad_core::error::Error as CoreError;
use hyperquad_core::hypersurface::{
    real_to_complex, verify_certificate, ComplexDefining, RealDefining,
};
use hyperquad_core::multiindex::{multiindices_in_degree_range, Multiindex};
use hyperquad_core::obstruction::{
    build_matrix, build_row0, default_gamma_table, default_gamma_table_text,
    enumerate_alpha_choices, full_pipeline, layer_basis, matrix_det_at, matrix_det_series,
    pq_row_closed_form, sample_points, verdict_to_json, Conclusion, GammaTable, ObstructionSpec,
    MAX_SERIES_DET_SIZE,
};
use hyperquad_core::parser::{parse_polynomial, PolyMap};
use hyperquad_core::prolong::build_prolongation;
use hyperquad_core::rational::GaussianRational;
use hyperquad_core::series::{TruncatedSeries, VarSet};
use hyperquad_core::wronskian::{
    bordered_vanishing_implies_zero, extract_dependence, span_dims, Derivation, VectorFamily,
};

const SCHEMA_VERSION: u32 = 1;
const EXIT_OBSTRUCTED: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "hyperquad",
    version,
    about = "Exact symbolic test for transversal embeddability of real-analytic hypersurfaces into hyperquadrics",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full embeddability test and report the verdict.
    Check(CheckArgs),
    /// Emit the complex defining function and the associated system.
    AssocPde(AssocPdeArgs),
    /// Expose the raw generalized-Wronskian matrices of every layer.
    Obstruction(ObstructionArgs),
    /// Print order and size bounds for a source/target dimension pair.
    Bounds(BoundsArgs),
    /// Extract a certified constant dependence on the sliced base row.
    Wronskian(WronskianArgs),
    /// List the built-in germs and their certificate status.
    Corpus(CorpusArgs),
    /// Run the internal invariant suite.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args, Clone)]
struct GermInput {
    /// Defining function φ in the polynomial DSL over z1..zn, c1..cn, u.
    #[arg(long)]
    phi: Option<String>,
    /// Path to a DSL file: comment lines start with `#`, an optional
    /// `# name: …` header names the germ, the remaining lines hold one
    /// defining function.
    #[arg(long, conflicts_with = "phi")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    germ: GermInput,
    /// CR dimension of the source hypersurface.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Target hyperquadric dimension.
    #[arg(long = "N", default_value_t = 2)]
    target_n: usize,
    /// Truncation order for determinant series.
    #[arg(long, default_value_t = 4)]
    order: u32,
    /// Number of seeded sample points.
    #[arg(long, default_value_t = 8)]
    samples: usize,
    /// RNG seed (always echoed in the report).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Which determinant evidence to include in the report.
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AssocPdeArgs {
    #[command(flatten)]
    germ: GermInput,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Truncation order for the emitted series.
    #[arg(long, default_value_t = 6)]
    order: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ObstructionArgs {
    #[command(flatten)]
    germ: GermInput,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long = "N", default_value_t = 2)]
    target_n: usize,
    /// Truncation order for the emitted matrix entries.
    #[arg(long, default_value_t = 3)]
    order: u32,
    #[arg(long, default_value_t = 3)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: u64,
    #[arg(long = "N")]
    target_n: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct WronskianArgs {
    #[command(flatten)]
    germ: GermInput,
    /// Only n = 1 is supported: the slice construction is specific to the
    /// 16-function layer.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Maximum derivative level offered to the extractor.
    #[arg(long, default_value_t = 8)]
    order: u32,
    #[arg(long, default_value_t = 41)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Order to which certificates are verified.
    #[arg(long, default_value_t = 8)]
    order: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Run the reduced suite (a few seconds instead of about a minute).
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Point,
    Series,
    Both,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Point => "point",
            Mode::Series => "series",
            Mode::Both => "both",
        }
    }
    fn wants_points(self) -> bool {
        matches!(self, Mode::Point | Mode::Both)
    }
    fn wants_series(self) -> bool {
        matches!(self, Mode::Series | Mode::Both)
    }
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
    fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            msg: msg.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::BadSpec(_) => EXIT_USAGE,
            CoreError::Parse { .. }
            | CoreError::NotNormalized(_)
            | CoreError::RealityViolation { .. }
            | CoreError::LeviDegenerate { .. }
            | CoreError::UnknownVar(_)
            | CoreError::WrongArity { .. } => EXIT_DATA,
            _ => EXIT_INTERNAL,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.msg);
            ExitCode::from(err.code)
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Check(args) => cmd_check(args),
        Command::AssocPde(args) => cmd_assoc_pde(args),
        Command::Obstruction(args) => cmd_obstruction(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Wronskian(args) => cmd_wronskian(args),
        Command::Corpus(args) => cmd_corpus(args),
        Command::Selfcheck(args) => cmd_selfcheck(args),
    }
}

// ---------------------------------------------------------------------------
// Input and report plumbing
// ---------------------------------------------------------------------------

/// Loaded germ together with its display name and any removed constant term.
struct LoadedGerm {
    name: String,
    germ: RealDefining,
    source: String,
    constant_removed: Option<String>,
}

fn load_germ(input: &GermInput, n: usize) -> Result<LoadedGerm, CliError> {
    let (name, text) = match (&input.phi, &input.input) {
        (Some(phi), None) => ("inline".to_string(), phi.clone()),
        (None, Some(path)) => {
            let raw = fs::read_to_string(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            let mut name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".to_string());
            let mut body_lines = Vec::new();
            for line in raw.lines() {
                let trimmed = line.trim();
                if let Some(rest) = trimmed.strip_prefix('#') {
                    if let Some(n) = rest.trim().strip_prefix("name:") {
                        name = n.trim().to_string();
                    }
                    continue;
                }
                if !trimmed.is_empty() {
                    body_lines.push(trimmed.to_string());
                }
            }
            if body_lines.is_empty() {
                return Err(CliError::data(format!(
                    "{}: no defining function outside comments",
                    path.display()
                )));
            }
            (name, body_lines.join(" "))
        }
        (None, None) => {
            return Err(CliError::usage(
                "a defining function is required: pass --phi or --input",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let mut poly: PolyMap = parse_polynomial(&text, n)?;
    // The germ must pass through the origin; a constant term only shifts the
    // hypersurface, so remove it rather than reject the input.
    let constant_removed = poly
        .remove(&Multiindex::zero(2 * n + 1))
        .map(|c| c.to_string());
    let germ = RealDefining::new(n, poly)?;
    Ok(LoadedGerm {
        name,
        germ,
        source: text,
        constant_removed,
    })
}

fn fingerprint(text: &str) -> String {
    // FNV-1a, 64-bit: a stable content stamp for the shipped table.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn base_report(command: &str, config: Value) -> Value {
    json!({
        "command": command,
        "config": config,
        "gamma_table": {
            "entries": default_gamma_table().map(|t| t.len()).unwrap_or(0),
            "fingerprint": fingerprint(default_gamma_table_text()),
        },
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
    })
}

fn germ_json(loaded: &LoadedGerm) -> Value {
    json!({
        "constant_removed": loaded.constant_removed,
        "degree": loaded.germ.degree(),
        "n": loaded.germ.n(),
        "name": loaded.name,
        "phi": loaded.source,
    })
}

fn path_json(p: &Option<PathBuf>) -> Value {
    match p {
        Some(p) => json!(p.display().to_string()),
        None => Value::Null,
    }
}

fn emit(output: &Option<PathBuf>, report: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report)
        .expect("reports serialize")
        + "\n";
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn series_string(s: &TruncatedSeries, order: u32) -> String {
    s.truncate_to(order.min(s.cap()))
        .expect("lowering a cap never fails")
        .to_string()
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<u8, CliError> {
    if args.target_n < args.n {
        return Err(CliError::usage(format!(
            "target dimension N = {} is below the source dimension n = {}",
            args.target_n, args.n
        )));
    }
    let loaded = load_germ(&args.germ, args.n)?;
    let verdict = full_pipeline(
        &loaded.germ,
        args.target_n,
        args.order,
        args.samples,
        args.seed,
    )?;
    let mut verdict_json = verdict_to_json(&verdict);
    strip_mode(&mut verdict_json, args.mode);
    let mut report = base_report(
        "check",
        json!({
            "N": args.target_n,
            "input": path_json(&args.germ.input),
            "mode": args.mode.as_str(),
            "n": args.n,
            "order": args.order,
            "output": path_json(&args.output),
            "phi": args.germ.phi,
            "samples": args.samples,
            "seed": args.seed,
        }),
    );
    report["germ"] = germ_json(&loaded);
    report["verdict"] = verdict_json;
    emit(&args.output, &report)?;
    Ok(match verdict.conclusion {
        Conclusion::ObstructionSatisfied => 0,
        Conclusion::Obstructed => EXIT_OBSTRUCTED,
        Conclusion::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

/// Removes the evidence kind the chosen mode excludes, everywhere in the
/// verdict.
fn strip_mode(verdict: &mut Value, mode: Mode) {
    let Some(layers) = verdict.get_mut("layers").and_then(Value::as_array_mut) else {
        return;
    };
    for layer in layers {
        let Some(factors) = layer.get_mut("factors").and_then(Value::as_array_mut) else {
            continue;
        };
        for factor in factors {
            let Some(map) = factor.as_object_mut() else {
                continue;
            };
            if !mode.wants_points() {
                map.remove("point_values");
                map.remove("point_semantics");
            }
            if !mode.wants_series() {
                map.remove("series_order");
                map.remove("first_nonzero_order");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// assoc-pde
// ---------------------------------------------------------------------------

fn derive_at(germ: &RealDefining, rho_cap: u32) -> Result<(ComplexDefining, PdeSystem), CliError> {
    let r = real_to_complex(germ, rho_cap)?;
    let (sys, _) = derive_pde(&r)?;
    Ok((r, sys))
}

fn cmd_assoc_pde(args: AssocPdeArgs) -> Result<u8, CliError> {
    let loaded = load_germ(&args.germ, args.n)?;
    let n = loaded.germ.n();
    let (r, sys) = derive_at(&loaded.germ, args.order + 2)?;
    let mut entries = Vec::new();
    let origin_vars: Vec<String> = (1..=n)
        .map(|i| format!("z{i}"))
        .chain(std::iter::once("w".to_string()))
        .collect();
    let origin_refs: Vec<&str> = origin_vars.iter().map(String::as_str).collect();
    for i in 0..n {
        for j in i..n {
            let phi = sys.phi(i, j);
            entries.push(json!({
                "at_origin": series_string(&phi.restrict_zero(&origin_refs)?, args.order),
                "i": i + 1,
                "j": j + 1,
                "series": series_string(phi, args.order),
            }));
        }
    }
    let mut report = base_report(
        "assoc-pde",
        json!({
            "input": path_json(&args.germ.input),
            "n": args.n,
            "order": args.order,
            "output": path_json(&args.output),
            "phi": args.germ.phi,
        }),
    );
    report["germ"] = germ_json(&loaded);
    report["system"] = json!({
        "jet_variables": (1..=n).map(|i| format!("xi{i}")).collect::<Vec<_>>(),
        "phi": entries,
        "rho": series_string(r.rho(), args.order),
    });
    emit(&args.output, &report)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// obstruction
// ---------------------------------------------------------------------------

fn cmd_obstruction(args: ObstructionArgs) -> Result<u8, CliError> {
    if args.target_n < args.n {
        return Err(CliError::usage(format!(
            "target dimension N = {} is below the source dimension n = {}",
            args.target_n, args.n
        )));
    }
    let loaded = load_germ(&args.germ, args.n)?;
    let n = loaded.germ.n();
    let table = default_gamma_table()?;
    // Plan all layers first so one system derivation serves every factor.
    struct Plan {
        m: usize,
        alphas: Vec<Multiindex>,
        d: u32,
        gammas: Option<Vec<Multiindex>>,
    }
    let mut plans = Vec::new();
    let mut syscap = 3u32;
    for m in n..=args.target_n {
        let k = (m - n + 1) as u32;
        for alphas in enumerate_alpha_choices(n, m)? {
            let d: u32 = alphas.iter().map(Multiindex::degree).sum();
            let s = layer_basis(n, m, d).len() - 1;
            let gammas = table
                .lookup(n, m, d)
                .filter(|g| g.len() == s)
                .map(|g| g.to_vec());
            if let Some(g) = &gammas {
                let max_gamma = g.iter().map(Multiindex::degree).max().unwrap_or(0);
                syscap = syscap.max(args.order + max_gamma + (k - 1));
            }
            plans.push(Plan {
                m,
                alphas,
                d,
                gammas,
            });
        }
    }
    let (_, sys) = derive_at(&loaded.germ, syscap + 2)?;
    let points = sample_points(2 * n + 1, args.samples, args.seed);
    let mut factors = Vec::new();
    for plan in plans {
        let mi_list =
            |ms: &[Multiindex]| ms.iter().map(|m| json!(m.exponents())).collect::<Vec<_>>();
        let mut factor = json!({
            "alphas": mi_list(&plan.alphas),
            "d": plan.d,
            "gammas": plan.gammas.as_ref().map(|g| mi_list(g)),
            "m": plan.m,
        });
        if let Some(gammas) = plan.gammas {
            let basis = layer_basis(n, plan.m, plan.d);
            let spec = ObstructionSpec::new(n, plan.m, plan.alphas, basis, gammas)?;
            let matrix = build_matrix(&spec, &sys)?;
            factor["size"] = json!(matrix.size());
            let rows: Vec<Vec<String>> = matrix
                .rows()
                .iter()
                .map(|row| row.iter().map(|e| series_string(e, args.order)).collect())
                .collect();
            factor["matrix"] = json!(rows);
            if args.mode.wants_series() {
                factor["det_series"] = if matrix.size() <= MAX_SERIES_DET_SIZE {
                    json!(series_string(&matrix_det_series(&matrix)?, args.order))
                } else {
                    Value::Null
                };
            }
            if args.mode.wants_points() {
                let values: Result<Vec<String>, CoreError> = points
                    .iter()
                    .map(|p| matrix_det_at(&matrix, p).map(|v| v.to_string()))
                    .collect();
                factor["det_values"] = json!(values?);
            }
        } else {
            factor["size"] = Value::Null;
            factor["note"] =
                json!("no tabulated row derivatives for this layer; matrix omitted");
        }
        factors.push(factor);
    }
    let mut report = base_report(
        "obstruction",
        json!({
            "N": args.target_n,
            "input": path_json(&args.germ.input),
            "mode": args.mode.as_str(),
            "n": args.n,
            "order": args.order,
            "output": path_json(&args.output),
            "phi": args.germ.phi,
            "samples": args.samples,
            "seed": args.seed,
        }),
    );
    report["germ"] = germ_json(&loaded);
    report["factors"] = json!(factors);
    report["points"] = json!(points
        .iter()
        .map(|p| p.iter().map(GaussianRational::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>());
    emit(&args.output, &report)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

fn cmd_bounds(args: BoundsArgs) -> Result<u8, CliError> {
    if args.n == 0 || args.target_n < args.n {
        return Err(CliError::usage(format!(
            "bounds need N ≥ n ≥ 1, got n = {}, N = {}",
            args.n, args.target_n
        )));
    }
    let mut rows = Vec::new();
    for m in args.n..=args.target_n {
        rows.push(json!({
            "m": m,
            "nu": nu_of(args.n, m)?.to_string(),
            "p": p_of(m, args.n)?.to_string(),
            "s_bound": s_bound(m, args.n)?.to_string(),
            "weighted_cap": weighted_cap(m),
        }));
    }
    let report_data = BoundReport::for_target(args.n, args.target_n)?;
    let mut report = base_report(
        "bounds",
        json!({
            "N": args.target_n,
            "n": args.n,
            "output": path_json(&args.output),
        }),
    );
    report["bounds"] = json!({
        "layers": rows,
        "mu": report_data.mu.to_string(),
        "sharp_mu": report_data.sharp_mu,
    });
    emit(&args.output, &report)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// wronskian
// ---------------------------------------------------------------------------

fn cmd_wronskian(args: WronskianArgs) -> Result<u8, CliError> {
    if args.n != 1 {
        return Err(CliError::usage(
            "the slice construction is specific to n = 1",
        ));
    }
    let loaded = load_germ(&args.germ, 1)?;
    let (_, sys) = derive_at(&loaded.germ, 22)?;
    let table = default_gamma_table()?;
    let spec = ObstructionSpec::for_layer(
        1,
        2,
        vec![
            Multiindex::new(vec![1]),
            Multiindex::new(vec![2]),
            Multiindex::new(vec![3]),
        ],
        &table,
    )?;
    let row0 = build_row0(&spec, &sys)?;
    let slices: Vec<TruncatedSeries> = row0
        .iter()
        .map(|e| e.restrict_zero(&["z1", "w"]))
        .collect::<Result<_, _>>()?;
    let zero_slices = slices.iter().filter(|s| s.is_zero()).count();
    let components: Vec<TruncatedSeries> = slices
        .into_iter()
        .filter(|s| !s.is_zero() && s.constant_term().is_zero())
        .collect();
    if components.is_empty() {
        return Err(CliError::data(
            "every sliced row entry is zero or constant; nothing to extract",
        ));
    }
    let vars = components[0].vars().clone();
    let cap = components[0].cap();
    let fam = VectorFamily::new(
        components.clone(),
        vec![Derivation::coordinate(vars, cap, 2)?],
    )?;
    let q = [
        GaussianRational::zero(),
        GaussianRational::zero(),
        GaussianRational::from_ratio(1, 7),
    ];
    let profile = span_dims(&fam, &q, args.order.max(2))?;
    let (lambda, outcome) = match extract_dependence(&fam, &q, args.order.max(2), args.seed) {
        Ok(Some(lambda)) => {
            let rendered: Vec<String> = lambda.iter().map(GaussianRational::to_string).collect();
            (json!(rendered), "dependence-found".to_string())
        }
        Ok(None) => (Value::Null, "spans-fill-target".to_string()),
        Err(CoreError::NoDependence(msg)) => (Value::Null, format!("refused: {msg}")),
        Err(e) => return Err(e.into()),
    };
    let mut report = base_report(
        "wronskian",
        json!({
            "input": path_json(&args.germ.input),
            "n": args.n,
            "order": args.order,
            "output": path_json(&args.output),
            "phi": args.germ.phi,
            "seed": args.seed,
        }),
    );
    report["germ"] = germ_json(&loaded);
    report["wronskian"] = json!({
        "components": components.len(),
        "lambda": lambda,
        "outcome": outcome,
        "span_dims": profile.dims(),
        "zero_slices": zero_slices,
    });
    emit(&args.output, &report)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// corpus
// ---------------------------------------------------------------------------

fn cmd_corpus(args: CorpusArgs) -> Result<u8, CliError> {
    let mut members = Vec::new();
    for member in corpus() {
        let verified = match &member.certificate {
            Some(cert) => Some(verify_certificate(&member.germ, cert, args.order)?),
            None => None,
        };
        members.push(json!({
            "certificate": member.certificate.as_ref().map(|c| json!({
                "signature": c.signature_l(),
                "target_dimension": c.m(),
            })),
            "certificate_verified": verified,
            "degree": member.germ.degree(),
            "n": member.germ.n(),
            "name": member.name,
            "phi": member.germ.phi_series(member.germ.degree()).to_string(),
        }));
    }
    let mut report = base_report(
        "corpus",
        json!({
            "order": args.order,
            "output": path_json(&args.output),
        }),
    );
    report["members"] = json!(members);
    emit(&args.output, &report)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// selfcheck
// ---------------------------------------------------------------------------

fn cmd_selfcheck(args: SelfcheckArgs) -> Result<u8, CliError> {
    let quick = args.quick;
    let mut checks: Vec<(String, std::result::Result<String, String>)> = Vec::new();

    checks.push(("gamma-table-valid".to_string(), check_gamma_table()));
    checks.push(("bound-values-pinned".to_string(), check_bounds()));
    checks.push((
        "corpus-certificates".to_string(),
        check_corpus_certificates(if quick { 6 } else { 8 }),
    ));
    checks.push((
        "explicit-generic-agreement".to_string(),
        check_closed_form(if quick { 14 } else { 22 }, quick),
    ));
    checks.push((
        "bordered-determinants".to_string(),
        check_bordered(if quick { 50 } else { 200 }, args.seed),
    ));
    checks.push(("planted-extraction".to_string(), check_planted()));
    checks.push((
        "prolongation-degrees".to_string(),
        check_prolongation(if quick { 2 } else { 3 }),
    ));
    checks.push((
        "segre-solutions".to_string(),
        check_segre(quick),
    ));

    let results: Vec<Value> = checks
        .iter()
        .map(|(name, outcome)| {
            json!({
                "detail": match outcome {
                    Ok(detail) => detail.clone(),
                    Err(detail) => detail.clone(),
                },
                "name": name,
                "pass": outcome.is_ok(),
            })
        })
        .collect();
    let failed: Vec<&String> = checks
        .iter()
        .filter(|(_, outcome)| outcome.is_err())
        .map(|(name, _)| name)
        .collect();
    let mut report = base_report(
        "selfcheck",
        json!({
            "output": path_json(&args.output),
            "quick": quick,
            "seed": args.seed,
        }),
    );
    report["checks"] = json!(results);
    report["pass"] = json!(failed.is_empty());
    emit(&args.output, &report)?;
    if failed.is_empty() {
        Ok(0)
    } else {
        let mut msg = String::from("selfcheck failed:");
        for name in failed {
            let _ = write!(msg, " {name}");
        }
        Err(CliError {
            code: EXIT_INTERNAL,
            msg,
        })
    }
}

/// Validates the shipped table, or the file named by HYPERQUAD_GAMMA_TABLE
/// when that variable is set (so a corrupted table is reported by name).
fn check_gamma_table() -> std::result::Result<String, String> {
    let table = match std::env::var_os("HYPERQUAD_GAMMA_TABLE") {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", PathBuf::from(&path).display()))?;
            GammaTable::parse(&text).map_err(|e| e.to_string())?
        }
        None => default_gamma_table().map_err(|e| e.to_string())?,
    };
    for (n, m, d, want) in [(1usize, 1usize, 3u32, 4usize), (1, 2, 6, 15), (2, 2, 4, 33)] {
        let got = table
            .lookup(n, m, d)
            .ok_or_else(|| format!("missing entry ({n}, {m}, {d})"))?
            .len();
        if got != want {
            return Err(format!(
                "entry ({n}, {m}, {d}) lists {got} derivatives, expected {want}"
            ));
        }
    }
    Ok(format!("{} entries", table.len()))
}

fn check_bounds() -> std::result::Result<String, String> {
    let ok = p_of(2, 1).map_err(|e| e.to_string())?.to_string() == "3"
        && s_bound(2, 1).map_err(|e| e.to_string())?.to_string() == "84"
        && nu_of(1, 2).map_err(|e| e.to_string())?.to_string() == "87"
        && nu_of(1, 1).map_err(|e| e.to_string())?.to_string() == "12"
        && sharp_mu(1, 2) == Some(18);
    if ok {
        Ok("p, s, ν pinned values and the sharp order hold".to_string())
    } else {
        Err("a pinned bound value changed".to_string())
    }
}

fn check_corpus_certificates(order: u32) -> std::result::Result<String, String> {
    let mut verified = 0;
    for member in corpus() {
        if let Some(cert) = &member.certificate {
            let ok = verify_certificate(&member.germ, cert, order).map_err(|e| e.to_string())?;
            if !ok {
                return Err(format!("{}: certificate fails at order {order}", member.name));
            }
            verified += 1;
        }
    }
    Ok(format!("{verified} certificates verify at order {order}"))
}

fn check_closed_form(rho_cap: u32, row_only: bool) -> std::result::Result<String, String> {
    let germ = RealDefining::parse("z1*c1 + z1^2*c1^2", 1).map_err(|e| e.to_string())?;
    let r = real_to_complex(&germ, rho_cap).map_err(|e| e.to_string())?;
    let (sys, _) = derive_pde(&r).map_err(|e| e.to_string())?;
    let table = default_gamma_table().map_err(|e| e.to_string())?;
    let spec = ObstructionSpec::for_layer(
        1,
        2,
        vec![
            Multiindex::new(vec![1]),
            Multiindex::new(vec![2]),
            Multiindex::new(vec![3]),
        ],
        &table,
    )
    .map_err(|e| e.to_string())?;
    let generic = build_row0(&spec, &sys).map_err(|e| e.to_string())?;
    let explicit = pq_row_closed_form(&sys).map_err(|e| e.to_string())?;
    if generic != explicit {
        return Err("base rows differ".to_string());
    }
    if !row_only {
        let g = build_matrix(&spec, &sys).map_err(|e| e.to_string())?;
        let e = hyperquad_core::obstruction::pq_matrix_closed_form(&sys)
            .map_err(|err| err.to_string())?;
        for i in 0..16 {
            for j in 0..16 {
                if g.entry(i, j) != e.entry(i, j) {
                    return Err(format!("matrix entry ({i}, {j}) differs"));
                }
            }
        }
    }
    Ok(if row_only {
        "base rows agree".to_string()
    } else {
        "base rows and full 16×16 matrices agree".to_string()
    })
}

fn check_bordered(trials: usize, seed: u64) -> std::result::Result<String, String> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let entry = |rng: &mut rand_chacha::ChaCha8Rng| {
        GaussianRational::from_parts(
            rng.gen_range(-5..=5),
            rng.gen_range(1..=3),
            rng.gen_range(-5..=5),
            rng.gen_range(1..=3),
        )
    };
    let mut done = 0;
    while done < trials {
        let b: Vec<Vec<GaussianRational>> = (0..3)
            .map(|_| (0..3).map(|_| entry(&mut rng)).collect())
            .collect();
        if hyperquad_core::linalg::det_exact(&b)
            .map_err(|e| e.to_string())?
            .is_zero()
        {
            continue;
        }
        let a: Vec<GaussianRational> = if done % 2 == 0 {
            vec![GaussianRational::zero(); 3]
        } else {
            (0..3).map(|_| entry(&mut rng)).collect()
        };
        let expected = a.iter().all(GaussianRational::is_zero);
        let got = bordered_vanishing_implies_zero(&b, &a).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("trial {done}: bordered test disagrees"));
        }
        done += 1;
    }
    Ok(format!("{trials} seeded trials agree"))
}

fn check_planted() -> std::result::Result<String, String> {
    let cap = 8;
    let vars = VarSet::of(&["z"]);
    let mut fact = 1i64;
    let terms: Vec<(Multiindex, GaussianRational)> = (0..=cap)
        .map(|i| {
            if i > 0 {
                fact *= i64::from(i);
            }
            (
                Multiindex::new(vec![i]),
                GaussianRational::from_ratio(1, fact),
            )
        })
        .collect();
    let h = TruncatedSeries::from_terms(vars.clone(), cap, terms).map_err(|e| e.to_string())?;
    let z = TruncatedSeries::variable_at(vars.clone(), cap, 0).map_err(|e| e.to_string())?;
    let shifted = z
        .scale(&GaussianRational::from_ratio(2, 1))
        .add(&TruncatedSeries::constant(
            vars.clone(),
            cap,
            GaussianRational::from_ratio(3, 1),
        ))
        .map_err(|e| e.to_string())?;
    let fam = VectorFamily::new(
        vec![
            h.clone(),
            z.mul(&h).map_err(|e| e.to_string())?,
            shifted.mul(&h).map_err(|e| e.to_string())?,
        ],
        vec![Derivation::coordinate(vars, cap, 0).map_err(|e| e.to_string())?],
    )
    .map_err(|e| e.to_string())?;
    let lambda = extract_dependence(&fam, &[GaussianRational::from_ratio(1, 3)], 4, 77)
        .map_err(|e| e.to_string())?
        .ok_or("planted dependence not found")?;
    let expect = vec![
        GaussianRational::from_ratio(1, 1),
        GaussianRational::from_ratio(2, 3),
        GaussianRational::from_ratio(-1, 3),
    ];
    if lambda == expect {
        Ok("λ = (1, 2/3, −1/3) recovered".to_string())
    } else {
        Err("extracted λ differs from the planted dependence".to_string())
    }
}

fn check_prolongation(max_n: usize) -> std::result::Result<String, String> {
    let mut checked = 0;
    for n in 1..=max_n {
        let table = build_prolongation(n, 4);
        for alpha in multiindices_in_degree_range(n, 2, 5) {
            let poly = table.q(&alpha).map_err(|e| e.to_string())?;
            if poly.degree() > alpha.degree() - 1 {
                return Err(format!("degree bound fails at n = {n}, α = {alpha:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} universal polynomials bounded"))
}

fn check_segre(quick: bool) -> std::result::Result<String, String> {
    let mut checked = 0;
    for member in corpus() {
        if quick && member.germ.n() != 1 {
            continue;
        }
        let r = real_to_complex(&member.germ, 8).map_err(|e| e.to_string())?;
        let (sys, _) = derive_pde(&r).map_err(|e| e.to_string())?;
        let residuals =
            hyperquad_core::assoc_pde::segre_solution_residuals(&r, &sys)
                .map_err(|e| e.to_string())?;
        for res in residuals {
            if !res.is_zero() {
                return Err(format!("{}: a Segre graph fails the system", member.name));
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} germs solve their derived systems"))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(fingerprint(""), "cbf29ce484222325");
        assert_eq!(fingerprint("a"), "af63dc4c8601ec8c");
        assert_ne!(fingerprint("ab"), fingerprint("ba"));
    }

    #[test]
    fn germ_loading_strips_constants_and_names_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("germ.dsl");
        fs::write(&path, "# name: shifted-sphere\n# a comment\nz1*c1 + 1/2\n").unwrap();
        let loaded = load_germ(
            &GermInput {
                phi: None,
                input: Some(path),
            },
            1,
        )
        .unwrap();
        assert_eq!(loaded.name, "shifted-sphere");
        assert_eq!(loaded.constant_removed.as_deref(), Some("1/2"));
        assert_eq!(loaded.germ.degree(), 2);
    }

    #[test]
    fn usage_and_data_errors_keep_their_codes() {
        let usage = CliError::from(CoreError::BadSpec("bad".into()));
        assert_eq!(usage.code, EXIT_USAGE);
        let parse = CliError::from(CoreError::Parse {
            pos: 3,
            msg: "x".into(),
        });
        assert_eq!(parse.code, EXIT_DATA);
        assert!(parse.msg.contains("byte 3"));
    }
}
