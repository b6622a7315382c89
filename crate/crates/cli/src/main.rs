//! Command-line reports over the expansion and property-A toolkit.
//!
//! Every command loads its inputs, runs the corresponding library routines,
//! and prints one report to stdout.  Reports embed the tool version, the
//! resolved run configuration, and a hash of that configuration, so a report
//! is reproducible from its own header; wall-clock duration goes to stderr
//! to keep equal configurations byte-identical on stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use expa_core::cheeger::{l1_gap_capped, DEFAULT_EXACT_CAP};
use expa_core::error::Error;
use expa_core::family::{expander_verdict_configured, make_family, FamilyDiagnostic, FamilySpec};
use expa_core::graph::{Graph, GraphSpec};
use expa_core::kernel::{kernel_ball_average, variation, Kernel, KernelSpec};
use expa_core::metric::MetricSpace;
use expa_core::obstruction::{
    extract_witness, family_incompatibility_budgeted, variation_lower_bound_capped,
    FamilyObstruction, LowerBoundReport, WitnessReport, DEFAULT_DEVIATION_BUDGET,
};
use expa_core::propa::{propa_optimum_capped, PropaCertificate, DEFAULT_LP_CAP};
use expa_core::symmetrise::{
    symmetrise_with_budget, to_l1_symmetric, SymmetrisationReport, DEFAULT_ROWSUM_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "expa",
    version,
    about = "Expansion constants, coboundary gaps, and property-A diagnostics for finite graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Cheeger constant, l1 coboundary gap, and the optimal cut of a graph.
    Analyze {
        /// Graph spec JSON: {"n": int, "edges": [[a, b], ...]}.
        #[arg(long)]
        graph: PathBuf,
        /// Largest vertex count solved by exhaustive enumeration.
        #[arg(long = "exact-cap", default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Optimal kernel variation at scales (R, S) with a two-sided certificate.
    Propa {
        #[arg(long)]
        graph: PathBuf,
        /// Pair radius for the variation seminorm.
        #[arg(long = "R", default_value_t = 1)]
        r: u32,
        /// Support radius allowed for kernel rows.
        #[arg(long = "S", default_value_t = 1)]
        s: u32,
        /// Restrict the optimization to symmetric kernels.
        #[arg(long)]
        symmetric: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Square-root symmetrisation of a kernel, with full error accounting.
    Symmetrize {
        #[arg(long)]
        graph: PathBuf,
        /// Kernel spec JSON; defaults to the ball average at radius S.
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Ball-average radius used when no kernel file is given.
        #[arg(long = "S", default_value_t = 1)]
        s: u32,
        /// Truncation radius of the output; defaults to S.
        #[arg(long = "S-cut")]
        s_cut: Option<u32>,
        /// Pair radius for the before/after variation report.
        #[arg(long = "R", default_value_t = 1)]
        r: u32,
        /// Row-sum deviation budget for the input kernel.
        #[arg(long, default_value_t = DEFAULT_ROWSUM_BUDGET)]
        tol: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Witness function and certified variation floor for a symmetric kernel.
    Witness {
        #[arg(long)]
        graph: PathBuf,
        /// Symmetric kernel spec JSON; defaults to the symmetrised ball
        /// average at radius S, truncated at S.
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long = "S", default_value_t = 1)]
        s: u32,
        /// Row-sum budget for the default symmetrisation recipe.
        #[arg(long, default_value_t = DEFAULT_ROWSUM_BUDGET)]
        tol: f64,
        #[arg(long = "exact-cap", default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Expander diagnostic plus the incompatibility table for a family.
    Family {
        /// Family spec JSON: {"generator": ..., "range": [a, b], ...}.
        #[arg(long)]
        family: PathBuf,
        /// Kernel support radius for the obstruction side.
        #[arg(long = "S", default_value_t = 1)]
        s: u32,
        /// Row-sum deviation budget for member kernels.
        #[arg(long, default_value_t = DEFAULT_DEVIATION_BUDGET)]
        tol: f64,
        /// Overrides the seed recorded in the family spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "exact-cap", default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Emits a graph spec JSON for one of the built-in generators.
    Gen {
        /// One of: cycle, path, complete, hypercube, margulis, random-regular.
        generator: Generator,
        /// Size parameter (dimension for hypercube).
        #[arg(long)]
        n: usize,
        /// Degree for random-regular.
        #[arg(long)]
        k: Option<usize>,
        /// Seed for random-regular.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Cycle,
    Path,
    Complete,
    Hypercube,
    Margulis,
    RandomRegular,
}

/// Resolved configuration echoed in every report.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: String,
    graph: Option<String>,
    family: Option<String>,
    kernel: Option<String>,
    r: u32,
    s: u32,
    s_cut: u32,
    tol: f64,
    seed: u64,
    format: String,
    exact_cap: usize,
    symmetric: bool,
}

impl RunConfig {
    fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            graph: None,
            family: None,
            kernel: None,
            r: 1,
            s: 1,
            s_cut: 0,
            tol: 0.0,
            seed: 0,
            format: "json".to_string(),
            exact_cap: DEFAULT_EXACT_CAP,
            symmetric: false,
        }
    }
}

#[derive(Debug, Serialize)]
struct Report<T: Serialize> {
    version: &'static str,
    config_hash: String,
    config: RunConfig,
    result: T,
}

#[derive(Debug, Serialize)]
struct ErrorObject {
    kind: &'static str,
    message: String,
}

struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    fn input(kind: &'static str, message: String) -> Self {
        Failure {
            kind,
            message,
            code: 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (kind, code) = match e {
            Error::VertexOutOfRange { .. } => ("vertex_out_of_range", 2),
            Error::SizeBelowMinimum { .. } => ("size_below_minimum", 2),
            Error::DegreeParity { .. } => ("degree_parity", 2),
            Error::ResamplingBudget { .. } => ("resampling_budget", 3),
            Error::VertexLengthMismatch { .. } => ("vertex_length_mismatch", 2),
            Error::EdgeLengthMismatch { .. } => ("edge_length_mismatch", 2),
            Error::NonFiniteValue { .. } => ("non_finite_value", 2),
            Error::NonPositiveEntry { .. } => ("non_positive_entry", 2),
            Error::ExactCapExceeded { .. } => ("exact_cap_exceeded", 3),
            Error::ExpanderCheckInconclusive { .. } => ("expander_check_inconclusive", 3),
            Error::EigenNonConvergence { .. } => ("eigen_non_convergence", 3),
            Error::UnknownGenerator(_) => ("unknown_generator", 2),
            Error::EmptyRange => ("empty_range", 2),
            Error::EmptyFamily => ("empty_family", 2),
            Error::MissingParam(_) => ("missing_param", 2),
            Error::LpCapExceeded { .. } => ("lp_cap_exceeded", 3),
            Error::LpStalled { .. } => ("lp_stalled", 3),
            Error::RowNormBelowUnit { .. } => ("row_norm_below_unit", 2),
            Error::RowSumDeviation { .. } => ("row_sum_deviation", 2),
            Error::AsymmetricKernel { .. } => ("asymmetric_kernel", 2),
            Error::SeparationTooSmall { .. } => ("separation_too_small", 2),
            Error::MalformedSpec(_) => ("malformed_spec", 2),
        };
        Failure {
            kind,
            message,
            code,
        }
    }
}

/// FNV-1a over the serialized config; stable across runs and platforms.
fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::input("io", format!("cannot read {what} {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::input(
            "malformed_spec",
            format!("{what} {} is not valid: {e}", path.display()),
        )
    })
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let spec: GraphSpec = read_json(path, "graph spec")?;
    Ok(Graph::from_spec(&spec)?)
}

fn require_positive_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::input(
            "malformed_spec",
            format!("tolerance must be positive and finite, got {tol}"),
        ))
    }
}

fn emit<T: Serialize>(config: RunConfig, result: T, csv: Option<String>) {
    if config.format == "csv" {
        if let Some(table) = csv {
            print!("{table}");
            return;
        }
    }
    let report = Report {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(&config),
        config,
        result,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
}

fn kv_table(pairs: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

#[derive(Debug, Serialize)]
struct AnalyzeResult {
    n: usize,
    valency: usize,
    connected: bool,
    h: f64,
    gap: f64,
    cut: expa_core::cheeger::CutResult,
}

fn cmd_analyze(graph_path: &Path, exact_cap: usize, format: Format) -> Result<(), Failure> {
    let mut config = RunConfig::new("analyze");
    config.graph = Some(graph_path.display().to_string());
    config.exact_cap = exact_cap;
    config.format = format_name(format);

    let graph = load_graph(graph_path)?;
    let gap = l1_gap_capped(&graph, exact_cap)?;
    let result = AnalyzeResult {
        n: graph.n(),
        valency: graph.k_max(),
        connected: graph.is_connected(),
        h: gap.cut.h,
        gap: gap.gap,
        cut: gap.cut,
    };
    let csv = kv_table(&[
        ("n", result.n.to_string()),
        ("valency", result.valency.to_string()),
        ("connected", result.connected.to_string()),
        ("h", result.h.to_string()),
        ("gap", result.gap.to_string()),
        ("boundary_size", result.cut.boundary_size.to_string()),
        ("exact", result.cut.exact.to_string()),
    ]);
    emit(config, result, Some(csv));
    Ok(())
}

#[derive(Debug, Serialize)]
struct PropaResult {
    r: u32,
    s: u32,
    symmetric: bool,
    value: f64,
    certificate: PropaCertificate,
    kernel: KernelSpec,
}

fn cmd_propa(
    graph_path: &Path,
    r: u32,
    s: u32,
    symmetric: bool,
    format: Format,
) -> Result<(), Failure> {
    let mut config = RunConfig::new("propa");
    config.graph = Some(graph_path.display().to_string());
    config.r = r;
    config.s = s;
    config.symmetric = symmetric;
    config.format = format_name(format);

    let graph = load_graph(graph_path)?;
    let opt = propa_optimum_capped(&graph, r, s, symmetric, DEFAULT_LP_CAP)?;
    let result = PropaResult {
        r,
        s,
        symmetric,
        value: opt.value,
        certificate: opt.certificate,
        kernel: opt.kernel.to_spec(),
    };
    let csv = kv_table(&[
        ("R", r.to_string()),
        ("S", s.to_string()),
        ("symmetric", symmetric.to_string()),
        ("value", result.value.to_string()),
        ("upper", result.certificate.upper.to_string()),
        ("lower", result.certificate.lower.to_string()),
        ("gap", result.certificate.gap.to_string()),
        ("pivots", result.certificate.pivots.to_string()),
    ]);
    emit(config, result, Some(csv));
    Ok(())
}

#[derive(Debug, Serialize)]
struct SymmetrizeResult {
    report: SymmetrisationReport,
    /// The squared symmetric kernel, ready for the witness step.
    kernel: KernelSpec,
}

fn cmd_symmetrize(
    graph_path: &Path,
    kernel_path: Option<&Path>,
    s: u32,
    s_cut: Option<u32>,
    r: u32,
    tol: f64,
    format: Format,
) -> Result<(), Failure> {
    require_positive_tol(tol)?;
    let s_cut = s_cut.unwrap_or(s);
    let mut config = RunConfig::new("symmetrize");
    config.graph = Some(graph_path.display().to_string());
    config.kernel = kernel_path.map(|p| p.display().to_string());
    config.r = r;
    config.s = s;
    config.s_cut = s_cut;
    config.tol = tol;
    config.format = format_name(format);

    let graph = load_graph(graph_path)?;
    let phi = match kernel_path {
        Some(path) => {
            let spec: KernelSpec = read_json(path, "kernel spec")?;
            Kernel::from_spec(&graph, &spec)?
        }
        None => kernel_ball_average(&graph, s),
    };
    let (psi, report) = symmetrise_with_budget(&graph, &phi, s_cut, r, tol)?;
    let result = SymmetrizeResult {
        kernel: to_l1_symmetric(&graph, &psi)?.to_spec(),
        report,
    };
    let csv = kv_table(&[
        ("symmetry_defect", result.report.symmetry_defect.to_string()),
        ("unital_defect", result.report.unital_defect.to_string()),
        (
            "truncation_error",
            result.report.truncation_error.to_string(),
        ),
        ("propagation", result.report.propagation.to_string()),
        (
            "variation_before",
            result.report.variation_before.to_string(),
        ),
        ("variation_after", result.report.variation_after.to_string()),
        ("bound_check", result.report.bound_check.to_string()),
    ]);
    emit(config, result, Some(csv));
    Ok(())
}

#[derive(Debug, Serialize)]
struct WitnessResult {
    witness: WitnessReport,
    lower_bound: LowerBoundReport,
    achieved_variation: f64,
}

fn cmd_witness(
    graph_path: &Path,
    kernel_path: Option<&Path>,
    s: u32,
    tol: f64,
    exact_cap: usize,
    format: Format,
) -> Result<(), Failure> {
    require_positive_tol(tol)?;
    let mut config = RunConfig::new("witness");
    config.graph = Some(graph_path.display().to_string());
    config.kernel = kernel_path.map(|p| p.display().to_string());
    config.s = s;
    config.s_cut = s;
    config.tol = tol;
    config.exact_cap = exact_cap;
    config.format = format_name(format);

    let graph = load_graph(graph_path)?;
    let phi = match kernel_path {
        Some(path) => {
            let spec: KernelSpec = read_json(path, "kernel spec")?;
            Kernel::from_spec(&graph, &spec)?
        }
        None => {
            let ball = kernel_ball_average(&graph, s);
            let (psi, _) = symmetrise_with_budget(&graph, &ball, s, 1, tol)?;
            to_l1_symmetric(&graph, &psi)?
        }
    };
    let witness = extract_witness(&graph, &phi)?;
    let lower_bound = variation_lower_bound_capped(
        &graph,
        phi.support_radius(),
        phi.rowsum_dev(),
        exact_cap,
    )?;
    let achieved_variation = variation(&graph, &phi, 1).value;
    let result = WitnessResult {
        witness,
        lower_bound,
        achieved_variation,
    };
    let csv = kv_table(&[
        ("basepoint", result.witness.basepoint.to_string()),
        ("sum_f", result.witness.sum_f.to_string()),
        ("l1_norm", result.witness.l1_norm.to_string()),
        ("quotient_norm", result.witness.quotient_norm.to_string()),
        ("coboundary_l1", result.witness.coboundary_l1.to_string()),
        ("ratio", result.witness.ratio.to_string()),
        ("ball_size", result.witness.ball_size.to_string()),
        ("lower_bound", result.lower_bound.value.to_string()),
        ("achieved_variation", result.achieved_variation.to_string()),
    ]);
    emit(config, result, Some(csv));
    Ok(())
}

#[derive(Debug, Serialize)]
struct FamilyResult {
    diagnostic: FamilyDiagnostic,
    incompatibility: FamilyObstruction,
    /// Combined verdict: positive floors under expander consistency.
    obstructed: bool,
    verdict: String,
}

fn cmd_family(
    family_path: &Path,
    s: u32,
    tol: f64,
    seed: Option<u64>,
    exact_cap: usize,
    format: Format,
) -> Result<(), Failure> {
    require_positive_tol(tol)?;
    let mut spec: FamilySpec = read_json(family_path, "family spec")?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let mut config = RunConfig::new("family");
    config.family = Some(family_path.display().to_string());
    config.s = s;
    config.tol = tol;
    config.seed = spec.seed;
    config.exact_cap = exact_cap;
    config.format = format_name(format);

    let base = family_path.parent().unwrap_or_else(|| Path::new("."));
    let family = make_family(&spec, base)?;
    let horizon = family.len();
    let diagnostic = expander_verdict_configured(
        &family,
        horizon,
        expa_core::family::DEFAULT_MARGIN_THRESHOLD,
        exact_cap,
    )?;
    // Per member: the LP's certified symmetric optimum when it fits the
    // variable cap, otherwise the symmetrised ball average at radius S.
    let recipe = |g: &Graph| {
        if g.n() * g.max_ball_size(s) <= DEFAULT_LP_CAP {
            propa_optimum_capped(g, 1, s, true, DEFAULT_LP_CAP).map(|opt| opt.kernel)
        } else {
            let ball = kernel_ball_average(g, s);
            let (psi, _) = symmetrise_with_budget(g, &ball, s, 1, tol)?;
            to_l1_symmetric(g, &psi)
        }
    };
    let incompatibility = family_incompatibility_budgeted(&family, s, recipe, tol, exact_cap)?;

    let obstructed = diagnostic.expander_consistent && incompatibility.obstructed;
    let verdict = if obstructed {
        format!("obstructed at (S={s}, horizon={horizon})")
    } else if incompatibility.obstructed {
        format!(
            "not obstructed at (S={s}, horizon={horizon}): family is not expander-consistent"
        )
    } else {
        format!(
            "not obstructed at (S={s}, horizon={horizon}): variation floors vanish"
        )
    };
    let csv = incompatibility.to_csv();
    let result = FamilyResult {
        diagnostic,
        incompatibility,
        obstructed,
        verdict,
    };
    emit(config, result, Some(csv));
    Ok(())
}

fn cmd_gen(generator: Generator, n: usize, k: Option<usize>, seed: u64) -> Result<(), Failure> {
    let graph = match generator {
        Generator::Cycle => Graph::cycle(n)?,
        Generator::Path => Graph::path(n)?,
        Generator::Complete => Graph::complete(n)?,
        Generator::Hypercube => Graph::hypercube(n)?,
        Generator::Margulis => Graph::margulis(n)?,
        Generator::RandomRegular => {
            let k = k.ok_or_else(|| {
                Failure::input("missing_param", "random-regular needs --k".to_string())
            })?;
            Graph::random_regular(n, k, seed)?
        }
    };
    // Bare spec on stdout so the output pipes straight into --graph;
    // the generator parameters land on stderr for the record.
    println!(
        "{}",
        serde_json::to_string_pretty(&graph.to_spec()).expect("spec serializes")
    );
    eprintln!(
        "gen: generator={:?} n={n} k={:?} seed={seed}",
        generator, k
    );
    Ok(())
}

fn format_name(format: Format) -> String {
    match format {
        Format::Json => "json".to_string(),
        Format::Csv => "csv".to_string(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze {
            graph,
            exact_cap,
            format,
        } => cmd_analyze(&graph, exact_cap, format),
        Command::Propa {
            graph,
            r,
            s,
            symmetric,
            format,
        } => cmd_propa(&graph, r, s, symmetric, format),
        Command::Symmetrize {
            graph,
            kernel,
            s,
            s_cut,
            r,
            tol,
            format,
        } => cmd_symmetrize(&graph, kernel.as_deref(), s, s_cut, r, tol, format),
        Command::Witness {
            graph,
            kernel,
            s,
            tol,
            exact_cap,
            format,
        } => cmd_witness(&graph, kernel.as_deref(), s, tol, exact_cap, format),
        Command::Family {
            family,
            s,
            tol,
            seed,
            exact_cap,
            format,
        } => cmd_family(&family, s, tol, seed, exact_cap, format),
        Command::Gen {
            generator,
            n,
            k,
            seed,
        } => cmd_gen(generator, n, k, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(cli);
    eprintln!("duration_ms: {}", start.elapsed().as_millis());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let obj = serde_json::json!({
                "error": ErrorObject {
                    kind: failure.kind,
                    message: failure.message.clone(),
                }
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&obj).expect("error serializes")
            );
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
