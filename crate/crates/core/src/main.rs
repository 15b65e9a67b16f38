use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rankone::conic::{export_cbf, export_mps, ConicProgram};
use rankone::datagen::{flip_labels, generate, load_csv, save_instance, GenSpec, OutlierClass};
use rankone::harness::checks::{self, HullCase, SuiteReport};
use rankone::harness::{
    bench_csv, bench_markdown, cv_csv, cv_markdown, run_bound_experiment, run_cv, timings_csv, train, DataSource,
    ExperimentConfig, Hyper, Method,
};
use rankone::hull::{
    check_membership, eval_rhs, hull_program, HullPoint, LinearObjective, RankOneSet, Sidedness,
};
use rankone::relaxations::{build_bigm_model, DEFAULT_BIG_M};
use rankone::solver::SolverConfig;
use rankone::svm::{
    build_conic_relaxation, build_decomposition_relaxation, build_hinge, build_robust_l1, default_decomposition_d,
    Estimator, SubsetCollection, SvmDataset, SvmMode,
};

#[derive(Parser)]
#[command(name = "rankone", version, about = "Rank-one hull relaxations and conic SVM experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the `# generated` header line from result CSVs.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

impl Global {
    fn solver(&self) -> SolverConfig {
        SolverConfig::default().with_tolerance(self.tol)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic instance as CSV plus a JSON sidecar.
    Datagen(DatagenArgs),
    /// Train one method at one hyperparameter and write the estimator JSON.
    Train(TrainArgs),
    /// Relaxation bounds against the exact oracle.
    Bound(ExperimentArgs),
    /// Cross-validated model selection.
    Cv(ExperimentArgs),
    /// Rank-one hull utilities.
    Hull {
        #[command(subcommand)]
        cmd: HullCmd,
    },
    /// Export a model in CBF or MPS.
    Export(ExportArgs),
    /// Run the invariant suites at reduced size.
    Selftest {
        /// Trials per suite.
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long, value_enum, default_value_t = ClassArg::None)]
    class: ClassArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    sigma: f64,
    /// Label-flip probability.
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// File stem for the two outputs.
    #[arg(long, default_value = "instance")]
    stem: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    None,
    Clustered,
    Spread,
}

impl From<ClassArg> for OutlierClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::None => OutlierClass::None,
            ClassArg::Clustered => OutlierClass::Clustered,
            ClassArg::Spread => OutlierClass::Spread,
        }
    }
}

#[derive(Args)]
struct HyperArgs {
    /// Penalty weight.
    #[arg(long, conflicts_with = "k")]
    lambda: Option<f64>,
    /// Cardinality bound.
    #[arg(long)]
    k: Option<f64>,
}

impl HyperArgs {
    fn hyper(&self) -> Result<Hyper> {
        match (self.lambda, self.k) {
            (Some(l), None) => Ok(Hyper::Lambda(l)),
            (None, Some(k)) => Ok(Hyper::K(k)),
            _ => Err(usage("exactly one of --lambda or --k is required")),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data (`label,f1,...,fp`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    method: String,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, value_enum)]
    class: Option<ClassArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// CSV dataset instead of generated instances.
    #[arg(long, conflicts_with_all = ["class", "n", "p", "sigma"])]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Subcommand)]
enum HullCmd {
    /// Membership of `(x, z, t)` in the hull.
    Check(HullArgs),
    /// Right-hand side of the hull inequality.
    Rhs(HullArgs),
    /// CBF of `min αᵀx + βᵀz + γt` over the hull.
    SocpExport(HullArgs),
}

#[derive(Args)]
struct HullArgs {
    /// JSON with `d`, optional `one_sided`, `x`, `z`, `t`, `alpha`, `beta`, `gamma`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    d: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    one_sided: bool,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct HullInput {
    d: Vec<f64>,
    one_sided: bool,
    x: Option<Vec<f64>>,
    z: Option<Vec<f64>>,
    t: Option<f64>,
    alpha: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    gamma: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Cbf,
    Mps,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    data: PathBuf,
    /// conic1, conic2, hinge, robust-l1, decomposition or bigm.
    #[arg(long)]
    model: String,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

#[derive(Debug)]
struct InvariantFailure;

impl std::fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invariant suite failed")
    }
}

impl std::error::Error for InvariantFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nRun `rankone --help` for usage.");
            ExitCode::from(1)
        }
        Err(e) if e.is::<InvariantFailure>() => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    match cli.cmd {
        Cmd::Datagen(a) => datagen(&g, a),
        Cmd::Train(a) => train_cmd(&g, a),
        Cmd::Bound(a) => bound_cmd(&g, a),
        Cmd::Cv(a) => cv_cmd(&g, a),
        Cmd::Hull { cmd } => hull_cmd(&g, cmd),
        Cmd::Export(a) => export_cmd(&g, a),
        Cmd::Selftest { trials } => selftest(&g, trials),
    }
}

/// Writes to `--out` when given, else stdout.
fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn datagen(g: &Global, a: DatagenArgs) -> Result<()> {
    let spec = GenSpec { outlier_class: a.class.into(), n: a.n, p: a.p, sigma: a.sigma, seed: g.seed };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let mut inst = generate(&spec)?;
    if a.tau > 0.0 {
        inst.dataset = flip_labels(&inst.dataset, a.tau, g.seed.wrapping_add(1))?;
    }
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let (c, j) = save_instance(&inst, &dir, &a.stem)?;
    println!("{}\n{}", c.display(), j.display());
    Ok(())
}

fn parse_method(s: &str) -> Result<Method> {
    s.parse::<Method>().map_err(|e| usage(e.to_string()))
}

fn train_cmd(g: &Global, a: TrainArgs) -> Result<()> {
    let method = parse_method(&a.method)?;
    let hyper = a.hyper.hyper()?;
    let ds = load_csv(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let t = train(method, &ds, hyper, &g.solver())?;
    let mut est = Estimator {
        method: method.to_string(),
        hyperparameters: Default::default(),
        w: t.w,
        objective: t.objective,
        seed: Some(g.seed),
    };
    let key = if matches!(hyper, Hyper::K(_)) { "k" } else { "lambda" };
    est.hyperparameters.insert(key.into(), hyper.value());
    emit(g, &(serde_json::to_string_pretty(&est)? + "\n"))
}

fn experiment_config(g: &Global, a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .map_err(|e| usage(format!("config: {e}")))?,
        None => ExperimentConfig::default(),
    };
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.solver = g.solver();
    if let Some(ms) = &a.methods {
        cfg.methods = ms.iter().map(|m| parse_method(m)).collect::<Result<_>>()?;
    }
    if let Some(path) = &a.data {
        cfg.source = DataSource::Csv(path.clone());
    } else if let DataSource::Generate(spec) = &mut cfg.source {
        if let Some(c) = a.class {
            spec.outlier_class = c.into();
        }
        if let Some(n) = a.n {
            spec.n = n;
        }
        if let Some(p) = a.p {
            spec.p = p;
        }
        if let Some(s) = a.sigma {
            spec.sigma = s;
        }
        spec.validate().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(v) = a.grid_size {
        cfg.grid_size = v;
    }
    if let Some(v) = a.replications {
        cfg.replications = v;
    }
    if let Some(v) = a.test_size {
        cfg.test_size = v;
    }
    if let Some(v) = a.tau {
        cfg.flip_tau = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn stamp(g: &Global) -> Option<String> {
    (!g.no_timestamp).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string())
}

/// Rounds to 12 significant digits so `0.09/0.4` prints as `0.225`.
fn short(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// `results.csv`, `timings.csv` and `table.md` under `dir`.
fn write_outputs(dir: &Path, results: &str, timings: &str, table: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results)?;
    fs::write(dir.join("timings.csv"), timings)?;
    fs::write(dir.join("table.md"), table)?;
    println!("{}", dir.join("results.csv").display());
    Ok(())
}

fn bound_cmd(g: &Global, a: ExperimentArgs) -> Result<()> {
    let mut cfg = experiment_config(g, &a)?;
    cfg.out_dir = g.out.clone();
    let rows = run_bound_experiment(&cfg)?;
    let results = bench_csv(&rows, stamp(g).as_deref());
    let table = bench_markdown(&rows);
    match &g.out {
        Some(dir) => {
            let t: Vec<(String, String, f64)> =
                rows.iter().map(|r| (r.instance.to_string(), r.method.to_string(), r.seconds)).collect();
            write_outputs(dir, &results, &timings_csv(&t), &table)
        }
        None => {
            print!("{results}\n{table}");
            Ok(())
        }
    }
}

fn cv_cmd(g: &Global, a: ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(g, &a)?;
    let rep = run_cv(&cfg)?;
    let results = cv_csv(&rep, stamp(g).as_deref());
    let table = cv_markdown(&rep);
    match &g.out {
        Some(dir) => {
            let t: Vec<(String, String, f64)> =
                rep.rows.iter().map(|r| (r.replication.to_string(), r.method.clone(), r.seconds)).collect();
            write_outputs(dir, &results, &timings_csv(&t), &table)
        }
        None => {
            print!("{results}\n{table}");
            Ok(())
        }
    }
}

fn hull_input(a: &HullArgs) -> Result<HullInput> {
    let mut h: HullInput = match &a.input {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .map_err(|e| usage(format!("hull input: {e}")))?,
        None => HullInput::default(),
    };
    if let Some(d) = &a.d {
        h.d = d.clone();
    }
    if a.x.is_some() {
        h.x = a.x.clone();
    }
    if a.z.is_some() {
        h.z = a.z.clone();
    }
    if a.t.is_some() {
        h.t = a.t;
    }
    h.one_sided |= a.one_sided;
    if h.d.is_empty() {
        return Err(usage("d is required (--d or --input)"));
    }
    Ok(h)
}

fn hull_cmd(g: &Global, cmd: HullCmd) -> Result<()> {
    let (a, which) = match &cmd {
        HullCmd::Check(a) => (a, 0),
        HullCmd::Rhs(a) => (a, 1),
        HullCmd::SocpExport(a) => (a, 2),
    };
    let h = hull_input(a)?;
    let side = if h.one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
    let set = RankOneSet::new(h.d.clone(), side).map_err(|e| usage(e.to_string()))?;
    let need = |v: &Option<Vec<f64>>, name: &str| v.clone().ok_or_else(|| usage(format!("{name} is required")));
    match which {
        0 | 1 => {
            let x = need(&h.x, "x")?;
            let z = need(&h.z, "z")?;
            let rhs = eval_rhs(&set, &x, &z)?;
            if which == 1 {
                return emit(g, &format!("{}\n", short(rhs)));
            }
            let t = h.t.ok_or_else(|| usage("t is required"))?;
            let member = check_membership(&set, &HullPoint { x, z, t }, g.tol)?;
            emit(g, &format!("{}\n", serde_json::json!({ "rhs": short(rhs), "t": t, "member": member })))
        }
        _ => {
            let n = set.n();
            let obj = LinearObjective {
                alpha: h.alpha.unwrap_or_else(|| vec![0.0; n]),
                beta: h.beta.unwrap_or_else(|| vec![0.0; n]),
                gamma: h.gamma.unwrap_or(1.0),
            };
            let prog = hull_program(&set, &obj)?;
            emit(g, &export_cbf(&prog)?)
        }
    }
}

fn export_model(ds: &SvmDataset, model: &str, hyper: Hyper) -> Result<ConicProgram> {
    let mode = match hyper {
        Hyper::Lambda(l) => SvmMode::Penalty(l),
        Hyper::K(k) => SvmMode::Cardinality(k),
    };
    let lambda = || match hyper {
        Hyper::Lambda(l) => Ok(l),
        Hyper::K(_) => Err(usage(format!("{model} takes --lambda"))),
    };
    Ok(match model {
        "conic1" => build_conic_relaxation(ds, &SubsetCollection::singletons(ds.n()), mode)?.0,
        "conic2" => build_conic_relaxation(ds, &SubsetCollection::pairs(ds.n()), mode)?.0,
        "hinge" => build_hinge(ds, lambda()?)?,
        "robust-l1" => build_robust_l1(ds, lambda()?)?,
        "decomposition" => build_decomposition_relaxation(ds, &default_decomposition_d(ds), mode)?,
        "bigm" => build_bigm_model(ds, DEFAULT_BIG_M, mode)?,
        other => bail!(UsageError(format!("unknown model {other:?}"))),
    })
}

fn export_cmd(g: &Global, a: ExportArgs) -> Result<()> {
    let hyper = a.hyper.hyper()?;
    let ds = load_csv(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let prog = export_model(&ds, &a.model, hyper)?;
    let text = match a.format {
        Format::Cbf => export_cbf(&prog)?,
        Format::Mps => export_mps(&prog)?,
    };
    emit(g, &text)
}

fn print_report(r: &SuiteReport) {
    let verdict = if r.passed() { "PASS" } else { "FAIL" };
    println!("{verdict} {} ({} trials, {} failures, worst {:.3e})", r.name, r.trials, r.failures, r.worst);
    for n in &r.notes {
        println!("    {n}");
    }
}

fn selftest(g: &Global, trials: usize) -> Result<()> {
    let cfg = g.solver();
    let s = g.seed;
    let mut reports = vec![
        checks::hull_exactness(trials, s, HullCase::TwoSided, &cfg),
        checks::hull_exactness(trials, s, HullCase::OneSidedNonneg, &cfg),
        checks::hull_exactness(trials, s, HullCase::OneSidedMixed, &cfg),
        checks::phi_grid(trials, s, 1e-4),
        checks::validity(trials, s, 20, 1e-8),
        checks::bound_chain(trials.div_ceil(10), s, &cfg, g.threads),
        checks::bigm_triviality(trials.div_ceil(5), s, &cfg),
        checks::cbf_round_trip(trials.div_ceil(5), s, &cfg),
    ];
    let eq = checks::cp_sdp_agreement(trials, s, 100, &cfg);
    let mut eq_rep = eq.report.clone();
    if eq.agreement_rate() < 0.99 {
        eq_rep.failures += 1;
        eq_rep.notes.push(format!("agreement {:.3}", eq.agreement_rate()));
    }
    reports.push(eq_rep);
    for r in &reports {
        print_report(r);
    }
    if reports.iter().all(SuiteReport::passed) {
        Ok(())
    } else {
        Err(anyhow!(InvariantFailure))
    }
}
