//! `netctrl` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad arguments or input,
//! 3 I/O failure, 4 numerical solve failure, 5 singular Gramian.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use netctrl::ctrlcore::{
    eigen_multiplicities, eigen_multiplicities_default, kalman_controllable, max_ctrl_index_gamma, RankMethod,
    Spectrum, TolerancePolicy,
};
use netctrl::exactoracle::suites::{run_suite, DEFAULT_SUITE_SEED, SUITE_NAMES};
use netctrl::graphgen::{
    apply_noise, generate_topology, read_edge_list, write_edge_list, GraphSpec, NoiseMode, NoiseSpec, WeightedDigraph,
};
use netctrl::netmodel::{build_system, min_energy_steer, LeaderFollowerSystem, Partition, Representation};
use netctrl::sweep::{run_sweep, trend_stat, SweepConfig};
use netctrl::{Error, RngStream};
use serde::Serialize;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_GRAMIAN: u8 = 5;

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            msg: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::NumericalFailure(_) | Error::NoControllableInput { .. } => EXIT_NUMERIC,
            Error::SingularGramian { .. } => EXIT_GRAMIAN,
            _ => EXIT_USAGE,
        };
        Self { code, msg: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "netctrl", version, about = "Controllability analysis of noisy weighted networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random network and write it as an edge list.
    Gen(GenArgs),
    /// Analyse the leader-follower pencil of an edge-list network.
    Analyze(AnalyzeArgs),
    /// Run noise sweeps described by a JSON config.
    Sweep(SweepArgs),
    /// Steer the followers to the origin with the minimum-energy input.
    Steer(SteerArgs),
    /// Cross-check floating-point routines against the exact oracle.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Family {
    Er,
    Ws,
    Ba,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NoiseArg {
    Structured,
    Unstructured,
}

impl From<NoiseArg> for NoiseMode {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Structured => NoiseMode::Structured,
            NoiseArg::Unstructured => NoiseMode::Unstructured,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RepArg {
    Adjacency,
    Laplacian,
}

impl From<RepArg> for Representation {
    fn from(r: RepArg) -> Self {
        match r {
            RepArg::Adjacency => Representation::Adjacency,
            RepArg::Laplacian => Representation::Laplacian,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Svd,
    Det,
}

#[derive(Args, Debug, Default)]
struct TolArgs {
    /// Rank decision method.
    #[arg(long, value_enum)]
    tol_method: Option<MethodArg>,
    /// Relative singular-value cut for the svd method.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Determinant threshold for the det method.
    #[arg(long)]
    det_threshold: Option<f64>,
}

impl TolArgs {
    fn given(&self) -> bool {
        self.tol_method.is_some() || self.rel_tol.is_some() || self.det_threshold.is_some()
    }

    /// Apply the flags on top of `base`.
    fn apply(&self, base: TolerancePolicy) -> CliResult<TolerancePolicy> {
        let mut tol = base;
        match self.tol_method {
            Some(MethodArg::Svd) => tol.method = RankMethod::Svd,
            Some(MethodArg::Det) => tol.method = RankMethod::Det,
            None => {}
        }
        if let Some(r) = self.rel_tol {
            tol.rel_tol = r;
        }
        if let Some(d) = self.det_threshold {
            tol.det_threshold = d;
        }
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    /// ER connection probability or WS rewiring probability.
    #[arg(long)]
    p: Option<f64>,
    /// WS neighbours per side.
    #[arg(long)]
    k: Option<usize>,
    /// BA number of added vertices.
    #[arg(long)]
    t: Option<usize>,
    /// BA edges per added vertex.
    #[arg(long)]
    m: Option<usize>,
    /// Master seed; topology and noise use substreams 0 and 1.
    #[arg(long)]
    seed: u64,
    /// Perturb the weights with noise of this kind.
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Noise coefficient: perturbations are uniform on [-0.5, 0.5] / k.
    #[arg(long, default_value_t = 1.0, requires = "noise")]
    noise_k: f64,
    /// Output file; the edge list goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LeaderArgs {
    /// Leader vertices (0-based, comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "n_leaders")]
    leaders: Option<Vec<usize>>,
    /// Use the last N vertices as leaders.
    #[arg(long, default_value_t = 1)]
    n_leaders: usize,
    #[arg(long, value_enum, default_value = "adjacency")]
    representation: RepArg,
}

impl LeaderArgs {
    fn partition(&self, n: usize) -> CliResult<Partition> {
        match &self.leaders {
            Some(l) => {
                let mut leaders = l.clone();
                leaders.sort_unstable();
                leaders.dedup();
                if leaders.iter().any(|&v| v >= n) {
                    return Err(Failure::usage(format!("leader index out of range for n={n}")));
                }
                let followers = (0..n).filter(|v| leaders.binary_search(v).is_err()).collect();
                Ok(Partition::new(n, followers, leaders)?)
            }
            None => Ok(Partition::last(n, self.n_leaders)?),
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Edge-list file.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    leaders: LeaderArgs,
    #[command(flatten)]
    tol: TolArgs,
    /// Eigenvalue clustering tolerance (default scales with the spectral radius).
    #[arg(long)]
    cluster_tol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON file holding one config object or an array of them.
    #[arg(long)]
    config: PathBuf,
    /// CSV file for a single config, directory of `<name>.csv` for an array.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `master_seed` in every config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials_per_k`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `k_grid` (comma separated).
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<f64>>,
    #[command(flatten)]
    tol: TolArgs,
    /// Worker threads (0 picks one per core).
    #[arg(long, env = "NETCTRL_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Demo {
    /// One follower, one leader, `x' = u`.
    Scalar,
    /// Path 0-1-2 under the Laplacian model, leader 2.
    Path,
    /// Uncontrollable two-follower pencil `F = [[1,2],[0,3]]`, `G = [1,0]^T`.
    Example1,
}

#[derive(Args, Debug)]
struct SteerArgs {
    #[arg(long, value_enum, conflicts_with = "input", required_unless_present = "input")]
    demo: Option<Demo>,
    /// Edge-list file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    leaders: LeaderArgs,
    /// Initial follower state (comma separated); all ones by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Horizon; defaults to 2 for the path demo and 1 otherwise.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Trajectory CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run only these suites (repeatable); all by default.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITE_NAMES))]
    suite: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SUITE_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Steer(a) => cmd_steer(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

/// Print to stdout; a closed pipe ends the output quietly.
fn emit(text: &str) -> CliResult<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure {
            code: EXIT_IO,
            msg: format!("stdout: {e}"),
        }),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn read_graph(path: &Path) -> CliResult<WeightedDigraph> {
    let file = fs::File::open(path).map_err(|e| Failure::io(path, e))?;
    read_edge_list(BufReader::new(file)).map_err(|e| match e {
        Error::Io(io) => Failure::io(path, io),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let spec = match a.family {
        Family::Er => GraphSpec::Er {
            n: a.n,
            p: a.p.unwrap_or(0.4),
        },
        Family::Ws => GraphSpec::Ws {
            n: a.n,
            k: a.k.unwrap_or(2),
            p: a.p.unwrap_or(0.5),
        },
        Family::Ba => GraphSpec::Ba {
            n: a.n,
            t: a.t.unwrap_or(8),
            m: a.m.unwrap_or(3),
        },
    };
    spec.validate()?;
    let mut g = generate_topology(&spec, &RngStream::new(a.seed, 0))?;
    if let Some(mode) = a.noise {
        let noise = NoiseSpec {
            mode: mode.into(),
            k: a.noise_k,
        };
        g = apply_noise(&g, &noise, &RngStream::new(a.seed, 1))?;
    }
    let summary = format!(
        "n={} edges={} arcs={} seed={}",
        g.n(),
        g.edge_count(),
        g.arc_count(),
        a.seed
    );
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            write_edge_list(&g, &mut w)?;
            w.flush().map_err(|e| Failure::io(path, e))?;
            println!("{summary}");
        }
        None => {
            write_edge_list(&g, io::stdout().lock())?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: usize,
    n_followers: usize,
    leaders: Vec<usize>,
    representation: Representation,
    controllable: bool,
    rank: usize,
    subspace_dim: usize,
    krylov_dim: usize,
    #[serde(rename = "N_D")]
    n_d: usize,
    gamma: usize,
    spectrum: Spectrum,
    tolerance: TolerancePolicy,
}

fn cmd_analyze(a: AnalyzeArgs) -> CliResult<()> {
    let g = read_graph(&a.input)?;
    let tol = a.tol.apply(TolerancePolicy::default())?;
    let partition = a.leaders.partition(g.n())?;
    let rep: Representation = a.leaders.representation.into();
    let sys = build_system(&g, &partition, rep)?;
    let (f, b) = sys.pencil();
    let verdict = kalman_controllable(f, b, &tol)?;
    let spectrum = match a.cluster_tol {
        Some(t) => eigen_multiplicities(f, t)?,
        None => eigen_multiplicities_default(f)?,
    };
    let report = AnalyzeReport {
        n: g.n(),
        n_followers: sys.n_followers(),
        leaders: partition.leaders().to_vec(),
        representation: rep,
        controllable: verdict.controllable,
        rank: verdict.rank,
        subspace_dim: verdict.subspace_dim,
        krylov_dim: verdict.krylov_dim,
        n_d: spectrum.max_geometric(),
        gamma: max_ctrl_index_gamma(f, &tol)?,
        spectrum,
        tolerance: tol,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{json}").and_then(|_| w.flush()).map_err(|e| Failure::io(path, e))?;
        }
        None => emit(&json)?,
    }
    Ok(())
}

fn load_sweep_configs(a: &SweepArgs) -> CliResult<Vec<SweepConfig>> {
    let text = fs::read_to_string(&a.config).map_err(|e| Failure::io(&a.config, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        obj @ serde_json::Value::Object(_) => vec![obj],
        _ => return Err(Failure::usage("sweep config must be a JSON object or array")),
    };
    if items.is_empty() {
        return Err(Failure::usage("sweep config array is empty"));
    }
    let mut configs = Vec::with_capacity(items.len());
    for (i, mut item) in items.into_iter().enumerate() {
        let obj = item
            .as_object_mut()
            .ok_or_else(|| Failure::usage(format!("config #{i} is not an object")))?;
        if let Some(seed) = a.seed {
            obj.insert("master_seed".into(), seed.into());
        }
        if !obj.contains_key("master_seed") {
            return Err(Failure::usage(format!(
                "config #{i} has no master_seed; set it in the file or pass --seed"
            )));
        }
        if let Some(t) = a.trials {
            obj.insert("trials_per_k".into(), t.into());
        }
        if let Some(k) = &a.k_grid {
            obj.insert("k_grid".into(), serde_json::json!(k));
        }
        let mut config: SweepConfig =
            serde_json::from_value(item).map_err(|e| Failure::usage(format!("config #{i}: {e}")))?;
        if a.tol.given() {
            config.tol = a.tol.apply(config.tol)?;
        }
        config.validate().map_err(|e| Failure::usage(format!("config #{i}: {e}")))?;
        configs.push(config);
    }
    Ok(configs)
}

fn sweep_name(config: &SweepConfig, index: usize) -> CliResult<String> {
    let name = config.name.clone().unwrap_or_else(|| format!("sweep_{index}"));
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(Failure::usage(format!("config name '{name}' cannot be used as a file name")));
    }
    Ok(name)
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let configs = load_sweep_configs(&a)?;
    let single = configs.len() == 1;
    let mut names = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let name = sweep_name(c, i)?;
        if names.contains(&name) {
            return Err(Failure::usage(format!("duplicate config name '{name}'")));
        }
        names.push(name);
    }
    if !single {
        let dir = a
            .out
            .as_ref()
            .ok_or_else(|| Failure::usage("--out <dir> is required when the config holds several sweeps"))?;
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    for (config, name) in configs.iter().zip(&names) {
        let result = run_sweep(config, a.workers)?;
        let rho = if result.rows.len() >= 2 {
            format!("{:.6}", trend_stat(&result.rows)?)
        } else {
            "nan".into()
        };
        let line = format!(
            "{name}: trend_stat={rho} aggregate_pct={:.6} errors={}",
            result.aggregate_pct(),
            result.rows.iter().map(|r| r.errors).sum::<usize>()
        );
        let target = match (&a.out, single) {
            (Some(p), true) => Some(p.clone()),
            (Some(dir), false) => Some(dir.join(format!("{name}.csv"))),
            (None, _) => None,
        };
        match target {
            Some(path) => {
                let mut w = create(&path)?;
                result.write_csv(&mut w)?;
                w.flush().map_err(|e| Failure::io(&path, e))?;
                println!("{line}");
            }
            None => {
                result.write_csv(io::stdout().lock())?;
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn demo_system(demo: Demo) -> CliResult<(LeaderFollowerSystem, f64)> {
    let m = |r: usize, c: usize, d: &[f64]| DMatrix::from_row_slice(r, c, d);
    Ok(match demo {
        Demo::Scalar => (
            LeaderFollowerSystem::from_pencil(Representation::Adjacency, m(1, 1, &[0.0]), m(1, 1, &[1.0]))?,
            1.0,
        ),
        Demo::Path => {
            let g = WeightedDigraph::from_undirected_edges(3, &[(0, 1), (1, 2)])?;
            (
                build_system(&g, &Partition::last(3, 1)?, Representation::Laplacian)?,
                2.0,
            )
        }
        Demo::Example1 => (
            LeaderFollowerSystem::from_pencil(
                Representation::Adjacency,
                m(2, 2, &[1.0, 2.0, 0.0, 3.0]),
                m(2, 1, &[1.0, 0.0]),
            )?,
            1.0,
        ),
    })
}

fn cmd_steer(a: SteerArgs) -> CliResult<()> {
    let (sys, default_tau) = match (a.demo, &a.input) {
        (Some(demo), _) => demo_system(demo)?,
        (None, Some(path)) => {
            let g = read_graph(path)?;
            let p = a.leaders.partition(g.n())?;
            (build_system(&g, &p, a.leaders.representation.into())?, 1.0)
        }
        (None, None) => return Err(Failure::usage("pass --demo or --input")),
    };
    let n = sys.n_followers();
    let x0 = match &a.x0 {
        Some(v) if v.len() != n => {
            return Err(Failure::usage(format!("--x0 has {} entries, system has {n} followers", v.len())))
        }
        Some(v) => DVector::from_vec(v.clone()),
        None => DVector::from_element(n, 1.0),
    };
    let tau = a.tau.unwrap_or(default_tau);
    let r = min_energy_steer(&sys, &x0, tau, a.steps)?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        r.write_csv(&mut w)?;
        w.flush().map_err(|e| Failure::io(path, e))?;
    }
    println!(
        "terminal_norm={:e} x0_norm={:e} gramian_rcond={:e} steps={} tau={tau}",
        r.terminal_norm,
        x0.norm(),
        r.gramian_rcond,
        a.steps
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CliResult<()> {
    let names: Vec<&str> = if a.suite.is_empty() {
        SUITE_NAMES.to_vec()
    } else {
        a.suite.iter().map(String::as_str).collect()
    };
    let mut failed = Vec::new();
    for name in names {
        let start = Instant::now();
        let r = run_suite(name, a.seed)?;
        println!(
            "{:<10} {:>6} cases {:>4} mismatches {:>8.2}s {}",
            r.name,
            r.cases,
            r.mismatches.len(),
            start.elapsed().as_secs_f64(),
            if r.passed() { "PASS" } else { "FAIL" }
        );
        for m in r.mismatches.iter().take(20) {
            println!("  {m}");
        }
        if !r.passed() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            msg: format!("failing suites: {}", failed.join(", ")),
        })
    }
}
