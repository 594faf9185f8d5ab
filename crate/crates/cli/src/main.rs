use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cnls_core::acceptance::{CriterionOutcome, CRITERIA};
use cnls_core::birkhoff::{solve_homological, verify_identities, DEFAULT_EPS0};
use cnls_core::dynamics::{self, BeatingOptions, HChoice, IntegrateOptions, LinearizedOptions, DEFAULT_TOL_H, DEFAULT_TOL_L};
use cnls_core::effective::{build, TorusParams};
use cnls_core::nonres::{measure_sweep, scan_divisors, MeasureOptions, NonresError, PRNG_NAME};
use cnls_core::phase_space::{norm_s, FourierState, SobolevWeight};
use cnls_core::poly_algebra::{user_r5, CompiledPoly, PolyHamiltonian};
use cnls_core::Case;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod config;

#[derive(Parser)]
#[command(name = "cnls", version, about = "Normal forms, small divisors and simulation for the coupled cubic NLS on the circle")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate P2 + P4 (optionally + R5) and write the action time series.
    Simulate(SimulateArgs),
    /// Check the homological identities in exact arithmetic (also `birkhoff verify`).
    BirkhoffVerify(BirkhoffArgs),
    /// Effective Hamiltonian, eigenvalues and verdict of a two-mode torus.
    Effective(EffectiveArgs),
    /// Classify every small divisor at one rho (also `nonres scan`); JSON lines.
    NonresScan(ScanArgs),
    /// Monte-Carlo excluded fraction for one or more kappa (also `nonres measure`).
    NonresMeasure(MeasureArgs),
    /// Growth rate of the linearized flow around a hyperbolic torus.
    Instability(InstabilityArgs),
    /// Perturbation growth around an elliptic torus.
    Stability(StabilityArgs),
    /// Four-mode energy exchange.
    Beating(BeatingArgs),
    /// Run the acceptance criteria and print a PASS/FAIL table.
    Acceptance(AcceptanceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InitKind {
    TwoMode,
    Beating,
    Random,
    File,
}

#[derive(Args, Serialize)]
struct TorusArgs {
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    p: i32,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    q: i32,
    #[arg(long, default_value_t = 1.0)]
    rho1: f64,
    #[arg(long, default_value_t = 1.0)]
    rho2: f64,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = InitKind::TwoMode)]
    init: InitKind,
    /// State JSON for `--init file`.
    #[arg(long)]
    state: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    torus: TorusArgs,
    #[arg(long, default_value_t = 1e-3)]
    nu: f64,
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    /// `l^2_1` norm of a random initial state.
    #[arg(long, default_value_t = 0.05)]
    norm: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "J", default_value_t = 16)]
    j_max: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 100)]
    stride: usize,
    #[arg(long = "tol-h", default_value_t = DEFAULT_TOL_H)]
    tol_h: f64,
    #[arg(long = "tol-l", default_value_t = DEFAULT_TOL_L)]
    tol_l: f64,
    #[arg(long, default_value_t = DEFAULT_EPS0)]
    eps0: f64,
    /// Higher-order term in the polynomial line format.
    #[arg(long)]
    r5: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long = "final-state")]
    final_state: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BirkhoffArgs {
    #[arg(long = "J", default_value_t = 3)]
    j_max: usize,
    #[arg(long = "export-chi4")]
    export_chi4: Option<PathBuf>,
    #[arg(long = "export-z4")]
    export_z4: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EffectiveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    torus: TorusArgs,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// Elliptic torus on `a_p, b_p` (ignores `--q`).
    #[arg(long)]
    stable: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_case(s: &str) -> Result<Case, String> {
    match s {
        "unstable" => Ok(Case::Unstable),
        "stable" => Ok(Case::Stable),
        _ => Err(format!("`{s}` is not one of: unstable, stable")),
    }
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long, value_parser = parse_case, default_value = "unstable")]
    case: Case,
    #[command(flatten)]
    #[serde(flatten)]
    torus: TorusArgs,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    #[arg(long = "J", default_value_t = 64)]
    j_max: usize,
    #[arg(long = "N", default_value_t = 8)]
    n_cut: u32,
    #[arg(long = "include-excluded")]
    include_excluded: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct MeasureArgs {
    #[arg(long, value_parser = parse_case, default_value = "unstable")]
    case: Case,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    p: i32,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    q: i32,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// Comma-separated thresholds, each in `[0, nu/2]`.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.025,0.0125,0.00625")]
    kappa: Vec<f64>,
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[arg(long, default_value_t = MeasureOptions::default().seed)]
    seed: u64,
    #[arg(long = "N", default_value_t = 8)]
    n_cut: u32,
    /// Momentum constant; defaults to `|(p, q)|`.
    #[arg(long = "M")]
    m_const: Option<f64>,
    #[arg(long = "J", default_value_t = 64)]
    j_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LinearArgs {
    #[arg(long, default_value_t = 0.01)]
    nu: f64,
    #[arg(long = "J", default_value_t = 16)]
    j_max: usize,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    /// Horizon; defaults to `12/(nu s)` (instability) or `10/nu` (stability).
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long, default_value_t = LinearizedOptions::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct InstabilityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    torus: TorusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    linear: LinearArgs,
}

#[derive(Args, Serialize)]
struct StabilityArgs {
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    p: i32,
    #[arg(long, default_value_t = 1.0)]
    rho1: f64,
    #[arg(long, default_value_t = 2.0)]
    rho2: f64,
    #[command(flatten)]
    #[serde(flatten)]
    linear: LinearArgs,
}

#[derive(Args, Serialize)]
struct BeatingArgs {
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    p: i32,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    q: i32,
    #[arg(long = "J", default_value_t = 16)]
    j_max: usize,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    /// Run length in units of `1/epsilon^2`.
    #[arg(long, default_value_t = 12.0)]
    horizon: f64,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct AcceptanceArgs {
    /// Comma-separated criterion numbers; all by default.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// A parameter fails one of the physical or numerical gates.
    Config { gate: &'static str, message: String },
    Runtime { kind: String, message: String },
}

impl Failure {
    fn config(gate: &'static str, e: impl ToString) -> Self {
        Failure::Config { gate, message: e.to_string() }
    }

    fn runtime<E: std::fmt::Debug + std::fmt::Display>(e: E) -> Self {
        let dbg = format!("{e:?}");
        let kind = dbg.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("Error").to_string();
        Failure::Runtime { kind, message: e.to_string() }
    }

    fn io(e: std::io::Error) -> Self {
        Failure::Runtime { kind: "Io".into(), message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: &'a C,
    prng: &'a str,
    result: R,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(Failure::io)?;
    tmp.write_all(bytes).map_err(Failure::io)?;
    tmp.persist(path).map_err(|e| Failure::io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: String) -> Outcome {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(e)),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json<C: Serialize, R: Serialize>(command: &str, config: &C, result: R, out: Option<&Path>) -> Outcome {
    let art = Artifact { command, config, prng: PRNG_NAME, result };
    emit(out, serde_json::to_string_pretty(&art).expect("serializable"))
}

fn torus(p: i32, q: i32, rho: (f64, f64), nu: f64) -> Result<TorusParams, Failure> {
    TorusParams::new(p, q, rho, nu).map_err(|e| Failure::config("torus parameters: nu in (0, 0.25], rho in [1, 2]^2", e))
}

fn fits(j_max: usize, modes: &[i32]) -> Result<(), Failure> {
    match modes.iter().find(|j| j.unsigned_abs() as usize > j_max) {
        Some(j) => Err(Failure::config("truncation: |p|, |q| <= J", format!("mode {j} outside J = {j_max}"))),
        None => Ok(()),
    }
}

fn simulate(a: &SimulateArgs) -> Outcome {
    let (p, q) = (a.torus.p, a.torus.q);
    let z0 = match a.init {
        InitKind::TwoMode => {
            fits(a.j_max, &[p, q])?;
            dynamics::two_mode_state(&torus(p, q, (a.torus.rho1, a.torus.rho2), a.nu)?, a.j_max)
        }
        InitKind::Beating => {
            fits(a.j_max, &[p, q])?;
            if !(a.gamma > 0.0 && a.gamma < 0.5) || p == q {
                return Err(Failure::config("beating: 0 < gamma < 1/2, p != q", format!("gamma = {}, p = {p}, q = {q}", a.gamma)));
            }
            let e2 = a.epsilon * a.epsilon;
            let mut z = FourierState::zeros(a.j_max);
            *z.a_mut(p) = ((1.0 - a.gamma) * e2).sqrt().into();
            *z.b_mut(q) = ((1.0 - a.gamma) * e2).sqrt().into();
            *z.a_mut(q) = (a.gamma * e2).sqrt().into();
            *z.b_mut(p) = (a.gamma * e2).sqrt().into();
            z
        }
        InitKind::Random => FourierState::random(a.j_max, SobolevWeight(1.0), a.norm, &mut ChaCha8Rng::seed_from_u64(a.seed)),
        InitKind::File => {
            let path = a.state.as_ref().ok_or_else(|| Failure::config("--init file needs --state", "no state file given"))?;
            let text = fs::read_to_string(path).map_err(|e| Failure::config("state file", e))?;
            let z: FourierState = serde_json::from_str(&text).map_err(|e| Failure::config("state file", e))?;
            z
        }
    };
    let norm = norm_s(&z0, SobolevWeight(1.0));
    if norm > a.eps0 * (1.0 + 1e-12) {
        return Err(Failure::config("small-data gate eps0", format!("initial l^2_1 norm {norm:.4} exceeds eps0 = {}", a.eps0)));
    }
    if !(a.dt > 0.0 && a.t_end >= 0.0) {
        return Err(Failure::config("time step: dt > 0, T >= 0", format!("dt = {}, T = {}", a.dt, a.t_end)));
    }
    let h = match &a.r5 {
        None => HChoice::P2P4,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::config("R5 file", e))?;
            let poly: PolyHamiltonian = text.parse().map_err(|e| Failure::config("R5 file", e))?;
            let case = if p == q { Case::Stable } else { Case::Unstable };
            let r5 = user_r5(&poly, case).map_err(|e| Failure::config("R5 admissibility", e))?;
            if r5.max_abs_index().unsigned_abs() as usize > a.j_max {
                return Err(Failure::config("truncation: R5 indices <= J", format!("R5 reaches |j| = {}", r5.max_abs_index())));
            }
            HChoice::WithR5(CompiledPoly::new(&r5))
        }
    };
    let opts = IntegrateOptions {
        dt: a.dt,
        t_end: a.t_end,
        stride: a.stride,
        tol_h: Some(a.tol_h),
        tol_l: Some(a.tol_l),
        gate: Some(a.eps0),
        keep_states: a.final_state.is_some(),
        watch: (p, q),
    };
    let traj = dynamics::integrate(&h, &z0, &opts).map_err(Failure::runtime)?;
    if let Some(path) = &a.csv {
        write_atomic(path, traj.to_csv().as_bytes())?;
    }
    if let Some(path) = &a.final_state {
        let last = traj.last_state().expect("kept");
        write_atomic(path, serde_json::to_string(last).expect("serializable").as_bytes())?;
    }
    #[derive(Serialize)]
    struct Summary {
        initial_norm: f64,
        steps: usize,
        drift: dynamics::Drift,
        last: Option<dynamics::Observables>,
    }
    let summary = Summary { initial_norm: norm, steps: (a.t_end / a.dt).round() as usize, drift: traj.drift, last: traj.rows.last().copied() };
    emit_json("simulate", a, summary, a.out.as_deref())
}

fn birkhoff_verify(a: &BirkhoffArgs) -> Outcome {
    if a.j_max == 0 {
        return Err(Failure::config("truncation: J >= 1", "J = 0"));
    }
    let sol = solve_homological(a.j_max);
    if let Some(path) = &a.export_chi4 {
        write_atomic(path, sol.chi4.to_string().as_bytes())?;
    }
    if let Some(path) = &a.export_z4 {
        write_atomic(path, sol.z4.to_string().as_bytes())?;
    }
    let rep = verify_identities(&sol).map_err(Failure::runtime)?;
    emit_json("birkhoff-verify", a, rep, a.out.as_deref())
}

fn effective(a: &EffectiveArgs) -> Outcome {
    let q = if a.stable { a.torus.p } else { a.torus.q };
    let tp = torus(a.torus.p, q, (a.torus.rho1, a.torus.rho2), a.nu)?;
    let model = build(&tp).map_err(|e| Failure::config("torus parameters", e))?;
    emit_json("effective", a, model, a.out.as_deref())
}

fn nonres_scan(a: &ScanArgs) -> Outcome {
    let q = if a.case == Case::Stable { a.torus.p } else { a.torus.q };
    let tp = torus(a.torus.p, q, (a.torus.rho1, a.torus.rho2), a.nu)?;
    let rep = scan_divisors(&tp, a.j_max, a.case, a.n_cut, a.include_excluded).map_err(Failure::runtime)?;
    #[derive(Serialize)]
    struct Header<'a> {
        command: &'a str,
        config: &'a ScanArgs,
        delta: f64,
        candidates: usize,
        excluded_by_mass: usize,
        excluded_by_momentum: usize,
        records: usize,
    }
    let header = Header {
        command: "nonres-scan",
        config: a,
        delta: rep.delta,
        candidates: rep.candidates,
        excluded_by_mass: rep.excluded_by_mass,
        excluded_by_momentum: rep.excluded_by_momentum,
        records: rep.records.len(),
    };
    let mut text = serde_json::to_string(&header).expect("serializable");
    for r in &rep.records {
        text.push('\n');
        text.push_str(&serde_json::to_string(r).expect("serializable"));
    }
    emit(a.out.as_deref(), text)
}

fn nonres_measure(a: &MeasureArgs) -> Outcome {
    let q = if a.case == Case::Stable { a.p } else { a.q };
    torus(a.p, q, (1.0, 1.0), a.nu)?;
    let opts = MeasureOptions { n_cut: a.n_cut, m_const: a.m_const, samples: a.samples, seed: a.seed, j_max: a.j_max };
    let reps = measure_sweep(a.p, q, a.case, a.nu, &a.kappa, &opts).map_err(|e| match e {
        NonresError::KappaOutOfRange { .. } => Failure::config("kappa in [0, nu/2]", e),
        other => Failure::runtime(other),
    })?;
    emit_json("nonres-measure", a, reps, a.out.as_deref())
}

fn linear_opts(l: &LinearArgs) -> Result<LinearizedOptions, Failure> {
    if !(l.nu <= 1e-2) {
        return Err(Failure::config("linearized runs: nu <= 1e-2", format!("nu = {}", l.nu)));
    }
    Ok(LinearizedOptions { dt: l.dt, t_end: l.t_end, j_max: l.j_max, seed: l.seed, stride: l.stride })
}

fn growth(command: &str, config: &impl Serialize, tp: &TorusParams, case: Case, l: &LinearArgs) -> Outcome {
    let opts = linear_opts(l)?;
    match dynamics::linearized_flow(tp, case, &opts) {
        Ok(fit) => emit_json(command, config, fit, l.out.as_deref()),
        // informative: the window never opened
        Err(e @ dynamics::DynamicsError::NoGrowthWindow { .. }) => {
            #[derive(Serialize)]
            struct Note {
                fit: Option<dynamics::GrowthFit>,
                note: String,
            }
            emit_json(command, config, Note { fit: None, note: e.to_string() }, l.out.as_deref())
        }
        Err(e) => Err(Failure::runtime(e)),
    }
}

fn instability(a: &InstabilityArgs) -> Outcome {
    if a.torus.p == a.torus.q {
        return Err(Failure::config("hyperbolic torus: p != q", "use `stability` for p = q"));
    }
    let tp = torus(a.torus.p, a.torus.q, (a.torus.rho1, a.torus.rho2), a.linear.nu)?;
    fits(a.linear.j_max, &[tp.p, tp.q])?;
    growth("instability", a, &tp, Case::Unstable, &a.linear)
}

fn stability(a: &StabilityArgs) -> Outcome {
    let tp = torus(a.p, a.p, (a.rho1, a.rho2), a.linear.nu)?;
    fits(a.linear.j_max, &[tp.p])?;
    growth("stability", a, &tp, Case::Stable, &a.linear)
}

fn beating(a: &BeatingArgs) -> Outcome {
    if !(a.gamma > 0.0 && a.gamma < 0.5) || a.p == a.q {
        return Err(Failure::config("beating: 0 < gamma < 1/2, p != q", format!("gamma = {}, p = {}, q = {}", a.gamma, a.p, a.q)));
    }
    fits(a.j_max, &[a.p, a.q])?;
    let opts = BeatingOptions { dt: a.dt, j_max: a.j_max, horizon: a.horizon, stride: a.stride };
    let rep = dynamics::beating(a.gamma, a.epsilon, a.p, a.q, &opts).map_err(Failure::runtime)?;
    if let Some(path) = &a.csv {
        let mut s = String::from(dynamics::CSV_HEADER);
        s.push('\n');
        for r in &rep.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        write_atomic(path, s.as_bytes())?;
    }
    #[derive(Serialize)]
    struct WithNormalizations<'a> {
        #[serde(flatten)]
        report: &'a dynamics::BeatingReport,
        /// Amplitude reading of the initial data, `|a_p| = |b_q| = gamma eps`, kept for reference.
        amplitude_convention_initial_actions: [f64; 2],
    }
    let e2 = a.epsilon * a.epsilon;
    let result = WithNormalizations { report: &rep, amplitude_convention_initial_actions: [a.gamma * a.gamma * e2, (1.0 - a.gamma).powi(2) * e2] };
    emit_json("beating", a, result, a.out.as_deref())
}

fn acceptance(a: &AcceptanceArgs) -> Outcome {
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for (i, run) in CRITERIA.iter().enumerate() {
        let id = (i + 1) as u8;
        if !a.only.is_empty() && !a.only.contains(&id) {
            continue;
        }
        let o = run();
        println!("{}", o.line());
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if let Some(path) = &a.out {
        let art = Artifact { command: "acceptance", config: a, prng: PRNG_NAME, result: &outcomes };
        write_atomic(path, serde_json::to_string_pretty(&art).expect("serializable").as_bytes())?;
    }
    if failed > 0 {
        return Err(Failure::Runtime { kind: "AcceptanceFailed".into(), message: format!("{failed} criteria failed") });
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = config::normalize(std::env::args().collect());
    let args = match config::merge(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: invalid configuration (gate: config file): {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::BirkhoffVerify(a) => birkhoff_verify(a),
        Command::Effective(a) => effective(a),
        Command::NonresScan(a) => nonres_scan(a),
        Command::NonresMeasure(a) => nonres_measure(a),
        Command::Instability(a) => instability(a),
        Command::Stability(a) => stability(a),
        Command::Beating(a) => beating(a),
        Command::Acceptance(a) => acceptance(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config { gate, message }) => {
            eprintln!("error: invalid configuration (gate: {gate}): {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime { kind, message }) => {
            let err = serde_json::json!({ "error": kind, "message": message });
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}
