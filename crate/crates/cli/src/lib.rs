//! Command-line front end: instance generation, equilibrium search,
//! certification and the two welfare checks, all driven by JSON files.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use digimkt::equilibrium::bread_only_targets;
use digimkt::state_io::{
    certificate_summary, iteration_csv, read_state, write_certificate, write_state, ParetoDocument,
    TargetsDocument, TransferDocument,
};
use digimkt::{
    certify, check_partial_pareto, generate_instance, parse_instance, serialize_instance, solve,
    solve_with_transfers, GeneratorParams, Instance, PriceRule, SolveConfig, UpdateOrder, UtilityFamily,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "digimkt", version, about = "Equilibria of markets with digital goods")]
struct Cli {
    /// Also write the run report as JSON to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Search for a certified equilibrium.
    Solve(SolveArgs),
    /// Certify a state against an instance.
    Certify(CertifyArgs),
    /// Check partial Pareto optimality of a state.
    Welfare1(Welfare1Args),
    /// Search for an equilibrium with wealth transfer meeting utility targets.
    Welfare2(Welfare2Args),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    categories: usize,
    /// Initial songs per category.
    #[arg(long)]
    songs: usize,
    #[arg(long, value_enum, default_value = "linear")]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SolverFlags {
    #[arg(long, value_enum, default_value = "multiplicative")]
    rule: Rule,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Weight of the best response when blending production.
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    certify_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "jacobi")]
    order: Order,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Directory receiving state.json, certificate.json, iterations.csv and report.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the certificate JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Welfare1Args {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the verdict JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Welfare2Args {
    #[arg(long)]
    instance: PathBuf,
    /// JSON file `{"targets": [...]}` with one positive utility per agent.
    #[arg(long, required_unless_present = "bread_only", conflicts_with = "bread_only")]
    targets: Option<PathBuf>,
    /// Use the utilities of the all-bread economy where everyone keeps their own output.
    #[arg(long)]
    bread_only: bool,
    #[command(flatten)]
    solver: SolverFlags,
    /// Directory receiving state.json, transfer.json, certificate.json, iterations.csv and report.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Family {
    Linear,
    #[value(name = "cobb_douglas", alias = "cobb-douglas")]
    CobbDouglas,
    #[value(name = "pwl_concave", alias = "pwl-concave")]
    PwlConcave,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Rule {
    Multiplicative,
    Argmax,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Order {
    Jacobi,
    GaussSeidel,
}

impl From<Family> for UtilityFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Linear => UtilityFamily::Linear,
            Family::CobbDouglas => UtilityFamily::CobbDouglas,
            Family::PwlConcave => UtilityFamily::PwlConcave,
        }
    }
}

impl SolverFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            rule: match self.rule {
                Rule::Multiplicative => PriceRule::Multiplicative,
                Rule::Argmax => PriceRule::Argmax,
            },
            eta: self.eta,
            damping: self.damping,
            max_iters: self.max_iters,
            tol: self.tol,
            certify_every: self.certify_every,
            seed: self.seed,
            order: match self.order {
                Order::Jacobi => UpdateOrder::Jacobi,
                Order::GaussSeidel => UpdateOrder::GaussSeidel,
            },
        }
    }
}

/// How a run ended. `Converged` doubles as plain success for commands that
/// do not iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    MaxIters,
    CertFail,
    InputError,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Converged => EXIT_OK,
            Outcome::CertFail => EXIT_FAIL,
            Outcome::MaxIters => EXIT_NO_CONVERGENCE,
            Outcome::InputError => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the instance file bytes.
    pub instance_digest: Option<String>,
    pub config: serde_json::Value,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub artifacts: Vec<String>,
}

type Failure = String;

fn fail(context: impl Display, err: impl Display) -> Failure {
    format!("{context}: {err}")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(path.display(), e))
}

fn write(path: &Path, text: &str, artifacts: &mut Vec<String>) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(path.display(), e))?;
    artifacts.push(path.display().to_string());
    Ok(())
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load_instance(path: &Path) -> Result<(Instance, String), Failure> {
    let text = read(path)?;
    let inst = parse_instance(&text).map_err(|e| fail(path.display(), e))?;
    Ok((inst, digest(text.as_bytes())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| fail(dir.display(), e))
}

fn init_logging() {
    let level = match std::env::var("DIGIMKT_LOG").as_deref() {
        Ok("trace") => log::LevelFilter::Trace,
        Ok("info") => log::LevelFilter::Info,
        Ok("quiet") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut report = RunReport {
        command: String::new(),
        instance_digest: None,
        config: serde_json::Value::Null,
        outcome: Outcome::InputError,
        exit_code: EXIT_INPUT,
        artifacts: Vec::new(),
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a, &mut report),
        Command::Solve(a) => run_solve(a, &mut report),
        Command::Certify(a) => run_certify(a, &mut report),
        Command::Welfare1(a) => welfare1(a, &mut report),
        Command::Welfare2(a) => welfare2(a, &mut report),
    };
    report.outcome = match result {
        Ok(outcome) => outcome,
        Err(msg) => {
            eprintln!("error: {msg}");
            Outcome::InputError
        }
    };
    report.exit_code = report.outcome.exit_code();
    if let Some(path) = &cli.report {
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        if let Err(e) = fs::write(path, text) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    report.exit_code
}

fn gen(a: &GenArgs, report: &mut RunReport) -> Result<Outcome, Failure> {
    report.command = "gen".into();
    report.config = json!({
        "agents": a.agents, "categories": a.categories, "songs": a.songs,
        "family": a.family, "seed": a.seed,
    });
    let params = GeneratorParams {
        agents: a.agents,
        categories: a.categories,
        songs_per_category: a.songs,
        family: a.family.into(),
    };
    let inst: Instance = generate_instance(params, a.seed).map_err(|e| fail("gen", e))?;
    let text = serialize_instance(&inst);
    report.instance_digest = Some(digest(text.as_bytes()));
    match &a.out {
        Some(path) => write(path, &text, &mut report.artifacts)?,
        None => print!("{text}"),
    }
    Ok(Outcome::Converged)
}

fn write_report(dir: &Path, report: &mut RunReport, outcome: Outcome) -> Result<(), Failure> {
    let path = dir.join("report.json");
    report.artifacts.push(path.display().to_string());
    report.outcome = outcome;
    report.exit_code = outcome.exit_code();
    let text = serde_json::to_string_pretty(&*report).expect("report serializes") + "\n";
    fs::write(&path, text).map_err(|e| fail(path.display(), e))
}

fn price_line(prices: &[f64]) -> String {
    prices
        .iter()
        .enumerate()
        .map(|(j, p)| format!("p_{j}={p:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_solve(a: &SolveArgs, report: &mut RunReport) -> Result<Outcome, Failure> {
    report.command = "solve".into();
    report.config = serde_json::to_value(&a.solver).expect("flags serialize");
    let (inst, hash) = load_instance(&a.instance)?;
    report.instance_digest = Some(hash);
    let config = a.solver.config();
    let r = solve(&inst, &config).map_err(|e| fail("solve", e))?;
    ensure_dir(&a.out_dir)?;
    write(&a.out_dir.join("state.json"), &write_state(&inst, &r.state), &mut report.artifacts)?;
    write(&a.out_dir.join("certificate.json"), &write_certificate(&inst, &r.certificate), &mut report.artifacts)?;
    write(&a.out_dir.join("iterations.csv"), &iteration_csv(inst.g(), &r.log), &mut report.artifacts)?;
    let outcome = match r.outcome {
        digimkt::SolveOutcome::Converged { iterations } => {
            println!("converged after {iterations} iterations");
            Outcome::Converged
        }
        digimkt::SolveOutcome::MaxIters => {
            println!("no certified state within {} iterations; best state written", config.max_iters);
            Outcome::MaxIters
        }
    };
    println!("{}", price_line(&r.state.prices));
    print!("{}", certificate_summary(&r.certificate));
    write_report(&a.out_dir, report, outcome)?;
    Ok(outcome)
}

fn run_certify(a: &CertifyArgs, report: &mut RunReport) -> Result<Outcome, Failure> {
    report.command = "certify".into();
    report.config = json!({ "tol": a.tol });
    let (inst, hash) = load_instance(&a.instance)?;
    report.instance_digest = Some(hash);
    let state = read_state(&inst, &read(&a.state)?).map_err(|e| fail(a.state.display(), e))?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(fail("--tol", "must be positive"));
    }
    let cert = certify(&inst, &state, a.tol).map_err(|e| fail("certify", e))?;
    if let Some(path) = &a.out {
        write(path, &write_certificate(&inst, &cert), &mut report.artifacts)?;
    }
    print!("{}", certificate_summary(&cert));
    Ok(if cert.pass { Outcome::Converged } else { Outcome::CertFail })
}

fn welfare1(a: &Welfare1Args, report: &mut RunReport) -> Result<Outcome, Failure> {
    report.command = "welfare1".into();
    report.config = json!({ "grid_step": a.grid_step, "tol": a.tol });
    let (inst, hash) = load_instance(&a.instance)?;
    report.instance_digest = Some(hash);
    let state = read_state(&inst, &read(&a.state)?).map_err(|e| fail(a.state.display(), e))?;
    let verdict = check_partial_pareto(&inst, &state, a.grid_step, a.tol).map_err(|e| fail("welfare1", e))?;
    let text = serde_json::to_string_pretty(&ParetoDocument::from_verdict(&verdict)).expect("verdict serializes") + "\n";
    match &a.out {
        Some(path) => write(path, &text, &mut report.artifacts)?,
        None => print!("{text}"),
    }
    println!(
        "{} ({} grid points, step {}, slack {:.3e})",
        if verdict.dominated { "dominated" } else { "not dominated" },
        verdict.points_examined,
        a.grid_step,
        verdict.slack
    );
    Ok(if verdict.dominated { Outcome::CertFail } else { Outcome::Converged })
}

fn welfare2(a: &Welfare2Args, report: &mut RunReport) -> Result<Outcome, Failure> {
    report.command = "welfare2".into();
    report.config = json!({ "solver": a.solver, "bread_only": a.bread_only });
    let (inst, hash) = load_instance(&a.instance)?;
    report.instance_digest = Some(hash);
    let targets = match &a.targets {
        Some(path) => {
            let doc: TargetsDocument = serde_json::from_str(&read(path)?).map_err(|e| fail(path.display(), e))?;
            doc.targets
        }
        None => bread_only_targets(&inst, None),
    };
    let config = a.solver.config();
    let r = solve_with_transfers(&inst, &targets, &config).map_err(|e| fail("welfare2", e))?;
    ensure_dir(&a.out_dir)?;
    let transfer = TransferDocument::new(&r.transfer, &r.verdict);
    let transfer_text = serde_json::to_string_pretty(&transfer).expect("transfer serializes") + "\n";
    write(&a.out_dir.join("state.json"), &write_state(&inst, &r.state), &mut report.artifacts)?;
    write(&a.out_dir.join("transfer.json"), &transfer_text, &mut report.artifacts)?;
    write(
        &a.out_dir.join("certificate.json"),
        &write_certificate(&inst, &r.verdict.certificate),
        &mut report.artifacts,
    )?;
    write(&a.out_dir.join("iterations.csv"), &iteration_csv(inst.g(), &r.log), &mut report.artifacts)?;
    let outcome = if !r.converged() {
        println!("no transfer equilibrium within {} iterations; best state written", config.max_iters);
        Outcome::MaxIters
    } else if r.verdict.pass {
        Outcome::Converged
    } else {
        Outcome::CertFail
    };
    println!("alpha {:.6}  max deviation {:.3e}", r.verdict.alpha, r.verdict.max_deviation);
    println!("{}", price_line(&r.state.prices));
    print!("{}", certificate_summary(&r.verdict.certificate));
    write_report(&a.out_dir, report, outcome)?;
    Ok(outcome)
}
