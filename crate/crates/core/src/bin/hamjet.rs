use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hamjet::report::{self, ErrorEntry, Format, Object, ReportError, VerifyReport};
use hamjet::space::HamiltonSpace;
use hamjet::verify::{run_suite, SampleConfig, Suite};

const EXIT_INPUT: u8 = 1;
const EXIT_IDENTITY: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hamjet", version, about = "Geometry of quadratic multi-time Hamiltonians")]
struct Cli {
    /// List the objects `compute` accepts and exit.
    #[arg(long)]
    list_objects: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a space file or bundled space name.
    Check { space: String },
    /// Print the components of a geometric object.
    Compute(ComputeArgs),
    /// Sample identity suites at seeded random points.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ComputeArgs {
    space: String,
    #[arg(long)]
    object: String,
    /// Evaluate at a point, e.g. `x1=0.7,p1_2=0.1`; unset coordinates take the domain midpoint.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, default_value = "text")]
    format: Format,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

#[derive(Args)]
struct VerifyArgs {
    space: String,
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol_abs: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_rel: f64,
    #[arg(long, default_value_t = 1e-6)]
    fd_step: f64,
    #[arg(long, default_value_t = 10)]
    max_resample: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

fn fail(err: &ReportError) -> ExitCode {
    eprintln!("{}", report::error_list(&[ErrorEntry::from(err)]));
    ExitCode::from(EXIT_INPUT)
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn check(path: &str) -> ExitCode {
    match HamiltonSpace::resolve(path) {
        Ok(space) => {
            let doc = serde_json::json!({"space": space.name, "valid": true, "m": space.m, "n": space.n});
            emit(&(serde_json::to_string_pretty(&doc).expect("serializes") + "\n"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            emit(&(report::error_list(&[ErrorEntry::new(e.code(), e.to_string())]) + "\n"));
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn compute(args: &ComputeArgs) -> Result<ExitCode, ReportError> {
    let object: Object = args.object.parse()?;
    let space = HamiltonSpace::resolve(&args.space)?;
    let at = match &args.at {
        Some(spec) => {
            let (pt, inside) = report::parse_point(spec, &space)?;
            if !inside {
                eprintln!("warning: point {spec} lies outside the sampling domain of `{}`; evaluating anyway", space.name);
            }
            Some(pt)
        }
        None => None,
    };
    let computed = report::compute(&space, object, args.kappa)?;
    emit(&report::render(&space, object, &computed, at.as_ref(), args.format)?);
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Result<ExitCode, ReportError> {
    let suite: Suite = args.suite.parse().map_err(ReportError::Verify)?;
    let space = HamiltonSpace::resolve(&args.space)?;
    let cfg = SampleConfig {
        seed: args.seed,
        count: args.samples,
        tol_abs: args.tol_abs,
        tol_rel: args.tol_rel,
        fd_step: args.fd_step,
        max_resample: args.max_resample,
    };
    let results = run_suite(&space, suite, &cfg, args.kappa)?;
    let rep = VerifyReport::new(&space, suite, &cfg, args.kappa, &results);
    emit(&rep.to_json());
    if rep.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for r in rep.failures() {
            eprintln!("failed: {} (max |residual| {:e})", r.identity, r.max_abs_residual);
        }
        Ok(ExitCode::from(EXIT_IDENTITY))
    }
}

fn run(cli: Cli) -> ExitCode {
    if cli.list_objects {
        emit(&report::list_objects());
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Check { space }) => return check(&space),
        Some(Command::Compute(args)) => compute(&args),
        Some(Command::Verify(args)) => verify(&args),
        None => {
            eprintln!("no command given; try `hamjet --help`");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    result.unwrap_or_else(|e| fail(&e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    std::panic::catch_unwind(|| run(cli)).unwrap_or(ExitCode::from(EXIT_INTERNAL))
}
