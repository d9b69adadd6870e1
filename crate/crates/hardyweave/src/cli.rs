//! Command-line front end.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or parse error,
//! 2 physics gate (pair cancellation unsatisfied or empty
//! post-selection). Reports go to stdout, diagnostics to stderr.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::analysis::{fit_loglog_slope, noise_ratios, verify_hardy_paradox};
use crate::dsl::{self, compile_circuit, parse_circuit, CompileOptions};
use crate::error::Error;
use crate::pipeline::{self, check_condition5, LaserConfig};
use crate::report::{
    self, dump_state, HardyInputs, HardyResults, Record, RunInputs, RunResults, ScanInputs,
    ScanResults, ScanRow, StageDump,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hardyweave",
    version,
    about = "Fock-space simulator for a three-laser pair-interference experiment"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the canonical pipeline and report amplitudes, probabilities,
    /// noise ratios, and the paradox verdict
    Hardy(HardyArgs),
    /// Compile and execute a .circ circuit file
    Run(RunArgs),
    /// Sweep the laser amplitude and emit the noise-ratio series
    Scan(ScanArgs),
}

fn parse_complex_arg(s: &str) -> Result<Complex64, String> {
    dsl::parse_complex(s)
        .filter(|c| c.re.is_finite() && c.im.is_finite())
        .ok_or_else(|| format!("`{s}` is not a complex literal (expected e.g. 0.01+0i)"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct HardyArgs {
    /// Signal laser amplitude
    #[arg(long, default_value = "0.01+0i", value_parser = parse_complex_arg)]
    alpha: Complex64,
    /// Idler laser amplitude
    #[arg(long, default_value = "0.01+0i", value_parser = parse_complex_arg)]
    beta: Complex64,
    /// Pump laser amplitude
    #[arg(long, default_value = "0.05+0i", value_parser = parse_complex_arg)]
    gamma: Complex64,
    /// Down-conversion coupling
    #[arg(long, default_value = "0.001+0i", value_parser = parse_complex_arg)]
    q: Complex64,
    /// Pump coherent-expansion order
    #[arg(long = "pump-n-max", default_value_t = 3)]
    pump_n_max: u8,
    /// Relative tolerance on the cancellation condition alpha*beta = 2*q*gamma
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Circuit file (.circ)
    file: String,
    /// Include per-stage amplitude dumps in the report
    #[arg(long)]
    emit_stages: bool,
    #[arg(long = "pump-n-max", default_value_t = 3)]
    pump_n_max: u8,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Swept parameter (only `alpha` is supported)
    #[arg(long, default_value = "alpha")]
    param: String,
    /// Grid range as LO:HI (inclusive, geometric spacing)
    #[arg(long, default_value = "0.02:0.2")]
    range: String,
    /// Number of grid points (>= 2)
    #[arg(long, default_value_t = 4)]
    steps: u32,
    /// Hold the cancellation condition at every grid point
    #[arg(long)]
    satisfy_condition5: bool,
    #[arg(long = "pump-n-max", default_value_t = 3)]
    pump_n_max: u8,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn exit_code_for(err: &Error) -> i32 {
    match err.root() {
        Error::CancellationFailed { .. } | Error::EmptySelection => EXIT_PHYSICS,
        _ => EXIT_USAGE,
    }
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

/// Entry point after argument parsing; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Hardy(args) => cmd_hardy(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Scan(args) => cmd_scan(&args),
    }
}

fn cmd_hardy(args: &HardyArgs) -> i32 {
    let cfg = LaserConfig {
        alpha: args.alpha,
        beta: args.beta,
        gamma: args.gamma,
        pump_n_max: args.pump_n_max,
    };
    if let Err(e) = cfg.validate() {
        return usage_error(&e.to_string());
    }
    let condition5 = check_condition5(&cfg, args.q);
    if condition5 > args.tol {
        eprintln!(
            "error: cancellation condition violated (relative residual {condition5:.3e} > {:.3e}); \
             the laser pair in u_S u_I would survive",
            args.tol
        );
        return EXIT_PHYSICS;
    }
    let outcome = (|| {
        let report = pipeline::run_full(&cfg, args.q)?;
        let noise = noise_ratios(&cfg, args.q)?;
        let paradox = verify_hardy_paradox(&cfg, args.q)?;
        Ok::<_, Error>((report, noise, paradox))
    })();
    let (pipeline_report, noise, paradox) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };

    let display_names: &[(&str, &str)] = &[
        ("hardy_state", "post-selected pair state"),
        ("final_bs_both", "final state, both sides transformed"),
        ("final_bs_signal", "final state, signal side only"),
        ("final_bs_idler", "final state, idler side only"),
    ];
    let stages: Vec<StageDump> = display_names
        .iter()
        .filter_map(|(key, label)| {
            pipeline_report
                .stage_states
                .iter()
                .find(|(name, _)| name == key)
                .map(|(_, state)| dump_state(label, state))
        })
        .collect();

    let verdict = paradox.verdict;
    let results = HardyResults {
        condition5_residual: pipeline_report.condition5_residual,
        cancellation_residual: pipeline_report.cancellation_residual,
        stages,
        probabilities: pipeline_report.detection_table,
        noise,
        paradox,
    };
    let inputs = HardyInputs {
        alpha: args.alpha.into(),
        beta: args.beta.into(),
        gamma: args.gamma.into(),
        q: args.q.into(),
        pump_n_max: args.pump_n_max,
        tol: args.tol,
    };
    match args.format {
        Format::Text => print!("{}", report::render_hardy_text(&results)),
        Format::Json => println!("{}", Record::new("hardy", inputs, results).to_json()),
        Format::Csv => print!("{}", report::render_hardy_csv(&results)),
    }
    if verdict {
        EXIT_OK
    } else {
        EXIT_PHYSICS
    }
}

fn cmd_run(args: &RunArgs) -> i32 {
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", args.file)),
    };
    let circuit = match parse_circuit(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}:{e}", args.file);
            return EXIT_USAGE;
        }
    };
    let opts = CompileOptions {
        pump_n_max: args.pump_n_max,
    };
    let run = match compile_circuit(&circuit, &opts).and_then(|c| c.run()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let results = RunResults {
        condition5_residual: run.condition5_residual,
        cancellation_residual: run.cancellation_residual,
        probabilities: run.probabilities,
        stages: args.emit_stages.then(|| {
            run.stage_states
                .iter()
                .map(|(name, state)| dump_state(name, state))
                .collect()
        }),
    };
    let inputs = RunInputs {
        file: args.file.clone(),
        pump_n_max: args.pump_n_max,
    };
    match args.format {
        Format::Text => print!("{}", report::render_run_text(&results)),
        Format::Json => println!("{}", Record::new("run", inputs, results).to_json()),
        Format::Csv => print!("{}", report::render_run_csv(&results)),
    }
    EXIT_OK
}

/// Pump amplitude held fixed during scans; the coupling is adjusted per
/// grid point so the cancellation condition stays exact.
const SCAN_GAMMA: f64 = 0.5;

fn cmd_scan(args: &ScanArgs) -> i32 {
    if args.param != "alpha" {
        return usage_error("only --param alpha is supported");
    }
    if args.steps < 2 {
        return usage_error("--steps must be at least 2");
    }
    let (lo, hi) = match args.range.split_once(':').and_then(|(a, b)| {
        Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?))
    }) {
        Some(pair) => pair,
        None => return usage_error("--range must be LO:HI"),
    };
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return usage_error("--range must satisfy 0 < LO <= HI");
    }

    let n = args.steps as usize;
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        // geometric spacing keeps log-log fits evenly weighted
        let alpha = lo * (hi / lo).powf(t);
        let (gamma, q) = if args.satisfy_condition5 {
            (SCAN_GAMMA, alpha * alpha / (2.0 * SCAN_GAMMA))
        } else {
            (0.05, 0.001)
        };
        let cfg = LaserConfig {
            alpha: Complex64::new(alpha, 0.0),
            beta: Complex64::new(alpha, 0.0),
            gamma: Complex64::new(gamma, 0.0),
            pump_n_max: args.pump_n_max,
        };
        let q = Complex64::new(q, 0.0);
        let noise = match noise_ratios(&cfg, q) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: at alpha = {alpha}: {e}");
                return exit_code_for(&e);
            }
        };
        let p_dd = pipeline::run_full(&cfg, q)
            .ok()
            .map(|r| r.detection_table.dd);
        rows.push(ScanRow {
            alpha,
            ratio_triple: noise.ratio_triple,
            ratio_two_pair: noise.ratio_two_pair,
            p_dd,
        });
    }

    let points_triple: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.alpha, r.ratio_triple)).collect();
    let points_two_pair: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.alpha, r.ratio_two_pair)).collect();
    let results = ScanResults {
        rows,
        slope_triple: fit_loglog_slope(&points_triple),
        slope_two_pair: fit_loglog_slope(&points_two_pair),
    };
    let inputs = ScanInputs {
        param: args.param.clone(),
        range: (lo, hi),
        steps: args.steps,
        satisfy_condition5: args.satisfy_condition5,
        pump_n_max: args.pump_n_max,
    };
    match args.format {
        Format::Text => print!("{}", report::render_scan_text(&results)),
        Format::Json => println!("{}", Record::new("scan", inputs, results).to_json()),
        Format::Csv => print!("{}", report::render_scan_csv(&results)),
    }
    EXIT_OK
}

/// Parses arguments and dispatches; usage problems exit 1 (help and
/// version requests exit 0).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
