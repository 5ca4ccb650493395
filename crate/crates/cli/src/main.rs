//! Batch front-end: reads a JSON problem file, runs the verification,
//! oracle, comparison, or analytic pipelines, and emits machine-readable
//! reports. Exit codes: 0 success, 1 solver or analysis failure,
//! 2 unparsable or invalid problem file.

use clap::{Args, Parser, Subcommand, ValueEnum};
use relusdp::acceptance::run_acceptance;
use relusdp::network::{InputSet, ReluNetwork, SafetySpec};
use relusdp::problem::ProblemFile;
use relusdp::tightness::single_neuron_analytic;
use relusdp::verify::{oracle_direction, run_compare, run_verify, PipelineOptions, Timings};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "relusdp",
    about = "DeepSDP safety verification for feed-forward ReLU networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the half-space offset for every direction (dual bound with
    /// primal cross-check and sampled soundness)
    Verify(RunArgs),
    /// Exact activation-pattern enumeration plus a sampled bound
    Oracle(RunArgs),
    /// Verification, certificate extraction, oracle gap, and verdict per
    /// direction
    Compare(RunArgs),
    /// Closed-form offsets for the scalar single-neuron case
    Analytic(RunArgs),
    /// Run the bundled acceptance suite and print one line per criterion
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON problem file
    problem: PathBuf,
    /// Enable pairwise repeated-nonlinearity cuts
    #[arg(long)]
    cuts: bool,
    /// Interior-point stopping tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Relative eigenvalue threshold for numeric rank
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,
    /// Sample count for the soundness check and the sampled bound
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for all sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Emit solver iteration traces on stderr
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct SelftestArgs {
    /// Base seed for the suite's instance generators
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Echo of the effective configuration, recorded in every report.
#[derive(Serialize)]
struct ConfigEcho {
    command: String,
    problem_path: String,
    cuts: bool,
    tol: f64,
    rank_tol: f64,
    samples: usize,
    seed: u64,
    format: &'static str,
    output: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Selftest(args) => run_selftest(args),
        Command::Verify(args) => run_problem_command("verify", args),
        Command::Oracle(args) => run_problem_command("oracle", args),
        Command::Compare(args) => run_problem_command("compare", args),
        Command::Analytic(args) => run_problem_command("analytic", args),
    }
}

fn run_selftest(args: SelftestArgs) -> ExitCode {
    let results = run_acceptance(args.seed);
    let mut all_pass = true;
    for r in &results {
        println!("{}", r.line());
        all_pass &= r.passed;
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_problem_command(command: &str, args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.problem.display());
            return ExitCode::from(2);
        }
    };
    let file = match ProblemFile::from_json(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (net, input, mut spec) = match file.to_domain() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    // command-line flags override problem-file options
    let fopts = file.options.clone().unwrap_or_default();
    let defaults = PipelineOptions::default();
    let opts = PipelineOptions {
        cuts: args.cuts || fopts.cuts.unwrap_or(false),
        tol: args.tol.or(fopts.tol).unwrap_or(defaults.tol),
        rank_tol: args
            .rank_tol
            .or(fopts.rank_tol)
            .unwrap_or(defaults.rank_tol),
        samples: args.samples.or(fopts.samples).unwrap_or(defaults.samples),
        seed: args.seed.or(fopts.seed).unwrap_or(defaults.seed),
        trace: args.verbose,
        ..defaults
    };
    let config = ConfigEcho {
        command: command.to_string(),
        problem_path: args.problem.display().to_string(),
        cuts: opts.cuts,
        tol: opts.tol,
        rank_tol: opts.rank_tol,
        samples: opts.samples,
        seed: opts.seed,
        format: match args.format {
            Format::Json => "json",
            Format::Csv => "csv",
        },
        output: args.output.as_ref().map(|p| p.display().to_string()),
    };

    let outcome = match command {
        "verify" => run_verify(&net, &input, &mut spec, &opts).map(|(results, timings)| {
            emit_traces(args.verbose, &results);
            (json!(results), json!([]), timings, build_csv(&results, &[]))
        }),
        "compare" => {
            run_compare(&net, &input, &mut spec, &opts).map(|(results, tightness, timings)| {
                emit_traces(args.verbose, &results);
                let csv = build_csv(&results, &tightness);
                (json!(results), json!(tightness), timings, csv)
            })
        }
        "oracle" => run_oracle(&net, &input, &spec, &opts),
        "analytic" => run_analytic(&net, &input, &spec),
        _ => unreachable!(),
    };

    let (results, tightness, timings, csv) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let payload = match args.format {
        Format::Json => {
            let report = json!({
                "config": config,
                "results": results,
                "tightness": tightness,
                "timings": timings,
            });
            match serde_json::to_string_pretty(&report) {
                Ok(s) => s + "\n",
                Err(e) => {
                    eprintln!("error: cannot serialize report: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
        Format::Csv => csv,
    };

    match args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, payload) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{payload}"),
    }
    ExitCode::SUCCESS
}

type CommandOutcome =
    Result<(serde_json::Value, serde_json::Value, Timings, String), relusdp::verify::PipelineError>;

fn run_oracle(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &SafetySpec,
    opts: &PipelineOptions,
) -> CommandOutcome {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut per = Vec::new();
    for (i, c) in spec.directions.iter().enumerate() {
        let t = Instant::now();
        let (exact, sampled) = oracle_direction(net, input, c, opts)?;
        rows.push(json!({
            "direction_index": i,
            "direction": c,
            "d_star": exact.opt_value / 2.0,
            "oracle": exact,
            "sample_bound": sampled,
        }));
        per.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let timings = Timings {
        total_ms: t0.elapsed().as_secs_f64() * 1e3,
        per_direction_ms: per,
    };
    let mut csv = String::from("direction,d_star,primal_obj,dual_obj,gap,oracle,verdict\n");
    for (i, row) in rows.iter().enumerate() {
        let d = row["d_star"].as_f64().unwrap_or(f64::NAN);
        csv.push_str(&format!("{i},{d},,,,{d},\n"));
    }
    Ok((json!(rows), json!([]), timings, csv))
}

fn run_analytic(net: &ReluNetwork, input: &InputSet, spec: &SafetySpec) -> CommandOutcome {
    use relusdp::tightness::TightnessError;
    let t0 = Instant::now();
    let interval = input.to_interval().ok_or_else(|| {
        relusdp::verify::PipelineError::Tightness(TightnessError::ConditionNotMet(
            "analytic offsets require an interval input".into(),
        ))
    })?;
    let (lo, hi) = match interval {
        InputSet::Interval { lo, hi } => (lo, hi),
        _ => unreachable!(),
    };
    if net.total_neurons() != 1 || net.input_dim() != 1 {
        return Err(relusdp::verify::PipelineError::Tightness(
            TightnessError::ConditionNotMet("analytic offsets require a single neuron".into()),
        ));
    }
    let b0 = net.layers()[0].b[0];
    let mut rows = Vec::new();
    for (i, c) in spec.directions.iter().enumerate() {
        let scale = c[0].abs();
        let d = single_neuron_analytic(lo, hi, b0, c[0].signum())
            .map(|d| d * scale)
            .map_err(relusdp::verify::PipelineError::Tightness)?;
        rows.push(json!({
            "direction_index": i,
            "direction": c,
            "d_star": d,
        }));
    }
    let timings = Timings {
        total_ms: t0.elapsed().as_secs_f64() * 1e3,
        per_direction_ms: vec![],
    };
    let mut csv = String::from("direction,d_star,primal_obj,dual_obj,gap,oracle,verdict\n");
    for (i, row) in rows.iter().enumerate() {
        let d = row["d_star"].as_f64().unwrap_or(f64::NAN);
        csv.push_str(&format!("{i},{d},,,,,\n"));
    }
    Ok((json!(rows), json!([]), timings, csv))
}

fn emit_traces(verbose: bool, results: &[relusdp::verify::VerificationResult]) {
    if !verbose {
        return;
    }
    for r in results {
        for trace in &r.traces {
            for rec in &trace.records {
                eprintln!(
                    "direction={} stage={} iter={} mu={:.3e} pfeas={:.3e} dfeas={:.3e} gap={:.3e} step={:.3}",
                    r.direction_index,
                    trace.stage,
                    rec.iter,
                    rec.mu,
                    rec.primal_feas,
                    rec.dual_feas,
                    rec.gap,
                    rec.step
                );
            }
        }
    }
}

fn build_csv(
    results: &[relusdp::verify::VerificationResult],
    tightness: &[relusdp::tightness::TightnessReport],
) -> String {
    let mut out = String::from("direction,d_star,primal_obj,dual_obj,gap,oracle,verdict\n");
    for r in results {
        let rep = tightness
            .iter()
            .find(|t| t.direction_index == r.direction_index);
        let dual = r.dual_obj.map(|v| v.to_string()).unwrap_or_default();
        let gap = r.duality_gap.map(|v| v.to_string()).unwrap_or_default();
        let oracle = rep
            .and_then(|t| t.d_oracle)
            .map(|v| v.to_string())
            .unwrap_or_default();
        let verdict = rep.map(|t| format!("{:?}", t.verdict)).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.direction_index, r.d_star, r.primal_obj, dual, gap, oracle, verdict
        ));
    }
    out
}
