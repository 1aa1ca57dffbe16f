//! `bethe` — inference, believability analysis, learning, and ensemble BP
//! for binary pairwise models, from the command line.
//!
//! Subcommands mirror the library pipeline: `generate` a model, compute
//! `exact` marginals, run `bp`, classify `believability`, fit parameters with
//! `pmm` or `learn`, average fixed points with `ebp`, and drive the batch
//! protocols `sweep-fraction`, `compare`, and `project`. Runtime failures
//! print one JSON object to stderr and exit nonzero.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bethe::bp::{run_bp, BpOptions, MessageInit};
use bethe::ensemble::{ebp_exact, ebp_gaussian, fit_gaussian};
use bethe::experiments::{
    export_trajectory_projection, five_model_comparison, projection_csv, sweep_csv,
    sweep_unbelievable_fraction, ComparisonConfig, SweepConfig,
};
use bethe::graph::Graph;
use bethe::learning::{
    bethe_wake_sleep, pseudo_moment_matching, LearningTrajectory, MessagePolicy, ThetaInit,
    WakeSleepOptions,
};
use bethe::model::{generate_random_ising, IsingModel, Topology};
use bethe::pseudomarginal::{MarginalsData, Pseudomarginals};
use bethe::spectral::{is_believable, BELIEVABILITY_TOL};

#[derive(Parser)]
#[command(
    name = "bethe",
    version,
    about = "Belief propagation, believability analysis, and ensemble BP for binary pairwise models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct BpFlags {
    /// Message damping time constant (mixing weight exp(-1/tau); 0 disables).
    #[arg(long, default_value_t = 5.0)]
    damping_tau: f64,
    /// Convergence threshold on the max single-sweep message change.
    #[arg(long = "bp-tol", default_value_t = 1e-9)]
    bp_tol: f64,
    #[arg(long = "bp-max-iters", default_value_t = 50_000)]
    bp_max_iters: usize,
}

impl BpFlags {
    fn options(&self) -> BpOptions {
        BpOptions {
            damping_tau: self.damping_tau,
            tol: self.bp_tol,
            max_iters: self.bp_max_iters,
            init: MessageInit::Uniform,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random model: h_i ~ Normal(0, sigma_h^2), J_ij ~ Normal(0, sigma_j^2).
    Generate {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma_h: f64,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma_j: f64,
        /// JSON file with an explicit edge list `[[i,j],...]`; fully
        /// connected when omitted.
        #[arg(long)]
        edges_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the model JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact marginals of a model by exhaustive enumeration (n <= 20).
    Exact {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run damped sum-product belief propagation on a model.
    Bp {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        bp: BpFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify marginals against the Bethe Hessian spectrum.
    Believability {
        /// Model JSON; supplies the graph (and the marginals when --marginals
        /// is omitted, via exact enumeration).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        marginals: Option<PathBuf>,
        /// Boundary half-width on the smallest eigenvalue.
        #[arg(long, default_value_t = BELIEVABILITY_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form pseudo-moment matching: marginals -> parameters.
    Pmm {
        /// Graph topology source (a model JSON works; h and J are ignored).
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        marginals: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wake-sleep learning toward target marginals; writes a JSONL trajectory.
    Learn {
        #[arg(long)]
        graph: PathBuf,
        /// Target marginals JSON.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        /// `pmm`, `zeros`, or a path to a parameter JSON.
        #[arg(long, default_value = "pmm")]
        theta_init: String,
        /// `fresh`, `random`, or `warm`.
        #[arg(long, default_value = "fresh")]
        message_policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bp: BpFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble BP over a learning trajectory (exact window or Gaussian fit).
    Ebp {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Trailing window length.
        #[arg(long, default_value_t = 100)]
        last: usize,
        /// Sample from a Gaussian fitted to the window instead of averaging
        /// the recorded beliefs.
        #[arg(long)]
        gaussian: bool,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0.99)]
        variance_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bp: BpFlags,
        /// Output path for the averaged beliefs (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output path for the diagnostics JSON (stdout with --out, stderr
        /// otherwise).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Fraction of random targets that are unbelievable, per coupling spread.
    SweepFraction {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma_h: f64,
        /// Grid of sigma_j values: `start:stop:step` or a comma list.
        #[arg(long, default_value = "0:0.5:0.05")]
        grid: String,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Five-strategy comparison on unbelievable targets.
    Compare {
        /// Unbelievable targets to process.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma_h: f64,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma_j: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_attempts: usize,
        #[arg(long, default_value_t = 2000)]
        learning_iters: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0.99)]
        variance_fraction: f64,
        #[arg(long, default_value_t = 2)]
        max_rank: usize,
        #[arg(long, default_value_t = 5.0)]
        damping_tau: f64,
        #[arg(long = "bp-tol", default_value_t = 1e-9)]
        bp_tol: f64,
        /// BP budget per run inside learning and evaluation.
        #[arg(long = "bp-max-iters", default_value_t = 2500)]
        bp_max_iters: usize,
        #[arg(long)]
        threads: Option<usize>,
        /// Per-trial records CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Quartile summary CSV path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Principal-component projection of a learning trajectory.
    Project {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl From<bethe::BetheError> for CliError {
    fn from(e: bethe::BetheError) -> Self {
        CliError::new("bethe", e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("json", e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let mut content = String::new();
    File::open(path)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?
        .read_to_string(&mut content)?;
    Ok(serde_json::from_str(&content)?)
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(content.as_bytes())?;
            Ok(())
        }
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(format!("{}\n", serde_json::to_string(value)?))
}

fn load_marginals(graph: &Graph, path: &Path) -> Result<Pseudomarginals, CliError> {
    let data: MarginalsData = read_json(path)?;
    Ok(Pseudomarginals::new(
        graph.clone(),
        data.qi_plus,
        data.qij_pp,
    )?)
}

fn load_trajectory(graph: &Graph, path: &Path) -> Result<LearningTrajectory, CliError> {
    let file =
        File::open(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    Ok(LearningTrajectory::read_jsonl(
        graph.clone(),
        BufReader::new(file),
    )?)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::new("usage", format!("invalid grid '{spec}': {m}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
        let step: f64 = parts[2].parse().map_err(|_| bad("bad step"))?;
        if step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1.5).floor() as usize;
        Ok((0..count).map(|k| start + step * k as f64).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("bad value")))
            .collect()
    }
}

fn in_thread_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::new("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Serialize)]
struct BpResultJson {
    beliefs: MarginalsData,
    converged: bool,
    iterations: usize,
    final_delta: f64,
}

#[derive(Serialize)]
struct BelievabilityJson {
    lambda_min: f64,
    classification: bethe::Believability,
    eigvec: Vec<f64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            n,
            sigma_h,
            sigma_j,
            edges_file,
            seed,
            out,
        } => {
            let topology = match edges_file {
                Some(path) => Topology::Edges(read_json(&path)?),
                None => Topology::Full,
            };
            let model = generate_random_ising(n, sigma_h, sigma_j, topology, seed)?;
            write_output(out.as_ref(), &to_json_line(&model)?)
        }
        Command::Exact { model, out } => {
            let model: IsingModel = read_json(&model)?;
            let marginals = model.exact_marginals()?;
            let log_z = model.exact_log_partition()?;
            write_output(out.as_ref(), &to_json_line(&marginals)?)?;
            let info = serde_json::json!({ "log_z": log_z });
            if out.is_some() {
                println!("{info}");
            } else {
                eprintln!("{info}");
            }
            Ok(())
        }
        Command::Bp { model, bp, out } => {
            let model: IsingModel = read_json(&model)?;
            let r = run_bp(&model, &bp.options())?;
            let json = BpResultJson {
                beliefs: r.beliefs.into(),
                converged: r.converged,
                iterations: r.iterations,
                final_delta: r.final_delta,
            };
            write_output(out.as_ref(), &to_json_line(&json)?)
        }
        Command::Believability {
            model,
            marginals,
            tol,
            out,
        } => {
            let model: IsingModel = read_json(&model)?;
            let p = match marginals {
                Some(path) => load_marginals(model.graph(), &path)?,
                None => model.exact_marginals()?,
            };
            let (classification, spectral) = is_believable(&p, tol)?;
            let json = BelievabilityJson {
                lambda_min: spectral.lambda_min,
                classification,
                eigvec: spectral.eigvec,
            };
            write_output(out.as_ref(), &to_json_line(&json)?)
        }
        Command::Pmm {
            graph,
            marginals,
            out,
        } => {
            let graph: Graph = read_json(&graph)?;
            let p = load_marginals(&graph, &marginals)?;
            let params = pseudo_moment_matching(&p)?;
            write_output(out.as_ref(), &to_json_line(&params)?)
        }
        Command::Learn {
            graph,
            target,
            epsilon,
            iters,
            theta_init,
            message_policy,
            seed,
            bp,
            out,
        } => {
            let graph: Graph = read_json(&graph)?;
            let p = load_marginals(&graph, &target)?;
            let theta_init = match theta_init.as_str() {
                "pmm" => ThetaInit::PseudoMomentMatching,
                "zeros" => ThetaInit::Zeros,
                path => {
                    let m: IsingModel = read_json(Path::new(path))?;
                    ThetaInit::Given {
                        h: m.h().to_vec(),
                        j: m.j().to_vec(),
                    }
                }
            };
            let message_policy = match message_policy.as_str() {
                "fresh" => MessagePolicy::FreshUniform,
                "random" => MessagePolicy::RandomRestart,
                "warm" => MessagePolicy::WarmStart,
                other => {
                    return Err(CliError::new(
                        "usage",
                        format!("unknown message policy '{other}' (fresh|random|warm)"),
                    ))
                }
            };
            let opts = WakeSleepOptions {
                epsilon,
                iters,
                theta_init,
                bp: bp.options(),
                message_policy,
                seed,
            };
            let traj = bethe_wake_sleep(&p, &opts)?;
            let mut buf = Vec::new();
            traj.write_jsonl(&mut buf)?;
            write_output(out.as_ref(), &String::from_utf8(buf).expect("utf8 jsonl"))?;
            let n_conv = traj.records().iter().filter(|r| r.converged).count();
            let info = serde_json::json!({
                "iterations": traj.len(),
                "bp_converged": n_conv,
                "final_mismatch_inf": traj.records().last().map(|r| r.mismatch_inf),
            });
            if out.is_some() {
                println!("{info}");
            } else {
                eprintln!("{info}");
            }
            Ok(())
        }
        Command::Ebp {
            trajectory,
            graph,
            last,
            gaussian,
            samples,
            rank,
            variance_fraction,
            seed,
            bp,
            out,
            diagnostics,
        } => {
            let graph: Graph = read_json(&graph)?;
            let traj = load_trajectory(&graph, &trajectory)?;
            let (beliefs, diag) = if gaussian {
                let spec = fit_gaussian(&traj, last, variance_fraction, rank)?;
                let result = ebp_gaussian(&spec, &graph, samples, seed, &bp.options())?;
                let diag = serde_json::json!({
                    "mode": "gaussian",
                    "window": last,
                    "rank": spec.rank(),
                    "variance_fraction_retained": spec.variance_fraction_retained,
                    "samples": samples,
                    "converged_samples": result.n_converged,
                });
                (result.beliefs, diag)
            } else {
                let result = ebp_exact(&traj, last)?;
                let diag = serde_json::json!({
                    "mode": "exact",
                    "window": last,
                    "used": result.used,
                    "excluded_nonconverged": result.excluded,
                });
                (result.beliefs, diag)
            };
            write_output(out.as_ref(), &to_json_line(&beliefs)?)?;
            match diagnostics {
                Some(path) => write_output(Some(&path), &format!("{diag}\n"))?,
                None => {
                    if out.is_some() {
                        println!("{diag}");
                    } else {
                        eprintln!("{diag}");
                    }
                }
            }
            Ok(())
        }
        Command::SweepFraction {
            n,
            sigma_h,
            grid,
            trials,
            seed,
            threads,
            out,
        } => {
            let cfg = SweepConfig {
                n,
                sigma_h,
                sigma_j_grid: parse_grid(&grid)?,
                trials,
                base_seed: seed,
                ..SweepConfig::default()
            };
            let records = in_thread_pool(threads, || sweep_unbelievable_fraction(&cfg))?;
            write_output(out.as_ref(), &sweep_csv(&cfg, &records))
        }
        Command::Compare {
            trials,
            n,
            sigma_h,
            sigma_j,
            seed,
            max_attempts,
            learning_iters,
            epsilon,
            window,
            samples,
            variance_fraction,
            max_rank,
            damping_tau,
            bp_tol,
            bp_max_iters,
            threads,
            out,
            summary,
        } => {
            let cfg = ComparisonConfig {
                trials,
                n,
                sigma_h,
                sigma_j,
                base_seed: seed,
                max_attempts,
                learning_iters,
                epsilon,
                bp_max_iters,
                bp_damping_tau: damping_tau,
                bp_tol,
                window,
                gaussian_samples: samples,
                variance_fraction,
                max_rank,
                ..ComparisonConfig::default()
            };
            let output = in_thread_pool(threads, || five_model_comparison(&cfg))??;
            write_output(out.as_ref(), &output.records_csv(&cfg))?;
            if let Some(path) = summary {
                write_output(Some(&path), &output.summary_csv())?;
            } else if out.is_some() {
                print!("{}", output.summary_csv());
            }
            Ok(())
        }
        Command::Project {
            trajectory,
            graph,
            k,
            out,
        } => {
            let graph: Graph = read_json(&graph)?;
            let traj = load_trajectory(&graph, &trajectory)?;
            let table = export_trajectory_projection(&traj, k)?;
            write_output(out.as_ref(), &projection_csv(&table))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let json = serde_json::json!({
                    "kind": "usage",
                    "error": e.to_string(),
                });
                eprintln!("{json}");
                return ExitCode::from(2);
            }
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = serde_json::json!({ "kind": e.kind, "error": e.message });
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}
