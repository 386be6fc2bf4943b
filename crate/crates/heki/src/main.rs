//! Command-line front end: multi-seed inversion runs, the step-size
//! refinement study, and standalone prior sampling.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use heki::config::{ExperimentConfig, Method};
use heki::csvio::{write_columns, Column};
use heki::experiment::{paired_wins, run_many, Problem, SeedRun};
use heki::figures::{line_chart, write_svg, ChartSpec, Series};
use heki::limits::{refinement_study, LimitsReport};
use heki::{AppError, Result};

use heki_core::matern::SpectralFieldMap;
use heki_core::grid::Grid1d;
use heki_core::rng::{stream, Prng};

#[derive(Parser)]
#[command(
    name = "heki",
    version,
    about = "Hierarchical ensemble Kalman inversion on a 1-D elliptic model problem"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured methods over one or more seeds and summarize.
    Run {
        /// JSON config file; defaults apply for omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of independent seeds.
        #[arg(long, default_value_t = 1)]
        seed_count: usize,
        /// Hold truth and data fixed at this seed across all runs.
        #[arg(long)]
        fixed_truth_seed: Option<u64>,
        /// Directory for CSV/JSON/SVG artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the discrete update and explicit Euler against a fine
    /// Runge-Kutta reference over a list of step sizes.
    Limits {
        /// JSON config file; defaults apply for omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated step sizes, each dividing the unit horizon.
        #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
        h_list: String,
        /// Seed for truth and initial ensemble.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ensemble size for the study.
        #[arg(long, default_value_t = 10)]
        particles: usize,
        /// Directory for CSV/JSON/SVG artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw prior samples on the grid and write them as CSV.
    SamplePrior {
        /// Length scale of the draws.
        #[arg(long, default_value_t = 0.5)]
        ell: f64,
        /// Regularity exponent.
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// Marginal standard deviation.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Interior grid points on (0, pi).
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        /// Number of draws.
        #[arg(long, default_value_t = 3)]
        samples: usize,
        /// Seed for the draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long, default_value = "prior_samples.csv")]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct RunArtifact<'a> {
    config: &'a ExperimentConfig,
    seed_count: usize,
    fixed_truth_seed: Option<u64>,
    seeds: &'a [SeedRun],
}

fn mean_and_sd(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (m, 0.0);
    }
    let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn mean_trace(seeds: &[SeedRun], m: Method, ell: bool) -> Option<Vec<f64>> {
    let traces: Vec<&Vec<f64>> = seeds
        .iter()
        .filter_map(|s| s.run(m))
        .map(|r| if ell { &r.mean_ell_trace } else { &r.recon_trace })
        .collect();
    let len = traces.first()?.len();
    if len == 0 {
        return None;
    }
    let mut out = vec![0.0; len];
    for t in &traces {
        for (o, v) in out.iter_mut().zip(t.iter()) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= traces.len() as f64;
    }
    Some(out)
}

fn cmd_run(
    config: Option<PathBuf>,
    seed_count: usize,
    fixed_truth_seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    if seed_count == 0 {
        return Err(AppError::Invalid("seed count must be positive".into()));
    }
    let cfg = load_config(&config)?;
    let seeds = run_many(&cfg, seed_count, fixed_truth_seed)?;

    println!(
        "ran {} method(s) x {} seed(s), {} iterations each",
        cfg.methods.len(),
        seed_count,
        cfg.n_iterations
    );
    println!(
        "{:<22} {:>12} {:>10} {:>12} {:>16}",
        "method", "final_recon", "sd", "final_ell", "wins_vs_standard"
    );
    for &m in &cfg.methods {
        let finals: Vec<f64> = seeds
            .iter()
            .filter_map(|s| s.run(m))
            .map(|r| r.final_recon())
            .collect();
        let (mean, sd) = mean_and_sd(&finals);
        let ell = seeds
            .iter()
            .filter_map(|s| s.run(m).and_then(|r| r.final_mean_ell()))
            .collect::<Vec<f64>>();
        let ell_str = if ell.is_empty() {
            "-".to_string()
        } else {
            format!("{:.3}", ell.iter().sum::<f64>() / ell.len() as f64)
        };
        let wins = if m == Method::Standard || !cfg.methods.contains(&Method::Standard) {
            "-".to_string()
        } else {
            format!("{}/{}", paired_wins(&seeds, m, Method::Standard), seed_count)
        };
        println!(
            "{:<22} {:>12.5} {:>10.5} {:>12} {:>16}",
            m.label(),
            mean,
            sd,
            ell_str,
            wins
        );
    }

    let Some(dir) = out else { return Ok(()) };
    ensure_dir(&dir)?;

    let artifact = RunArtifact {
        config: &cfg,
        seed_count,
        fixed_truth_seed,
        seeds: &seeds,
    };
    let f = std::fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &artifact)?;

    let iters: Vec<f64> = (0..=cfg.n_iterations).map(|i| i as f64).collect();
    let mut recon_cols = vec![Column::new("iteration", iters.clone())];
    let mut recon_series = Vec::new();
    let mut ell_cols = vec![Column::new("iteration", iters.clone())];
    let mut ell_series = Vec::new();
    for &m in &cfg.methods {
        if let Some(t) = mean_trace(&seeds, m, false) {
            recon_series.push(Series::new(m.label(), iters.clone(), t.clone()));
            recon_cols.push(Column::new(m.label(), t));
        }
        if let Some(t) = mean_trace(&seeds, m, true) {
            ell_series.push(Series::new(m.label(), iters.clone(), t.clone()));
            ell_cols.push(Column::new(m.label(), t));
        }
    }
    write_columns(&dir.join("recon_traces.csv"), &recon_cols)?;
    let recon_svg = line_chart(
        &ChartSpec {
            title: "Mean relative reconstruction error".into(),
            x_label: "iteration".into(),
            y_label: "relative L2 error".into(),
            log_y: true,
        },
        &recon_series,
    )?;
    write_svg(&dir.join("recon_traces.svg"), &recon_svg)?;

    if ell_cols.len() > 1 {
        write_columns(&dir.join("ell_traces.csv"), &ell_cols)?;
        let ell_svg = line_chart(
            &ChartSpec {
                title: "Mean length-scale estimate".into(),
                x_label: "iteration".into(),
                y_label: "mean ell".into(),
                log_y: false,
            },
            &ell_series,
        )?;
        write_svg(&dir.join("ell_traces.svg"), &ell_svg)?;
    }

    // Field reconstruction for the first seed, against its truth.
    let problem = Problem::new(&cfg)?;
    let first = &seeds[0];
    let truth = heki::experiment::make_truth(&problem, &cfg, first.truth_seed)?;
    let xs = problem.grid.nodes();
    let mut field_cols = vec![
        Column::new("x", xs.clone()),
        Column::new("truth", truth.u_true.clone()),
    ];
    let mut field_series = vec![Series::new("truth", xs.clone(), truth.u_true.clone())];
    for r in &first.runs {
        field_cols.push(Column::new(r.method.label(), r.final_mean_field.clone()));
        field_series.push(Series::new(
            r.method.label(),
            xs.clone(),
            r.final_mean_field.clone(),
        ));
    }
    write_columns(&dir.join("fields.csv"), &field_cols)?;
    let fields_svg = line_chart(
        &ChartSpec {
            title: format!("Final mean fields, seed {}", first.seed),
            x_label: "x".into(),
            y_label: "u(x)".into(),
            log_y: false,
        },
        &field_series,
    )?;
    write_svg(&dir.join("fields.svg"), &fields_svg)?;

    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    vals.map_err(|e| AppError::Invalid(format!("bad step list {s:?}: {e}")))
}

fn cmd_limits(
    config: Option<PathBuf>,
    h_list: String,
    seed: u64,
    particles: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(&config)?;
    let hs = parse_h_list(&h_list)?;
    let rep: LimitsReport = refinement_study(&cfg, &hs, seed, particles)?;

    println!("{:>10} {:>14} {:>14}", "h", "discrete_err", "euler_err");
    for i in 0..rep.h_values.len() {
        println!(
            "{:>10} {:>14.6e} {:>14.6e}",
            rep.h_values[i], rep.discrete_errors[i], rep.euler_errors[i]
        );
    }
    println!(
        "fitted order: discrete {:.3} (monotone: {}), euler {:.3} (monotone: {})",
        rep.discrete_order, rep.discrete_monotone, rep.euler_order, rep.euler_monotone
    );

    let Some(dir) = out else { return Ok(()) };
    ensure_dir(&dir)?;
    let f = std::fs::File::create(dir.join("limits.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &rep)?;
    write_columns(
        &dir.join("limits.csv"),
        &[
            Column::new("h", rep.h_values.clone()),
            Column::new("discrete_err", rep.discrete_errors.clone()),
            Column::new("euler_err", rep.euler_errors.clone()),
        ],
    )?;
    let svg = line_chart(
        &ChartSpec {
            title: "Refinement of the discrete update toward the flow".into(),
            x_label: "step size h".into(),
            y_label: "relative error at t=1".into(),
            log_y: true,
        },
        &[
            Series::new("discrete", rep.h_values.clone(), rep.discrete_errors.clone()),
            Series::new("euler", rep.h_values.clone(), rep.euler_errors.clone()),
        ],
    )?;
    write_svg(&dir.join("limits.svg"), &svg)?;
    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn cmd_sample_prior(
    ell: f64,
    alpha: f64,
    sigma: f64,
    grid_points: usize,
    samples: usize,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    if samples == 0 {
        return Err(AppError::Invalid("need at least one sample".into()));
    }
    let grid = Grid1d::new(0.0, core::f64::consts::PI, grid_points);
    let map = SpectralFieldMap::new(grid, sigma, alpha)?;
    let mut rng = Prng::substream(seed, stream::TRUTH_FIELD);
    let mut cols = vec![Column::new("x", grid.nodes())];
    for k in 0..samples {
        let u = map.sample_whiten(ell, &mut rng)?;
        cols.push(Column::new(format!("u{}", k + 1), u));
    }
    write_columns(&out, &cols)?;
    println!(
        "wrote {samples} draw(s) at sigma={sigma}, alpha={alpha}, ell={ell} to {}",
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run {
            config,
            seed_count,
            fixed_truth_seed,
            out,
        } => cmd_run(config, seed_count, fixed_truth_seed, out),
        Cmd::Limits {
            config,
            h_list,
            seed,
            particles,
            out,
        } => cmd_limits(config, h_list, seed, particles, out),
        Cmd::SamplePrior {
            ell,
            alpha,
            sigma,
            grid_points,
            samples,
            seed,
            out,
        } => cmd_sample_prior(ell, alpha, sigma, grid_points, samples, seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
