//! Command-line interface.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbsm_core::mdp::GarnetSpec;
use gbsm_core::metric::{bsm, gbsm, lax_gbsm, on_policy_gbsm, DEFAULT_TOL};
use gbsm_core::{DistanceMatrix, Policy};

use crate::error::{AppError, Result};
use crate::experiments::{
    run_aggregation_experiment, run_estimation_experiment, run_transfer_experiment, EstimationMode, ExperimentConfig,
};
use crate::mdp_file::{load_mdp, mdp_to_json};
use crate::plot::render_svg;
use crate::table::{read_reports_csv, write_distance_csv, write_reports_csv};

#[derive(Debug, Parser)]
#[command(
    name = "gbsm",
    version,
    about = "Bisimulation metrics between finite MDPs and bound campaigns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random Garnet MDP as JSON.
    Garnet(GarnetArgs),
    /// Metric between the states of two MDPs.
    Gbsm(PairArgs),
    /// Metric between the states of one MDP.
    Bsm(SingleArgs),
    /// Metric between two MDPs whose action sets may differ.
    Lax(PairArgs),
    /// Metric between two MDPs on one state space under the uniform random policy.
    Onpolicy(PairArgs),
    /// Policy-transfer campaign.
    ExpTransfer(CampaignArgs),
    /// State-aggregation campaign.
    ExpAggregation(CampaignArgs),
    /// Model-estimation campaign.
    ExpEstimation(CampaignArgs),
    /// Render a campaign CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GarnetArgs {
    #[arg(long, default_value_t = 20)]
    pub states: usize,
    #[arg(long, default_value_t = 5)]
    pub actions: usize,
    #[arg(long, default_value_t = 0.5)]
    pub branching: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub mdp1: PathBuf,
    pub mdp2: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    pub mdp: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Noise,
    Sample,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long, default_value_t = 20)]
    pub states: usize,
    #[arg(long, default_value_t = 5)]
    pub actions: usize,
    #[arg(long, default_value_t = 0.5)]
    pub branching: f64,
    /// Discount grid as `lo:hi:step` or a single value.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub gammas: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Tolerance for rows with gamma >= 0.9; 0 disables the override.
    #[arg(long, default_value_t = 1e-4)]
    pub high_gamma_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed noise stddev; drawn per trial from [0.1, 0.3] when absent.
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub agg_fraction: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Noise)]
    pub mode: ModeArg,
    /// CSV output file; stdout when neither this nor `--out-dir` is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving `<experiment>.csv` and `<experiment>.svg`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub csv: PathBuf,
    /// Restrict to these discount factors (repeatable).
    #[arg(long)]
    pub gamma: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `lo:hi:step` (inclusive) or a single value.
pub fn parse_gammas(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| AppError::Config(format!("bad number {s:?} in gamma grid {text:?}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0 && lo <= hi) {
                return Err(AppError::Config(format!("gamma grid {text:?} is empty")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            // Rounding keeps 0.1 + 2 * 0.1 printing as 0.3.
            Ok((0..=count)
                .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(AppError::Config(format!("gamma grid {text:?} must be lo:hi:step"))),
    }
}

impl CampaignArgs {
    pub fn config(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            gammas: parse_gammas(&self.gammas)?,
            trials: self.trials,
            n_states: self.states,
            n_actions: self.actions,
            branching: self.branching,
            tol: self.tol,
            high_gamma_tol: (self.high_gamma_tol != 0.0).then_some(self.high_gamma_tol),
            base_seed: self.seed,
            agg_fraction: self.agg_fraction,
            noise_std: self.noise_std,
            samples: self.samples,
            mode: match self.mode {
                ModeArg::Noise => EstimationMode::Noise,
                ModeArg::Sample => EstimationMode::Sample,
            },
            ..ExperimentConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

/// Writes through `body` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush().map_err(|e| AppError::io(p, e))
        }
        None => {
            let mut w = io::stdout().lock();
            body(&mut w)?;
            w.flush().map_err(|e| AppError::io("<stdout>", e))
        }
    }
}

fn emit_distance(d: &DistanceMatrix, out: Option<&Path>) -> Result<()> {
    emit(out, |w| write_distance_csv(d, w))
}

fn write_text(w: &mut dyn Write, text: &str) -> Result<()> {
    w.write_all(text.as_bytes()).map_err(|e| AppError::io("<output>", e))
}

fn campaign(name: &str, args: &CampaignArgs) -> Result<()> {
    let cfg = args.config()?;
    let reports = match name {
        "transfer" => run_transfer_experiment(&cfg)?,
        "aggregation" => run_aggregation_experiment(&cfg)?,
        _ => run_estimation_experiment(&cfg)?,
    };
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        emit(Some(&dir.join(format!("{name}.csv"))), |w| {
            write_reports_csv(&reports, w)
        })?;
        let svg = render_svg(&reports, None)?;
        emit(Some(&dir.join(format!("{name}.svg"))), |w| write_text(w, &svg))?;
    }
    if args.out.is_some() || args.out_dir.is_none() {
        emit(args.out.as_deref(), |w| write_reports_csv(&reports, w))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Garnet(a) => {
            let m = GarnetSpec::new(a.states, a.actions, a.branching, a.gamma).generate(a.seed)?;
            let mut json = mdp_to_json(&m);
            json.push('\n');
            emit(a.out.as_deref(), |w| write_text(w, &json))
        }
        Command::Gbsm(a) => {
            let d = gbsm(&load_mdp(&a.mdp1)?, &load_mdp(&a.mdp2)?, a.tol)?;
            emit_distance(&d, a.out.as_deref())
        }
        Command::Bsm(a) => emit_distance(&bsm(&load_mdp(&a.mdp)?, a.tol)?, a.out.as_deref()),
        Command::Lax(a) => {
            let d = lax_gbsm(&load_mdp(&a.mdp1)?, &load_mdp(&a.mdp2)?, a.tol)?;
            emit_distance(&d, a.out.as_deref())
        }
        Command::Onpolicy(a) => {
            let (m1, m2) = (load_mdp(&a.mdp1)?, load_mdp(&a.mdp2)?);
            let pi = Policy::uniform(m1.n_states(), m1.n_actions());
            emit_distance(&on_policy_gbsm(&m1, &m2, &pi, a.tol)?, a.out.as_deref())
        }
        Command::ExpTransfer(a) => campaign("transfer", &a),
        Command::ExpAggregation(a) => campaign("aggregation", &a),
        Command::ExpEstimation(a) => campaign("estimation", &a),
        Command::Plot(a) => {
            let file = File::open(&a.csv).map_err(|e| AppError::io(&a.csv, e))?;
            let reports = read_reports_csv(io::BufReader::new(file))?;
            let filter = (!a.gamma.is_empty()).then_some(a.gamma.as_slice());
            let svg = render_svg(&reports, filter)?;
            emit(a.out.as_deref(), |w| write_text(w, &svg))
        }
    }
}
