//! Command-line entry point, run configuration, and export commands.

mod commands;
pub mod svg;

pub use commands::*;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::adnet::{Activation, InitScheme, NetworkSpec};
use crate::error::{Error, Result};
use crate::oracle::{MeshConfig, SynthConfig};
use crate::process::PIDParams;
use crate::residuals::WeldConfig;
use crate::sampler::{DatasetConfig, ModelMode};
use crate::trainer::TrainConfig;

/// Full run configuration; every CLI flag overrides the corresponding key.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: ModelMode,
    /// Material table CSV; the built-in AlMgSi table when absent.
    pub material_table: Option<PathBuf>,
    pub weld: WeldConfig,
    pub pid: PIDParams,
    pub network: NetworkSpec,
    pub train: TrainConfig,
    pub datasets: DatasetConfig,
    pub mesh: MeshConfig,
    pub synth: SynthConfig,
    /// Weld-record manifest used for training.
    pub data_manifest: Option<PathBuf>,
    pub exclude_welds: Vec<String>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Diffusivity of the Dirichlet benchmark.
    pub bench_alpha: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut weld = WeldConfig::default();
        // Calibrated effective contact constants: the handbook film values
        // deposit non-physical powers into a 10 nm film (see README).
        weld.contact.rho_film = 5e-4;
        weld.contact.l_film = 0.03;
        weld.contact.hertzian_weighting = true;
        Self {
            mode: ModelMode::Rsw1dInverse,
            material_table: None,
            weld,
            pid: PIDParams::default(),
            network: NetworkSpec {
                input_dim: 4,
                output_dim: 2,
                hidden_layers: 3,
                hidden_width: 66,
                activation: Activation::Tanh,
                init: InitScheme::XavierNormal,
                seed: 0,
            },
            train: TrainConfig::default(),
            datasets: DatasetConfig::default(),
            mesh: MeshConfig::default(),
            synth: SynthConfig::full_grid(),
            data_manifest: None,
            exclude_welds: vec![],
            out_dir: PathBuf::from("out"),
            seed: 0,
            bench_alpha: 0.06,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    /// Network spec with dims forced to match the mode.
    pub fn network_for_mode(&self) -> NetworkSpec {
        let mut spec = self.network.clone();
        spec.input_dim = self.mode.input_dim();
        spec.output_dim = self.mode.output_dim();
        spec
    }

    pub fn validate(&self) -> Result<()> {
        self.weld.validate()?;
        self.train.validate()?;
        if let Some(p) = &self.material_table {
            if !p.exists() {
                return Err(Error::Config(format!("material table not found: {}", p.display())));
            }
        }
        if let Some(p) = &self.data_manifest {
            if !p.exists() {
                return Err(Error::Config(format!("data manifest not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).unwrap_or_default());
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Parser)]
#[command(name = "pinnweld", version, about = "Physics-informed training engine for aluminum spot welding")]
struct Cli {
    /// JSON run configuration; flags override config keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the Dirichlet benchmark and compare against the reference loss.
    Benchmark {
        #[arg(long)]
        max_epochs: Option<usize>,
        /// Collocation point count.
        #[arg(long)]
        colloc: Option<usize>,
    },
    /// Generate synthetic weld records over the (current, force) grid.
    SynthData {
        /// Grid as NxM: N current levels, M force levels.
        #[arg(long)]
        grid: Option<String>,
        /// Solver backing the records: fd1d or fd2d.
        #[arg(long)]
        solver: Option<String>,
        /// Displacement noise relative to the peak.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train a weld model.
    Train {
        /// benchmark_1d, rsw_1d_inverse, rsw_1d_forward, or rsw_2d.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        colloc: Option<usize>,
        /// Weld-record manifest CSV.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a grid and export the fields.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        nr: usize,
        #[arg(long, default_value_t = 21)]
        nz: usize,
        #[arg(long, default_value_t = 39)]
        nt: usize,
        #[arg(long, default_value_t = 32.0)]
        i_ka: f64,
        #[arg(long, default_value_t = 5.0)]
        f_kn: f64,
        /// benchmark_1d, rsw_1d_inverse, rsw_1d_forward, or rsw_2d.
        #[arg(long)]
        mode: Option<String>,
        /// Also write the nugget-growth curve extracted from the field.
        #[arg(long, default_value_t = false)]
        nugget_curve: bool,
    },
    /// Estimate PID constants from torque and displacement series.
    FitPid {
        #[arg(long)]
        torque: PathBuf,
        #[arg(long)]
        displacement: PathBuf,
        #[arg(long, default_value_t = 5000.0)]
        f0: f64,
        #[arg(long, default_value_t = 6666.0)]
        k_spring: f64,
    },
    /// Render SVG plots from run artifacts.
    Plot {
        /// Loss log CSV → convergence plot.
        #[arg(long)]
        loss_log: Option<PathBuf>,
        /// Weld record CSV (+ prediction CSV) → displacement overlay.
        #[arg(long)]
        weld: Option<PathBuf>,
        #[arg(long)]
        prediction: Option<PathBuf>,
        /// Field export CSV → heatmap panels at the schedule breakpoints.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Nugget growth CSV → growth curve.
        #[arg(long)]
        nugget: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<ModelMode> {
    match s {
        "benchmark_1d" => Ok(ModelMode::Benchmark1d),
        "rsw_1d_inverse" => Ok(ModelMode::Rsw1dInverse),
        "rsw_1d_forward" => Ok(ModelMode::Rsw1dForward),
        "rsw_2d" => Ok(ModelMode::Rsw2d),
        other => Err(Error::Config(format!("unknown mode {other:?}"))),
    }
}

/// Parse arguments, dispatch, and map outcomes to exit codes: 0 success,
/// 1 acceptance failure, 2 configuration/IO error, 3 numeric failure.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("PINNWELD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.network.seed = seed;
        cfg.train.seed = seed;
        cfg.datasets.seed = seed;
        cfg.synth.seed = seed;
    }
    match cli.command {
        Command::Benchmark { max_epochs, colloc } => {
            if let Some(e) = max_epochs {
                cfg.train.max_epochs = e;
            }
            if let Some(c) = colloc {
                cfg.datasets.n_pde = c;
            }
            cmd_benchmark(&cfg)
        }
        Command::SynthData { grid, solver, noise } => {
            if let Some(g) = grid {
                let (n, m) = g
                    .split_once('x')
                    .ok_or_else(|| Error::Config(format!("grid must be NxM, got {g:?}")))?;
                let n: usize = n.parse().map_err(|_| Error::Config(format!("bad grid {g:?}")))?;
                let m: usize = m.parse().map_err(|_| Error::Config(format!("bad grid {g:?}")))?;
                cfg.synth.currents_ka = subdivide(26.0, 47.0, n);
                cfg.synth.forces_kn = subdivide(5.0, 8.0, m);
            }
            if let Some(s) = solver {
                cfg.synth.solver = match s.as_str() {
                    "fd1d" => crate::oracle::SolverKind::Fd1d,
                    "fd2d" => crate::oracle::SolverKind::Fd2d,
                    other => return Err(Error::Config(format!("unknown solver {other:?}"))),
                };
            }
            if let Some(n) = noise {
                cfg.synth.noise_rel = n;
            }
            cmd_synth_data(&cfg)
        }
        Command::Train { mode, max_epochs, colloc, data } => {
            if let Some(m) = mode {
                cfg.mode = parse_mode(&m)?;
            }
            if let Some(e) = max_epochs {
                cfg.train.max_epochs = e;
            }
            if let Some(c) = colloc {
                cfg.datasets.n_pde = c;
            }
            if let Some(d) = data {
                cfg.data_manifest = Some(d);
            }
            cmd_train(&cfg)
        }
        Command::Predict { checkpoint, nr, nz, nt, i_ka, f_kn, mode, nugget_curve } => {
            if let Some(m) = mode {
                cfg.mode = parse_mode(&m)?;
            }
            cmd_predict(&cfg, &checkpoint, nr, nz, nt, i_ka, f_kn, nugget_curve)
        }
        Command::FitPid { torque, displacement, f0, k_spring } => {
            cmd_fit_pid(&cfg, &torque, &displacement, f0, k_spring)
        }
        Command::Plot { loss_log, weld, prediction, field, nugget } => {
            cmd_plot(&cfg, loss_log.as_deref(), weld.as_deref(), prediction.as_deref(), field.as_deref(), nugget.as_deref())
        }
    }
}

/// `n` evenly spaced values over [lo, hi], inclusive.
pub fn subdivide(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
