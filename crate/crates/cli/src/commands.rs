use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use ngrc_core::analysis::{
    benettin_lle, find_tipping, gamma_sweep, reconstruct_bifurcation, rosenstein_lle,
    BenettinParams, ReconstructionSettings,
};
use ngrc_core::ode::{ground_truth_bifurcation, GenerationRecipe};
use ngrc_core::predictor::{free_run, free_run_nonstationary, PredictionResult};
use ngrc_core::training::train;
use ngrc_core::{ModelFile, ModelKind, TrainedModel, TrainingSample, TrainingSet, Trajectory};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{self, Manifest};

#[derive(Debug, Parser)]
#[command(name = "ngrc", version, about = "Parameter-aware NG-RC experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; overrides the preset of the model it names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Preset to use when no config is given.
    #[arg(long, global = true, value_parser = parse_kind)]
    pub preset: Option<ModelKind>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Accepted for interface compatibility; every command is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the training samples and the ground-truth diagram.
    Generate,
    /// Fit the readout on the generated training samples.
    Train {
        /// Directory holding the generated data (defaults to --out).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Closed-loop rollout at a fixed θ.
    Predict {
        /// Model JSON (defaults to <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides prediction.theta.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
    },
    /// Predicted bifurcation diagram over prediction.grid.
    Bifurcation {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also integrate the ground truth on the same grid.
        #[arg(long)]
        ground_truth: bool,
    },
    /// Rollout under the configured parameter schedule.
    Nonstationary {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train, reconstruct and validate one model per γ.
    GammaSweep {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Largest Lyapunov exponents on the ground-truth grid, or of one CSV.
    Lyapunov {
        /// Trajectory CSV; its observable column is analysed instead.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    match s {
        "power-system" => Ok(ModelKind::PowerSystem),
        "food-chain" => Ok(ModelKind::FoodChain),
        _ => Err(format!("unknown model `{s}` (power-system or food-chain)")),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from_args<I, S>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    if cli.seed.is_some() {
        info!("--seed has no effect: every command is deterministic");
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let ctx = Context {
        settings_hash: io::sha256_hex(config.to_json().as_bytes()),
        config,
        out: cli.out.clone(),
    };
    pool.install(|| match &cli.command {
        Command::Generate => ctx.generate(),
        Command::Train { data } => ctx.train(data.as_deref()),
        Command::Predict { model, theta } => ctx.predict(model.as_deref(), *theta),
        Command::Bifurcation { model, ground_truth } => ctx.bifurcation(model.as_deref(), *ground_truth),
        Command::Nonstationary { model } => ctx.nonstationary(model.as_deref()),
        Command::GammaSweep { data } => ctx.gamma_sweep(data.as_deref()),
        Command::Lyapunov { input } => ctx.lyapunov(input.as_deref()),
    })
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    match (&cli.config, cli.preset) {
        (Some(path), preset) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let config = ExperimentConfig::from_json_str(&text)?;
            if preset.is_some_and(|p| p != config.model) {
                return Err(CliError::Config("--preset disagrees with the config's model".into()));
            }
            Ok(config)
        }
        (None, Some(kind)) => Ok(ExperimentConfig::preset(kind)),
        (None, None) => Err(CliError::Config("pass --config <path> or --preset <model>".into())),
    }
}

const MODEL_FILE: &str = "model.json";
const ROLE_SAMPLE: &str = "training-sample";

struct Context {
    config: ExperimentConfig,
    settings_hash: String,
    out: PathBuf,
}

impl Context {
    fn recipe(&self) -> GenerationRecipe<f64> {
        self.config.recipe()
    }

    fn reconstruction(&self, n_steps: usize) -> ReconstructionSettings<f64> {
        self.config.reconstruction(n_steps)
    }

    fn record(&self, manifest: &mut Manifest, rel: &str, role: &str, theta: Option<f64>) -> Result<(), CliError> {
        manifest.record(&self.out, rel, role, theta, &self.settings_hash)
    }

    fn load_model(&self, path: Option<&Path>) -> Result<TrainedModel<f64>, CliError> {
        let path = path.map_or_else(|| self.out.join(MODEL_FILE), Path::to_path_buf);
        let file: ModelFile<f64> = io::read_json(&path)?;
        let model = file.into_model()?;
        if model.config().dim != self.config.system.dim() {
            return Err(CliError::Data(format!(
                "{}: model state dimension {} does not match the configured system",
                path.display(),
                model.config().dim
            )));
        }
        Ok(model)
    }

    fn warmup(&self, theta: f64, len: usize) -> Result<Trajectory<f64>, CliError> {
        Ok(self.reconstruction(1).warmup.warmup(theta, len)?)
    }

    fn load_training_set(&self, data: Option<&Path>) -> Result<TrainingSet<f64>, CliError> {
        let dir = data.unwrap_or(&self.out);
        let manifest = Manifest::load(dir)?;
        let mut samples = Vec::new();
        for artifact in manifest.with_role(ROLE_SAMPLE) {
            let theta = artifact
                .theta
                .ok_or_else(|| CliError::Data(format!("{}: training sample without θ", artifact.path)))?;
            let path = Manifest::verified_path(dir, artifact)?;
            let trajectory = io::read_trajectory_csv(&path, self.config.generation.dt)?;
            samples.push(TrainingSample { trajectory, theta });
        }
        if samples.is_empty() {
            return Err(CliError::Data(format!("{}: manifest lists no training samples", dir.display())));
        }
        // Manifest order is by file name; train in configured θ order.
        let order = &self.config.training.thetas;
        samples.sort_by_key(|s| order.iter().position(|&t| t == s.theta).unwrap_or(usize::MAX));
        Ok(TrainingSet::new(samples))
    }

    fn generate(&self) -> Result<(), CliError> {
        let mut manifest = Manifest::load_or_default(&self.out)?;
        for (i, sample) in self.config.training_set()?.samples.iter().enumerate() {
            let rel = format!("training/sample_{i:02}.csv");
            io::write_trajectory_csv(&self.out.join(&rel), &sample.trajectory, None)?;
            self.record(&mut manifest, &rel, ROLE_SAMPLE, Some(sample.theta))?;
            info!("θ={}: {} states -> {rel}", sample.theta, sample.trajectory.len());
        }
        let grid = self.config.generation.grid.values().map_err(CliError::Config)?;
        let diagram = ground_truth_bifurcation(&self.config.system, &grid, &self.recipe())?;
        io::write_diagram(
            &self.out.join("ground_truth_scatter.csv"),
            &self.out.join("ground_truth_summary.csv"),
            &diagram,
        )?;
        self.record(&mut manifest, "ground_truth_scatter.csv", "ground-truth-scatter", None)?;
        self.record(&mut manifest, "ground_truth_summary.csv", "ground-truth-summary", None)?;
        if let Some(row) = diagram.first_collapse() {
            info!("ground truth: first collapse at θ={}", row.theta);
        }
        manifest.save(&self.out)
    }

    fn train(&self, data: Option<&Path>) -> Result<(), CliError> {
        let set = self.load_training_set(data)?;
        let model = train(&set, &self.config.ngrc, self.config.training.method)?;
        let d = &model.readout().provenance.descriptor;
        info!(
            "feature dimension {}, {} columns ({:?} per sample)",
            model.config().feature_dim(),
            d.total_columns,
            d.columns_per_sample
        );
        io::write_json(&self.out.join(MODEL_FILE), &ModelFile::from_model(&model))?;
        let mut manifest = Manifest::load_or_default(&self.out)?;
        self.record(&mut manifest, MODEL_FILE, "model", None)?;
        manifest.save(&self.out)
    }

    fn write_prediction(&self, stem: &str, role: &str, out: &PredictionResult<f64>) -> Result<(), CliError> {
        let mut manifest = Manifest::load_or_default(&self.out)?;
        let rel = format!("{stem}.csv");
        io::write_trajectory_csv(&self.out.join(&rel), &out.trajectory, Some(&out.thetas))?;
        self.record(&mut manifest, &rel, role, None)?;
        let sidecar = format!("{stem}_collapse.json");
        if let Some(c) = out.collapse {
            warn!("{stem}: {} at state {}", c.kind, c.step);
            io::write_json(&self.out.join(&sidecar), &c)?;
            self.record(&mut manifest, &sidecar, "collapse", None)?;
        } else if self.out.join(&sidecar).exists() {
            std::fs::remove_file(self.out.join(&sidecar))?;
            manifest.artifacts.retain(|a| a.path != sidecar);
        }
        manifest.save(&self.out)
    }

    fn predict(&self, model: Option<&Path>, theta: Option<f64>) -> Result<(), CliError> {
        let model = self.load_model(model)?;
        let theta = theta.unwrap_or(self.config.prediction.theta);
        let warmup = self.warmup(theta, model.history_len())?;
        let out = free_run(
            &warmup,
            &model,
            theta,
            self.config.prediction.n_steps,
            &self.config.generation.rules,
        )?;
        self.write_prediction("prediction", "prediction", &out)
    }

    fn nonstationary(&self, model: Option<&Path>) -> Result<(), CliError> {
        let model = self.load_model(model)?;
        let ns = &self.config.nonstationary;
        let warmup = self.warmup(ns.warmup_theta, model.history_len())?;
        let out = free_run_nonstationary(&warmup, &model, &ns.schedule, ns.n_steps, &self.config.generation.rules)?;
        self.write_prediction("nonstationary", "nonstationary", &out)
    }

    fn bifurcation(&self, model: Option<&Path>, ground_truth: bool) -> Result<(), CliError> {
        let model = self.load_model(model)?;
        let grid = self.config.prediction.grid.values().map_err(CliError::Config)?;
        let settings = self.reconstruction(self.config.prediction.n_steps);
        let diagram = reconstruct_bifurcation(&model, &grid, &settings)?;
        for row in diagram.rows.iter().filter(|r| r.note.is_some()) {
            warn!("θ={}: {}", row.theta, row.note.as_deref().unwrap_or_default());
        }
        let mut manifest = Manifest::load_or_default(&self.out)?;
        io::write_diagram(
            &self.out.join("predicted_scatter.csv"),
            &self.out.join("predicted_summary.csv"),
            &diagram,
        )?;
        self.record(&mut manifest, "predicted_scatter.csv", "predicted-scatter", None)?;
        self.record(&mut manifest, "predicted_summary.csv", "predicted-summary", None)?;
        let tipping = find_tipping(&diagram, &self.config.tipping);
        for t in &tipping {
            info!("tipping point ({:?}) at θ={}", t.kind, t.theta_critical);
        }
        io::write_json(&self.out.join("predicted_tipping.json"), &tipping)?;
        self.record(&mut manifest, "predicted_tipping.json", "tipping", None)?;

        // Grid points that coincide with training θs double as validation.
        let trained = &model.readout().provenance.descriptor.thetas;
        let recipe = self.recipe();
        let at_training: Vec<f64> = grid.iter().copied().filter(|t| trained.contains(t)).collect();
        if !at_training.is_empty() {
            let truth = ground_truth_bifurcation(&self.config.system, &at_training, &recipe)?;
            for row in &truth.rows {
                let pred = diagram.rows.iter().find(|r| r.theta == row.theta).and_then(|r| r.lambda_max);
                let pass = matches!((row.lambda_max, pred), (Some(a), Some(b)) if self.config.tolerance.accepts(a, b));
                info!(
                    "validation θ={}: λ_train={:?} λ_pred={:?} {}",
                    row.theta,
                    row.lambda_max,
                    pred,
                    if pass { "PASS" } else { "FAIL" }
                );
            }
        }
        if ground_truth {
            let truth = ground_truth_bifurcation(&self.config.system, &grid, &recipe)?;
            io::write_diagram(
                &self.out.join("ground_truth_scatter.csv"),
                &self.out.join("ground_truth_summary.csv"),
                &truth,
            )?;
            self.record(&mut manifest, "ground_truth_scatter.csv", "ground-truth-scatter", None)?;
            self.record(&mut manifest, "ground_truth_summary.csv", "ground-truth-summary", None)?;
        }
        manifest.save(&self.out)
    }

    fn gamma_sweep(&self, data: Option<&Path>) -> Result<(), CliError> {
        if self.config.gammas.is_empty() {
            return Err(CliError::Config("gammas: needs at least one value".into()));
        }
        let set = self.load_training_set(data)?;
        let grid = self.config.prediction.grid.values().map_err(CliError::Config)?;
        let settings = self.reconstruction(self.config.prediction.n_steps);
        let result = gamma_sweep(
            &set,
            &self.config.ngrc,
            &self.config.gammas,
            &grid,
            &settings,
            &self.config.tolerance,
            self.config.training.method,
        )?;
        for e in &result.entries {
            let failed: Vec<f64> = e.validation.iter().filter(|v| !v.pass).map(|v| v.theta).collect();
            match &e.failure {
                Some(msg) => warn!("γ={}: FAIL ({msg})", e.gamma),
                None if e.passed => info!("γ={}: PASS", e.gamma),
                None => info!("γ={}: FAIL at θ={failed:?}", e.gamma),
            }
        }
        let mut manifest = Manifest::load_or_default(&self.out)?;
        io::write_json(&self.out.join("gamma_sweep.json"), &result)?;
        self.record(&mut manifest, "gamma_sweep.json", "gamma-sweep", None)?;
        let rows: Vec<Vec<Option<f64>>> = result
            .envelope
            .iter()
            .map(|r| vec![Some(r.theta), r.min, r.max])
            .collect();
        io::write_table(&self.out.join("gamma_envelope.csv"), &["theta", "lambda_min", "lambda_max"], &rows)?;
        self.record(&mut manifest, "gamma_envelope.csv", "gamma-envelope", None)?;
        manifest.save(&self.out)
    }

    fn lyapunov(&self, input: Option<&Path>) -> Result<(), CliError> {
        let g = &self.config.generation;
        let mut manifest = Manifest::load_or_default(&self.out)?;
        if let Some(path) = input {
            let traj = io::read_trajectory_csv(path, g.dt)?;
            if g.observable >= traj.dim() {
                return Err(CliError::Data(format!("{}: no column x{}", path.display(), g.observable)));
            }
            let series = traj.component(g.observable);
            let discard = (g.transient_fraction * series.len() as f64).floor() as usize;
            let est = rosenstein_lle(&series[discard..], g.dt, &self.config.lyapunov)?;
            info!("λ_max = {}", est.lambda_max);
            io::write_table(&self.out.join("lyapunov_input.csv"), &["rosenstein"], &[vec![Some(est.lambda_max)]])?;
            self.record(&mut manifest, "lyapunov_input.csv", "lyapunov", None)?;
            return manifest.save(&self.out);
        }
        let grid = g.grid.values().map_err(CliError::Config)?;
        let truth = ground_truth_bifurcation(&self.config.system, &grid, &self.recipe())?;
        let transient = (g.transient_fraction * g.n_steps as f64).floor() as usize;
        let params = BenettinParams {
            divergence_bound: g.rules.divergence_bound,
            ..BenettinParams::new(g.dt, g.n_steps - transient, transient)
        };
        let rows: Vec<Vec<Option<f64>>> = {
            use rayon::prelude::*;
            truth
                .rows
                .par_iter()
                .map(|row| {
                    let benettin = self
                        .config
                        .system
                        .with_parameter(row.theta)
                        .field()
                        .ok()
                        .and_then(|f| benettin_lle(&f, &g.x0, &params).ok())
                        .map(|e| e.lambda_max);
                    vec![Some(row.theta), row.lambda_max, benettin]
                })
                .collect()
        };
        io::write_table(&self.out.join("lyapunov.csv"), &["theta", "rosenstein", "benettin"], &rows)?;
        self.record(&mut manifest, "lyapunov.csv", "lyapunov", None)?;
        manifest.save(&self.out)
    }
}
