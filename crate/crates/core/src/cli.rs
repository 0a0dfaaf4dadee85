//! Config-driven experiment harness: configs, trial runners, aggregation and
//! file emission behind the `qel` binary.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Encoding, Observable, QuantumModel};
use crate::extremal::{
    extremize_continuous, extremize_mixed, sample_extremizer, total_optimal_probability, train_extremizer_discrete,
    ExtremizeConfig, ExtremizerObjective,
};
use crate::problems::{
    brute_force_optimum, gen_correlation_chain, gen_maxcut_clusters, gen_molecule, make_continuous_training_set,
    make_discrete_training_set, mixed_f, ode_analytic, ode_rhs, target_sin5x, Bitstring, DiscreteProblem, Direction,
    MIXED_MINIMUM,
};
use crate::train::{fit, scale_targets, uniform_grid, Dataset, Loss, OdeSpec, OptimizerConfig, Sample, TrainReport};
use crate::{Error, Result};

/// Version of the emitted trial and summary documents.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the worker-pool size.
/// Redraws allowed for a discrete training set with a degenerate target range.
pub const MAX_TRAINING_DRAWS: usize = 100;
pub const WORKERS_ENV: &str = "QEL_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Fit,
    Dqc,
    Maxcut,
    Chain2,
    Chain3,
    Molecule,
    AlphaScan,
    Mixed,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fit => "fit",
            Experiment::Dqc => "dqc",
            Experiment::Maxcut => "maxcut",
            Experiment::Chain2 => "chain2",
            Experiment::Chain3 => "chain3",
            Experiment::Molecule => "molecule",
            Experiment::AlphaScan => "alpha_scan",
            Experiment::Mixed => "mixed",
        }
    }

    fn is_discrete(self) -> bool {
        matches!(self, Experiment::Maxcut | Experiment::Chain2 | Experiment::Chain3 | Experiment::Molecule | Experiment::AlphaScan)
    }
}

/// One optimizer stage as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub optimizer: OptimizerName,
    pub lr: f64,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Adam,
    Lbfgs,
}

impl StageSpec {
    pub fn adam(lr: f64, epochs: usize) -> Self {
        Self { optimizer: OptimizerName::Adam, lr, epochs, history: None }
    }

    pub fn lbfgs(lr: f64, epochs: usize) -> Self {
        Self { optimizer: OptimizerName::Lbfgs, lr, epochs, history: None }
    }

    pub fn to_optimizer(self) -> OptimizerConfig {
        match self.optimizer {
            OptimizerName::Adam => OptimizerConfig::adam(self.lr, self.epochs),
            OptimizerName::Lbfgs => {
                let mut c = OptimizerConfig::lbfgs(self.lr, self.epochs);
                if let (Some(h), crate::train::OptimizerKind::Lbfgs { history, .. }) = (self.history, &mut c.kind) {
                    *history = h;
                }
                c
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizerSpec {
    pub direction: Direction,
    pub lr: f64,
    pub epochs: usize,
    /// Empty: the experiment's default start.
    #[serde(default)]
    pub x0: Vec<f64>,
    pub bounds: (f64, f64),
    #[serde(default)]
    pub objective: ExtremizerObjective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Training points: total for `fit`, per discrete value for `mixed`,
    /// samples for discrete experiments, collocation points for `dqc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Fraction of the `2ᴺ` inputs used by discrete experiments when `size` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    /// Open input window left out of continuous training sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<(f64, f64)>,
    /// Cluster separation for Max-Cut instances.
    #[serde(default = "default_separation")]
    pub separation: f64,
}

fn default_separation() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaScanSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AlphaScanSpec {
    /// `start, start + step, …` up to `stop` inclusive; values are rounded to 1e-9.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9).collect()
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_qubits: usize,
    pub depth: usize,
    pub model: Vec<StageSpec>,
    pub extremizer: ExtremizerSpec,
    pub dataset: DatasetSpec,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_scan: Option<AlphaScanSpec>,
    pub top_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Partial `[extremizer]` table; absent keys keep the experiment default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizerPatch {
    pub direction: Option<Direction>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub x0: Option<Vec<f64>>,
    pub bounds: Option<(f64, f64)>,
    pub objective: Option<ExtremizerObjective>,
}

/// Partial `[dataset]` table; absent keys keep the experiment default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPatch {
    pub size: Option<usize>,
    pub fraction: Option<f64>,
    pub exclusion: Option<(f64, f64)>,
    pub separation: Option<f64>,
}

/// Config file contents; every key is optional and overrides the experiment default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub n_qubits: Option<usize>,
    pub depth: Option<usize>,
    pub model: Option<Vec<StageSpec>>,
    pub extremizer: Option<ExtremizerPatch>,
    pub dataset: Option<DatasetPatch>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub thresholds: Option<Vec<f64>>,
    pub alpha_scan: Option<AlphaScanSpec>,
    pub top_k: Option<usize>,
    pub out: Option<PathBuf>,
}

fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

impl ExperimentConfig {
    /// Published hyperparameters of each experiment, at desk-scale trial counts.
    pub fn defaults(experiment: Experiment) -> Self {
        let discrete_extremizer = ExtremizerSpec {
            direction: Direction::Maximize,
            lr: DISCRETE_LR,
            epochs: crate::extremal::DEFAULT_DISCRETE_EPOCHS,
            x0: Vec::new(),
            bounds: (-1.0, 1.0),
            objective: ExtremizerObjective::Measured,
        };
        let discrete = |n: usize, size: Option<usize>, fraction: Option<f64>| Self {
            experiment,
            n_qubits: n,
            depth: n * n,
            model: vec![StageSpec::adam(DISCRETE_LR, 50)],
            extremizer: discrete_extremizer.clone(),
            dataset: DatasetSpec { size, fraction, exclusion: None, separation: 5.0 },
            trials: 20,
            seed: 0,
            alpha: 1.0,
            beta: 0.5,
            thresholds: default_thresholds(),
            alpha_scan: None,
            top_k: 5,
            out: None,
        };
        match experiment {
            Experiment::Fit => Self {
                experiment,
                n_qubits: 3,
                depth: 3,
                model: vec![StageSpec::adam(0.5, 50)],
                extremizer: ExtremizerSpec {
                    direction: Direction::Maximize,
                    lr: 0.05,
                    epochs: crate::extremal::DEFAULT_CONTINUOUS_EPOCHS,
                    x0: Vec::new(),
                    bounds: (0.0, 1.0),
                    objective: ExtremizerObjective::Measured,
                },
                dataset: DatasetSpec {
                    size: Some(20),
                    fraction: None,
                    exclusion: Some((PI / 10.0 - 0.1, PI / 10.0 + 0.1)),
                    separation: 5.0,
                },
                trials: 1,
                seed: 0,
                alpha: 6.0,
                beta: 0.0,
                thresholds: default_thresholds(),
                alpha_scan: None,
                top_k: 5,
                out: None,
            },
            Experiment::Dqc => Self {
                experiment,
                n_qubits: 6,
                depth: DQC_DEPTH,
                model: vec![StageSpec::adam(0.1, 250), StageSpec::lbfgs(0.05, 20)],
                extremizer: ExtremizerSpec {
                    direction: Direction::Maximize,
                    lr: 0.2,
                    epochs: 100,
                    x0: vec![0.25],
                    bounds: (0.0, 1.0),
                    objective: ExtremizerObjective::Measured,
                },
                dataset: DatasetSpec { size: Some(50), fraction: None, exclusion: None, separation: 5.0 },
                trials: 1,
                seed: 0,
                alpha: DQC_ALPHA,
                beta: 0.0,
                thresholds: default_thresholds(),
                alpha_scan: None,
                top_k: 5,
                out: None,
            },
            Experiment::Maxcut | Experiment::Chain2 | Experiment::Chain3 => discrete(6, None, Some(1.0)),
            Experiment::Molecule => discrete(5, None, Some(1.0)),
            Experiment::AlphaScan => Self {
                trials: 5,
                alpha_scan: Some(AlphaScanSpec { start: 1.0, stop: 5.0, step: 0.1 }),
                ..discrete(6, Some(2), None)
            },
            Experiment::Mixed => Self {
                experiment,
                n_qubits: 5,
                depth: 10,
                model: vec![StageSpec::adam(0.5, 258)],
                extremizer: ExtremizerSpec {
                    direction: Direction::Minimize,
                    lr: 0.01,
                    epochs: 100,
                    x0: Vec::new(),
                    bounds: (-1.0, 1.0),
                    objective: ExtremizerObjective::Measured,
                },
                dataset: DatasetSpec {
                    size: Some(21),
                    fraction: None,
                    exclusion: Some((MIXED_MINIMUM.0 - MIXED_WINDOW, MIXED_MINIMUM.0 + MIXED_WINDOW)),
                    separation: 5.0,
                },
                trials: 1,
                seed: 0,
                alpha: 10.0,
                beta: 0.0,
                thresholds: default_thresholds(),
                alpha_scan: None,
                top_k: 4,
                out: None,
            },
        }
    }

    /// Experiment defaults overlaid with the keys present in `file`.
    pub fn resolve(experiment: Experiment, file: ConfigFile) -> Result<Self> {
        if let Some(e) = file.experiment {
            if e != experiment {
                return Err(Error::Config(format!(
                    "config is for experiment {:?} but {:?} was requested",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        let mut c = Self::defaults(experiment);
        if let Some(v) = file.n_qubits {
            c.n_qubits = v;
            if file.depth.is_none() && experiment.is_discrete() {
                c.depth = v * v;
            }
        }
        macro_rules! overlay {
            ($($field:ident),*) => { $( if let Some(v) = file.$field { c.$field = v; } )* };
        }
        overlay!(depth, model, trials, seed, alpha, beta, thresholds, top_k);
        if let Some(p) = file.extremizer {
            let e = &mut c.extremizer;
            macro_rules! patch {
                ($($field:ident),*) => { $( if let Some(v) = p.$field { e.$field = v; } )* };
            }
            patch!(direction, lr, epochs, x0, bounds, objective);
        }
        if let Some(p) = file.dataset {
            let d = &mut c.dataset;
            // size and fraction are alternatives, so setting one clears the other
            if p.size.is_some() || p.fraction.is_some() {
                d.size = p.size;
                d.fraction = p.fraction;
            }
            if p.exclusion.is_some() {
                d.exclusion = p.exclusion;
            }
            if let Some(v) = p.separation {
                d.separation = v;
            }
        }
        if file.alpha_scan.is_some() {
            c.alpha_scan = file.alpha_scan;
        }
        if file.out.is_some() {
            c.out = file.out;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(experiment: Experiment, text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(experiment, file)
    }

    pub fn load(experiment: Experiment, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(experiment, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be ≥ 1".into());
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return bad(format!("threshold {t} outside (0, 1]"));
        }
        if self.depth == 0 {
            return bad("depth must be ≥ 1".into());
        }
        if self.model.is_empty() {
            return bad("at least one model optimizer stage is required".into());
        }
        for s in &self.model {
            s.to_optimizer().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.experiment == Experiment::Mixed && self.n_qubits != 5 {
            return bad("the mixed experiment uses 3 continuous and 2 discrete qubits (n_qubits = 5)".into());
        }
        if self.experiment == Experiment::Molecule && self.n_qubits != crate::problems::MOLECULE_SITES {
            return bad("the molecule experiment has 5 sites (n_qubits = 5)".into());
        }
        if let Some(f) = self.dataset.fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("dataset fraction {f} outside (0, 1]"));
            }
        }
        if self.experiment == Experiment::AlphaScan {
            match self.alpha_scan {
                Some(s) if s.step > 0.0 && s.stop >= s.start => {}
                _ => return bad("alpha_scan needs start ≤ stop and step > 0".into()),
            }
        }
        self.extremizer_config(0).validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn schedule(&self) -> Vec<OptimizerConfig> {
        self.model.iter().map(|s| s.to_optimizer()).collect()
    }

    fn extremizer_config(&self, seed: u64) -> ExtremizeConfig {
        ExtremizeConfig::new(self.extremizer.direction, self.extremizer.lr, self.extremizer.epochs)
            .with_x0(self.extremizer.x0.clone())
            .with_bounds(self.extremizer.bounds.0, self.extremizer.bounds.1)
            .with_seed(seed)
            .with_objective(self.extremizer.objective)
    }

    fn discrete_size(&self) -> usize {
        let space = 1usize << self.n_qubits;
        match (self.dataset.size, self.dataset.fraction) {
            (Some(s), _) => s,
            (None, Some(f)) => ((f * space as f64).round() as usize).max(1),
            (None, None) => space,
        }
    }
}

/// ADAM learning rate of the discrete model and extremizer stages.
pub const DISCRETE_LR: f64 = 0.05;
/// Ansatz depth of the ODE solver.
pub const DQC_DEPTH: usize = 6;
/// Output scale of the ODE solver.
pub const DQC_ALPHA: f64 = 12.0;
/// Half-width of the mixed experiment's training gap around the minimum.
pub const MIXED_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub reference: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub total_optimal_probability: f64,
    /// Both top-2 suggestions lie in the optimal set.
    pub top2_optimal: bool,
    pub final_loss: f64,
}

/// Everything recorded for one seeded trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub model_loss: Vec<f64>,
    pub model_final_loss: f64,
    pub extremizer_trajectory: Vec<f64>,
    /// Continuous input, `[x, n]` for mixed, basis index of the top candidate for discrete.
    pub final_input: Vec<f64>,
    pub extremal_value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub distribution: BTreeMap<Bitstring, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top_candidates: Vec<(Bitstring, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_optimal_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optimal_set: Vec<Bitstring>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_points: Vec<AlphaPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurvePoint>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialReport {
    fn new(experiment: Experiment, seed: u64, train: &TrainReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed,
            model_loss: train.loss_trajectory.clone(),
            model_final_loss: train.final_loss,
            extremizer_trajectory: Vec::new(),
            final_input: Vec::new(),
            extremal_value: f64::NAN,
            distribution: BTreeMap::new(),
            top_candidates: Vec::new(),
            total_optimal_probability: None,
            optimal_set: Vec::new(),
            optimal_value: None,
            alpha_points: Vec::new(),
            curve: Vec::new(),
            metrics: BTreeMap::new(),
            wall_time: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub seed: u64,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean_total_optimal_probability: f64,
    pub max_total_optimal_probability: f64,
    pub top2_optimal_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub trials: usize,
    pub completed: usize,
    pub failed: usize,
    pub failures: Vec<TrialFailure>,
    pub final_loss_mean: f64,
    pub final_loss_std: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub threshold_frequency: Vec<ThresholdRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_table: Vec<AlphaRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub reports: Vec<TrialReport>,
    pub failures: Vec<TrialFailure>,
    pub summary: Summary,
}

/// Fraction of reports whose total optimal probability exceeds each threshold.
pub fn threshold_frequency(reports: &[TrialReport], thresholds: &[f64]) -> Result<Vec<ThresholdRow>> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to aggregate".into()));
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            let hits = reports.iter().filter(|r| r.total_optimal_probability.unwrap_or(0.0) > t).count();
            ThresholdRow { threshold: t, frequency: hits as f64 / reports.len() as f64 }
        })
        .collect())
}

/// Aggregate summary; a pure function of the reports and failures.
pub fn summarize(config: &ExperimentConfig, reports: &[TrialReport], failures: &[TrialFailure]) -> Summary {
    let losses: Vec<f64> = reports.iter().map(|r| r.model_final_loss).collect();
    let (mean, std) = mean_std(&losses);
    let threshold_frequency = if config.experiment.is_discrete() && !reports.is_empty() {
        threshold_frequency(reports, &config.thresholds).unwrap_or_default()
    } else {
        Vec::new()
    };
    let mut alpha_table = Vec::new();
    if let Some(first) = reports.first() {
        for (k, point) in first.alpha_points.iter().enumerate() {
            let probs: Vec<f64> =
                reports.iter().filter_map(|r| r.alpha_points.get(k)).map(|p| p.total_optimal_probability).collect();
            let top2 = reports.iter().filter_map(|r| r.alpha_points.get(k)).filter(|p| p.top2_optimal).count();
            alpha_table.push(AlphaRow {
                alpha: point.alpha,
                mean_total_optimal_probability: mean_std(&probs).0,
                max_total_optimal_probability: probs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                top2_optimal_fraction: top2 as f64 / reports.len() as f64,
            });
        }
    }
    Summary {
        schema_version: SCHEMA_VERSION,
        experiment: config.experiment,
        trials: config.trials,
        completed: reports.len(),
        failed: failures.len(),
        failures: failures.to_vec(),
        final_loss_mean: mean,
        final_loss_std: std,
        threshold_frequency,
        alpha_table,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Worker-pool size from [`WORKERS_ENV`], defaulting to the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs every trial (seeds `seed, seed+1, …`) on the worker pool and aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes: Vec<(u64, Result<TrialReport>)> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|i| {
                let seed = config.seed + i;
                (seed, run_trial(config, seed))
            })
            .collect()
    });
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(TrialFailure { seed, kind: e.kind().into(), message: e.to_string() }),
        }
    }
    let summary = summarize(config, &reports, &failures);
    Ok(ExperimentRun { config: config.clone(), reports, failures, summary })
}

/// One seeded trial of the configured experiment.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let start = Instant::now();
    let mut report = match config.experiment {
        Experiment::Fit => run_fit(config, seed),
        Experiment::Dqc => run_dqc(config, seed),
        Experiment::Mixed => run_mixed(config, seed),
        Experiment::AlphaScan => run_alpha_scan(config, seed),
        _ => run_discrete(config, seed),
    }?;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn grid_argmax(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, count: usize) -> Result<(f64, f64)> {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for x in uniform_grid(lo, hi, count) {
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Resolution of the grid scans used to score continuous extremizers.
pub const SCORE_GRID: usize = 10_000;
/// Points of the emitted model-versus-reference curves.
pub const CURVE_POINTS: usize = 200;

fn run_fit(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.extremizer.bounds;
    let size = config.dataset.size.unwrap_or(20);
    let dataset = make_continuous_training_set(target_sin5x, (lo, hi), size, config.dataset.exclusion)?;
    let n = config.n_qubits;
    let enc = Encoding::Chebyshev { n_qubits: n };
    let mut model = QuantumModel::with_hea(enc, config.depth, Observable::new(n, config.alpha, config.beta), &mut rng)?;
    let train = fit(&mut model, &Loss::Mse(dataset.clone()), &config.schedule())?;
    let mut ext = config.extremizer_config(seed);
    if ext.x0.is_empty() {
        ext.x0 = vec![best_training_input(&model, &dataset, config.extremizer.direction)?];
    }
    let result = extremize_continuous(&model, &ext)?;
    let (grid_x, grid_max) = grid_argmax(|x| model.evaluate(&[x]), lo, hi, SCORE_GRID)?;
    let mut report = TrialReport::new(config.experiment, seed, &train);
    report.extremizer_trajectory = result.trajectory;
    report.final_input = result.best_input.clone();
    report.extremal_value = result.value;
    report.curve = uniform_grid(lo, hi, CURVE_POINTS)
        .into_iter()
        .map(|x| Ok(CurvePoint { x, reference: target_sin5x(x), model: model.evaluate(&[x])? }))
        .collect::<Result<_>>()?;
    let m = &mut report.metrics;
    m.insert("final_mse".into(), train.final_loss);
    m.insert("x_star".into(), result.best_input[0]);
    m.insert("model_value_at_x_star".into(), result.value);
    m.insert("true_value_at_x_star".into(), target_sin5x(result.best_input[0]));
    m.insert("model_grid_argmax".into(), grid_x);
    m.insert("model_grid_max".into(), grid_max);
    Ok(report)
}

/// Training input whose model value is best in `direction`.
fn best_training_input(model: &QuantumModel, dataset: &Dataset, direction: Direction) -> Result<f64> {
    let mut best = (f64::NAN, f64::NAN);
    for s in &dataset.samples {
        let v = direction.sign() * model.evaluate(&s.input)?;
        if best.0.is_nan() || v > best.1 {
            best = (s.input[0], v);
        }
    }
    Ok(best.0)
}

fn run_dqc(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.extremizer.bounds;
    let ode = OdeSpec::new(ode_rhs, (lo, ode_analytic(lo)), (lo, hi), config.dataset.size.unwrap_or(50))?;
    let n = config.n_qubits;
    let enc = Encoding::Chebyshev { n_qubits: n };
    let mut model = QuantumModel::with_hea(enc, config.depth, Observable::new(n, config.alpha, config.beta), &mut rng)?;
    let train = fit(&mut model, &Loss::OdeResidual(ode.clone()), &config.schedule())?;
    // the residual only constrains the model on the collocation span
    let grid = ode.grid();
    let span = (grid[0], grid[grid.len() - 1]);
    let ext = config.extremizer_config(seed).with_bounds(span.0, span.1);
    let result = extremize_continuous(&model, &ext)?;
    let x_star = result.best_input[0];
    let (model_x, model_max) = grid_argmax(|x| model.evaluate(&[x]), span.0, span.1, SCORE_GRID)?;
    let (true_x, true_max) = grid_argmax(|x| Ok(ode_analytic(x)), lo, hi, SCORE_GRID)?;
    let mut report = TrialReport::new(config.experiment, seed, &train);
    report.extremizer_trajectory = result.trajectory;
    report.final_input = vec![x_star];
    report.extremal_value = result.value;
    report.curve = grid
        .into_iter()
        .map(|x| Ok(CurvePoint { x, reference: ode_analytic(x), model: model.evaluate(&[x])? }))
        .collect::<Result<_>>()?;
    let max_dev = report.curve.iter().map(|p| (p.model - p.reference).abs()).fold(0.0, f64::max);
    let m = &mut report.metrics;
    m.insert("final_residual_loss".into(), train.final_loss);
    m.insert("max_abs_deviation".into(), max_dev);
    m.insert("x_star".into(), x_star);
    m.insert("model_value_at_x_star".into(), result.value);
    m.insert("model_grid_argmax".into(), model_x);
    m.insert("model_grid_max".into(), model_max);
    m.insert("analytic_argmax".into(), true_x);
    m.insert("analytic_max".into(), true_max);
    m.insert("analytic_value_at_x_star".into(), ode_analytic(x_star));
    Ok(report)
}

/// Training inputs are `[x, n − 1]`; targets are the raw function values.
pub fn mixed_training_set(per_value: usize, exclusion: Option<(f64, f64)>) -> Result<Dataset> {
    let mut samples = Vec::new();
    for n in 1..=4 {
        let window = if n == MIXED_MINIMUM.1 { exclusion } else { None };
        for x in crate::problems::allowed_grid((-1.0, 1.0), per_value, window)? {
            samples.push(Sample { input: vec![x, (n - 1) as f64], target: mixed_f(x, n)? });
        }
    }
    Ok(Dataset::new(samples))
}

fn run_mixed(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dataset = mixed_training_set(config.dataset.size.unwrap_or(21), config.dataset.exclusion)?;
    let enc = Encoding::Mixed { n_cont: config.n_qubits - 2, n_disc: 2 };
    let obs = Observable::new(config.n_qubits, config.alpha, config.beta);
    let mut model = QuantumModel::with_hea(enc, config.depth, obs, &mut rng)?;
    let train = fit(&mut model, &Loss::Mse(dataset), &config.schedule())?;
    let result = extremize_mixed(&model, &config.extremizer_config(seed))?;
    let mut report = TrialReport::new(config.experiment, seed, &train);
    report.extremizer_trajectory = result.trajectory;
    report.final_input = result.best_input.clone();
    report.extremal_value = result.value;
    report.top_candidates = result.top_candidates.clone();
    report.distribution = result.distribution.clone();
    let m = &mut report.metrics;
    m.insert("final_mse".into(), train.final_loss);
    m.insert("x_star".into(), result.best_input[0]);
    m.insert("modal_n".into(), result.best_input[1]);
    m.insert("modal_probability".into(), result.top_candidates[0].1);
    Ok(report)
}

fn discrete_problem(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Box<dyn DiscreteProblem>> {
    let n = config.n_qubits;
    Ok(match config.experiment {
        Experiment::Maxcut | Experiment::AlphaScan => Box::new(gen_maxcut_clusters(n, config.dataset.separation, rng)?),
        Experiment::Chain2 => Box::new(gen_correlation_chain(n, 2, rng)?),
        Experiment::Chain3 => Box::new(gen_correlation_chain(n, 3, rng)?),
        Experiment::Molecule => Box::new(gen_molecule(rng)),
        other => return Err(Error::Config(format!("{} is not a discrete experiment", other.name()))),
    })
}

/// Instance, scaled training set, initial θ and extremizer seed of one discrete trial.
struct DiscreteSetup {
    problem: Box<dyn DiscreteProblem>,
    dataset: Dataset,
    theta0: Vec<f64>,
    extremizer_seed: u64,
}

fn discrete_setup(config: &ExperimentConfig, seed: u64) -> Result<DiscreteSetup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = discrete_problem(config, &mut rng)?;
    // A draw whose targets are all equal cannot be min-max scaled. Small
    // sets hit this often (a Max-Cut pair of complements, say), so redraw.
    let mut draws = 0;
    let dataset = loop {
        let raw = make_discrete_training_set(problem.as_ref(), config.discrete_size(), &mut rng)?;
        draws += 1;
        match scale_targets(&raw) {
            Err(Error::DegenerateRange(_)) if draws < MAX_TRAINING_DRAWS && raw.len() < 1 << config.n_qubits => {}
            other => break other?.0,
        }
    };
    let ansatz = crate::circuit::build_hea(config.n_qubits, config.depth)?;
    let theta0 = crate::circuit::init_theta(ansatz.n_variational(), &mut rng);
    Ok(DiscreteSetup { problem, dataset, theta0, extremizer_seed: rng.random() })
}

struct DiscreteOutcome {
    train: TrainReport,
    result: crate::extremal::ExtremalResult,
    trajectory: Vec<f64>,
    value: f64,
}

fn discrete_pipeline(config: &ExperimentConfig, setup: &DiscreteSetup, alpha: f64) -> Result<DiscreteOutcome> {
    let n = config.n_qubits;
    let ansatz = crate::circuit::build_hea(n, config.depth)?;
    let obs = Observable::new(n, alpha, config.beta);
    let mut model = QuantumModel::new(Encoding::Digital { n_qubits: n }, ansatz, obs, setup.theta0.clone())?;
    let train = fit(&mut model, &Loss::Mse(setup.dataset.clone()), &config.schedule())?;
    let trained = train_extremizer_discrete(&model, &config.extremizer_config(setup.extremizer_seed))?;
    let result = sample_extremizer(&trained.efm, config.top_k.max(2))?;
    Ok(DiscreteOutcome { train, result, trajectory: trained.trajectory, value: trained.value })
}

fn run_discrete(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let setup = discrete_setup(config, seed)?;
    let optimum = brute_force_optimum(setup.problem.as_ref(), config.extremizer.direction)?;
    let out = discrete_pipeline(config, &setup, config.alpha)?;
    let mut report = TrialReport::new(config.experiment, seed, &out.train);
    report.extremizer_trajectory = out.trajectory;
    report.extremal_value = out.value;
    report.final_input = vec![out.result.top_candidates[0].0.index() as f64];
    report.total_optimal_probability = Some(total_optimal_probability(&out.result, &optimum.set));
    report.top_candidates = out.result.top_candidates.iter().take(config.top_k).cloned().collect();
    report.distribution = out.result.distribution;
    report.optimal_set = optimum.set;
    report.optimal_value = Some(optimum.value);
    report.metrics.insert("training_size".into(), setup.dataset.len() as f64);
    Ok(report)
}

fn run_alpha_scan(config: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let scan = config.alpha_scan.ok_or_else(|| Error::Config("alpha_scan settings missing".into()))?;
    let setup = discrete_setup(config, seed)?;
    let optimum = brute_force_optimum(setup.problem.as_ref(), config.extremizer.direction)?;
    let mut points = Vec::new();
    let mut first = None;
    for alpha in scan.values() {
        let out = discrete_pipeline(config, &setup, alpha)?;
        let top2 = out.result.top_candidates.iter().take(2).all(|(b, _)| optimum.set.contains(b));
        points.push(AlphaPoint {
            alpha,
            total_optimal_probability: total_optimal_probability(&out.result, &optimum.set),
            top2_optimal: top2,
            final_loss: out.train.final_loss,
        });
        first.get_or_insert(out);
    }
    let out = first.ok_or_else(|| Error::Config("empty alpha scan".into()))?;
    let mut report = TrialReport::new(config.experiment, seed, &out.train);
    report.extremizer_trajectory = out.trajectory;
    report.extremal_value = out.value;
    report.final_input = vec![out.result.top_candidates[0].0.index() as f64];
    report.total_optimal_probability = Some(points[0].total_optimal_probability);
    report.optimal_set = optimum.set;
    report.optimal_value = Some(optimum.value);
    let best = points.iter().map(|p| p.total_optimal_probability).fold(f64::NEG_INFINITY, f64::max);
    report.metrics.insert("max_total_optimal_probability".into(), best);
    report.metrics.insert("training_size".into(), setup.dataset.len() as f64);
    report.alpha_points = points;
    Ok(report)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::Serialize(format!("{}: {other:?}", path.display())),
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes the resolved config, one JSON document per trial, the summary and the
/// plot tables into `dir`. Everything except `timings.csv` is byte-stable.
pub fn emit(run: &ExperimentRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut push = |p: PathBuf| -> PathBuf {
        written.push(p.clone());
        p
    };
    write_json(&push(dir.join("config.json")), &run.config)?;
    for r in &run.reports {
        write_json(&push(dir.join(format!("trial_{:06}.json", r.seed))), r)?;
    }
    write_json(&push(dir.join("summary.json")), &run.summary)?;
    if !run.summary.threshold_frequency.is_empty() {
        write_csv(&push(dir.join("threshold_frequency.csv")), &run.summary.threshold_frequency)?;
    }
    if !run.summary.alpha_table.is_empty() {
        write_csv(&push(dir.join("alpha_scan.csv")), &run.summary.alpha_table)?;
    }
    for r in &run.reports {
        let name = run.config.experiment.name();
        if !r.curve.is_empty() {
            let path = push(dir.join(format!("{name}_curve_{:06}.csv", r.seed)));
            match run.config.experiment {
                Experiment::Dqc => write_csv(
                    &path,
                    r.curve.iter().map(|p| DqcRow { x: p.x, analytic: p.reference, model: p.model, abs_deviation: (p.model - p.reference).abs() }),
                )?,
                _ => write_csv(&path, r.curve.iter().map(|p| FitRow { x: p.x, true_f: p.reference, model_f: p.model }))?,
            }
        }
        if matches!(run.config.experiment, Experiment::Fit | Experiment::Dqc | Experiment::Mixed) {
            let path = push(dir.join(format!("{name}_loss_{:06}.csv", r.seed)));
            write_csv(&path, r.model_loss.iter().enumerate().map(|(epoch, &loss)| LossRow { epoch: epoch + 1, loss }))?;
            let path = push(dir.join(format!("{name}_extremizer_{:06}.csv", r.seed)));
            write_csv(
                &path,
                r.extremizer_trajectory.iter().enumerate().map(|(epoch, &objective)| ExtremizerRow { epoch: epoch + 1, objective }),
            )?;
        }
        if run.config.experiment == Experiment::Mixed {
            let path = push(dir.join(format!("mixed_n_distribution_{:06}.csv", r.seed)));
            write_csv(&path, r.distribution.iter().map(|(b, &p)| NRow { n: b.index() + 1, probability: p }))?;
        }
    }
    write_csv(
        &push(dir.join("timings.csv")),
        run.reports.iter().map(|r| TimingRow { seed: r.seed, wall_time_s: r.wall_time.as_secs_f64() }),
    )?;
    Ok(written)
}

#[derive(Serialize)]
struct FitRow {
    x: f64,
    true_f: f64,
    model_f: f64,
}

#[derive(Serialize)]
struct DqcRow {
    x: f64,
    analytic: f64,
    model: f64,
    abs_deviation: f64,
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

#[derive(Serialize)]
struct ExtremizerRow {
    epoch: usize,
    objective: f64,
}

#[derive(Serialize)]
struct NRow {
    n: usize,
    probability: f64,
}

#[derive(Serialize)]
struct TimingRow {
    seed: u64,
    wall_time_s: f64,
}

/// Command-line arguments of the `qel` binary.
#[derive(Debug, clap::Parser)]
#[command(name = "qel", version, about = "Quantum extremal learning experiments")]
pub struct Args {
    pub experiment: Experiment,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Machine-readable failure record printed by the binary.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self { error: e.kind().into(), message: e.to_string() }
    }
}

/// Loads the config, applies command-line overrides, runs and emits. Returns the
/// summary, or an error once outputs are written if no trial completed.
pub fn execute(args: &Args) -> Result<Summary> {
    let mut config = ExperimentConfig::load(args.experiment, &args.config)?;
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    config.validate()?;
    let run = run_experiment(&config)?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("results").join(config.experiment.name()));
    emit(&run, &dir)?;
    if let (0, Some(first)) = (run.summary.completed, run.failures.first()) {
        return Err(Error::AllTrialsFailed { trials: run.summary.trials, first: first.message.clone() });
    }
    Ok(run.summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(p: f64) -> TrialReport {
        let train = TrainReport {
            loss_trajectory: vec![],
            initial_loss: 0.0,
            final_loss: 0.0,
            final_theta: vec![],
            best_epoch: 1,
            improved: true,
            wall_time: Duration::ZERO,
        };
        let mut r = TrialReport::new(Experiment::Maxcut, 0, &train);
        r.total_optimal_probability = Some(p);
        r
    }

    #[test]
    fn threshold_examples() {
        let rs: Vec<_> = [0.05, 0.15, 0.25].iter().map(|&p| report(p)).collect();
        let t = threshold_frequency(&rs, &[0.2, 1.0]).unwrap();
        assert!((t[0].frequency - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t[1].frequency, 0.0);
        let t = threshold_frequency(&rs, &[0.0]).unwrap();
        assert_eq!(t[0].frequency, 1.0);
        assert!(threshold_frequency(&[], &[0.1]).is_err());
    }

    #[test]
    fn config_overlay_and_rejection() {
        let c = ExperimentConfig::from_toml(Experiment::Maxcut, "trials = 3\nseed = 7\n").unwrap();
        assert_eq!((c.trials, c.seed, c.depth, c.n_qubits), (3, 7, 36, 6));
        let c = ExperimentConfig::from_toml(Experiment::Maxcut, "n_qubits = 4\n").unwrap();
        assert_eq!(c.depth, 16);
        assert!(matches!(ExperimentConfig::from_toml(Experiment::Maxcut, "bogus = 1\n"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml(Experiment::Maxcut, "[dataset]\nsize = 2\nwat = 1\n").is_err());
        assert!(ExperimentConfig::from_toml(Experiment::Maxcut, "thresholds = [0.0]\n").is_err());
        assert!(ExperimentConfig::from_toml(Experiment::Maxcut, "trials = 0\n").is_err());
        assert!(ExperimentConfig::from_toml(Experiment::Fit, "experiment = \"dqc\"\n").is_err());
        let c = ExperimentConfig::from_toml(
            Experiment::Dqc,
            "[[model]]\noptimizer = \"adam\"\nlr = 0.1\nepochs = 3\n[[model]]\noptimizer = \"lbfgs\"\nlr = 0.05\nepochs = 2\nhistory = 4\n",
        )
        .unwrap();
        assert_eq!(c.model.len(), 2);
        assert_eq!(c.schedule()[1], OptimizerConfig { kind: crate::train::OptimizerKind::Lbfgs { lr: 0.05, history: 4 }, epochs: 2 });
    }

    #[test]
    fn partial_tables_merge_with_defaults() {
        let text = "[extremizer]\nepochs = 7\nobjective = \"coherent\"\n[dataset]\nsize = 12\n";
        let c = ExperimentConfig::from_toml(Experiment::Fit, text).unwrap();
        let d = ExperimentConfig::defaults(Experiment::Fit);
        assert_eq!(c.extremizer.epochs, 7);
        assert_eq!(c.extremizer.objective, ExtremizerObjective::Coherent);
        assert_eq!((c.extremizer.lr, c.extremizer.bounds), (d.extremizer.lr, d.extremizer.bounds));
        assert_eq!(c.dataset.size, Some(12));
        assert_eq!(c.dataset.exclusion, d.dataset.exclusion);
        let m = ExperimentConfig::from_toml(Experiment::Maxcut, "[dataset]\nsize = 5\n").unwrap();
        assert_eq!((m.dataset.size, m.dataset.fraction), (Some(5), None));
        assert!(ExperimentConfig::from_toml(Experiment::Fit, "[extremizer]\nrate = 1\n").is_err());
    }

    #[test]
    fn experiment_defaults() {
        let fit = ExperimentConfig::defaults(Experiment::Fit);
        assert_eq!(fit.model, vec![StageSpec::adam(0.5, 50)]);
        let dqc = ExperimentConfig::defaults(Experiment::Dqc);
        assert_eq!(dqc.model, vec![StageSpec::adam(0.1, 250), StageSpec::lbfgs(0.05, 20)]);
        assert_eq!((dqc.extremizer.lr, dqc.extremizer.epochs, dqc.dataset.size), (0.2, 100, Some(50)));
        let mc = ExperimentConfig::defaults(Experiment::Maxcut);
        assert_eq!((mc.depth, mc.model[0].epochs, mc.extremizer.epochs, mc.trials), (36, 50, 150, 20));
        let mixed = ExperimentConfig::defaults(Experiment::Mixed);
        assert_eq!(mixed.model, vec![StageSpec::adam(0.5, 258)]);
        assert_eq!((mixed.extremizer.lr, mixed.extremizer.epochs, mixed.depth), (0.01, 100, 10));
        let scan = ExperimentConfig::defaults(Experiment::AlphaScan).alpha_scan.unwrap().values();
        assert_eq!(scan.len(), 41);
        assert_eq!((scan[0], scan[40]), (1.0, 5.0));
        for e in [Experiment::Fit, Experiment::Dqc, Experiment::Maxcut, Experiment::Chain2, Experiment::Chain3,
                  Experiment::Molecule, Experiment::AlphaScan, Experiment::Mixed] {
            ExperimentConfig::defaults(e).validate().unwrap();
        }
    }

    #[test]
    fn mixed_training_layout() {
        let ds = mixed_training_set(21, Some((0.15, 0.35))).unwrap();
        assert_eq!(ds.len(), 84);
        assert!(ds.samples.iter().all(|s| s.input[1] != 2.0 || (s.input[0] - 0.25).abs() >= 0.1 - 1e-12));
    }
}
