//! Experiment configuration: TOML with unknown keys rejected, validated in
//! full before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mixlab_core::fim_experiment::{DatasetKind, TrainingConfig};
use mixlab_core::regret::SupervisedSetting;
use mixlab_core::sgld::Boundary;
use mixlab_core::{ModelFamily, ParamVector, PriorSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Regret,
    Bound,
    Fisher,
    Sgld,
    Dominance,
    DeepLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    Bernoulli {},
    Categorical { alphabet: usize },
    Markov { alphabet: usize, order: usize },
    LinearGaussian { feature_std: Vec<f64>, noise_var: f64, half_width: f64 },
    SoftmaxNet { inputs: usize, hidden: usize, classes: usize, half_width: f64 },
}

impl FamilyConfig {
    pub fn build(&self) -> Result<ModelFamily, ConfigError> {
        let f = match self {
            FamilyConfig::Bernoulli {} => Ok(ModelFamily::Bernoulli),
            FamilyConfig::Categorical { alphabet } => ModelFamily::categorical(*alphabet),
            FamilyConfig::Markov { alphabet, order } => ModelFamily::markov(*alphabet, *order),
            FamilyConfig::LinearGaussian { feature_std, noise_var, half_width } => {
                ModelFamily::linear_gaussian(feature_std.clone(), *noise_var, *half_width)
            }
            FamilyConfig::SoftmaxNet { inputs, hidden, classes, half_width } => {
                ModelFamily::softmax_net(*inputs, *hidden, *classes, *half_width)
            }
        };
        f.map_err(|e| ConfigError::Invalid(format!("family: {e}")))
    }
}

fn default_grid_nodes() -> usize {
    2001
}

fn default_particles() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorConfig {
    Uniform {
        #[serde(default = "default_grid_nodes")]
        grid_nodes: usize,
        #[serde(default = "default_particles")]
        particles: usize,
    },
    Piecewise {
        levels: Vec<f64>,
        #[serde(default = "default_grid_nodes")]
        grid_nodes: usize,
        #[serde(default = "default_particles")]
        particles: usize,
    },
    Discrete {
        atoms: Vec<Vec<f64>>,
        /// Uniform over the atoms when absent.
        weights: Option<Vec<f64>>,
    },
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig::Uniform { grid_nodes: default_grid_nodes(), particles: default_particles() }
    }
}

impl PriorConfig {
    pub fn build(&self, family: &ModelFamily, seed: u64) -> Result<PriorSpec, ConfigError> {
        let p = match self {
            PriorConfig::Uniform { grid_nodes, particles } => {
                PriorSpec::uniform(*grid_nodes).with_particles(*particles, seed)
            }
            PriorConfig::Piecewise { levels, grid_nodes, particles } => {
                PriorSpec::piecewise(levels.clone(), *grid_nodes).with_particles(*particles, seed)
            }
            PriorConfig::Discrete { atoms, weights } => {
                let atoms: Vec<ParamVector> = atoms.iter().map(|a| ParamVector::new(a.clone())).collect();
                match weights {
                    Some(w) => PriorSpec::discrete(atoms, w.clone()),
                    None => PriorSpec::finite_class(atoms),
                }
            }
        };
        p.validate(family).map_err(|e| ConfigError::Invalid(format!("prior: {e}")))?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingName {
    Online,
    Batch,
    Supervised,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    /// Exact where feasible, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedConfig {
    pub features: Vec<Vec<f64>>,
    /// Uniform over the features when absent.
    pub probs: Option<Vec<f64>>,
}

impl SupervisedConfig {
    pub fn build(&self) -> Result<SupervisedSetting, ConfigError> {
        let s = match &self.probs {
            Some(p) => SupervisedSetting::new(self.features.clone(), p.clone()),
            None => SupervisedSetting::uniform(self.features.clone()),
        };
        s.map_err(|e| ConfigError::Invalid(format!("supervised: {e}")))
    }
}

fn default_settings() -> Vec<SettingName> {
    vec![SettingName::Online, SettingName::Batch]
}

fn default_regret_mc() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretConfig {
    #[serde(default = "default_settings")]
    pub settings: Vec<SettingName>,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_regret_mc")]
    pub n_mc: usize,
}

impl Default for RegretConfig {
    fn default() -> Self {
        Self { settings: default_settings(), method: MethodChoice::Auto, n_mc: default_regret_mc() }
    }
}

fn default_bound_mc() -> usize {
    100_000
}

fn default_epsilon_points() -> usize {
    60
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default = "default_settings")]
    pub settings: Vec<SettingName>,
    #[serde(default = "default_bound_mc")]
    pub n_mc: usize,
    /// Points of the default logarithmic radius grid.
    #[serde(default = "default_epsilon_points")]
    pub epsilon_points: usize,
    /// Explicit radii in bits; overrides `epsilon_points`.
    pub epsilon_grid: Option<Vec<f64>>,
    /// Also compute the exact regret for each row.
    #[serde(default = "yes")]
    pub with_exact: bool,
}

fn yes() -> bool {
    true
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            settings: default_settings(),
            n_mc: default_bound_mc(),
            epsilon_points: default_epsilon_points(),
            epsilon_grid: None,
            with_exact: true,
        }
    }
}

fn default_fisher_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherConfig {
    /// Samples for the empirical Fisher matrix (non-network families).
    #[serde(default = "default_fisher_samples")]
    pub samples: usize,
    /// Radius in nats for the effective dimension; `1/n` when absent.
    pub epsilon_sq_nats: Option<f64>,
    /// Network experiment: dataset kinds to train on.
    #[serde(default = "default_kinds")]
    pub datasets: Vec<DatasetKind>,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub training: TrainingOverrides,
}

fn default_kinds() -> Vec<DatasetKind> {
    vec![DatasetKind::Structured, DatasetKind::RandomLabels]
}

fn default_n_train() -> usize {
    300
}

fn default_replicates() -> usize {
    1
}

impl Default for FisherConfig {
    fn default() -> Self {
        Self {
            samples: default_fisher_samples(),
            epsilon_sq_nats: None,
            datasets: default_kinds(),
            n_train: default_n_train(),
            replicates: default_replicates(),
            training: TrainingOverrides::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TrainingOverrides {
    pub learning_rate: Option<f64>,
    pub max_steps: Option<usize>,
    pub tolerance: Option<f64>,
    pub window: Option<usize>,
    pub init_scale: Option<f64>,
    pub separation: Option<f64>,
}

impl TrainingOverrides {
    pub fn build(&self) -> TrainingConfig {
        let d = TrainingConfig::default();
        TrainingConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            window: self.window.unwrap_or(d.window),
            init_scale: self.init_scale.unwrap_or(d.init_scale),
            separation: self.separation.unwrap_or(d.separation),
        }
    }
}

fn default_chains() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgldSection {
    #[serde(default = "d_step")]
    pub step_size: f64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_burn")]
    pub burn_in: usize,
    #[serde(default = "d_thin")]
    pub thinning: usize,
    pub minibatch: Option<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "yes")]
    pub noise: bool,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Explicit training symbols; otherwise `n` draws from `theta0`.
    pub data: Option<Vec<usize>>,
}

fn d_step() -> f64 {
    1e-4
}
fn d_steps() -> usize {
    100_000
}
fn d_burn() -> usize {
    5_000
}
fn d_thin() -> usize {
    10
}

impl Default for SgldSection {
    fn default() -> Self {
        Self {
            step_size: d_step(),
            steps: d_steps(),
            burn_in: d_burn(),
            thinning: d_thin(),
            minibatch: None,
            boundary: Boundary::Reflect,
            noise: true,
            chains: 1,
            data: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AltConfig {
    Mixture,
    ErmPlugIn {
        #[serde(default)]
        floor: f64,
    },
    FixedModel { theta: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominanceConfig {
    pub alt: AltConfig,
    #[serde(default = "d_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "d_draws")]
    pub draws: usize,
}

fn d_gammas() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn d_draws() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepLinearConfig {
    #[serde(default = "d_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "d_dim")]
    pub dim: usize,
    #[serde(default = "d_seeds")]
    pub seeds: usize,
}

fn d_layers() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn d_dim() -> usize {
    16
}
fn d_seeds() -> usize {
    50
}

impl Default for DeepLinearConfig {
    fn default() -> Self {
        Self { layers: d_layers(), dim: d_dim(), seeds: d_seeds() }
    }
}

/// A single experiment; `n` accepts a number or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub family: Option<FamilyConfig>,
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    pub supervised: Option<SupervisedConfig>,
    pub regret: Option<RegretConfig>,
    pub bound: Option<BoundConfig>,
    pub fisher: Option<FisherConfig>,
    pub sgld: Option<SgldSection>,
    pub dominance: Option<DominanceConfig>,
    pub deep_linear: Option<DeepLinearConfig>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum N {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match N::deserialize(d)? {
        N::One(n) => vec![n],
        N::Many(v) => v,
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }

    pub fn family(&self) -> Result<ModelFamily, ConfigError> {
        match &self.family {
            Some(f) => f.build(),
            None => invalid("missing [family]"),
        }
    }

    pub fn theta0(&self) -> Result<Vec<f64>, ConfigError> {
        self.theta0.clone().ok_or_else(|| ConfigError::Invalid("missing theta0".into()))
    }

    /// Checks every parameter the named experiment will use.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        let needs_n = matches!(
            self.experiment,
            ExperimentKind::Regret | ExperimentKind::Bound | ExperimentKind::Dominance | ExperimentKind::Sgld
        );
        if needs_n && (self.n.is_empty() || self.n.contains(&0)) {
            return invalid("n must list at least one positive sample size");
        }
        match self.experiment {
            ExperimentKind::DeepLinear => {
                let d = self.deep_linear.clone().unwrap_or_default();
                if d.dim < 2 || d.seeds == 0 || d.layers.is_empty() || d.layers.contains(&0) {
                    return invalid("deep_linear needs dim >= 2, seeds >= 1 and positive layer counts");
                }
                Ok(())
            }
            kind => {
                let family = self.family()?;
                let prior = self.prior.build(&family, self.seed)?;
                let check_theta = |t: &[f64]| {
                    family.check_param(t).map_err(|e| ConfigError::Invalid(format!("theta0: {e}")))
                };
                match kind {
                    ExperimentKind::Regret => {
                        check_theta(&self.theta0()?)?;
                        let r = self.regret.clone().unwrap_or_default();
                        if r.settings.is_empty() {
                            return invalid("regret.settings is empty");
                        }
                        if r.method != MethodChoice::Exact && r.n_mc < 2 {
                            return invalid("regret.n_mc must be at least 2");
                        }
                        self.check_settings(&family, &r.settings)?;
                    }
                    ExperimentKind::Bound => {
                        check_theta(&self.theta0()?)?;
                        let b = self.bound.clone().unwrap_or_default();
                        if b.settings.is_empty() {
                            return invalid("bound.settings is empty");
                        }
                        if let Some(g) = &b.epsilon_grid {
                            if g.is_empty() || g.iter().any(|e| !(*e >= 0.0)) || g.windows(2).any(|w| w[1] <= w[0]) {
                                return invalid("bound.epsilon_grid must be nonempty, nonnegative and increasing");
                            }
                        } else if b.epsilon_points == 0 {
                            return invalid("bound.epsilon_points must be positive");
                        }
                        if prior.is_continuous() && b.n_mc == 0 {
                            return invalid("bound.n_mc must be positive");
                        }
                        self.check_settings(&family, &b.settings)?;
                        if b.settings.contains(&SettingName::Supervised) && self.supervised.is_none() {
                            return invalid("supervised bound needs a [supervised] feature alphabet");
                        }
                    }
                    ExperimentKind::Fisher => {
                        let f = self.fisher.clone().unwrap_or_default();
                        if let ModelFamily::SoftmaxNet(net) = &family {
                            if net.dimension() > 200 {
                                return invalid("softmax net has more than 200 parameters");
                            }
                            if f.n_train == 0 || f.replicates == 0 || f.datasets.is_empty() {
                                return invalid("fisher needs n_train, replicates and datasets");
                            }
                            let t = f.training.build();
                            if !(t.learning_rate > 0.0) || t.window == 0 || t.max_steps == 0 {
                                return invalid("fisher.training needs a positive learning rate, window and step budget");
                            }
                        } else {
                            check_theta(&self.theta0()?)?;
                            if f.samples == 0 {
                                return invalid("fisher.samples must be positive");
                            }
                            if self.n.contains(&0) {
                                return invalid("n must be positive");
                            }
                        }
                    }
                    ExperimentKind::Sgld => {
                        let s = self.sgld.clone().unwrap_or_default();
                        let cfg = self.sgld_config(&s);
                        cfg.validate().map_err(|e| ConfigError::Invalid(format!("sgld: {e}")))?;
                        if s.chains == 0 {
                            return invalid("sgld.chains must be positive");
                        }
                        match &s.data {
                            Some(d) => {
                                let a = family.alphabet().ok_or_else(|| {
                                    ConfigError::Invalid("sgld.data is only for sequence families".into())
                                })?;
                                if d.is_empty() || d.iter().any(|&x| x >= a) {
                                    return invalid("sgld.data must be nonempty symbols of the alphabet");
                                }
                            }
                            None => check_theta(&self.theta0()?)?,
                        }
                    }
                    ExperimentKind::Dominance => {
                        if !family.is_sequence() {
                            return invalid("dominance needs a sequence family");
                        }
                        let d = self.dominance.as_ref().ok_or_else(|| ConfigError::Invalid("missing [dominance]".into()))?;
                        if d.draws == 0 || d.gammas.is_empty() || d.gammas.iter().any(|g| !(*g > 0.0)) {
                            return invalid("dominance needs draws >= 1 and positive gammas");
                        }
                        if let AltConfig::FixedModel { theta } = &d.alt {
                            check_theta(theta)?;
                        }
                    }
                    ExperimentKind::DeepLinear => unreachable!(),
                }
                Ok(())
            }
        }
    }

    fn check_settings(&self, family: &ModelFamily, settings: &[SettingName]) -> Result<(), ConfigError> {
        for s in settings {
            match s {
                SettingName::Supervised if !family.is_supervised() => {
                    return invalid("supervised setting needs a supervised family")
                }
                SettingName::Online | SettingName::Batch if !family.is_sequence() => {
                    return invalid("online and batch settings need a sequence family")
                }
                _ => {}
            }
        }
        if let Some(s) = &self.supervised {
            let s = s.build()?;
            let f = family.feature_dim().unwrap_or(0);
            if s.features.iter().any(|x| x.len() != f) {
                return invalid("supervised.features do not match the family's feature dimension");
            }
        }
        Ok(())
    }

    pub fn sgld_config(&self, s: &SgldSection) -> mixlab_core::sgld::SgldConfig {
        mixlab_core::sgld::SgldConfig {
            step_size: s.step_size,
            steps: s.steps,
            burn_in: s.burn_in,
            thinning: s.thinning,
            minibatch: s.minibatch,
            boundary: s.boundary,
            noise: s.noise,
            init: None,
        }
    }
}
