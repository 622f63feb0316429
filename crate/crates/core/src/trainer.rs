//! Full-batch gradient descent under the combined loss, the compatibility
//! score, and the update-experiment and lambda-sweep protocols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_indices, Portion, SplitSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::losses::{combined_loss, combined_loss_logit_gradient, DissonanceKind, LossContext, Reference};
use crate::metrics::auc_roc;
use crate::model::{init_classifier, Classifier, ClassifierKind, Model, DEFAULT_HIDDEN_SIZE};
use crate::scalar::{clip_probability, sigmoid, Scalar};

/// Grid used when a sweep is run without an explicit one.
pub const DEFAULT_LAMBDA_GRID: [f64; 11] = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 20.0, 50.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub classifier: ClassifierKind,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda_c: f64,
    pub dissonance: DissonanceKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::Linear,
            hidden_size: DEFAULT_HIDDEN_SIZE,
            learning_rate: 0.1,
            epochs: 500,
            lambda_c: 0.0,
            dissonance: DissonanceKind::None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Same optimization settings with the plain log loss.
    pub fn plain(&self) -> Self {
        Self {
            lambda_c: 0.0,
            dissonance: DissonanceKind::None,
            ..self.clone()
        }
    }

    pub fn with_lambda(&self, lambda_c: f64) -> Self {
        Self {
            lambda_c,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.lambda_c >= 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda_c must be non-negative, got {}",
                self.lambda_c
            )));
        }
        if self.classifier == ClassifierKind::Network && self.hidden_size == 0 {
            return Err(Error::InvalidConfig("hidden_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Freeze `h1`'s probability and correctness on every example of `data`.
pub fn references<T: Scalar, M: Model<T> + ?Sized>(h1: &M, data: &Dataset<T>) -> Result<Vec<Reference<T>>> {
    data.examples()
        .iter()
        .map(|e| {
            let p = h1.predict(&e.features)?;
            Ok(Reference {
                probability: p.probability,
                correct: p.recommendation == e.label,
            })
        })
        .collect()
}

/// Mean combined loss over a dataset, with one frozen context per example.
pub struct Objective<'a, T> {
    data: &'a Dataset<T>,
    contexts: Vec<LossContext<T>>,
}

impl<'a, T: Scalar> Objective<'a, T> {
    pub fn new(
        data: &'a Dataset<T>,
        kind: DissonanceKind,
        lambda_c: T,
        references: Option<&[Reference<T>]>,
    ) -> Result<Self> {
        data.ensure_non_empty()?;
        let contexts = match (kind, references) {
            (DissonanceKind::None, _) => vec![LossContext::plain(); data.len()],
            (_, Some(refs)) if refs.len() == data.len() => refs
                .iter()
                .map(|r| LossContext::new(kind, lambda_c, Some(*r)))
                .collect(),
            _ => return Err(Error::MissingReference { kind: kind.name() }),
        };
        Ok(Self { data, contexts })
    }

    fn probability<M: Model<T> + ?Sized>(model: &M, x: &[T]) -> T {
        clip_probability(sigmoid(model.logit_unchecked(x)))
    }

    fn check<M: Model<T> + ?Sized>(&self, model: &M) -> Result<()> {
        if model.dim() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: self.data.dim(),
            });
        }
        Ok(())
    }

    pub fn loss<M: Model<T> + ?Sized>(&self, model: &M) -> Result<T> {
        self.check(model)?;
        let mut total = T::zero();
        for (ex, ctx) in self.data.examples().iter().zip(&self.contexts) {
            total += combined_loss(ctx, ex.label, Self::probability(model, &ex.features))?;
        }
        Ok(total / T::lit(self.data.len() as f64))
    }

    /// Gradient of [`Objective::loss`] with respect to the flat parameters.
    pub fn gradient<M: Model<T> + ?Sized>(&self, model: &M) -> Result<Vec<T>> {
        self.check(model)?;
        let n = T::lit(self.data.len() as f64);
        let mut grad = vec![T::zero(); model.num_parameters()];
        for (ex, ctx) in self.data.examples().iter().zip(&self.contexts) {
            let p = Self::probability(model, &ex.features);
            let dz = combined_loss_logit_gradient(ctx, ex.label, p)?;
            model.accumulate_logit_gradient(&ex.features, dz / n, &mut grad);
        }
        Ok(grad)
    }
}

/// Train a fresh classifier; `h1` is required whenever a dissonance is requested.
pub fn train<T: Scalar>(data: &Dataset<T>, config: &TrainConfig, h1: Option<&Classifier<T>>) -> Result<Classifier<T>> {
    train_inner(data, config, h1, None)
}

/// [`train`] with a callback receiving `(epoch, loss before the step)`.
pub fn train_traced<T: Scalar>(
    data: &Dataset<T>,
    config: &TrainConfig,
    h1: Option<&Classifier<T>>,
    mut observe: impl FnMut(usize, T),
) -> Result<Classifier<T>> {
    train_inner(data, config, h1, Some(&mut observe))
}

fn train_inner<T: Scalar>(
    data: &Dataset<T>,
    config: &TrainConfig,
    h1: Option<&Classifier<T>>,
    mut observe: Option<&mut dyn FnMut(usize, T)>,
) -> Result<Classifier<T>> {
    config.validate()?;
    data.ensure_non_empty()?;
    let refs = match (config.dissonance, h1) {
        (DissonanceKind::None, _) => None,
        (_, Some(h1)) => Some(references(h1, data)?),
        (kind, None) => return Err(Error::MissingReference { kind: kind.name() }),
    };
    let objective = Objective::new(data, config.dissonance, T::lit(config.lambda_c), refs.as_deref())?;
    let mut model = init_classifier::<T>(config.classifier, data.dim(), config.hidden_size, config.seed)?;
    let lr = T::lit(config.learning_rate);
    for epoch in 0..config.epochs {
        if let Some(f) = observe.as_mut() {
            f(epoch, objective.loss(&model)?);
        }
        let grad = objective.gradient(&model)?;
        model.descend(&grad, lr);
    }
    Ok(model)
}

/// Fraction of the examples `h1` gets right that `h2` also gets right.
pub fn compatibility_score<T: Scalar, A, B>(h1: &A, h2: &B, data: &Dataset<T>) -> Result<f64>
where
    A: Model<T> + ?Sized,
    B: Model<T> + ?Sized,
{
    let mut h1_correct = 0usize;
    let mut both_correct = 0usize;
    for ex in data.examples() {
        if h1.recommend(&ex.features)? == ex.label {
            h1_correct += 1;
            if h2.recommend(&ex.features)? == ex.label {
                both_correct += 1;
            }
        }
    }
    if h1_correct == 0 {
        return Err(Error::CompatibilityUndefined);
    }
    Ok(both_correct as f64 / h1_correct as f64)
}

/// An update: the model users know and its replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdatePair<T> {
    pub h1: Classifier<T>,
    pub h2: Classifier<T>,
}

impl<T: Scalar> UpdatePair<T> {
    pub fn new(h1: Classifier<T>, h2: Classifier<T>) -> Result<Self> {
        if h1.dim() != h2.dim() {
            return Err(Error::DimensionMismatch {
                expected: h1.dim(),
                actual: h2.dim(),
            });
        }
        Ok(Self { h1, h2 })
    }

    pub fn evaluate(&self, data: &Dataset<T>) -> Result<UpdateReport> {
        Ok(UpdateReport {
            auc_h1: auc_roc(&self.h1, data)?,
            auc_h2: auc_roc(&self.h2, data)?,
            compatibility: compatibility_score(&self.h1, &self.h2, data)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub auc_h1: f64,
    pub auc_h2: f64,
    pub compatibility: f64,
}

/// How `h2`'s training sample relates to `h1`'s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H2Draw {
    /// A fresh sample disjoint from `h1`'s.
    Fresh,
    /// `h1`'s sample plus `n2 - n1` further examples.
    Superset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateExperiment {
    pub n1: usize,
    pub n2: usize,
    pub runs: usize,
    pub test_fraction: f64,
    pub h2_draw: H2Draw,
    /// Probability of flipping each label of `h1`'s training sample, to build a
    /// deliberately weak and poorly calibrated `h1`.
    #[serde(default)]
    pub h1_label_noise: f64,
}

impl Default for UpdateExperiment {
    fn default() -> Self {
        Self {
            n1: 200,
            n2: 5000,
            runs: 500,
            test_fraction: 0.25,
            h2_draw: H2Draw::Fresh,
            h1_label_noise: 0.0,
        }
    }
}

impl UpdateExperiment {
    fn validate(&self, available: usize) -> Result<()> {
        if self.runs == 0 || self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidConfig("runs, n1 and n2 must be positive".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if !(0.0..0.5).contains(&self.h1_label_noise) {
            return Err(Error::InvalidConfig(format!(
                "h1_label_noise {} outside [0, 0.5)",
                self.h1_label_noise
            )));
        }
        if self.h2_draw == H2Draw::Superset && self.n2 < self.n1 {
            return Err(Error::InvalidConfig(format!(
                "superset draw needs n2 >= n1, got n1 = {}, n2 = {}",
                self.n1, self.n2
            )));
        }
        let test = (self.test_fraction * available as f64).round() as usize;
        let train = match self.h2_draw {
            H2Draw::Fresh => self.n1 + self.n2,
            H2Draw::Superset => self.n2,
        };
        if test + train > available || test == 0 {
            let required = ((train as f64) / (1.0 - self.test_fraction)).ceil() as usize;
            return Err(Error::DatasetTooSmall {
                required: required.max(train + 1),
                available,
                detail: format!(
                    "n1 = {}, n2 = {}, plus a {:.0}% held-out test split",
                    self.n1,
                    self.n2,
                    self.test_fraction * 100.0
                ),
            });
        }
        Ok(())
    }
}

/// Seed for run `run` of an experiment seeded with `base` (splitmix64 finalizer).
pub fn run_seed(base: u64, run: usize) -> u64 {
    let mut z = base ^ (run as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub report: UpdateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub mean_auc_h1: f64,
    pub mean_auc_h2: f64,
    pub mean_compatibility: f64,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentSummary {
    fn from_runs(runs: Vec<RunOutcome>) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&UpdateReport) -> f64| runs.iter().map(|r| f(&r.report)).sum::<f64>() / n;
        Self {
            mean_auc_h1: mean(|r| r.auc_h1),
            mean_auc_h2: mean(|r| r.auc_h2),
            mean_compatibility: mean(|r| r.compatibility),
            runs,
        }
    }
}

/// One run: split, train `h1` on the plain loss, train `h2` under `config`,
/// and score both on the held-out split.
///
/// Both models are initialized from the run's seed.
pub fn run_single<T: Scalar>(
    data: &Dataset<T>,
    experiment: &UpdateExperiment,
    config: &TrainConfig,
    run: usize,
) -> Result<RunOutcome> {
    experiment.validate(data.len())?;
    let seed = run_seed(config.seed, run);
    let portions = match experiment.h2_draw {
        H2Draw::Fresh => vec![
            Portion::Fraction(experiment.test_fraction),
            Portion::Count(experiment.n1),
            Portion::Count(experiment.n2),
            Portion::Rest,
        ],
        H2Draw::Superset => vec![
            Portion::Fraction(experiment.test_fraction),
            Portion::Count(experiment.n1),
            Portion::Count(experiment.n2 - experiment.n1),
            Portion::Rest,
        ],
    };
    let parts = split_indices(data.len(), &SplitSpec::new(portions, seed))?;
    let test = data.subset(&parts[0]);
    let mut h1_data = data.subset(&parts[1]);
    if experiment.h1_label_noise > 0.0 {
        h1_data = flip_labels(&h1_data, experiment.h1_label_noise, seed);
    }
    let h2_data = match experiment.h2_draw {
        H2Draw::Fresh => data.subset(&parts[2]),
        H2Draw::Superset => data.subset(&[parts[1].as_slice(), parts[2].as_slice()].concat()),
    };

    let h1_config = TrainConfig {
        seed,
        ..config.plain()
    };
    let h1 = train(&h1_data, &h1_config, None)?;
    let h2_config = TrainConfig {
        seed,
        ..config.clone()
    };
    let h2 = train(&h2_data, &h2_config, Some(&h1))?;
    Ok(RunOutcome {
        seed,
        report: UpdatePair::new(h1, h2)?.evaluate(&test)?,
    })
}

fn flip_labels<T: Scalar>(data: &Dataset<T>, rate: f64, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F11B);
    let examples = data
        .examples()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if rng.random::<f64>() < rate {
                e.label = 1 - e.label;
            }
            e
        })
        .collect();
    Dataset::new(data.feature_names().to_vec(), examples).expect("labels stay binary")
}

/// Repeat [`run_single`] `experiment.runs` times and average.
pub fn run_update_experiment<T: Scalar>(
    data: &Dataset<T>,
    experiment: &UpdateExperiment,
    config: &TrainConfig,
) -> Result<ExperimentSummary> {
    config.validate()?;
    experiment.validate(data.len())?;
    let runs = (0..experiment.runs)
        .into_par_iter()
        .map(|r| run_single(data, experiment, config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary::from_runs(runs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub lambda_c: f64,
    pub auc_h2: f64,
    pub compatibility: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepMetadata {
    pub dataset: String,
    pub dissonance_kind: Option<DissonanceKind>,
    pub config: Option<TrainConfig>,
}

/// Per-run points of a lambda sweep, sorted by `(lambda_c, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

/// Mean over runs at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda_c: f64,
    pub mean_auc_h2: f64,
    pub mean_compatibility: f64,
    pub runs: usize,
}

impl SweepResult {
    pub fn new(mut points: Vec<SweepPoint>, metadata: SweepMetadata) -> Self {
        points.sort_by(|a, b| a.lambda_c.total_cmp(&b.lambda_c).then(a.seed.cmp(&b.seed)));
        Self { points, metadata }
    }

    pub fn curve(&self) -> Vec<CurvePoint> {
        let mut out: Vec<CurvePoint> = Vec::new();
        for p in &self.points {
            match out.last_mut() {
                Some(c) if c.lambda_c == p.lambda_c => {
                    c.mean_auc_h2 += p.auc_h2;
                    c.mean_compatibility += p.compatibility;
                    c.runs += 1;
                }
                _ => out.push(CurvePoint {
                    lambda_c: p.lambda_c,
                    mean_auc_h2: p.auc_h2,
                    mean_compatibility: p.compatibility,
                    runs: 1,
                }),
            }
        }
        for c in &mut out {
            c.mean_auc_h2 /= c.runs as f64;
            c.mean_compatibility /= c.runs as f64;
        }
        out
    }
}

/// Run the update experiment at every `lambda_c` of `grid`.
///
/// Every grid point reuses the same run seeds, so differences along the curve
/// come from `lambda_c` alone. Work items run in parallel; results are keyed
/// by `(lambda_c, seed)`.
pub fn sweep_lambda<T: Scalar>(
    data: &Dataset<T>,
    grid: &[f64],
    experiment: &UpdateExperiment,
    config: &TrainConfig,
    dataset_id: &str,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("lambda grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("lambda grid must be sorted ascending".into()));
    }
    experiment.validate(data.len())?;
    let jobs: Vec<(f64, usize)> = grid
        .iter()
        .flat_map(|&l| (0..experiment.runs).map(move |r| (l, r)))
        .collect();
    let points = jobs
        .into_par_iter()
        .map(|(lambda_c, run)| {
            let cfg = config.with_lambda(lambda_c);
            cfg.validate()
                .and_then(|_| run_single(data, experiment, &cfg, run))
                .map(|o| SweepPoint {
                    lambda_c,
                    auc_h2: o.report.auc_h2,
                    compatibility: o.report.compatibility,
                    seed: o.seed,
                })
                .map_err(|e| Error::AtLambda {
                    lambda_c,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::new(
        points,
        SweepMetadata {
            dataset: dataset_id.to_string(),
            dissonance_kind: Some(config.dissonance),
            config: Some(config.clone()),
        },
    ))
}
