//! Game configuration and its validation.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::features::{
    generate_boundary, make_compatible_update, make_incompatible_update, ErrorBoundary, FeatureSpace,
};
use crate::money::Money;

/// Payoff of each action, by whether the AI was right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardMatrix {
    pub accept_when_right: Money,
    pub accept_when_wrong: Money,
    pub compute: Money,
}

impl Default for RewardMatrix {
    fn default() -> Self {
        Self {
            accept_when_right: Money::from_dollars(0.04),
            accept_when_wrong: Money::from_dollars(-0.16),
            compute: Money::ZERO,
        }
    }
}

impl RewardMatrix {
    pub fn reward(&self, action: Action, ai_correct: bool) -> Money {
        match (action, ai_correct) {
            (Action::Accept, true) => self.accept_when_right,
            (Action::Accept, false) => self.accept_when_wrong,
            (Action::Compute, _) => self.compute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Accept,
    Compute,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Accept => "accept",
            Action::Compute => "compute",
        })
    }
}

impl FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accept" => Ok(Action::Accept),
            "compute" => Ok(Action::Compute),
            other => Err(Error::Unknown {
                what: "action",
                value: other.to_string(),
            }),
        }
    }
}

/// How the error boundary changes at the update cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    /// Same boundary, higher accuracy.
    Same,
    /// Boundary strengthened by one literal: no new errors.
    #[default]
    Compatible,
    /// Fresh 3-literal boundary with new errors.
    Incompatible,
    /// No update: the pre-update boundary and accuracy continue.
    #[serde(alias = "none")]
    NoUpdate,
}

impl UpdateKind {
    pub const ALL: [UpdateKind; 4] = [
        UpdateKind::Same,
        UpdateKind::Compatible,
        UpdateKind::Incompatible,
        UpdateKind::NoUpdate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UpdateKind::Same => "same",
            UpdateKind::Compatible => "compatible",
            UpdateKind::Incompatible => "incompatible",
            UpdateKind::NoUpdate => "no-update",
        }
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same" => Ok(UpdateKind::Same),
            "compatible" => Ok(UpdateKind::Compatible),
            "incompatible" => Ok(UpdateKind::Incompatible),
            "no-update" | "none" => Ok(UpdateKind::NoUpdate),
            other => Err(Error::Unknown {
                what: "update kind",
                value: other.to_string(),
            }),
        }
    }
}

/// Parameters of the count-based [`Learner`](crate::players::PlayerKind::Learner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Accept when the estimated AI accuracy for a pattern reaches this.
    pub threshold: f64,
    /// Pseudo-counts added before any evidence; optimistic by default.
    pub prior_successes: f64,
    pub prior_failures: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            threshold: 0.75,
            prior_successes: 1.0,
            prior_failures: 0.0,
        }
    }
}

/// A full session description. Every field has a default, so `{}` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub total_cycles: usize,
    /// Last cycle served by the pre-update model.
    pub update_cycle: usize,
    pub pre_update_accuracy: f64,
    pub post_update_accuracy: f64,
    pub feature_space: FeatureSpace,
    /// Literals in a generated pre-update boundary.
    pub literal_count: usize,
    /// Applied to generated boundaries.
    pub error_probability: f64,
    /// Overrides the generated pre-update boundary.
    pub pre_boundary: Option<ErrorBoundary>,
    /// Overrides the post-update boundary derived from `update_kind`
    /// (ignored for [`UpdateKind::NoUpdate`]).
    pub post_boundary: Option<ErrorBoundary>,
    pub update_kind: UpdateKind,
    pub rewards: RewardMatrix,
    pub learner: LearnerParams,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            total_cycles: 150,
            update_cycle: 75,
            pre_update_accuracy: 0.80,
            post_update_accuracy: 0.85,
            feature_space: FeatureSpace::default(),
            literal_count: 2,
            error_probability: 1.0,
            pre_boundary: None,
            post_boundary: None,
            update_kind: UpdateKind::default(),
            rewards: RewardMatrix::default(),
            learner: LearnerParams::default(),
            seed: 0,
        }
    }
}

/// Independent random streams derived from the session seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SeedStream {
    PreBoundary = 1,
    Update = 2,
    PreObjects = 3,
    PostObjects = 4,
    Labels = 5,
}

pub(crate) fn sub_seed(seed: u64, stream: SeedStream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.next_u64()
}

fn in_unit(x: f64, lower_open: bool) -> bool {
    (if lower_open { x > 0.0 } else { x >= 0.0 }) && x <= 1.0
}

impl GameConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_update(mut self, kind: UpdateKind) -> Self {
        self.update_kind = kind;
        self
    }

    pub fn pre_phase_length(&self) -> usize {
        self.update_cycle
    }

    pub fn post_phase_length(&self) -> usize {
        self.total_cycles - self.update_cycle
    }

    /// Accuracy served after the update cycle.
    pub fn effective_post_accuracy(&self) -> f64 {
        match self.update_kind {
            UpdateKind::NoUpdate => self.pre_update_accuracy,
            _ => self.post_update_accuracy,
        }
    }

    /// Every field-level problem, empty when the config is usable.
    pub fn field_errors(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.total_cycles == 0 {
            errors.push(FieldError::new("total_cycles", "must be at least 1"));
        }
        if self.update_cycle == 0 || self.update_cycle > self.total_cycles {
            errors.push(FieldError::new(
                "update_cycle",
                format!("must lie in 1..={} (total_cycles)", self.total_cycles),
            ));
        }
        for (field, acc) in [
            ("pre_update_accuracy", self.pre_update_accuracy),
            ("post_update_accuracy", self.post_update_accuracy),
        ] {
            if !in_unit(acc, true) {
                errors.push(FieldError::new(field, "must lie in (0, 1]"));
            }
        }
        self.feature_space.check("feature_space", &mut errors);
        let attributes = self.feature_space.len();
        if self.literal_count == 0 || self.literal_count > attributes {
            errors.push(FieldError::new(
                "literal_count",
                format!("must lie in 1..={attributes} (visible attributes)"),
            ));
        }
        if !in_unit(self.error_probability, true) {
            errors.push(FieldError::new("error_probability", "must lie in (0, 1]"));
        }
        if let Some(b) = &self.pre_boundary {
            b.check("pre_boundary", &self.feature_space, &mut errors);
        }
        if let Some(b) = &self.post_boundary {
            b.check("post_boundary", &self.feature_space, &mut errors);
        }
        if self.post_boundary.is_none() {
            let pre_literals = self.pre_boundary.as_ref().map_or(self.literal_count, |b| b.literals.len());
            match self.update_kind {
                UpdateKind::Compatible if pre_literals >= attributes => errors.push(FieldError::new(
                    "update_kind",
                    "compatible update needs an attribute the pre-update boundary leaves unused",
                )),
                UpdateKind::Incompatible if attributes < 3 => errors.push(FieldError::new(
                    "update_kind",
                    "incompatible update needs at least 3 visible attributes",
                )),
                _ => {}
            }
        }
        let r = &self.rewards;
        if !(r.accept_when_wrong.is_negative() && r.accept_when_right.is_positive()) {
            errors.push(FieldError::new(
                "rewards",
                "requires accept_when_wrong < 0 < accept_when_right",
            ));
        }
        let l = &self.learner;
        if !in_unit(l.threshold, false) {
            errors.push(FieldError::new("learner.threshold", "must lie in [0, 1]"));
        }
        if !(l.prior_successes >= 0.0 && l.prior_failures >= 0.0 && l.prior_successes + l.prior_failures > 0.0) {
            errors.push(FieldError::new(
                "learner",
                "priors must be non-negative with a positive total",
            ));
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let errors = self.field_errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    /// Pre- and post-update boundaries for this session.
    pub fn boundaries(&self) -> Result<(ErrorBoundary, ErrorBoundary)> {
        self.validate()?;
        let pre = match &self.pre_boundary {
            Some(b) => b.clone(),
            None => {
                let mut b = generate_boundary(
                    &self.feature_space,
                    self.literal_count,
                    sub_seed(self.seed, SeedStream::PreBoundary),
                )?;
                b.error_probability = self.error_probability;
                b
            }
        };
        let post = match (&self.post_boundary, self.update_kind) {
            (_, UpdateKind::NoUpdate) => pre.clone(),
            (Some(b), _) => b.clone(),
            (None, UpdateKind::Same) => pre.clone(),
            (None, UpdateKind::Compatible) => {
                make_compatible_update(&pre, &self.feature_space, sub_seed(self.seed, SeedStream::Update))?
            }
            (None, UpdateKind::Incompatible) => {
                make_incompatible_update(&pre, &self.feature_space, sub_seed(self.seed, SeedStream::Update))?
            }
        };
        Ok((pre, post))
    }
}
