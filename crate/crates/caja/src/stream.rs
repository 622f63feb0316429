//! Object streams with exactly realized AI accuracy.
//!
//! Each phase holds exactly `round(length × (1 − accuracy))` objects inside
//! that phase's error boundary, at shuffled positions. Objects outside the
//! boundary never err.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{sub_seed, GameConfig, SeedStream};
use crate::error::{Error, Result};
use crate::features::{ErrorBoundary, FeatureSpace, VisibleFeatures};

/// One object on the line. Only [`ObjectView`] is ever shown to a player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameObject {
    /// Cycle number, starting at 1.
    pub t: usize,
    pub visible_features: VisibleFeatures,
    /// Hidden ground truth: 1 when the object is defective.
    pub label: u8,
    pub in_boundary: bool,
    pub ai_errs: bool,
}

impl GameObject {
    /// The AI's call: the true label unless it errs here.
    pub fn recommendation(&self) -> u8 {
        if self.ai_errs {
            1 - self.label
        } else {
            self.label
        }
    }

    pub fn view(&self) -> ObjectView {
        ObjectView {
            t: self.t,
            visible_features: self.visible_features.clone(),
            recommendation: self.recommendation(),
        }
    }
}

/// What the player sees at S1 and S2: the object and the recommendation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectView {
    pub t: usize,
    pub visible_features: VisibleFeatures,
    /// 1 means "defective".
    pub recommendation: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectStream {
    pub objects: Vec<GameObject>,
    pub pre_boundary: ErrorBoundary,
    pub post_boundary: ErrorBoundary,
}

impl ObjectStream {
    /// In-boundary objects among cycles `range` (1-based, inclusive start).
    pub fn in_boundary_count(&self, first: usize, last: usize) -> usize {
        self.objects[first - 1..last].iter().filter(|o| o.in_boundary).count()
    }

    pub fn error_count(&self, first: usize, last: usize) -> usize {
        self.objects[first - 1..last].iter().filter(|o| o.ai_errs).count()
    }
}

/// Errors in a phase: half-away-from-zero rounding, so 75 × 0.15 = 11.25 gives 11.
pub fn phase_error_count(length: usize, accuracy: f64) -> usize {
    let raw = length as f64 * (1.0 - accuracy);
    // 75 × (1 − 0.8) is 15.000000000000004 in binary; drop that noise first.
    let cleaned = (raw * 1e9).round() / 1e9;
    cleaned.round() as usize
}

struct Phase<'a> {
    name: &'static str,
    first_cycle: usize,
    length: usize,
    accuracy: f64,
    boundary: &'a ErrorBoundary,
    seed: u64,
}

fn build_phase(space: &FeatureSpace, phase: &Phase<'_>, out: &mut Vec<GameObject>) -> Result<()> {
    if phase.length == 0 {
        return Ok(());
    }
    let errors = phase_error_count(phase.length, phase.accuracy);
    if errors == 0 && phase.accuracy < 1.0 {
        return Err(Error::PhaseTooShort {
            phase: phase.name,
            length: phase.length,
            accuracy: phase.accuracy,
        });
    }
    let (inside, outside): (Vec<VisibleFeatures>, Vec<VisibleFeatures>) =
        space.enumerate().into_iter().partition(|o| phase.boundary.contains(o));
    let clean = phase.length - errors;
    if clean > 0 && outside.is_empty() {
        return Err(Error::BoundaryCoversEverything {
            phase: phase.name,
            needed: clean,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(phase.seed);
    let mut slots: Vec<bool> = (0..phase.length).map(|i| i < errors).collect();
    slots.shuffle(&mut rng);
    for (i, in_boundary) in slots.into_iter().enumerate() {
        let pool = if in_boundary { &inside } else { &outside };
        let visible_features = pool.choose(&mut rng).expect("pool checked non-empty").clone();
        let p = phase.boundary.error_probability;
        let ai_errs = in_boundary && (p >= 1.0 || rng.random::<f64>() < p);
        out.push(GameObject {
            t: phase.first_cycle + i,
            visible_features,
            label: 0,
            in_boundary,
            ai_errs,
        });
    }
    Ok(())
}

pub fn generate_stream(config: &GameConfig) -> Result<ObjectStream> {
    let (pre_boundary, post_boundary) = config.boundaries()?;
    let mut objects = Vec::with_capacity(config.total_cycles);
    build_phase(
        &config.feature_space,
        &Phase {
            name: "pre-update",
            first_cycle: 1,
            length: config.pre_phase_length(),
            accuracy: config.pre_update_accuracy,
            boundary: &pre_boundary,
            seed: sub_seed(config.seed, SeedStream::PreObjects),
        },
        &mut objects,
    )?;
    build_phase(
        &config.feature_space,
        &Phase {
            name: "post-update",
            first_cycle: config.update_cycle + 1,
            length: config.post_phase_length(),
            accuracy: config.effective_post_accuracy(),
            boundary: &post_boundary,
            seed: sub_seed(config.seed, SeedStream::PostObjects),
        },
        &mut objects,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, SeedStream::Labels));
    for o in &mut objects {
        o.label = u8::from(rng.random::<bool>());
    }
    Ok(ObjectStream {
        objects,
        pre_boundary,
        post_boundary,
    })
}
