//! The S1–S4 decision cycle.
//!
//! Each cycle shows an object and the AI's recommendation, takes the
//! player's action, pays out per the reward matrix and reveals whether the AI
//! was right.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{Action, GameConfig};
use crate::error::{Error, Result};
use crate::features::{ErrorBoundary, VisibleFeatures};
use crate::money::Money;
use crate::stream::{generate_stream, GameObject, ObjectStream, ObjectView};

/// One played cycle; serialized as one line of the trace export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamTraceRecord {
    pub t: usize,
    pub visible_features: VisibleFeatures,
    pub recommendation: u8,
    pub action: Action,
    pub ai_correct: bool,
    pub reward: Money,
    pub score_after: Money,
    pub timestamp_ms: u64,
    #[serde(skip)]
    pub true_label: u8,
}

/// Result of one step: the S4 feedback and the next object, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub cycle: usize,
    pub reward: Money,
    pub ai_correct: bool,
    pub score: Money,
    pub next: Option<ObjectView>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub accept: usize,
    pub compute: usize,
}

#[derive(Debug, Clone)]
pub struct GameSession {
    config: GameConfig,
    stream: ObjectStream,
    trace: Vec<TeamTraceRecord>,
    score: Money,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl GameSession {
    pub fn new(config: GameConfig) -> Result<Self> {
        let stream = generate_stream(&config)?;
        Ok(Self {
            trace: Vec::with_capacity(config.total_cycles),
            config,
            stream,
            score: Money::ZERO,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// Cycles already played.
    pub fn cursor(&self) -> usize {
        self.trace.len()
    }

    pub fn total_cycles(&self) -> usize {
        self.config.total_cycles
    }

    pub fn is_finished(&self) -> bool {
        self.cursor() >= self.config.total_cycles
    }

    pub fn score(&self) -> Money {
        self.score
    }

    pub fn trace(&self) -> &[TeamTraceRecord] {
        &self.trace
    }

    /// Engine-side view of the full stream, hidden fields included.
    pub fn stream(&self) -> &ObjectStream {
        &self.stream
    }

    fn current_object(&self) -> Option<&GameObject> {
        self.stream.objects.get(self.cursor())
    }

    /// The object awaiting a decision.
    pub fn current(&self) -> Option<ObjectView> {
        self.current_object().map(GameObject::view)
    }

    /// Boundary the AI serves at cycle `t`.
    pub fn boundary_at(&self, t: usize) -> &ErrorBoundary {
        if t <= self.config.update_cycle {
            &self.stream.pre_boundary
        } else {
            &self.stream.post_boundary
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        self.step_at(action, now_ms())
    }

    /// Step with an explicit timestamp, so replays reproduce traces exactly.
    pub fn step_at(&mut self, action: Action, timestamp_ms: u64) -> Result<StepOutcome> {
        let object = self.current_object().ok_or(Error::SessionFinished {
            total_cycles: self.config.total_cycles,
        })?;
        let ai_correct = !object.ai_errs;
        let reward = self.config.rewards.reward(action, ai_correct);
        let record = TeamTraceRecord {
            t: object.t,
            visible_features: object.visible_features.clone(),
            recommendation: object.recommendation(),
            action,
            ai_correct,
            reward,
            score_after: self.score + reward,
            timestamp_ms,
            true_label: object.label,
        };
        self.score = record.score_after;
        let cycle = record.t;
        self.trace.push(record);
        Ok(StepOutcome {
            cycle,
            reward,
            ai_correct,
            score: self.score,
            next: self.current(),
        })
    }

    /// Score over cycles up to and including the update cycle, and after it.
    pub fn phase_scores(&self) -> (Money, Money) {
        let split = self.config.update_cycle.min(self.trace.len());
        let pre = self.trace[..split].iter().map(|r| r.reward).sum();
        let post = self.trace[split..].iter().map(|r| r.reward).sum();
        (pre, post)
    }

    pub fn action_counts(&self) -> ActionCounts {
        let accept = self.trace.iter().filter(|r| r.action == Action::Accept).count();
        ActionCounts {
            accept,
            compute: self.trace.len() - accept,
        }
    }

    /// The trace as JSON lines, one record per cycle.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}
