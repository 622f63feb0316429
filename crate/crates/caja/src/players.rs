//! Scripted players standing in for human participants.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Action, GameConfig, LearnerParams};
use crate::error::{Error, Result};
use crate::features::VisibleFeatures;
use crate::money::Money;
use crate::session::{GameSession, TeamTraceRecord};
use crate::stream::{generate_stream, ObjectView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlayerKind {
    /// Knows the current boundary: computes inside it, accepts outside.
    Oracle,
    NaiveAccept,
    NaiveCompute,
    /// Learns per-pattern trust from feedback.
    Learner,
}

impl PlayerKind {
    pub const ALL: [PlayerKind; 4] = [
        PlayerKind::Oracle,
        PlayerKind::NaiveAccept,
        PlayerKind::NaiveCompute,
        PlayerKind::Learner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlayerKind::Oracle => "oracle",
            PlayerKind::NaiveAccept => "naive-accept",
            PlayerKind::NaiveCompute => "naive-compute",
            PlayerKind::Learner => "learner",
        }
    }
}

impl fmt::Display for PlayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlayerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PlayerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "player kind",
                value: s.to_string(),
            })
    }
}

/// A decision policy. `session` is available for players allowed to peek
/// at engine state; honest players use only `view` and feedback.
pub trait Player {
    fn decide(&mut self, view: &ObjectView, session: &GameSession) -> Action;

    fn feedback(&mut self, _view: &ObjectView, _action: Action, _ai_correct: bool) {}
}

pub struct Oracle;

impl Player for Oracle {
    fn decide(&mut self, view: &ObjectView, session: &GameSession) -> Action {
        if session.boundary_at(view.t).contains(&view.visible_features) {
            Action::Compute
        } else {
            Action::Accept
        }
    }
}

pub struct Always(pub Action);

impl Player for Always {
    fn decide(&mut self, _: &ObjectView, _: &GameSession) -> Action {
        self.0
    }
}

/// Count-based trust per full visible-feature pattern.
///
/// Estimated accuracy is `(s + prior_s) / (s + f + prior_s + prior_f)` over the
/// successes and failures seen for the pattern; the player accepts once it
/// reaches the threshold. Feedback after either action updates the counts.
pub struct Learner {
    params: LearnerParams,
    counts: HashMap<VisibleFeatures, (u32, u32)>,
}

impl Learner {
    pub fn new(params: LearnerParams) -> Self {
        Self {
            params,
            counts: HashMap::new(),
        }
    }

    pub fn estimated_accuracy(&self, pattern: &VisibleFeatures) -> f64 {
        let (s, f) = self.counts.get(pattern).copied().unwrap_or((0, 0));
        let p = &self.params;
        (f64::from(s) + p.prior_successes) / (f64::from(s + f) + p.prior_successes + p.prior_failures)
    }
}

impl Player for Learner {
    fn decide(&mut self, view: &ObjectView, _: &GameSession) -> Action {
        if self.estimated_accuracy(&view.visible_features) >= self.params.threshold {
            Action::Accept
        } else {
            Action::Compute
        }
    }

    fn feedback(&mut self, view: &ObjectView, _: Action, ai_correct: bool) {
        let entry = self.counts.entry(view.visible_features.clone()).or_default();
        if ai_correct {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
}

pub fn make_player(kind: PlayerKind, config: &GameConfig) -> Box<dyn Player> {
    match kind {
        PlayerKind::Oracle => Box::new(Oracle),
        PlayerKind::NaiveAccept => Box::new(Always(Action::Accept)),
        PlayerKind::NaiveCompute => Box::new(Always(Action::Compute)),
        PlayerKind::Learner => Box::new(Learner::new(config.learner)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayResult {
    pub player: PlayerKind,
    pub seed: u64,
    pub score: Money,
    pub pre_update_score: Money,
    pub post_update_score: Money,
    pub trace: Vec<TeamTraceRecord>,
}

/// Play a session to the end. Timestamps are the cycle numbers so that
/// scripted runs are reproducible.
pub fn play(session: &mut GameSession, player: &mut dyn Player) -> Result<()> {
    while let Some(view) = session.current() {
        let action = player.decide(&view, session);
        let outcome = session.step_at(action, view.t as u64)?;
        player.feedback(&view, action, outcome.ai_correct);
    }
    Ok(())
}

pub fn run_scripted_player(config: &GameConfig, kind: PlayerKind) -> Result<PlayResult> {
    let mut session = GameSession::new(config.clone())?;
    let mut player = make_player(kind, config);
    play(&mut session, player.as_mut())?;
    let (pre, post) = session.phase_scores();
    Ok(PlayResult {
        player: kind,
        seed: config.seed,
        score: session.score(),
        pre_update_score: pre,
        post_update_score: post,
        trace: session.trace().to_vec(),
    })
}

/// Always-accept total on the generated stream.
pub fn naive_policy_value(config: &GameConfig) -> Result<Money> {
    let stream = generate_stream(config)?;
    let r = &config.rewards;
    Ok(stream
        .objects
        .iter()
        .map(|o| if o.ai_errs { r.accept_when_wrong } else { r.accept_when_right })
        .sum())
}

/// Mean per-cycle reward in consecutive windows of `width` cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBin {
    pub first_cycle: usize,
    pub last_cycle: usize,
    pub mean_reward: f64,
}

/// Average reward per cycle and window across several traces of equal length.
pub fn binned_mean_rewards(traces: &[Vec<TeamTraceRecord>], width: usize) -> Vec<RewardBin> {
    assert!(width > 0, "bin width must be positive");
    let cycles = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..cycles)
        .step_by(width)
        .map(|start| {
            let end = (start + width).min(cycles);
            let (sum, n) = traces
                .iter()
                .flat_map(|t| t.get(start..end.min(t.len())).unwrap_or(&[]))
                .fold((Money::ZERO, 0usize), |(s, n), r| (s + r.reward, n + 1));
            RewardBin {
                first_cycle: start + 1,
                last_cycle: end,
                mean_reward: if n == 0 { 0.0 } else { sum.dollars() / n as f64 },
            }
        })
        .collect()
}
