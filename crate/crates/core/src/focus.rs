//! Focus estimation: elects the object the agent is attending to (the target)
//! and the runner-up that gives the activity its context (the destination).
//!
//! Every object gets an attention score from its encoded distance and
//! trajectory relations, damped by how far it lies from the agent's heading.
//! Scores are normalized into a distribution, and the winners are smoothed by
//! a sliding-window majority vote.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsr::{OoiRelation, QdcValue, QsrFrame, QtcValue};
use crate::world::{heading_angle_to, OoiId, WorldState};

#[derive(Debug, Error, PartialEq)]
pub enum FocusError {
    #[error("focus weights must be non-negative and sum to 1 (got {0} + {1})")]
    BadWeights(f64, f64),
    #[error("window size must be at least 1")]
    BadWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct FocusWeights {
    qdc: f64,
    qtc: f64,
}

impl FocusWeights {
    pub fn new(qdc: f64, qtc: f64) -> Result<Self, FocusError> {
        if qdc < 0.0 || qtc < 0.0 || ((qdc + qtc) - 1.0).abs() > 1e-9 {
            return Err(FocusError::BadWeights(qdc, qtc));
        }
        Ok(Self { qdc, qtc })
    }

    pub fn qdc(&self) -> f64 {
        self.qdc
    }

    pub fn qtc(&self) -> f64 {
        self.qtc
    }
}

impl Default for FocusWeights {
    fn default() -> Self {
        Self { qdc: 0.5, qtc: 0.5 }
    }
}

impl TryFrom<(f64, f64)> for FocusWeights {
    type Error = FocusError;
    fn try_from((a, b): (f64, f64)) -> Result<Self, Self::Error> {
        Self::new(a, b)
    }
}

impl From<FocusWeights> for (f64, f64) {
    fn from(w: FocusWeights) -> Self {
        (w.qdc, w.qtc)
    }
}

/// Unit the heading penalty `1 / (1 + angle)` is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocusConfig {
    pub weights: FocusWeights,
    /// Election threshold on the normalized probability.
    pub tau: f64,
    pub window: usize,
    pub angle_unit: AngleUnit,
    /// Probabilities closer than this are treated as tied.
    pub tie_tolerance: f64,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self {
            weights: FocusWeights::default(),
            tau: 0.5,
            window: 4,
            angle_unit: AngleUnit::Radians,
            tie_tolerance: 0.15,
        }
    }
}

pub fn encode_qdc(v: QdcValue) -> f64 {
    match v {
        QdcValue::Touch => 0.5,
        QdcValue::Near => 0.25,
        QdcValue::Medium => 0.125,
        QdcValue::Far | QdcValue::Ignore => 0.0,
    }
}

pub fn encode_qtc(v: QtcValue) -> f64 {
    match v {
        QtcValue::Zero => 0.5,
        QtcValue::Minus => 0.25,
        QtcValue::Plus => 0.0,
    }
}

/// Raw attention score of one object. Objects in the ignore range score 0
/// regardless of their trajectory relation.
pub fn score(relation: &OoiRelation, theta: f64, weights: &FocusWeights) -> f64 {
    if relation.qdc == QdcValue::Ignore {
        return 0.0;
    }
    let numerator = weights.qdc * encode_qdc(relation.qdc) + weights.qtc * encode_qtc(relation.qtc);
    numerator / (1.0 + theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusDistribution {
    pub timestep: u64,
    pub probabilities: Vec<(OoiId, f64)>,
}

impl FocusDistribution {
    pub fn get(&self, id: &OoiId) -> Option<f64> {
        self.probabilities
            .iter()
            .find(|(o, _)| o == id)
            .map(|(_, p)| *p)
    }

    pub fn is_zero(&self) -> bool {
        self.probabilities.iter().all(|(_, p)| *p == 0.0)
    }
}

pub fn normalize(timestep: u64, raw: &[(OoiId, f64)]) -> FocusDistribution {
    let total: f64 = raw.iter().map(|(_, s)| *s).sum();
    let probabilities = raw
        .iter()
        .map(|(id, s)| (id.clone(), if total > 0.0 { s / total } else { 0.0 }))
        .collect();
    FocusDistribution {
        timestep,
        probabilities,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FocusState {
    pub target_window: VecDeque<Option<OoiId>>,
    pub destination_window: VecDeque<Option<OoiId>>,
    pub current_target: Option<OoiId>,
    pub current_destination: Option<OoiId>,
    /// Most recent elected target, kept after it decays so a later tie can
    /// restore it.
    #[serde(default)]
    pub last_target: Option<OoiId>,
}

fn push_bounded(window: &mut VecDeque<Option<OoiId>>, item: Option<OoiId>, size: usize) {
    window.push_back(item);
    while window.len() > size {
        window.pop_front();
    }
}

fn majority(
    window: &VecDeque<Option<OoiId>>,
    needed: usize,
    exclude: Option<&OoiId>,
) -> Option<OoiId> {
    let mut best: Option<(&OoiId, usize)> = None;
    for id in window.iter().flatten() {
        if Some(id) == exclude {
            continue;
        }
        let n = window.iter().filter(|x| x.as_ref() == Some(id)).count();
        if n >= needed && best.is_none_or(|(_, m)| n > m) {
            best = Some((id, n));
        }
    }
    best.map(|(id, _)| id.clone())
}

/// Advances the focus state with one distribution.
pub fn update(dist: &FocusDistribution, state: &FocusState, config: &FocusConfig) -> FocusState {
    let mut next = state.clone();
    let standing = state.current_target.as_ref().or(state.last_target.as_ref());
    let rank_of = |id: &OoiId| -> u8 {
        if standing == Some(id) {
            0
        } else if state.current_destination.as_ref() == Some(id) {
            1
        } else {
            2
        }
    };
    let mut ranked: Vec<(usize, &OoiId, f64)> = dist
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, (id, p))| (i, id, *p))
        .collect();
    ranked.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(rank_of(a.1).cmp(&rank_of(b.1)))
            .then(a.0.cmp(&b.0))
    });

    let (target_push, destination_push) = match ranked.first() {
        None => (None, None),
        Some(&(_, _, top)) if top <= 0.0 => (None, None),
        Some(&(_, top_id, top)) => {
            let tied: Vec<&OoiId> = ranked
                .iter()
                .take_while(|(_, _, p)| (top - p).abs() <= config.tie_tolerance)
                .map(|(_, id, _)| *id)
                .collect();
            if tied.len() > 1 {
                match standing {
                    Some(t) if tied.contains(&t) => {
                        let other = tied.iter().find(|id| **id != t).map(|id| (*id).clone());
                        (Some(t.clone()), other)
                    }
                    _ => (None, None),
                }
            } else {
                let target = (top > config.tau).then(|| top_id.clone());
                let destination = ranked
                    .get(1)
                    .filter(|(_, _, p)| *p > 0.0)
                    .map(|(_, id, _)| (*id).clone());
                (target, destination)
            }
        }
    };

    push_bounded(&mut next.target_window, target_push, config.window);
    push_bounded(
        &mut next.destination_window,
        destination_push,
        config.window,
    );

    let needed = config.window / 2 + 1;
    next.current_target = majority(&next.target_window, needed, None).or_else(|| {
        state
            .current_target
            .clone()
            .filter(|t| next.target_window.contains(&Some(t.clone())))
    });
    let target = next.current_target.clone();
    if target.is_some() {
        next.last_target = target.clone();
    }
    next.current_destination =
        majority(&next.destination_window, needed, target.as_ref()).or_else(|| {
            state.current_destination.clone().filter(|d| {
                Some(d) != target.as_ref() && next.destination_window.contains(&Some(d.clone()))
            })
        });
    next
}

/// Scores frames against the geometry they were computed from and keeps the
/// windowed focus state.
#[derive(Debug, Clone, Default)]
pub struct FocusEstimator {
    config: FocusConfig,
    state: FocusState,
}

impl FocusEstimator {
    pub fn new(config: FocusConfig) -> Result<Self, FocusError> {
        if config.window == 0 {
            return Err(FocusError::BadWindow);
        }
        Ok(Self {
            config,
            state: FocusState::default(),
        })
    }

    pub fn config(&self) -> &FocusConfig {
        &self.config
    }

    pub fn state(&self) -> &FocusState {
        &self.state
    }

    /// Normalized attention distribution for one frame.
    pub fn distribution(&self, frame: &QsrFrame, world: &WorldState) -> FocusDistribution {
        let raw: Vec<(OoiId, f64)> = frame
            .relations
            .iter()
            .map(|rel| {
                let theta = world
                    .ooi(&rel.id)
                    .map_or(0.0, |o| heading_angle_to(&world.agent, &o.position));
                let theta = match self.config.angle_unit {
                    AngleUnit::Radians => theta,
                    AngleUnit::Degrees => theta.to_degrees(),
                };
                (rel.id.clone(), score(rel, theta, &self.config.weights))
            })
            .collect();
        normalize(frame.timestep, &raw)
    }

    pub fn observe(&mut self, frame: &QsrFrame, world: &WorldState) -> FocusDistribution {
        let dist = self.distribution(frame, world);
        self.state = update(&dist, &self.state, &self.config);
        dist
    }
}
