//! Action recognition: an ensemble of Markov-chain state machines, each
//! generating movement sequences for one action, competes to explain the
//! repeat-filtered movement queue. The winner is bound to the current focus
//! and, for generic actions, specialized by where it happens.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::focus::FocusState;
use crate::movement::Movement;
use crate::similarity::similarity;
use crate::world::{OoiId, WorldState};

/// Reserved transition target meaning "the sequence ends here".
pub const END: &str = "end";

#[derive(Debug, Error, PartialEq)]
pub enum ActionError {
    #[error("malformed action document: {0}")]
    Syntax(String),
    #[error("machine `{fsm}`: {reason}")]
    BadMachine { fsm: String, reason: String },
    #[error("ensemble parameter out of range: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsmState {
    pub id: String,
    pub movement: Movement,
    /// Outgoing transitions as (state id or `end`, probability).
    pub next: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovFsm {
    pub name: String,
    pub initial: Vec<String>,
    pub states: Vec<FsmState>,
}

impl MarkovFsm {
    fn state(&self, id: &str) -> Option<&FsmState> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<(), ActionError> {
        let bad = |reason: String| ActionError::BadMachine {
            fsm: self.name.clone(),
            reason,
        };
        let mut ids = BTreeSet::new();
        for s in &self.states {
            if s.id == END || !ids.insert(s.id.as_str()) {
                return Err(bad(format!(
                    "state id `{}` is reserved or duplicated",
                    s.id
                )));
            }
        }
        if self.initial.is_empty() {
            return Err(bad("no initial state".into()));
        }
        for id in &self.initial {
            if !ids.contains(id.as_str()) {
                return Err(bad(format!("unknown initial state `{id}`")));
            }
        }
        for s in &self.states {
            let total: f64 = s.next.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 || s.next.iter().any(|(_, p)| *p < 0.0) {
                return Err(bad(format!(
                    "outgoing probabilities of `{}` sum to {total}",
                    s.id
                )));
            }
            for (to, _) in &s.next {
                if to != END && !ids.contains(to.as_str()) {
                    return Err(bad(format!("`{}` points to unknown state `{to}`", s.id)));
                }
            }
        }
        let mut seen: BTreeSet<&str> = self.initial.iter().map(String::as_str).collect();
        let mut stack: Vec<&str> = seen.iter().copied().collect();
        while let Some(id) = stack.pop() {
            for (to, p) in &self.state(id).expect("validated").next {
                if *p > 0.0 && to != END && seen.insert(to.as_str()) {
                    stack.push(to.as_str());
                }
            }
        }
        if seen.len() != ids.len() {
            return Err(bad(
                "some states are unreachable from the initial states".into()
            ));
        }
        Ok(())
    }

    fn starts_for(&self, first: Movement) -> Vec<&FsmState> {
        self.initial
            .iter()
            .filter_map(|id| self.state(id))
            .filter(|s| s.movement == first)
            .collect()
    }

    pub fn accepts_start(&self, first: Movement) -> bool {
        !self.starts_for(first).is_empty()
    }

    /// Whether some run of the machine emits `seq` (after repeat filtering)
    /// as a prefix.
    pub fn admits_prefix(&self, seq: &[Movement]) -> bool {
        let Some(&first) = seq.first() else {
            return true;
        };
        let mut frontier: Vec<&FsmState> = self.starts_for(first);
        for &m in &seq[1..] {
            let mut next: Vec<&FsmState> = Vec::new();
            for s in &frontier {
                for (to, p) in &s.next {
                    if *p <= 0.0 || to == END {
                        continue;
                    }
                    let t = self.state(to).expect("validated");
                    if t.movement == m && !next.iter().any(|x| x.id == t.id) {
                        next.push(t);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            frontier = next;
        }
        true
    }

    /// One sampled movement sequence started at a state emitting `first`,
    /// repeat filtered and capped at `max_len` symbols.
    pub fn sample(&self, first: Movement, max_len: usize, rng: &mut impl Rng) -> Vec<Movement> {
        let starts = self.starts_for(first);
        if starts.is_empty() || max_len == 0 {
            return Vec::new();
        }
        let mut state = starts[rng.random_range(0..starts.len())];
        let mut out = vec![state.movement];
        while out.len() < max_len {
            let roll: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = &state.next.last().expect("validated").0;
            for (to, p) in &state.next {
                acc += p;
                if roll < acc {
                    chosen = to;
                    break;
                }
            }
            if chosen == END {
                break;
            }
            state = self.state(chosen).expect("validated");
            if out.last() != Some(&state.movement) {
                out.push(state.movement);
            }
        }
        out
    }
}

/// Table mapping a generic action performed at a destination of a given
/// label to its specialized meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRule {
    pub base: String,
    pub destination: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ActionDoc {
    #[serde(default)]
    fsm: Vec<MarkovFsm>,
    #[serde(default)]
    context: Vec<ContextRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionLibrary {
    pub fsms: Vec<MarkovFsm>,
    pub context: Vec<ContextRule>,
}

impl ActionLibrary {
    pub fn parse(source: &str) -> Result<Self, ActionError> {
        let doc: ActionDoc =
            toml::from_str(source).map_err(|e| ActionError::Syntax(e.to_string()))?;
        if doc.fsm.is_empty() {
            return Err(ActionError::Syntax("no machines defined".into()));
        }
        let mut names = BTreeSet::new();
        for f in &doc.fsm {
            f.validate()?;
            if !names.insert(f.name.as_str()) {
                return Err(ActionError::Syntax(format!(
                    "machine `{}` defined twice",
                    f.name
                )));
            }
        }
        for rule in &doc.context {
            if !names.contains(rule.base.as_str()) {
                return Err(ActionError::Syntax(format!(
                    "context rule for unknown action `{}`",
                    rule.base
                )));
            }
        }
        Ok(Self {
            fsms: doc.fsm,
            context: doc.context,
        })
    }

    pub fn kitchen() -> Self {
        Self::parse(crate::fixtures::KITCHEN_ACTIONS).expect("built-in action document is valid")
    }

    pub fn to_document(&self) -> String {
        toml::to_string(&ActionDoc {
            fsm: self.fsms.clone(),
            context: self.context.clone(),
        })
        .expect("action library serializes")
    }

    /// Specializes `base` by the label of its destination. Actions without
    /// context rules pass through; a contextual action whose destination is
    /// missing or unlisted stays unresolved.
    pub fn contextualize(&self, base: &str, destination_label: Option<&str>) -> Option<String> {
        let mut rules = self.context.iter().filter(|r| r.base == base).peekable();
        if rules.peek().is_none() {
            return Some(base.to_string());
        }
        let label = destination_label?;
        rules
            .find(|r| r.destination == label)
            .map(|r| r.action.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub sample_count: usize,
    pub sample_max_length: usize,
    pub win_threshold: f64,
    pub win_margin: f64,
    pub seed: u64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            sample_count: 100,
            sample_max_length: 12,
            win_threshold: 0.85,
            win_margin: 0.05,
            seed: 7,
        }
    }
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<(), ActionError> {
        if !(self.win_threshold > 0.0 && self.win_threshold < 1.0) {
            return Err(ActionError::BadParams(
                "win_threshold must be in (0,1)".into(),
            ));
        }
        if !(self.win_margin > 0.0 && self.win_margin < 1.0) {
            return Err(ActionError::BadParams("win_margin must be in (0,1)".into()));
        }
        if self.sample_count == 0 || self.sample_max_length == 0 {
            return Err(ActionError::BadParams(
                "sampling sizes must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator seed for one machine at one step; independent of evaluation
/// order, so machines may be sampled on any schedule.
pub fn derive_seed(master: u64, fsm: &str, step: u64) -> u64 {
    splitmix(splitmix(master ^ fnv1a(fsm)) ^ step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepScores {
    /// One score per machine, in library order.
    pub scores: Vec<(String, f64)>,
    pub winner: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ActionEnsemble {
    library: ActionLibrary,
    params: EnsembleParams,
}

impl ActionEnsemble {
    pub fn new(library: ActionLibrary, params: EnsembleParams) -> Result<Self, ActionError> {
        params.validate()?;
        Ok(Self { library, params })
    }

    pub fn library(&self) -> &ActionLibrary {
        &self.library
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    /// Scores every machine against `queue` and declares a winner when the
    /// best score clears the threshold by the required margin.
    pub fn step(&self, queue: &[Movement], step_index: u64) -> StepScores {
        let scores: Vec<(String, f64)> = self
            .library
            .fsms
            .iter()
            .map(|fsm| (fsm.name.clone(), self.score(fsm, queue, step_index)))
            .collect();
        let mut best: Option<(&str, f64)> = None;
        let mut second = 0.0f64;
        for (name, s) in &scores {
            match best {
                Some((_, b)) if *s <= b => second = second.max(*s),
                _ => {
                    if let Some((_, b)) = best {
                        second = second.max(b);
                    }
                    best = Some((name, *s));
                }
            }
        }
        let winner = best
            .filter(|(_, b)| {
                *b >= self.params.win_threshold && b - second >= self.params.win_margin
            })
            .map(|(n, _)| n.to_string());
        StepScores { scores, winner }
    }

    fn score(&self, fsm: &MarkovFsm, queue: &[Movement], step_index: u64) -> f64 {
        let Some(&first) = queue.first() else {
            return 0.0;
        };
        if !fsm.accepts_start(first) {
            return 0.0;
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.params.seed, &fsm.name, step_index));
        (0..self.params.sample_count)
            .map(|_| {
                similarity(
                    queue,
                    &fsm.sample(first, self.params.sample_max_length, &mut rng),
                )
            })
            .fold(0.0, f64::max)
    }

    fn admitted(&self, queue: &[Movement]) -> bool {
        self.library.fsms.iter().any(|f| f.admits_prefix(queue))
    }
}

/// Appends `m` unless it repeats the last symbol. Returns whether the queue
/// changed.
pub fn push_movement(queue: &mut Vec<Movement>, m: Movement) -> bool {
    if queue.last() == Some(&m) {
        return false;
    }
    queue.push(m);
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizedAction {
    pub base: String,
    /// `None` when a contextual action could not be specialized.
    pub contextualized: Option<String>,
    pub target: OoiId,
    pub destination: Option<OoiId>,
    pub commit_timestep: u64,
    pub score: f64,
}

impl RecognizedAction {
    pub fn name(&self) -> &str {
        self.contextualized.as_deref().unwrap_or(&self.base)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStep {
    pub queue: Vec<Movement>,
    pub scores: Option<StepScores>,
    pub action: Option<RecognizedAction>,
}

/// Stateful front end of the ensemble: owns the observation queue and binds
/// winners to the focus state.
#[derive(Debug, Clone)]
pub struct ActionRecognizer {
    ensemble: ActionEnsemble,
    queue: Vec<Movement>,
    steps: u64,
    pending: Option<(String, f64)>,
}

impl ActionRecognizer {
    pub fn new(ensemble: ActionEnsemble) -> Self {
        Self {
            ensemble,
            queue: Vec::new(),
            steps: 0,
            pending: None,
        }
    }

    pub fn ensemble(&self) -> &ActionEnsemble {
        &self.ensemble
    }

    pub fn queue(&self) -> &[Movement] {
        &self.queue
    }

    pub fn push(
        &mut self,
        m: Movement,
        timestep: u64,
        focus: &FocusState,
        world: &WorldState,
    ) -> ActionStep {
        let mut scores = None;
        if push_movement(&mut self.queue, m) {
            // leading symbols no machine can start from are stale context
            while !self.queue.is_empty() && !self.ensemble.admitted(&self.queue) {
                self.queue.remove(0);
            }
            self.pending = None;
            if !self.queue.is_empty() {
                let s = self.ensemble.step(&self.queue, self.steps);
                self.steps += 1;
                if let Some(w) = &s.winner {
                    let best = s.scores.iter().find(|(n, _)| n == w).map_or(0.0, |x| x.1);
                    self.pending = Some((w.clone(), best));
                }
                scores = Some(s);
            }
        }
        let queue = self.queue.clone();
        let mut action = None;
        if let (Some((base, score)), Some(target)) = (&self.pending, &focus.current_target) {
            let destination = focus.current_destination.clone();
            let label = destination.as_ref().and_then(|d| world.label_of(d));
            action = Some(RecognizedAction {
                contextualized: self.ensemble.library.contextualize(base, label),
                base: base.clone(),
                target: target.clone(),
                destination,
                commit_timestep: timestep,
                score: *score,
            });
            self.pending = None;
            self.queue.clear();
        }
        ActionStep {
            queue,
            scores,
            action,
        }
    }
}
