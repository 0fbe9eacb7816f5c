//! Runtime that chains perception, movement classification, action
//! recognition and goal reasoning, verifies every inference, and turns a
//! committed goal into a collaboration plan.
//!
//! Each stage owns its state, so the same stages run either in sequence on
//! one thread or as a chain of threads joined by channels. Both modes emit
//! the same event log.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{
    ActionEnsemble, ActionError, ActionLibrary, ActionRecognizer, EnsembleParams, RecognizedAction,
};
use crate::focus::{FocusConfig, FocusError, FocusEstimator, FocusState};
use crate::goal::{self, CommitPolicy, Explanation, Observation, PlanLibrary};
use crate::kb::{KbError, KnowledgeBase, Statement, Verdict};
use crate::movement::{
    extract_features, DecisionTree, LabeledDataset, Movement, MovementError, TrainParams,
};
use crate::qsr::{QsrConfig, QsrEngine, QsrError, QsrFrame};
use crate::sim::{generate_traces, script_for_goal, Goal, SimError, SimParams, Simulator};
use crate::world::{OoiId, Scenario, WorldError, WorldState};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("rejected world state: {0}")]
    World(#[from] WorldError),
    #[error(transparent)]
    Qsr(#[from] QsrError),
    #[error(transparent)]
    Focus(#[from] FocusError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Movement(#[from] MovementError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("pipeline stage stopped unexpectedly")]
    StageStopped,
}

/// Immutable models shared by every stage.
#[derive(Debug, Clone)]
pub struct Models {
    pub tree: DecisionTree,
    pub actions: ActionLibrary,
    pub plans: PlanLibrary,
    pub kb: KnowledgeBase,
}

impl Models {
    /// Kitchen documents plus a tree trained on freshly generated traces.
    pub fn kitchen(config: &PipelineConfig) -> Result<Self, PipelineError> {
        Ok(Self {
            tree: train_default_tree(&Scenario::kitchen(), config, &TrainingSetup::default())?,
            actions: ActionLibrary::kitchen(),
            plans: PlanLibrary::kitchen(),
            kb: KnowledgeBase::kitchen(),
        })
    }
}

/// How the default movement tree is trained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSetup {
    pub trials: u32,
    pub seed: u64,
    pub noise_sigma: f64,
}

impl Default for TrainingSetup {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 2024,
            noise_sigma: 0.05,
        }
    }
}

pub fn generate_dataset(
    scenario: &Scenario,
    config: &PipelineConfig,
    setup: &TrainingSetup,
) -> Result<LabeledDataset, PipelineError> {
    let params = SimParams {
        seed: setup.seed,
        noise_sigma: setup.noise_sigma,
        ..SimParams::default()
    };
    let mut data = LabeledDataset::default();
    for (i, trace) in generate_traces(scenario, setup.trials, &params)?
        .iter()
        .enumerate()
    {
        data.extend(LabeledDataset::from_trace(
            trace,
            i as u32,
            &config.qsr,
            &config.focus,
        )?);
    }
    Ok(data)
}

pub fn train_default_tree(
    scenario: &Scenario,
    config: &PipelineConfig,
    setup: &TrainingSetup,
) -> Result<DecisionTree, PipelineError> {
    let data = generate_dataset(scenario, config, setup)?;
    Ok(DecisionTree::train(&data, &TrainParams::default())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub qsr: QsrConfig,
    pub focus: FocusConfig,
    pub ensemble: EnsembleParams,
    pub commit: CommitPolicy,
    pub verify: bool,
    /// Confidence gain a different goal needs to replace a commitment.
    pub recommit_margin: f64,
    /// Class of the observed agent.
    pub actor: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            qsr: QsrConfig::default(),
            focus: FocusConfig::default(),
            ensemble: EnsembleParams::default(),
            commit: CommitPolicy::default(),
            verify: true,
            recommit_margin: 0.1,
            actor: "Human".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Action,
    Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSummary {
    pub goal: String,
    pub confidence: f64,
    pub observed: usize,
    pub missed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedAction {
    pub action: String,
    pub target: Option<OoiId>,
    pub destination: Option<OoiId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollaborationPlan {
    pub wait_for: Vec<PlannedAction>,
    pub robot_actions: Vec<PlannedAction>,
    /// Frontier index at which the robot takes over.
    pub trigger: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventPayload {
    Frame {
        frame: QsrFrame,
    },
    Focus {
        distribution: Vec<(OoiId, f64)>,
        target: Option<OoiId>,
        destination: Option<OoiId>,
    },
    Movement {
        movement: Movement,
        target: OoiId,
    },
    Action {
        action: RecognizedAction,
        forwarded: bool,
    },
    Explanation {
        observations: Vec<String>,
        count: usize,
        top: Option<ExplanationSummary>,
    },
    Commitment {
        goal: String,
        confidence: f64,
        observed: usize,
        missed: usize,
        frontier: Vec<String>,
    },
    Collaboration {
        plan: CollaborationPlan,
    },
    Rejection {
        stage: Stage,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEvent {
    pub t: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

/// One JSON object per line, numbered from 0.
pub fn event_log(events: &[PipelineEvent]) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        seq: usize,
        #[serde(flatten)]
        event: &'a PipelineEvent,
    }
    let mut out = String::new();
    for (seq, event) in events.iter().enumerate() {
        out.push_str(&serde_json::to_string(&Line { seq, event }).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// Splits the frontier at the start of its longest suffix the robot can
/// execute entirely.
pub fn plan_collaboration(frontier: &[PlannedAction], kb: &KnowledgeBase) -> CollaborationPlan {
    let capable_suffix = frontier
        .iter()
        .rev()
        .take_while(|a| kb.robot_capable(&a.action))
        .count();
    let trigger = frontier.len() - capable_suffix;
    CollaborationPlan {
        wait_for: frontier[..trigger].to_vec(),
        robot_actions: frontier[trigger..].to_vec(),
        trigger,
    }
}

/// Frontier of an explanation with its role variables resolved: from the
/// objects observed for the same role, else from the first scene object that
/// fits the role.
pub fn instantiate_frontier(
    e: &Explanation,
    plans: &PlanLibrary,
    kb: &KnowledgeBase,
    world: &WorldState,
) -> Vec<PlannedAction> {
    let Some(goal) = plans.goal(&e.goal) else {
        return Vec::new();
    };
    let leaves = goal.leaves();
    let resolve = |var: &Option<String>| -> Option<OoiId> {
        let var = var.as_ref()?;
        let observed = leaves.iter().zip(&e.bindings).find_map(|(leaf, b)| {
            (leaf.target.as_ref() == Some(var))
                .then(|| b.as_ref().and_then(|o| o.target.clone()))
                .flatten()
        });
        observed.or_else(|| kb.resolve_role(&goal.role(var)?.terms, world))
    };
    e.frontier()
        .into_iter()
        .map(|k| PlannedAction {
            action: leaves[k].symbol.clone(),
            target: resolve(&leaves[k].target),
            destination: resolve(&leaves[k].destination),
        })
        .collect()
}

struct Perception {
    qsr: QsrEngine,
    focus: FocusEstimator,
}

impl Perception {
    fn run(
        &mut self,
        world: &WorldState,
        out: &mut Vec<PipelineEvent>,
    ) -> Result<(QsrFrame, FocusState), PipelineError> {
        world.validate()?;
        let t = world.timestep;
        let frame = self.qsr.ingest(world)?.clone();
        let dist = self.focus.observe(&frame, world);
        let state = self.focus.state().clone();
        out.push(PipelineEvent {
            t,
            payload: EventPayload::Frame {
                frame: frame.clone(),
            },
        });
        if world.oois.is_empty() {
            return Ok((frame, state));
        }
        out.push(PipelineEvent {
            t,
            payload: EventPayload::Focus {
                distribution: dist.probabilities,
                target: state.current_target.clone(),
                destination: state.current_destination.clone(),
            },
        });
        Ok((frame, state))
    }
}

struct MovementStage {
    models: Arc<Models>,
    prev: Option<QsrFrame>,
}

impl MovementStage {
    fn run(
        &mut self,
        frame: QsrFrame,
        focus: &FocusState,
        out: &mut Vec<PipelineEvent>,
    ) -> Result<Option<Movement>, PipelineError> {
        let mut result = None;
        if let Some(target) = &focus.current_target {
            let f = extract_features(&frame, self.prev.as_ref(), target)?;
            let m = self.models.tree.classify(&f);
            out.push(PipelineEvent {
                t: frame.timestep,
                payload: EventPayload::Movement {
                    movement: m,
                    target: target.clone(),
                },
            });
            result = Some(m);
        }
        self.prev = Some(frame);
        Ok(result)
    }
}

struct ActionStage {
    models: Arc<Models>,
    recognizer: ActionRecognizer,
    verify: bool,
    actor: String,
    last_forwarded: Option<(String, OoiId)>,
}

impl ActionStage {
    fn run(
        &mut self,
        t: u64,
        movement: Option<Movement>,
        focus: &FocusState,
        world: &WorldState,
        out: &mut Vec<PipelineEvent>,
    ) -> Result<Option<Observation>, PipelineError> {
        let Some(m) = movement else {
            return Ok(None);
        };
        match self.recognizer.push(m, t, focus, world).action {
            Some(action) => self.handle(t, action, world, out),
            None => Ok(None),
        }
    }

    /// Verifies a recognized action and decides whether the reasoner sees it.
    fn handle(
        &mut self,
        t: u64,
        action: RecognizedAction,
        world: &WorldState,
        out: &mut Vec<PipelineEvent>,
    ) -> Result<Option<Observation>, PipelineError> {
        let label = |id: &Option<OoiId>| {
            id.as_ref()
                .and_then(|i| world.label_of(i))
                .map(String::from)
        };
        let target_label = label(&Some(action.target.clone()));
        let destination_label = label(&action.destination);
        let mut rejection = None;
        if self.verify {
            rejection = match &action.contextualized {
                None => Some(format!(
                    "{} at {} has no meaning in this scene",
                    action.base,
                    destination_label.as_deref().unwrap_or("no destination")
                )),
                Some(name) => {
                    let verdict = self.models.kb.validate_action(&Statement {
                        actor: self.actor.clone(),
                        action: name.clone(),
                        target: target_label.clone(),
                        destination: destination_label.clone(),
                    });
                    match verdict {
                        Ok(Verdict::Valid) => None,
                        Ok(Verdict::Invalid(reason)) => Some(reason),
                        Err(e) => Some(e.to_string()),
                    }
                }
            };
        }
        let name = action.name().to_string();
        let contextual = self
            .models
            .actions
            .context
            .iter()
            .any(|r| r.base == action.base);
        let repeat = contextual
            && self.last_forwarded.as_ref() == Some(&(name.clone(), action.target.clone()));
        let forward = rejection.is_none()
            && action.contextualized.is_some()
            && self.models.plans.terminals.contains(&name)
            && !repeat;
        out.push(PipelineEvent {
            t,
            payload: EventPayload::Action {
                action: action.clone(),
                forwarded: forward,
            },
        });
        if let Some(reason) = rejection {
            out.push(PipelineEvent {
                t,
                payload: EventPayload::Rejection {
                    stage: Stage::Action,
                    reason,
                },
            });
        }
        if !forward {
            return Ok(None);
        }
        self.last_forwarded = Some((name.clone(), action.target.clone()));
        Ok(Some(Observation {
            action: name,
            target: Some(action.target),
            target_label,
            destination: action.destination,
            destination_label,
        }))
    }
}

/// The goal a reasoning stage has committed to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub t: u64,
    pub explanation: Explanation,
    pub plan: CollaborationPlan,
}

struct ReasoningStage {
    models: Arc<Models>,
    commit: CommitPolicy,
    verify: bool,
    recommit_margin: f64,
    explanations: Vec<Explanation>,
    observations: Vec<Observation>,
    committed: Option<Commitment>,
}

impl ReasoningStage {
    fn run(
        &mut self,
        t: u64,
        obs: Option<Observation>,
        world: &WorldState,
        out: &mut Vec<PipelineEvent>,
    ) {
        let Some(obs) = obs else {
            return;
        };
        let plans = &self.models.plans;
        let kb = &self.models.kb;
        let mut next = goal::extend(plans, &self.explanations, &obs);
        if self.verify {
            next.retain(|e| kb.validate_explanation(plans, e).is_valid());
        }
        let mut symbols: Vec<String> = self.observations.iter().map(|o| o.action.clone()).collect();
        symbols.push(obs.action.clone());
        if next.is_empty() {
            // keep the previous hypotheses; the observation is treated as noise
            out.push(PipelineEvent {
                t,
                payload: EventPayload::Rejection {
                    stage: Stage::Explanation,
                    reason: format!("no plan explains [{}]", symbols.join(", ")),
                },
            });
            return;
        }
        let ranked = goal::rank(next);
        out.push(PipelineEvent {
            t,
            payload: EventPayload::Explanation {
                observations: symbols,
                count: ranked.len(),
                top: ranked.first().map(|e| ExplanationSummary {
                    goal: e.goal.clone(),
                    confidence: e.confidence,
                    observed: e.observed_count(),
                    missed: e.missed_count(),
                }),
            },
        });
        self.observations.push(obs);
        if let Some(i) = goal::best(&ranked, &self.commit) {
            let e = &ranked[i];
            let replace = match &self.committed {
                None => true,
                Some(c) => {
                    c.explanation.goal != e.goal
                        && e.confidence > c.explanation.confidence + self.recommit_margin
                }
            };
            if replace {
                let frontier = instantiate_frontier(e, plans, kb, world);
                let plan = plan_collaboration(&frontier, kb);
                out.push(PipelineEvent {
                    t,
                    payload: EventPayload::Commitment {
                        goal: e.goal.clone(),
                        confidence: e.confidence,
                        observed: e.observed_count(),
                        missed: e.missed_count(),
                        frontier: frontier.iter().map(|a| a.action.clone()).collect(),
                    },
                });
                out.push(PipelineEvent {
                    t,
                    payload: EventPayload::Collaboration { plan: plan.clone() },
                });
                self.committed = Some(Commitment {
                    t,
                    explanation: e.clone(),
                    plan,
                });
            }
        }
        self.explanations = ranked;
    }
}

/// The full pipeline, stepped one world state at a time.
pub struct Pipeline {
    perception: Perception,
    movement: MovementStage,
    action: ActionStage,
    reasoning: ReasoningStage,
}

impl Pipeline {
    pub fn new(models: Arc<Models>, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let ensemble = ActionEnsemble::new(models.actions.clone(), config.ensemble)?;
        Ok(Self {
            perception: Perception {
                qsr: QsrEngine::new(config.qsr),
                focus: FocusEstimator::new(config.focus)?,
            },
            movement: MovementStage {
                models: models.clone(),
                prev: None,
            },
            action: ActionStage {
                models: models.clone(),
                recognizer: ActionRecognizer::new(ensemble),
                verify: config.verify,
                actor: config.actor.clone(),
                last_forwarded: None,
            },
            reasoning: ReasoningStage {
                explanations: goal::initial(&models.plans),
                models,
                commit: config.commit,
                verify: config.verify,
                recommit_margin: config.recommit_margin,
                observations: Vec::new(),
                committed: None,
            },
        })
    }

    pub fn tick(&mut self, world: &WorldState) -> Result<Vec<PipelineEvent>, PipelineError> {
        let mut out = Vec::new();
        let t = world.timestep;
        let (frame, focus) = self.perception.run(world, &mut out)?;
        let movement = self.movement.run(frame, &focus, &mut out)?;
        let obs = self.action.run(t, movement, &focus, world, &mut out)?;
        self.reasoning.run(t, obs, world, &mut out);
        Ok(out)
    }

    /// Feeds an action as if the recognizer had just produced it.
    pub fn inject_action(
        &mut self,
        action: RecognizedAction,
        world: &WorldState,
    ) -> Result<Vec<PipelineEvent>, PipelineError> {
        let mut out = Vec::new();
        let t = world.timestep;
        let obs = self.action.handle(t, action, world, &mut out)?;
        self.reasoning.run(t, obs, world, &mut out);
        Ok(out)
    }

    pub fn committed(&self) -> Option<&Commitment> {
        self.reasoning.committed.as_ref()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.reasoning.observations
    }

    pub fn explanations(&self) -> &[Explanation] {
        &self.reasoning.explanations
    }

    pub fn focus(&self) -> &FocusState {
        self.perception.focus.state()
    }

    /// Sequential run over a whole stream.
    pub fn run_all(&mut self, worlds: &[WorldState]) -> Result<Vec<PipelineEvent>, PipelineError> {
        let mut events = Vec::new();
        for w in worlds {
            events.extend(self.tick(w)?);
        }
        Ok(events)
    }

    /// Runs the four stages on their own threads, connected by channels, and
    /// gathers the events in stream order.
    pub fn run_concurrent(
        self,
        worlds: Vec<WorldState>,
    ) -> Result<Vec<PipelineEvent>, PipelineError> {
        type Packet<T> = Result<(Arc<WorldState>, T, Vec<PipelineEvent>), PipelineError>;
        let Pipeline {
            mut perception,
            mut movement,
            mut action,
            mut reasoning,
        } = self;
        let (to_movement, movement_in) = mpsc::channel::<Packet<(QsrFrame, FocusState)>>();
        let (to_action, action_in) = mpsc::channel::<Packet<(Option<Movement>, FocusState)>>();
        let (to_reasoning, reasoning_in) = mpsc::channel::<Packet<Option<Observation>>>();
        let (to_log, log_in) = mpsc::channel::<Result<Vec<PipelineEvent>, PipelineError>>();

        thread::scope(|s| {
            s.spawn(move || {
                for w in worlds {
                    let mut out = Vec::new();
                    let r = perception.run(&w, &mut out);
                    let stop = r.is_err();
                    let packet = r.map(|x| (Arc::new(w), x, out));
                    if to_movement.send(packet).is_err() || stop {
                        break;
                    }
                }
            });
            s.spawn(move || {
                for packet in movement_in {
                    let packet = packet.and_then(|(w, (frame, focus), mut out)| {
                        let m = movement.run(frame, &focus, &mut out)?;
                        Ok((w, (m, focus), out))
                    });
                    if to_action.send(packet).is_err() {
                        break;
                    }
                }
            });
            s.spawn(move || {
                for packet in action_in {
                    let packet = packet.and_then(|(w, (m, focus), mut out)| {
                        let obs = action.run(w.timestep, m, &focus, &w, &mut out)?;
                        Ok((w, obs, out))
                    });
                    if to_reasoning.send(packet).is_err() {
                        break;
                    }
                }
            });
            s.spawn(move || {
                for packet in reasoning_in {
                    let packet = packet.map(|(w, obs, mut out)| {
                        reasoning.run(w.timestep, obs, &w, &mut out);
                        out
                    });
                    if to_log.send(packet).is_err() {
                        break;
                    }
                }
            });
            let mut events = Vec::new();
            for packet in log_in {
                events.extend(packet?);
            }
            Ok(events)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub goal: Goal,
    pub seed: u64,
    pub verified: bool,
    pub predicted: Option<String>,
    pub correct: bool,
    /// Observed leaves in the committed explanation.
    pub observed: usize,
    pub missed: usize,
    pub waiting: usize,
    pub planned: usize,
    /// Actions forwarded to the reasoner before the commitment.
    pub observations: usize,
    pub commit_tick: Option<u64>,
    pub ticks: u64,
    pub inference_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub goal: Goal,
    pub seed: u64,
    pub verify: bool,
    pub noise_sigma: f64,
}

/// Simulates one scripted goal from a random start and runs the pipeline
/// until the first commitment or the end of the script.
pub fn run_trial(
    models: Arc<Models>,
    config: &PipelineConfig,
    scenario: &Scenario,
    spec: &TrialSpec,
) -> Result<TrialMetrics, PipelineError> {
    let (metrics, _) = simulate(models, config, scenario, spec, true)?;
    Ok(metrics)
}

/// Like [`run_trial`] but always runs the whole script and returns the full
/// event log.
pub fn simulate(
    models: Arc<Models>,
    config: &PipelineConfig,
    scenario: &Scenario,
    spec: &TrialSpec,
    stop_at_commit: bool,
) -> Result<(TrialMetrics, Vec<PipelineEvent>), PipelineError> {
    let config = PipelineConfig {
        verify: spec.verify,
        ..config.clone()
    };
    let params = SimParams {
        seed: spec.seed,
        noise_sigma: spec.noise_sigma,
        ..SimParams::default()
    };
    let mut sim = Simulator::with_random_start(scenario, params)?;
    let mut script = script_for_goal(spec.goal, &params).into();
    let mut pipeline = Pipeline::new(models, &config)?;
    let start = Instant::now();
    let mut events = pipeline.tick(&sim.observe())?;
    let mut elapsed = None;
    while pipeline.committed().is_none() || !stop_at_commit {
        if pipeline.committed().is_some() && elapsed.is_none() {
            elapsed = Some(start.elapsed().as_secs_f64());
        }
        if sim.step_script(&mut script)?.is_none() {
            break;
        }
        events.extend(pipeline.tick(&sim.observe())?);
    }
    let committed = pipeline.committed();
    let elapsed = elapsed.unwrap_or_else(|| start.elapsed().as_secs_f64());
    let predicted = committed.map(|c| c.explanation.goal.clone());
    let metrics = TrialMetrics {
        goal: spec.goal,
        seed: spec.seed,
        verified: spec.verify,
        correct: predicted.as_deref() == Some(spec.goal.as_str()),
        predicted,
        observed: committed.map_or(0, |c| c.explanation.observed_count()),
        missed: committed.map_or(0, |c| c.explanation.missed_count()),
        waiting: committed.map_or(0, |c| c.plan.wait_for.len()),
        planned: committed.map_or(0, |c| c.plan.robot_actions.len()),
        observations: committed.map_or(pipeline.observations().len(), |c| {
            c.explanation.observed_count()
        }),
        commit_tick: committed.map(|c| c.t),
        ticks: sim.timestep(),
        inference_time_s: if committed.is_some() { elapsed } else { 0.0 },
    };
    Ok((metrics, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{AgentPose, Point2};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn kitchen_models() -> Arc<Models> {
        static MODELS: OnceLock<Arc<Models>> = OnceLock::new();
        MODELS
            .get_or_init(|| Arc::new(Models::kitchen(&PipelineConfig::default()).unwrap()))
            .clone()
    }

    fn planned(action: &str) -> PlannedAction {
        PlannedAction {
            action: action.into(),
            target: None,
            destination: None,
        }
    }

    fn names(actions: &[PlannedAction]) -> Vec<&str> {
        actions.iter().map(|a| a.action.as_str()).collect()
    }

    #[test]
    fn collaboration_examples() {
        let kb = KnowledgeBase::kitchen();
        let lunch: Vec<_> = ["PickAndPlace", "Eat", "PickAndPlace", "Wash"]
            .map(planned)
            .into();
        let plan = plan_collaboration(&lunch, &kb);
        assert_eq!(names(&plan.wait_for), ["PickAndPlace", "Eat"]);
        assert_eq!(names(&plan.robot_actions), ["PickAndPlace", "Wash"]);
        assert_eq!(plan.trigger, 2);

        let capable: Vec<_> = ["Cook", "PickAndPlace"].map(planned).into();
        let plan = plan_collaboration(&capable, &kb);
        assert!(plan.wait_for.is_empty());
        assert_eq!(plan.robot_actions, capable);

        let ends_in_eat: Vec<_> = ["PickAndPlace", "Eat"].map(planned).into();
        let plan = plan_collaboration(&ends_in_eat, &kb);
        assert!(plan.robot_actions.is_empty());
        assert_eq!(plan.wait_for, ends_in_eat);

        let empty = plan_collaboration(&[], &kb);
        assert!(empty.wait_for.is_empty() && empty.robot_actions.is_empty());
    }

    proptest! {
        #[test]
        fn collaboration_conserves_frontier(
            picks in proptest::collection::vec(0usize..6, 0..10)
        ) {
            let kb = KnowledgeBase::kitchen();
            let symbols = ["PickAndPlace", "Eat", "Sip", "Cook", "Wash", "Relocate"];
            let frontier: Vec<_> = picks.iter().map(|&i| planned(symbols[i])).collect();
            let plan = plan_collaboration(&frontier, &kb);
            let joined: Vec<_> = plan.wait_for.iter().chain(&plan.robot_actions).cloned().collect();
            prop_assert_eq!(&joined, &frontier);
            prop_assert!(plan.robot_actions.iter().all(|a| kb.robot_capable(&a.action)));
            // the suffix cannot be extended
            if plan.trigger > 0 {
                prop_assert!(!kb.robot_capable(&frontier[plan.trigger - 1].action));
            }
        }
    }

    fn kitchen_world() -> WorldState {
        Scenario::kitchen().initial
    }

    #[test]
    fn empty_room_emits_only_frames() {
        let mut p = Pipeline::new(kitchen_models(), &PipelineConfig::default()).unwrap();
        for t in 0..5 {
            let w = WorldState {
                timestep: t,
                agent: AgentPose::new(Point2::new(t as f64 * 0.2, 0.0), 0.0),
                oois: Vec::new(),
            };
            let events = p.tick(&w).unwrap();
            assert_eq!(events.len(), 1);
            assert!(matches!(events[0].payload, EventPayload::Frame { .. }));
        }
    }

    #[test]
    fn malformed_world_rejected_at_ingest() {
        let mut p = Pipeline::new(kitchen_models(), &PipelineConfig::default()).unwrap();
        let mut w = kitchen_world();
        w.agent.held_object = Some("plate".into());
        assert!(matches!(p.tick(&w), Err(PipelineError::World(_))));
        // the pipeline is still usable afterwards
        assert!(p.tick(&kitchen_world()).is_ok());
    }

    fn recognized(
        base: &str,
        name: Option<&str>,
        target: &str,
        destination: &str,
    ) -> RecognizedAction {
        RecognizedAction {
            base: base.into(),
            contextualized: name.map(String::from),
            target: target.into(),
            destination: Some(destination.into()),
            commit_timestep: 0,
            score: 1.0,
        }
    }

    #[test]
    fn impossible_action_is_rejected() {
        let mut p = Pipeline::new(kitchen_models(), &PipelineConfig::default()).unwrap();
        let w = kitchen_world();
        p.tick(&w).unwrap();
        let events = p
            .inject_action(recognized("Use", Some("Cook"), "plate", "hobs"), &w)
            .unwrap();
        assert!(matches!(
            &events[0].payload,
            EventPayload::Action {
                forwarded: false,
                ..
            }
        ));
        match &events[1].payload {
            EventPayload::Rejection { stage, reason } => {
                assert_eq!(*stage, Stage::Action);
                assert!(reason.contains("cookable"), "{reason}");
            }
            other => panic!("expected a rejection, got {other:?}"),
        }
        assert_eq!(events.len(), 2);
        assert!(p.observations().is_empty());

        // a valid action afterwards reaches the reasoner
        let events = p
            .inject_action(
                recognized("PickAndPlace", Some("PickAndPlace"), "biscuits", "plate"),
                &w,
            )
            .unwrap();
        assert!(events
            .iter()
            .any(|e| matches!(&e.payload, EventPayload::Explanation { count: 1, .. })));
        assert_eq!(p.committed().unwrap().explanation.goal, "Breakfast");
    }

    #[test]
    fn unverified_mode_forwards_anything_in_the_alphabet() {
        let config = PipelineConfig {
            verify: false,
            ..PipelineConfig::default()
        };
        let mut p = Pipeline::new(kitchen_models(), &config).unwrap();
        let w = kitchen_world();
        p.tick(&w).unwrap();
        let events = p
            .inject_action(recognized("Use", Some("Cook"), "plate", "hobs"), &w)
            .unwrap();
        assert!(matches!(
            &events[0].payload,
            EventPayload::Action {
                forwarded: true,
                ..
            }
        ));
        assert_eq!(p.observations().len(), 1);
        // an unresolved Use is never forwarded
        let events = p
            .inject_action(recognized("Use", None, "plate", "glass"), &w)
            .unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(p.observations().len(), 1);
    }

    #[test]
    fn repeated_use_loop_forwarded_once() {
        let config = PipelineConfig {
            verify: false,
            ..PipelineConfig::default()
        };
        let mut p = Pipeline::new(kitchen_models(), &config).unwrap();
        let w = kitchen_world();
        p.tick(&w).unwrap();
        for _ in 0..3 {
            p.inject_action(recognized("Use", Some("Cook"), "meal", "hobs"), &w)
                .unwrap();
        }
        assert_eq!(p.observations().len(), 1);
        for _ in 0..2 {
            p.inject_action(
                recognized("PickAndPlace", Some("PickAndPlace"), "meal", "plate"),
                &w,
            )
            .unwrap();
        }
        assert_eq!(p.observations().len(), 3);
    }

    #[test]
    fn dead_end_observation_keeps_hypotheses() {
        let config = PipelineConfig {
            verify: false,
            ..PipelineConfig::default()
        };
        let mut p = Pipeline::new(kitchen_models(), &config).unwrap();
        let w = kitchen_world();
        p.tick(&w).unwrap();
        p.inject_action(recognized("Use", Some("Wash"), "plate", "sink"), &w)
            .unwrap();
        assert_eq!(p.explanations().len(), 3);
        let events = p
            .inject_action(recognized("Use", Some("Cook"), "meal", "hobs"), &w)
            .unwrap();
        assert!(matches!(
            events.last().unwrap().payload,
            EventPayload::Rejection {
                stage: Stage::Explanation,
                ..
            }
        ));
        assert_eq!(p.explanations().len(), 3);
        assert_eq!(p.observations().len(), 1);
    }

    #[test]
    fn later_explanation_dethrones_commitment() {
        let plans = PlanLibrary::parse(
            "terminals: A B C D\n\ngoal G1\n  action A\n  action B\n\ngoal G2\n  action A\n  action C\n  action D\n",
        )
        .unwrap();
        let models = Arc::new(Models {
            plans,
            ..(*kitchen_models()).clone()
        });
        let mut stage = ReasoningStage {
            explanations: goal::initial(&models.plans),
            models,
            commit: CommitPolicy::default(),
            verify: false,
            recommit_margin: 0.1,
            observations: Vec::new(),
            committed: None,
        };
        let w = kitchen_world();
        let obs = |a: &str| Observation {
            action: a.into(),
            target: None,
            target_label: None,
            destination: None,
            destination_label: None,
        };
        let mut out = Vec::new();
        stage.run(1, Some(obs("A")), &w, &mut out);
        let first = stage.committed.clone().unwrap();
        assert_eq!(first.explanation.goal, "G1");
        assert!((first.explanation.confidence - 0.6).abs() < 1e-12);
        stage.run(2, Some(obs("C")), &w, &mut out);
        let second = stage.committed.clone().unwrap();
        assert_eq!(second.explanation.goal, "G2");
        assert_eq!(second.t, 2);
        let commitments = out
            .iter()
            .filter(|e| matches!(e.payload, EventPayload::Commitment { .. }))
            .count();
        assert_eq!(commitments, 2);
    }

    #[test]
    fn event_log_lines() {
        let events = vec![
            PipelineEvent {
                t: 3,
                payload: EventPayload::Rejection {
                    stage: Stage::Action,
                    reason: "no".into(),
                },
            },
            PipelineEvent {
                t: 4,
                payload: EventPayload::Movement {
                    movement: Movement::Pick,
                    target: "meal".into(),
                },
            },
        ];
        let log = event_log(&events);
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"seq":0,"t":3,"kind":"rejection","stage":"action","reason":"no"}"#
        );
        assert_eq!(
            lines[1],
            r#"{"seq":1,"t":4,"kind":"movement","movement":"PICK","target":"meal"}"#
        );
        let back: PipelineEvent = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, events[1]);
    }

    fn kind_rank(p: &EventPayload) -> u8 {
        match p {
            EventPayload::Frame { .. } => 0,
            EventPayload::Focus { .. } => 1,
            EventPayload::Movement { .. } => 2,
            EventPayload::Action { .. } => 3,
            EventPayload::Rejection {
                stage: Stage::Action,
                ..
            } => 3,
            EventPayload::Explanation { .. } => 4,
            EventPayload::Rejection { .. } => 4,
            EventPayload::Commitment { .. } => 5,
            EventPayload::Collaboration { .. } => 6,
        }
    }

    #[test]
    fn scripted_lunch_commits_before_eating() {
        let spec = TrialSpec {
            goal: Goal::Lunch,
            seed: 0,
            verify: true,
            noise_sigma: 0.0,
        };
        let (metrics, events) = simulate(
            kitchen_models(),
            &PipelineConfig::default(),
            &Scenario::kitchen(),
            &spec,
            false,
        )
        .unwrap();
        assert!(metrics.correct);
        let commit_t = metrics.commit_tick.unwrap();
        let first_eat = events
            .iter()
            .find_map(|e| match &e.payload {
                EventPayload::Action { action, .. } if action.name() == "Eat" => Some(e.t),
                _ => None,
            })
            .unwrap();
        assert!(commit_t < first_eat);
        let plan = events
            .iter()
            .find_map(|e| match &e.payload {
                EventPayload::Collaboration { plan } => Some(plan.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(names(&plan.wait_for), ["PickAndPlace", "Eat"]);
        assert_eq!(names(&plan.robot_actions), ["PickAndPlace", "Wash"]);
        let carry = &plan.robot_actions[0];
        assert_eq!(carry.target, Some("plate".into()));
        assert_eq!(carry.destination, Some("sink".into()));

        // per-tick ordering frame -> focus -> ... -> collaboration
        for pair in events.windows(2) {
            if pair[0].t == pair[1].t {
                assert!(kind_rank(&pair[0].payload) <= kind_rank(&pair[1].payload));
            } else {
                assert!(pair[0].t < pair[1].t);
            }
        }
    }

    #[test]
    fn concurrent_matches_sequential() {
        let params = SimParams {
            seed: 3,
            noise_sigma: 0.05,
            ..SimParams::default()
        };
        let mut sim = Simulator::with_random_start(&Scenario::kitchen(), params).unwrap();
        let trace = sim
            .run(script_for_goal(Goal::Drink, &params), "kitchen")
            .unwrap();
        let config = PipelineConfig::default();
        let sequential = Pipeline::new(kitchen_models(), &config)
            .unwrap()
            .run_all(&trace.states)
            .unwrap();
        let concurrent = Pipeline::new(kitchen_models(), &config)
            .unwrap()
            .run_concurrent(trace.states.clone())
            .unwrap();
        assert_eq!(event_log(&sequential), event_log(&concurrent));
        assert!(sequential
            .iter()
            .any(|e| matches!(e.payload, EventPayload::Commitment { .. })));
    }

    #[test]
    fn concurrent_mode_reports_rejected_input() {
        let mut bad = kitchen_world();
        bad.timestep = 1;
        bad.agent.held_object = Some("glass".into());
        let worlds = vec![kitchen_world(), bad];
        let r = Pipeline::new(kitchen_models(), &PipelineConfig::default())
            .unwrap()
            .run_concurrent(worlds);
        assert!(matches!(r, Err(PipelineError::World(_))));
    }
}
