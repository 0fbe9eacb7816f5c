//! Scripted kitchen simulator. A single human agent executes a list of
//! directives; every tick yields the reported world state (true state plus
//! Gaussian perception noise) and the ground-truth movement label.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::movement::Movement;
use crate::world::{normalize_angle, OoiId, Point2, Scenario, Trace, WorldState};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("unknown object `{0}`")]
    UnknownObject(OoiId),
    #[error("`{0}` cannot be picked up")]
    NotGraspable(OoiId),
    #[error("`{0}` is out of reach")]
    OutOfReach(OoiId),
    #[error("already holding `{0}`")]
    AlreadyHolding(OoiId),
    #[error("not holding anything")]
    NotHolding,
    #[error("invalid simulation parameters: {0}")]
    BadParams(String),
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("no free starting position found")]
    NoFreeArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Directive {
    GoTo(OoiId),
    Pick(OoiId),
    /// Put the held object down next to the given object.
    Place(OoiId),
    Dwell(u32),
    /// Handle `item` in place at `at`: `cycles` times pick, place and stay
    /// still for `pause` ticks.
    UseAt {
        item: OoiId,
        at: OoiId,
        cycles: u32,
        pause: u32,
    },
}

pub type AgentScript = Vec<Directive>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Goal {
    Breakfast,
    Drink,
    Lunch,
}

impl Goal {
    pub const ALL: [Goal; 3] = [Goal::Breakfast, Goal::Drink, Goal::Lunch];

    pub fn as_str(self) -> &'static str {
        match self {
            Goal::Breakfast => "Breakfast",
            Goal::Drink => "Drink",
            Goal::Lunch => "Lunch",
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Goal {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Goal::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownGoal(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Meters per tick.
    pub walk_speed: f64,
    /// Radians per tick.
    pub turn_rate: f64,
    /// Standard deviation of the reported-position noise, meters.
    pub noise_sigma: f64,
    /// Distance at which a GoTo stops short of its object.
    pub reach: f64,
    pub dwell_ticks: u32,
    pub use_cycles: u32,
    /// Still ticks closing each pick/place cycle of a UseAt.
    pub use_pause: u32,
    /// Minimum distance between a random start and any object.
    pub start_clearance: f64,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            walk_speed: 0.2,
            turn_rate: 0.3,
            noise_sigma: 0.0,
            reach: 0.4,
            dwell_ticks: 5,
            use_cycles: 3,
            use_pause: 4,
            start_clearance: 1.0,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.walk_speed > 0.0 && self.turn_rate > 0.0) {
            return Err(SimError::BadParams("speeds must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SimError::BadParams(
                "noise must be a finite value >= 0".into(),
            ));
        }
        if !(self.reach >= 0.0 && self.reach <= 0.6) {
            return Err(SimError::BadParams(
                "reach must lie within touch range".into(),
            ));
        }
        Ok(())
    }
}

/// Script for one of the kitchen goals, using the kitchen object ids.
pub fn script_for_goal(goal: Goal, params: &SimParams) -> AgentScript {
    use Directive::*;
    let id = |s: &str| OoiId::new(s);
    let dwell = Dwell(params.dwell_ticks);
    let cycles = params.use_cycles;
    let pause = params.use_pause;
    let carry =
        |item: &str, to: &str| vec![GoTo(id(item)), Pick(id(item)), GoTo(id(to)), Place(id(to))];
    let use_at = |item: &str, at: &str| UseAt {
        item: id(item),
        at: id(at),
        cycles,
        pause,
    };
    let mut s = vec![dwell.clone()];
    match goal {
        Goal::Breakfast => {
            s.extend(carry("biscuits", "plate"));
            s.push(use_at("biscuits", "plate"));
            s.extend(carry("plate", "sink"));
            s.push(use_at("plate", "sink"));
        }
        Goal::Drink => {
            s.extend(carry("water_bottle", "glass"));
            s.push(use_at("water_bottle", "glass"));
            s.extend(carry("glass", "sink"));
            s.push(use_at("glass", "sink"));
        }
        Goal::Lunch => {
            s.extend(carry("meal", "hobs"));
            s.push(use_at("meal", "hobs"));
            s.extend(carry("meal", "plate"));
            s.push(use_at("meal", "plate"));
            s.extend(carry("plate", "sink"));
            s.push(use_at("plate", "sink"));
        }
    }
    s.push(dwell);
    s
}

/// Micro-steps a directive expands into; each consumes exactly one tick
/// except movement, which lasts until arrival.
#[derive(Debug, Clone, PartialEq)]
enum Step {
    Walk(OoiId),
    Pick(OoiId),
    Place(OoiId),
    Still,
}

fn expand(d: &Directive) -> Vec<Step> {
    match d {
        Directive::GoTo(o) => vec![Step::Walk(o.clone())],
        Directive::Pick(o) => vec![Step::Pick(o.clone())],
        Directive::Place(o) => vec![Step::Place(o.clone())],
        Directive::Dwell(n) => vec![Step::Still; *n as usize],
        Directive::UseAt {
            item,
            at,
            cycles,
            pause,
        } => (0..*cycles)
            .flat_map(|_| {
                [Step::Pick(item.clone()), Step::Place(at.clone())]
                    .into_iter()
                    .chain(std::iter::repeat_n(Step::Still, *pause as usize))
            })
            .collect(),
    }
}

/// Ground truth plus the perception model.
#[derive(Debug, Clone)]
pub struct Simulator {
    truth: WorldState,
    params: SimParams,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    pending: Vec<Step>,
}

/// Offset from an object at which placed items come to rest.
const PLACE_OFFSET: f64 = 0.15;

impl Simulator {
    pub fn new(initial: WorldState, params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let noise = (params.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, params.noise_sigma).expect("sigma validated"));
        let mut truth = initial;
        truth.timestep = 0;
        Ok(Self {
            truth,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            noise,
            pending: Vec::new(),
        })
    }

    /// Starts from a uniformly drawn position inside the objects' bounding
    /// box, at least `start_clearance` away from every object, with a random
    /// heading.
    pub fn with_random_start(scenario: &Scenario, params: SimParams) -> Result<Self, SimError> {
        let mut sim = Self::new(scenario.initial.clone(), params)?;
        let oois = &sim.truth.oois;
        if oois.is_empty() {
            return Ok(sim);
        }
        let (mut lo, mut hi) = (oois[0].position, oois[0].position);
        for o in oois {
            lo = Point2::new(lo.x.min(o.position.x), lo.y.min(o.position.y));
            hi = Point2::new(hi.x.max(o.position.x), hi.y.max(o.position.y));
        }
        for _ in 0..10_000 {
            let p = Point2::new(
                sim.rng.random_range(lo.x..=hi.x),
                sim.rng.random_range(lo.y..=hi.y),
            );
            if oois
                .iter()
                .all(|o| o.position.distance(&p) >= sim.params.start_clearance)
            {
                sim.truth.agent.position = p;
                sim.truth.agent.heading = normalize_angle(sim.rng.random_range(-PI..PI));
                return Ok(sim);
            }
        }
        Err(SimError::NoFreeArea)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn truth(&self) -> &WorldState {
        &self.truth
    }

    pub fn timestep(&self) -> u64 {
        self.truth.timestep
    }

    /// What perception reports for the current true state.
    pub fn observe(&mut self) -> WorldState {
        let mut w = self.truth.clone();
        if let Some(noise) = self.noise {
            let rng = &mut self.rng;
            let mut jitter =
                |p: Point2| Point2::new(p.x + noise.sample(rng), p.y + noise.sample(rng));
            w.agent.position = jitter(w.agent.position);
            for o in &mut w.oois {
                o.position = jitter(o.position);
            }
        }
        if let Some(held) = w.agent.held_object.clone() {
            let at = w.agent.position;
            if let Some(o) = w.ooi_mut(&held) {
                o.position = at;
            }
        }
        w
    }

    fn ooi_position(&self, id: &OoiId) -> Result<Point2, SimError> {
        self.truth
            .ooi(id)
            .map(|o| o.position)
            .ok_or_else(|| SimError::UnknownObject(id.clone()))
    }

    fn turn_towards(&mut self, bearing: f64) {
        let diff = normalize_angle(bearing - self.truth.agent.heading);
        let turn = diff.clamp(-self.params.turn_rate, self.params.turn_rate);
        self.truth.agent.heading = normalize_angle(self.truth.agent.heading + turn);
    }

    fn sync_held(&mut self) {
        if let Some(held) = self.truth.agent.held_object.clone() {
            let at = self.truth.agent.position;
            if let Some(o) = self.truth.ooi_mut(&held) {
                o.position = at;
            }
        }
    }

    fn advance_clock(&mut self) {
        self.truth.timestep += 1;
    }

    /// Moves by `(dx, dy)` (clamped to the walk speed) and turns toward the
    /// motion direction.
    pub fn move_by(&mut self, dx: f64, dy: f64) -> Movement {
        let len = dx.hypot(dy);
        if len > 0.0 {
            let scale = (self.params.walk_speed / len).min(1.0);
            let p = self.truth.agent.position;
            self.turn_towards(dy.atan2(dx));
            self.truth.agent.position = Point2::new(p.x + dx * scale, p.y + dy * scale);
            self.sync_held();
        }
        self.advance_clock();
        match (len > 0.0, self.truth.agent.held_object.is_some()) {
            (false, _) => Movement::Still,
            (true, false) => Movement::Walk,
            (true, true) => Movement::Transport,
        }
    }

    pub fn face(&mut self, heading: f64) -> Movement {
        self.turn_towards(heading);
        self.advance_clock();
        Movement::Still
    }

    pub fn wait(&mut self) -> Movement {
        self.advance_clock();
        Movement::Still
    }

    pub fn pick(&mut self, id: &OoiId) -> Result<Movement, SimError> {
        if let Some(h) = &self.truth.agent.held_object {
            return Err(SimError::AlreadyHolding(h.clone()));
        }
        let o = self
            .truth
            .ooi(id)
            .ok_or_else(|| SimError::UnknownObject(id.clone()))?;
        if !o.graspable {
            return Err(SimError::NotGraspable(id.clone()));
        }
        if o.position.distance(&self.truth.agent.position) > 0.6 {
            return Err(SimError::OutOfReach(id.clone()));
        }
        self.truth.agent.held_object = Some(id.clone());
        self.sync_held();
        self.advance_clock();
        Ok(Movement::Pick)
    }

    /// Releases the held object next to `near`, or a step ahead of the
    /// agent when no object is given.
    pub fn place(&mut self, near: Option<&OoiId>) -> Result<Movement, SimError> {
        let held = self
            .truth
            .agent
            .held_object
            .clone()
            .ok_or(SimError::NotHolding)?;
        let agent = self.truth.agent.position;
        let spot = match near {
            Some(id) => {
                let at = self.ooi_position(id)?;
                let d = at.distance(&agent);
                if d > 0.0 {
                    Point2::new(
                        at.x + (agent.x - at.x) / d * PLACE_OFFSET,
                        at.y + (agent.y - at.y) / d * PLACE_OFFSET,
                    )
                } else {
                    Point2::new(at.x + PLACE_OFFSET, at.y)
                }
            }
            None => {
                let h = self.truth.agent.heading;
                Point2::new(agent.x + 0.3 * h.cos(), agent.y + 0.3 * h.sin())
            }
        };
        self.truth.agent.held_object = None;
        if let Some(o) = self.truth.ooi_mut(&held) {
            o.position = spot;
        }
        self.advance_clock();
        Ok(Movement::Place)
    }

    /// Executes one tick of a walk toward `id`. Returns `None` if the agent
    /// is already within reach (no tick consumed).
    fn walk_tick(&mut self, id: &OoiId) -> Result<Option<Movement>, SimError> {
        let target = self.ooi_position(id)?;
        let here = self.truth.agent.position;
        let remaining = here.distance(&target) - self.params.reach;
        if remaining <= 1e-9 {
            return Ok(None);
        }
        let step = remaining.min(self.params.walk_speed);
        let bearing = here.bearing_to(&target);
        self.turn_towards(bearing);
        self.truth.agent.position =
            Point2::new(here.x + step * bearing.cos(), here.y + step * bearing.sin());
        self.sync_held();
        self.advance_clock();
        Ok(Some(if self.truth.agent.held_object.is_some() {
            Movement::Transport
        } else {
            Movement::Walk
        }))
    }

    /// Runs one tick of `script`, loading directives as needed. Returns
    /// `None` once the script is exhausted.
    pub fn step_script(
        &mut self,
        script: &mut std::collections::VecDeque<Directive>,
    ) -> Result<Option<Movement>, SimError> {
        loop {
            if self.pending.is_empty() {
                match script.pop_front() {
                    Some(d) => {
                        self.pending = expand(&d);
                        self.pending.reverse();
                        continue;
                    }
                    None => return Ok(None),
                }
            }
            let step = self.pending.last().cloned().expect("non-empty");
            let result = match &step {
                Step::Walk(id) => match self.walk_tick(id)? {
                    Some(m) => return Ok(Some(m)),
                    None => {
                        self.pending.pop();
                        continue;
                    }
                },
                Step::Pick(id) => self.pick(id)?,
                Step::Place(id) => self.place(Some(id))?,
                Step::Still => self.wait(),
            };
            self.pending.pop();
            return Ok(Some(result));
        }
    }

    /// Runs `script` to completion, recording the reported state and label of
    /// every tick (tick 0 is the initial state, labeled STILL).
    pub fn run(&mut self, script: AgentScript, scenario_id: &str) -> Result<Trace, SimError> {
        let mut queue: std::collections::VecDeque<Directive> = script.into();
        let mut states = vec![self.observe()];
        let mut labels = vec![Movement::Still];
        while let Some(m) = self.step_script(&mut queue)? {
            states.push(self.observe());
            labels.push(m);
        }
        Ok(Trace {
            scenario_id: scenario_id.to_string(),
            states,
            labels: Some(labels),
        })
    }
}

/// Random training routine: stand still, walk to a random graspable object,
/// carry it to a random other object, put it down, stand still.
pub fn random_script(world: &WorldState, rng: &mut impl Rng) -> AgentScript {
    let graspable: Vec<&OoiId> = world
        .oois
        .iter()
        .filter(|o| o.graspable)
        .map(|o| &o.id)
        .collect();
    let item = graspable[rng.random_range(0..graspable.len())].clone();
    let others: Vec<&OoiId> = world
        .oois
        .iter()
        .map(|o| &o.id)
        .filter(|id| **id != item)
        .collect();
    let dest = others[rng.random_range(0..others.len())].clone();
    vec![
        Directive::Dwell(rng.random_range(3..=8)),
        Directive::GoTo(item.clone()),
        Directive::Pick(item),
        Directive::GoTo(dest.clone()),
        Directive::Place(dest),
        Directive::Dwell(rng.random_range(3..=8)),
    ]
}

/// Labeled traces of `trials` random routines, each from a random start.
pub fn generate_traces(
    scenario: &Scenario,
    trials: u32,
    params: &SimParams,
) -> Result<Vec<Trace>, SimError> {
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let mut traces = Vec::new();
    for _ in 0..trials {
        let trial_params = SimParams {
            seed: master.random(),
            ..*params
        };
        let mut sim = Simulator::with_random_start(scenario, trial_params)?;
        let script = random_script(sim.truth(), &mut master);
        traces.push(sim.run(script, &scenario.id)?);
    }
    Ok(traces)
}
