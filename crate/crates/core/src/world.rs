//! Ground-truth geometry of the environment: agent pose, objects of interest,
//! world states and the two on-disk formats that carry them (scenario
//! documents and trace logs).

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::movement::Movement;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("scenario document is not valid: {0}")]
    Syntax(String),
    #[error("duplicate OOI id `{0}`")]
    DuplicateId(String),
    #[error("malformed geometry for `{0}`: coordinates must be finite")]
    MalformedGeometry(String),
    #[error("OOI `{id}` uses label `{label}` which is not in the scenario vocabulary")]
    UnknownLabel { id: String, label: String },
    #[error("agent holds `{0}` which is not an OOI of the scenario")]
    UnknownHeldObject(String),
    #[error("trace line {line}: {reason}")]
    TraceFormat { line: usize, reason: String },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace timesteps must be contiguous from 0 (found {found} at index {index})")]
    NonContiguous { index: usize, found: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn bearing_to(&self, other: &Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    /// Moves from `self` towards `other` by at most `step` meters.
    pub fn step_towards(&self, other: &Point2, step: f64) -> Point2 {
        let d = self.distance(other);
        if d <= step || d == 0.0 {
            *other
        } else {
            let k = step / d;
            Point2::new(
                self.x + (other.x - self.x) * k,
                self.y + (other.y - self.y) * k,
            )
        }
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OoiId(pub String);

impl OoiId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OoiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for OoiId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub position: Point2,
    /// Radians in `[-π, π)`.
    pub heading: f64,
    pub held_object: Option<OoiId>,
}

impl AgentPose {
    pub fn new(position: Point2, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
            held_object: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ooi {
    pub id: OoiId,
    pub label: String,
    pub position: Point2,
    pub graspable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub timestep: u64,
    pub agent: AgentPose,
    pub oois: Vec<Ooi>,
}

impl WorldState {
    pub fn ooi(&self, id: &OoiId) -> Option<&Ooi> {
        self.oois.iter().find(|o| &o.id == id)
    }

    pub fn ooi_mut(&mut self, id: &OoiId) -> Option<&mut Ooi> {
        self.oois.iter_mut().find(|o| &o.id == id)
    }

    pub fn label_of(&self, id: &OoiId) -> Option<&str> {
        self.ooi(id).map(|o| o.label.as_str())
    }

    /// Checks the structural invariants: unique ids, finite geometry, the held
    /// object exists and is co-located with the agent.
    pub fn validate(&self) -> Result<(), WorldError> {
        let mut seen = HashSet::new();
        if !self.agent.position.is_finite() || !self.agent.heading.is_finite() {
            return Err(WorldError::MalformedGeometry("agent".into()));
        }
        for o in &self.oois {
            if !seen.insert(&o.id) {
                return Err(WorldError::DuplicateId(o.id.0.clone()));
            }
            if !o.position.is_finite() {
                return Err(WorldError::MalformedGeometry(o.id.0.clone()));
            }
        }
        if let Some(held) = &self.agent.held_object {
            let o = self
                .ooi(held)
                .ok_or_else(|| WorldError::UnknownHeldObject(held.0.clone()))?;
            if o.position != self.agent.position {
                return Err(WorldError::MalformedGeometry(format!(
                    "{} is held but not co-located with the agent",
                    held
                )));
            }
        }
        Ok(())
    }
}

/// Absolute angle between the agent's heading and the agent→target line, in
/// `[0, π]`. A target coincident with the agent yields 0.
pub fn heading_angle_to(agent: &AgentPose, target: &Point2) -> f64 {
    if agent.position.distance(target) == 0.0 {
        return 0.0;
    }
    let bearing = agent.position.bearing_to(target);
    normalize_angle(bearing - agent.heading).abs().min(PI)
}

/// Label vocabulary a scenario may draw OOI labels from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    labels: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct ScenarioDoc {
    scenario: String,
    #[serde(default)]
    vocabulary: Vec<String>,
    agent: AgentDoc,
    #[serde(default)]
    ooi: Vec<OoiDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct AgentDoc {
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct OoiDoc {
    id: String,
    label: String,
    x: f64,
    y: f64,
    graspable: bool,
}

/// A parsed scenario: its name, the initial world and the label vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub initial: WorldState,
    pub vocabulary: Vocabulary,
}

impl Scenario {
    pub fn parse(source: &str) -> Result<Self, WorldError> {
        let doc: ScenarioDoc =
            toml::from_str(source).map_err(|e| WorldError::Syntax(e.to_string()))?;
        let vocabulary = Vocabulary::new(doc.vocabulary.iter().cloned());
        let mut seen = HashSet::new();
        let mut oois = Vec::with_capacity(doc.ooi.len());
        for o in doc.ooi {
            if !seen.insert(o.id.clone()) {
                return Err(WorldError::DuplicateId(o.id));
            }
            let position = Point2::new(o.x, o.y);
            if !position.is_finite() {
                return Err(WorldError::MalformedGeometry(o.id));
            }
            if !vocabulary.contains(&o.label) {
                return Err(WorldError::UnknownLabel {
                    id: o.id,
                    label: o.label,
                });
            }
            oois.push(Ooi {
                id: OoiId(o.id),
                label: o.label,
                position,
                graspable: o.graspable,
            });
        }
        let agent_pos = Point2::new(doc.agent.x, doc.agent.y);
        if !agent_pos.is_finite() || !doc.agent.heading.is_finite() {
            return Err(WorldError::MalformedGeometry("agent".into()));
        }
        Ok(Self {
            id: doc.scenario,
            initial: WorldState {
                timestep: 0,
                agent: AgentPose::new(agent_pos, doc.agent.heading),
                oois,
            },
            vocabulary,
        })
    }

    pub fn to_document(&self) -> String {
        let doc = ScenarioDoc {
            scenario: self.id.clone(),
            vocabulary: self.vocabulary.labels().map(str::to_string).collect(),
            agent: AgentDoc {
                x: self.initial.agent.position.x,
                y: self.initial.agent.position.y,
                heading: self.initial.agent.heading,
            },
            ooi: self
                .initial
                .oois
                .iter()
                .map(|o| OoiDoc {
                    id: o.id.0.clone(),
                    label: o.label.clone(),
                    x: o.position.x,
                    y: o.position.y,
                    graspable: o.graspable,
                })
                .collect(),
        };
        toml::to_string(&doc).expect("scenario documents always serialize")
    }

    /// The bundled kitchen layout.
    pub fn kitchen() -> Self {
        Self::parse(crate::fixtures::KITCHEN_SCENARIO).expect("bundled kitchen scenario parses")
    }
}

/// Returns the initial world state and the vocabulary of a scenario document.
pub fn load_scenario(source: &str) -> Result<(WorldState, Vocabulary), WorldError> {
    let s = Scenario::parse(source)?;
    Ok((s.initial, s.vocabulary))
}

/// A recorded observation stream, optionally labeled with the ground-truth
/// movement at each tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario_id: String,
    pub states: Vec<WorldState>,
    pub labels: Option<Vec<Movement>>,
}

impl Trace {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.states.is_empty() {
            return Err(WorldError::EmptyTrace);
        }
        for (i, s) in self.states.iter().enumerate() {
            if s.timestep != i as u64 {
                return Err(WorldError::NonContiguous {
                    index: i,
                    found: s.timestep,
                });
            }
            s.validate()?;
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.states.len() {
                return Err(WorldError::TraceFormat {
                    line: 0,
                    reason: "label count differs from state count".into(),
                });
            }
        }
        Ok(())
    }

    /// Trace log: a `# trace <scenario>` header, then one tab-separated line
    /// per world state: timestep, agent x, agent y, heading, held object
    /// (`-` for none), OOIs as `id:label:x:y:graspable` joined by `;`, and an
    /// optional movement label.
    pub fn to_log(&self) -> String {
        let mut out = format!("# trace {}\n", self.scenario_id);
        for (i, s) in self.states.iter().enumerate() {
            let held = s
                .agent
                .held_object
                .as_ref()
                .map_or("-".to_string(), |h| h.0.clone());
            let oois: Vec<String> = s
                .oois
                .iter()
                .map(|o| {
                    format!(
                        "{}:{}:{}:{}:{}",
                        o.id, o.label, o.position.x, o.position.y, o.graspable
                    )
                })
                .collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                s.timestep,
                s.agent.position.x,
                s.agent.position.y,
                s.agent.heading,
                held,
                oois.join(";")
            ));
            if let Some(labels) = &self.labels {
                out.push('\t');
                out.push_str(labels[i].as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_log(text: &str) -> Result<Self, WorldError> {
        let mut scenario_id = None;
        let mut states = Vec::new();
        let mut labels = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |reason: &str| WorldError::TraceFormat {
                line,
                reason: reason.to_string(),
            };
            if raw.trim().is_empty() {
                continue;
            }
            if let Some(rest) = raw.strip_prefix('#') {
                if let Some(id) = rest.trim().strip_prefix("trace") {
                    scenario_id = Some(id.trim().to_string());
                }
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 6 && cols.len() != 7 {
                return Err(err("expected 6 or 7 tab-separated columns"));
            }
            let num = |s: &str| f64::from_str(s).map_err(|_| err("bad number"));
            let timestep = cols[0].parse::<u64>().map_err(|_| err("bad timestep"))?;
            let position = Point2::new(num(cols[1])?, num(cols[2])?);
            let heading = num(cols[3])?;
            let held_object = (cols[4] != "-").then(|| OoiId(cols[4].to_string()));
            let mut oois = Vec::new();
            if !cols[5].is_empty() {
                for item in cols[5].split(';') {
                    let f: Vec<&str> = item.split(':').collect();
                    if f.len() != 5 {
                        return Err(err("OOI entries need 5 fields"));
                    }
                    oois.push(Ooi {
                        id: OoiId(f[0].to_string()),
                        label: f[1].to_string(),
                        position: Point2::new(num(f[2])?, num(f[3])?),
                        graspable: f[4].parse().map_err(|_| err("bad graspable flag"))?,
                    });
                }
            }
            states.push(WorldState {
                timestep,
                agent: AgentPose {
                    position,
                    heading,
                    held_object,
                },
                oois,
            });
            if cols.len() == 7 {
                labels.push(cols[6].parse::<Movement>().map_err(|_| err("bad label"))?);
            }
        }
        let labels = if labels.is_empty() {
            None
        } else if labels.len() == states.len() {
            Some(labels)
        } else {
            return Err(WorldError::TraceFormat {
                line: 0,
                reason: "either every record or none carries a label".into(),
            });
        };
        let trace = Trace {
            scenario_id: scenario_id.unwrap_or_default(),
            states,
            labels,
        };
        trace.validate()?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent_at_origin() -> AgentPose {
        AgentPose::new(Point2::new(0.0, 0.0), 0.0)
    }

    #[test]
    fn heading_angle_examples() {
        let a = agent_at_origin();
        assert_eq!(heading_angle_to(&a, &Point2::new(1.0, 0.0)), 0.0);
        assert!((heading_angle_to(&a, &Point2::new(-1.0, 0.0)) - PI).abs() < 1e-12);
        assert!((heading_angle_to(&a, &Point2::new(0.0, 1.0)) - PI / 2.0).abs() < 1e-12);
        assert_eq!(heading_angle_to(&a, &Point2::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn normalize_angle_range() {
        for a in [-10.0, -PI, -1.0, 0.0, 1.0, PI, 7.5] {
            let n = normalize_angle(a);
            assert!((-PI..PI).contains(&n), "{a} -> {n}");
        }
        assert!((normalize_angle(PI) + PI).abs() < 1e-12);
    }

    #[test]
    fn kitchen_has_seven_oois() {
        let (world, vocab) = load_scenario(crate::fixtures::KITCHEN_SCENARIO).unwrap();
        assert_eq!(world.timestep, 0);
        assert!(world.agent.held_object.is_none());
        let labels: BTreeSet<&str> = world.oois.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(
            labels,
            BTreeSet::from([
                "WaterBottle",
                "Meal",
                "Biscuits",
                "Glass",
                "Plate",
                "Hobs",
                "Sink"
            ])
        );
        assert_eq!(world.oois.len(), 7);
        assert!(world.oois.iter().all(|o| vocab.contains(&o.label)));
    }

    #[test]
    fn empty_ooi_list_is_valid() {
        let doc =
            "scenario = \"empty\"\nvocabulary = []\n[agent]\nx = 0.0\ny = 0.0\nheading = 0.0\n";
        let (world, _) = load_scenario(doc).unwrap();
        assert!(world.oois.is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = r#"
scenario = "dup"
vocabulary = ["Plate"]
[agent]
x = 0.0
y = 0.0
heading = 0.0
[[ooi]]
id = "plate"
label = "Plate"
x = 1.0
y = 1.0
graspable = true
[[ooi]]
id = "plate"
label = "Plate"
x = 2.0
y = 1.0
graspable = true
"#;
        assert_eq!(
            load_scenario(doc).unwrap_err(),
            WorldError::DuplicateId("plate".into())
        );
    }

    #[test]
    fn unknown_label_and_bad_geometry() {
        let doc = r#"
scenario = "x"
vocabulary = ["Plate"]
[agent]
x = 0.0
y = 0.0
heading = 0.0
[[ooi]]
id = "fork"
label = "Fork"
x = 1.0
y = 1.0
graspable = true
"#;
        assert!(matches!(
            load_scenario(doc),
            Err(WorldError::UnknownLabel { .. })
        ));
        let doc = doc.replace("Fork", "Plate").replace("x = 1.0", "x = nan");
        assert!(matches!(
            load_scenario(&doc),
            Err(WorldError::MalformedGeometry(_))
        ));
        assert!(matches!(
            load_scenario("this is [not toml"),
            Err(WorldError::Syntax(_))
        ));
    }

    #[test]
    fn scenario_round_trip() {
        let s = Scenario::kitchen();
        let again = Scenario::parse(&s.to_document()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn trace_log_round_trip_with_labels() {
        let s = Scenario::kitchen();
        let mut second = s.initial.clone();
        second.timestep = 1;
        second.agent.position = Point2::new(1.25, -0.1);
        let trace = Trace {
            scenario_id: s.id.clone(),
            states: vec![s.initial.clone(), second],
            labels: Some(vec![Movement::Still, Movement::Walk]),
        };
        let back = Trace::from_log(&trace.to_log()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn trace_must_be_contiguous() {
        let s = Scenario::kitchen();
        let mut late = s.initial.clone();
        late.timestep = 2;
        let trace = Trace {
            scenario_id: "k".into(),
            states: vec![s.initial.clone(), late],
            labels: None,
        };
        assert!(matches!(
            Trace::from_log(&trace.to_log()),
            Err(WorldError::NonContiguous { index: 1, found: 2 })
        ));
        assert_eq!(Trace::from_log("# trace k\n"), Err(WorldError::EmptyTrace));
    }
}
