//! Qualitative spatial relations between the observed agent and every object
//! of interest, plus the append-only sensory memory that stores them.
//!
//! Four descriptors are computed per tick: a bucketed distance (QDC), the sign
//! of the distance change along the agent–object line (QTC, basic variant),
//! whether the agent moves (MOS) and whether it holds something (HOLD).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{OoiId, Point2, WorldState};

#[derive(Debug, Error, PartialEq)]
pub enum QsrError {
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("QDC thresholds must be four strictly increasing non-negative values")]
    BadThresholds,
    #[error("timestep {got} does not follow the last stored timestep {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("unknown qualitative value `{0}`")]
    UnknownValue(String),
}

macro_rules! qualitative_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn index(&self) -> usize {
                *self as usize
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::serde::Serialize for $name {
            fn serialize<S: ::serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> ::serde::Deserialize<'de> for $name {
            fn deserialize<D: ::serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = <::std::borrow::Cow<'de, str>>::deserialize(d)?;
                text.parse().map_err(::serde::de::Error::custom)
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::qsr::QsrError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err($crate::qsr::QsrError::UnknownValue(other.to_string())),
                }
            }
        }
    };
}

pub(crate) use qualitative_enum;

qualitative_enum!(
    /// Distance bucket, ordered from closest to farthest.
    QdcValue {
        Touch => "touch",
        Near => "near",
        Medium => "medium",
        Far => "far",
        Ignore => "ignore",
    }
);

qualitative_enum!(
    /// `Minus`: the agent approaches the object, `Plus`: it moves away.
    QtcValue {
        Minus => "-",
        Zero => "0",
        Plus => "+",
    }
);

qualitative_enum!(MosValue {
    Moving => "moving",
    Stationary => "stationary",
});

qualitative_enum!(HoldValue {
    Holding => "holding",
    NotHolding => "not_holding",
});

/// Upper bounds (inclusive) of the touch, near, medium and far buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QdcThresholds([f64; 4]);

impl QdcThresholds {
    pub fn new(bounds: [f64; 4]) -> Result<Self, QsrError> {
        let ok = bounds[0] >= 0.0
            && bounds.iter().all(|b| b.is_finite())
            && bounds.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self(bounds))
        } else {
            Err(QsrError::BadThresholds)
        }
    }

    pub fn bounds(&self) -> &[f64; 4] {
        &self.0
    }
}

impl Default for QdcThresholds {
    fn default() -> Self {
        Self([0.6, 2.0, 3.0, 5.0])
    }
}

impl TryFrom<Vec<f64>> for QdcThresholds {
    type Error = QsrError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        let arr: [f64; 4] = v.try_into().map_err(|_| QsrError::BadThresholds)?;
        Self::new(arr)
    }
}

impl From<QdcThresholds> for Vec<f64> {
    fn from(t: QdcThresholds) -> Self {
        t.0.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsrConfig {
    pub qdc_thresholds: QdcThresholds,
    pub motion_epsilon: f64,
}

impl Default for QsrConfig {
    fn default() -> Self {
        Self {
            qdc_thresholds: QdcThresholds::default(),
            motion_epsilon: 0.01,
        }
    }
}

pub fn compute_qdc(distance: f64, thresholds: &QdcThresholds) -> Result<QdcValue, QsrError> {
    if distance < 0.0 || distance.is_nan() {
        return Err(QsrError::NegativeDistance(distance));
    }
    let [touch, near, medium, far] = thresholds.0;
    Ok(if distance <= touch {
        QdcValue::Touch
    } else if distance <= near {
        QdcValue::Near
    } else if distance <= medium {
        QdcValue::Medium
    } else if distance <= far {
        QdcValue::Far
    } else {
        QdcValue::Ignore
    })
}

pub fn compute_qtc(
    agent_prev: Point2,
    agent_curr: Point2,
    ooi_pos: Point2,
    motion_epsilon: f64,
) -> QtcValue {
    let before = agent_prev.distance(&ooi_pos);
    let after = agent_curr.distance(&ooi_pos);
    if after < before - motion_epsilon {
        QtcValue::Minus
    } else if after > before + motion_epsilon {
        QtcValue::Plus
    } else {
        QtcValue::Zero
    }
}

pub fn compute_mos(agent_prev: Point2, agent_curr: Point2, motion_epsilon: f64) -> MosValue {
    if agent_prev.distance(&agent_curr) > motion_epsilon {
        MosValue::Moving
    } else {
        MosValue::Stationary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OoiRelation {
    pub id: OoiId,
    pub qdc: QdcValue,
    pub qtc: QtcValue,
}

/// Qualitative description of one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsrFrame {
    pub timestep: u64,
    /// One entry per OOI, in world order.
    pub relations: Vec<OoiRelation>,
    pub mos: MosValue,
    pub hold: HoldValue,
}

impl QsrFrame {
    pub fn relation(&self, id: &OoiId) -> Option<&OoiRelation> {
        self.relations.iter().find(|r| &r.id == id)
    }

    /// Golden-test dump: one `t=<n> ooi=<id> qdc=<v> qtc=<v>` line per OOI
    /// followed by `t=<n> agent mos=<v> hold=<v>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.relations {
            out.push_str(&format!(
                "t={} ooi={} qdc={} qtc={}\n",
                self.timestep, r.id, r.qdc, r.qtc
            ));
        }
        out.push_str(&format!(
            "t={} agent mos={} hold={}\n",
            self.timestep, self.mos, self.hold
        ));
        out
    }
}

/// Computes a frame for `curr` given the previous world state, if any.
pub fn describe(
    curr: &WorldState,
    prev: Option<&WorldState>,
    config: &QsrConfig,
) -> Result<QsrFrame, QsrError> {
    let agent = curr.agent.position;
    let held = curr.agent.held_object.as_ref();
    let mut relations = Vec::with_capacity(curr.oois.len());
    for o in &curr.oois {
        let (qdc, qtc) = if held == Some(&o.id) {
            (QdcValue::Touch, QtcValue::Zero)
        } else {
            let qdc = compute_qdc(agent.distance(&o.position), &config.qdc_thresholds)?;
            let qtc = match prev {
                Some(p) => compute_qtc(p.agent.position, agent, o.position, config.motion_epsilon),
                None => QtcValue::Zero,
            };
            (qdc, qtc)
        };
        relations.push(OoiRelation {
            id: o.id.clone(),
            qdc,
            qtc,
        });
    }
    let mos = match prev {
        Some(p) => compute_mos(p.agent.position, agent, config.motion_epsilon),
        None => MosValue::Stationary,
    };
    let hold = if held.is_some() {
        HoldValue::Holding
    } else {
        HoldValue::NotHolding
    };
    Ok(QsrFrame {
        timestep: curr.timestep,
        relations,
        mos,
        hold,
    })
}

/// Time-ordered, append-only store of frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QsrLibrary {
    frames: Vec<QsrFrame>,
}

impl QsrLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn frames(&self) -> &[QsrFrame] {
        &self.frames
    }

    pub fn last(&self) -> Option<&QsrFrame> {
        self.frames.last()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn append(&mut self, frame: QsrFrame) -> Result<&QsrFrame, QsrError> {
        if let Some(last) = self.frames.last() {
            if frame.timestep <= last.timestep {
                return Err(QsrError::OutOfOrder {
                    last: last.timestep,
                    got: frame.timestep,
                });
            }
        }
        self.frames.push(frame);
        Ok(self.frames.last().expect("just pushed"))
    }

    pub fn dump(&self) -> String {
        self.frames.iter().map(QsrFrame::dump).collect()
    }
}

/// Turns a perception stream into frames and records them.
#[derive(Debug, Clone, Default)]
pub struct QsrEngine {
    config: QsrConfig,
    library: QsrLibrary,
    previous: Option<WorldState>,
}

impl QsrEngine {
    pub fn new(config: QsrConfig) -> Self {
        Self {
            config,
            library: QsrLibrary::new(),
            previous: None,
        }
    }

    pub fn config(&self) -> &QsrConfig {
        &self.config
    }

    pub fn library(&self) -> &QsrLibrary {
        &self.library
    }

    pub fn previous_world(&self) -> Option<&WorldState> {
        self.previous.as_ref()
    }

    pub fn ingest(&mut self, world: &WorldState) -> Result<&QsrFrame, QsrError> {
        if let Some(prev) = &self.previous {
            if world.timestep <= prev.timestep {
                return Err(QsrError::OutOfOrder {
                    last: prev.timestep,
                    got: world.timestep,
                });
            }
        }
        let frame = describe(world, self.previous.as_ref(), &self.config)?;
        self.previous = Some(world.clone());
        self.library.append(frame)
    }
}
