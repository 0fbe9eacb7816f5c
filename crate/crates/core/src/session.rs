//! Interactive steering sessions over a line-oriented socket protocol.
//!
//! The client steers the simulated person with one command per line:
//!
//! ```text
//! move <dx> <dy>     walk one tick (clamped to the walk speed)
//! face <radians>     turn toward a heading for one tick
//! pick <ooi>         grasp an object within reach
//! place [<ooi>]      put the held object down, next to <ooi> if given
//! wait [<n>]         stand still for n ticks (default 1)
//! reset <scenario>   restart from a scenario's initial state
//! quit               close the session
//! ```
//!
//! Every server line is one JSON object with `seq` (per connection, from 0),
//! `t` (simulation timestep) and `kind`. Besides the pipeline event kinds the
//! server sends `snapshot` (the reported world state), `ack`, `error` (with a
//! reason; the session state is unchanged) and `bye`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{SimParams, Simulator};
use crate::supervisor::{
    EventPayload, Models, Pipeline, PipelineConfig, PipelineError, PipelineEvent,
};
use crate::world::{OoiId, Scenario, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    Move(f64, f64),
    Face(f64),
    Pick(OoiId),
    Place(Option<OoiId>),
    Wait(u32),
    Reset(String),
    Quit,
}

#[derive(Debug, Error, PartialEq)]
pub enum CommandError {
    #[error("empty command")]
    Empty,
    #[error("unknown command `{0}`")]
    Unknown(String),
    #[error("`{0}` expects {1}")]
    Arity(&'static str, &'static str),
    #[error("`{0}` is not a finite number")]
    Number(String),
}

fn number(s: &str) -> Result<f64, CommandError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CommandError::Number(s.to_string()))
}

impl FromStr for Command {
    type Err = CommandError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&head, args)) = words.split_first() else {
            return Err(CommandError::Empty);
        };
        match (head, args) {
            ("move", [dx, dy]) => Ok(Command::Move(number(dx)?, number(dy)?)),
            ("move", _) => Err(CommandError::Arity("move", "<dx> <dy>")),
            ("face", [h]) => Ok(Command::Face(number(h)?)),
            ("face", _) => Err(CommandError::Arity("face", "<radians>")),
            ("pick", [id]) => Ok(Command::Pick(OoiId::new(*id))),
            ("pick", _) => Err(CommandError::Arity("pick", "<ooi>")),
            ("place", []) => Ok(Command::Place(None)),
            ("place", [id]) => Ok(Command::Place(Some(OoiId::new(*id)))),
            ("place", _) => Err(CommandError::Arity("place", "at most one object")),
            ("wait", []) => Ok(Command::Wait(1)),
            ("wait", [n]) => n
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .map(Command::Wait)
                .ok_or(CommandError::Arity("wait", "a positive tick count")),
            ("wait", _) => Err(CommandError::Arity("wait", "[<n>]")),
            ("reset", [s]) => Ok(Command::Reset(s.to_string())),
            ("reset", _) => Err(CommandError::Arity("reset", "<scenario>")),
            ("quit", []) => Ok(Command::Quit),
            _ => Err(CommandError::Unknown(head.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionPayload {
    Snapshot { scenario: String, world: WorldState },
    Ack { command: String },
    Error { command: String, reason: String },
    Bye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Body {
    Session(SessionPayload),
    Pipeline(EventPayload),
}

/// One server line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub seq: u64,
    pub t: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// One steering session: a simulator, a fresh pipeline and the message
/// counter of a single connection.
pub struct Session {
    models: Arc<Models>,
    config: PipelineConfig,
    params: SimParams,
    scenarios: Arc<BTreeMap<String, Scenario>>,
    scenario: String,
    sim: Simulator,
    pipeline: Pipeline,
    seq: u64,
}

impl Session {
    pub fn new(
        models: Arc<Models>,
        config: PipelineConfig,
        params: SimParams,
        scenarios: Arc<BTreeMap<String, Scenario>>,
        scenario: &str,
    ) -> Result<Self, SessionError> {
        let (sim, pipeline) = Self::start(&models, &config, params, &scenarios, scenario)?;
        Ok(Self {
            models,
            config,
            params,
            scenarios,
            scenario: scenario.to_string(),
            sim,
            pipeline,
            seq: 0,
        })
    }

    fn start(
        models: &Arc<Models>,
        config: &PipelineConfig,
        params: SimParams,
        scenarios: &BTreeMap<String, Scenario>,
        name: &str,
    ) -> Result<(Simulator, Pipeline), SessionError> {
        let scenario = scenarios
            .get(name)
            .ok_or_else(|| SessionError::UnknownScenario(name.to_string()))?;
        let sim = Simulator::new(scenario.initial.clone(), params).map_err(PipelineError::from)?;
        Ok((sim, Pipeline::new(models.clone(), config)?))
    }

    fn emit(&mut self, out: &mut Vec<Message>, t: u64, body: Body) {
        out.push(Message {
            seq: self.seq,
            t,
            body,
        });
        self.seq += 1;
    }

    fn tick(&mut self, out: &mut Vec<Message>) -> Result<(), SessionError> {
        let world = self.sim.observe();
        let t = world.timestep;
        let events = self.pipeline.tick(&world)?;
        self.emit(
            out,
            t,
            Body::Session(SessionPayload::Snapshot {
                scenario: self.scenario.clone(),
                world,
            }),
        );
        for PipelineEvent { t, payload } in events {
            self.emit(out, t, Body::Pipeline(payload));
        }
        Ok(())
    }

    /// Messages sent right after connecting: the initial state and its
    /// pipeline pass.
    pub fn opening(&mut self) -> Result<Vec<Message>, SessionError> {
        let mut out = Vec::new();
        self.tick(&mut out)?;
        Ok(out)
    }

    /// Handles one client line. The flag is false once the session is over.
    pub fn handle(&mut self, line: &str) -> Result<(Vec<Message>, bool), SessionError> {
        let mut out = Vec::new();
        let t = self.sim.timestep();
        let text = line.trim().to_string();
        let command = match text.parse::<Command>() {
            Ok(c) => c,
            Err(e) => {
                self.reject(&mut out, t, text, e.to_string());
                return Ok((out, true));
            }
        };
        let moved = match &command {
            Command::Move(dx, dy) => Ok(self.sim.move_by(*dx, *dy)),
            Command::Face(h) => Ok(self.sim.face(*h)),
            Command::Pick(id) => self.sim.pick(id),
            Command::Place(near) => self.sim.place(near.as_ref()),
            Command::Wait(n) => {
                self.emit(
                    &mut out,
                    t,
                    Body::Session(SessionPayload::Ack { command: text }),
                );
                for _ in 0..*n {
                    self.sim.wait();
                    self.tick(&mut out)?;
                }
                return Ok((out, true));
            }
            Command::Reset(name) => {
                match Self::start(
                    &self.models,
                    &self.config,
                    self.params,
                    &self.scenarios,
                    name,
                ) {
                    Ok((sim, pipeline)) => {
                        self.sim = sim;
                        self.pipeline = pipeline;
                        self.scenario = name.clone();
                        self.emit(
                            &mut out,
                            0,
                            Body::Session(SessionPayload::Ack { command: text }),
                        );
                        self.tick(&mut out)?;
                    }
                    Err(SessionError::UnknownScenario(_)) => {
                        self.reject(&mut out, t, text, format!("unknown scenario `{name}`"));
                    }
                    Err(e) => return Err(e),
                }
                return Ok((out, true));
            }
            Command::Quit => {
                self.emit(&mut out, t, Body::Session(SessionPayload::Bye));
                return Ok((out, false));
            }
        };
        match moved {
            Err(e) => self.reject(&mut out, t, text, e.to_string()),
            Ok(_) => {
                self.emit(
                    &mut out,
                    t,
                    Body::Session(SessionPayload::Ack { command: text }),
                );
                self.tick(&mut out)?;
            }
        }
        Ok((out, true))
    }

    fn reject(&mut self, out: &mut Vec<Message>, t: u64, command: String, reason: String) {
        self.emit(
            out,
            t,
            Body::Session(SessionPayload::Error { command, reason }),
        );
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }
}

fn send(stream: &mut impl Write, messages: &[Message]) -> io::Result<()> {
    for m in messages {
        writeln!(stream, "{}", m.to_line())?;
    }
    stream.flush()
}

/// Runs one connection to completion.
pub fn handle_connection(stream: TcpStream, mut session: Session) -> io::Result<()> {
    // replies are small and interactive
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let to_io = |e: SessionError| io::Error::other(e.to_string());
    send(&mut writer, &session.opening().map_err(to_io)?)?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (messages, open) = session.handle(&line).map_err(to_io)?;
        send(&mut writer, &messages)?;
        if !open {
            break;
        }
    }
    Ok(())
}

/// Accepts connections forever, one thread and one fresh session each.
pub fn serve<F>(listener: TcpListener, new_session: F) -> io::Result<()>
where
    F: Fn() -> Result<Session, SessionError> + Send + Sync + 'static,
{
    let new_session = Arc::new(new_session);
    for stream in listener.incoming() {
        let stream = stream?;
        let new_session = new_session.clone();
        thread::spawn(move || match new_session() {
            Ok(session) => {
                if let Err(e) = handle_connection(stream, session) {
                    eprintln!("session ended: {e}");
                }
            }
            Err(e) => eprintln!("cannot start session: {e}"),
        });
    }
    Ok(())
}
