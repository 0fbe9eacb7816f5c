//! Knowledge base used for verification: a single-parent class taxonomy,
//! boolean entity properties, per-action slot constraints, horn rules that
//! complete partial statements, and what each agent class can execute.
//!
//! Constraint terms name an entity, a class (satisfied by any subclass
//! member) or a property. A term list is a conjunction; a trailing `?` on the
//! list makes the slot optional.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goal::{Explanation, PlanLibrary};
use crate::world::{OoiId, WorldState};

#[derive(Debug, Error, PartialEq)]
pub enum KbError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown constraint term `{0}`")]
    UnknownTerm(String),
    #[error("class taxonomy has a cycle through `{0}`")]
    Cycle(String),
    #[error("rule {0} concludes something its action rule forbids")]
    Contradiction(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::Invalid(r) => write!(f, "invalid: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<String>,
    pub optional: bool,
}

impl Constraint {
    fn parse(text: &str) -> Self {
        let text = text.trim();
        let (text, optional) = match text.strip_suffix('?') {
            Some(t) => (t, true),
            None => (text, false),
        };
        let terms = text
            .split_whitespace()
            .filter(|t| *t != "*")
            .map(String::from)
            .collect();
        Self { terms, optional }
    }

    fn render(&self) -> String {
        let mut s = if self.terms.is_empty() {
            "*".to_string()
        } else {
            self.terms.join(" ")
        };
        if self.optional {
            s.push('?');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRule {
    pub action: String,
    pub actor: Constraint,
    pub target: Constraint,
    pub destination: Constraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Actor,
    Action,
    Target,
    Destination,
}

impl Slot {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "actor" => Slot::Actor,
            "action" => Slot::Action,
            "target" => Slot::Target,
            "destination" => Slot::Destination,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Slot::Actor => "actor",
            Slot::Action => "action",
            Slot::Target => "target",
            Slot::Destination => "destination",
        }
    }
}

/// `slot(term)`: the slot is filled and satisfies the term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub slot: Slot,
    pub term: String,
}

impl Atom {
    fn parse(text: &str) -> Option<Self> {
        let (slot, rest) = text.trim().split_once('(')?;
        let term = rest.strip_suffix(')')?.trim();
        Some(Self {
            slot: Slot::parse(slot.trim())?,
            term: term.to_string(),
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.slot.name(), self.term)
    }
}

/// Horn clause whose conclusion fills an empty target or destination slot
/// with an entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRule {
    pub conditions: Vec<Atom>,
    pub conclusion: Atom,
}

/// A possibly incomplete statement "actor performs action on target at
/// destination", over entity names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub actor: String,
    pub action: String,
    pub target: Option<String>,
    pub destination: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    /// Class name to parent, in declaration order.
    classes: Vec<(String, Option<String>)>,
    entities: Vec<(String, String)>,
    property_names: Vec<String>,
    properties: BTreeMap<String, BTreeSet<String>>,
    rules: Vec<ActionRule>,
    inference: Vec<InferenceRule>,
    capabilities: Vec<(String, Vec<String>)>,
}

const SECTIONS: [&str; 6] = [
    "classes",
    "entities",
    "properties",
    "action-rules",
    "inference-rules",
    "capabilities",
];

impl KnowledgeBase {
    pub fn kitchen() -> Self {
        Self::parse(crate::fixtures::KITCHEN_KB).expect("built-in knowledge base is valid")
    }

    /// Parses the sectioned document (`[classes]`, `[entities]`,
    /// `[properties]`, `[action-rules]`, `[inference-rules]`,
    /// `[capabilities]`).
    pub fn parse(source: &str) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::default();
        let mut section: Option<&str> = None;
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let err = |reason: String| KbError::Syntax { line, reason };
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|s| **s == name)
                        .copied()
                        .ok_or_else(|| err(format!("unknown section `{name}`")))?,
                );
                continue;
            }
            let section = section.ok_or_else(|| err("content before the first section".into()))?;
            match section {
                "classes" => {
                    let (name, parent) = match text.split_once(':') {
                        Some((n, p)) => (n.trim(), Some(p.trim().to_string())),
                        None => (text, None),
                    };
                    kb.classes.push((name.to_string(), parent));
                }
                "entities" => {
                    let (name, class) = text
                        .split_once(':')
                        .ok_or_else(|| err("expected `<entity>: <class>`".into()))?;
                    kb.entities
                        .push((name.trim().to_string(), class.trim().to_string()));
                }
                "properties" => {
                    if let Some(names) = text.strip_prefix("flags:") {
                        kb.property_names = names.split_whitespace().map(String::from).collect();
                        continue;
                    }
                    let (name, flags) = text
                        .split_once(':')
                        .ok_or_else(|| err("expected `<entity>: <flags>`".into()))?;
                    let flags: BTreeSet<String> =
                        flags.split_whitespace().map(String::from).collect();
                    if let Some(f) = flags.iter().find(|f| !kb.property_names.contains(f)) {
                        return Err(err(format!("undeclared property `{f}`")));
                    }
                    kb.properties.insert(name.trim().to_string(), flags);
                }
                "action-rules" => {
                    let (action, rest) = text.split_once(':').ok_or_else(|| {
                        err("expected `<action>: actor | target | destination`".into())
                    })?;
                    let parts: Vec<&str> = rest.split('|').collect();
                    if parts.len() != 3 {
                        return Err(err("an action rule has three slots".into()));
                    }
                    kb.rules.push(ActionRule {
                        action: action.trim().to_string(),
                        actor: Constraint::parse(parts[0]),
                        target: Constraint::parse(parts[1]),
                        destination: Constraint::parse(parts[2]),
                    });
                }
                "inference-rules" => {
                    let (lhs, rhs) = text
                        .split_once("=>")
                        .ok_or_else(|| err("expected `<conditions> => <conclusion>`".into()))?;
                    let conditions = split_atoms(lhs)
                        .iter()
                        .map(|a| Atom::parse(a).ok_or_else(|| err(format!("bad atom `{a}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    let conclusion = Atom::parse(rhs)
                        .ok_or_else(|| err(format!("bad atom `{}`", rhs.trim())))?;
                    if !matches!(conclusion.slot, Slot::Target | Slot::Destination) {
                        return Err(err("conclusions fill a target or destination".into()));
                    }
                    kb.inference.push(InferenceRule {
                        conditions,
                        conclusion,
                    });
                }
                "capabilities" => {
                    let (class, actions) = text
                        .split_once(':')
                        .ok_or_else(|| err("expected `<class>: <actions>`".into()))?;
                    kb.capabilities.push((
                        class.trim().to_string(),
                        actions.split_whitespace().map(String::from).collect(),
                    ));
                }
                _ => unreachable!("section names are checked"),
            }
        }
        kb.check()?;
        Ok(kb)
    }

    fn check(&self) -> Result<(), KbError> {
        for (name, parent) in &self.classes {
            if let Some(p) = parent {
                if !self.is_class(p) {
                    return Err(KbError::UnknownClass(p.clone()));
                }
            }
            let mut seen = BTreeSet::new();
            let mut cur = Some(name.as_str());
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return Err(KbError::Cycle(name.clone()));
                }
                cur = self.parent(c);
            }
        }
        for (entity, class) in &self.entities {
            if !self.is_class(class) {
                return Err(KbError::UnknownClass(class.clone()));
            }
            if self.is_class(entity) {
                return Err(KbError::UnknownEntity(format!("{entity} is also a class")));
            }
        }
        for name in self.properties.keys() {
            if !self.is_entity(name) {
                return Err(KbError::UnknownEntity(name.clone()));
            }
        }
        let all_terms = self.rules.iter().flat_map(|r| {
            r.actor
                .terms
                .iter()
                .chain(&r.target.terms)
                .chain(&r.destination.terms)
        });
        for t in all_terms {
            self.check_term(t)?;
        }
        for rule in &self.inference {
            for atom in rule
                .conditions
                .iter()
                .chain(std::iter::once(&rule.conclusion))
            {
                match atom.slot {
                    Slot::Action => {
                        self.rule(&atom.term)?;
                    }
                    _ => self.check_term(&atom.term)?,
                }
            }
            if !self.is_entity(&rule.conclusion.term) {
                return Err(KbError::UnknownEntity(rule.conclusion.term.clone()));
            }
        }
        for (class, actions) in &self.capabilities {
            if !self.is_class(class) {
                return Err(KbError::UnknownClass(class.clone()));
            }
            for a in actions {
                self.rule(a)?;
            }
        }
        // a rule's conclusion must satisfy the constraint of every action it
        // can fire for
        for (i, rule) in self.inference.iter().enumerate() {
            for r in &self.rules {
                let fires = rule
                    .conditions
                    .iter()
                    .filter(|a| a.slot == Slot::Action)
                    .all(|a| a.term == r.action);
                if !fires {
                    continue;
                }
                let c = match rule.conclusion.slot {
                    Slot::Target => &r.target,
                    _ => &r.destination,
                };
                if !self.satisfies_all(&rule.conclusion.term, &c.terms) {
                    return Err(KbError::Contradiction(i + 1));
                }
            }
        }
        Ok(())
    }

    fn check_term(&self, term: &str) -> Result<(), KbError> {
        if self.is_class(term)
            || self.is_entity(term)
            || self.property_names.iter().any(|p| p == term)
        {
            Ok(())
        } else {
            Err(KbError::UnknownTerm(term.to_string()))
        }
    }

    pub fn is_class(&self, name: &str) -> bool {
        self.classes.iter().any(|(c, _)| c == name)
    }

    pub fn is_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|(e, _)| e == name)
    }

    pub fn parent(&self, class: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(c, _)| c == class)
            .and_then(|(_, p)| p.as_deref())
    }

    pub fn class_of(&self, entity: &str) -> Option<&str> {
        self.entities
            .iter()
            .find(|(e, _)| e == entity)
            .map(|(_, c)| c.as_str())
    }

    pub fn is_subclass(&self, class: &str, ancestor: &str) -> bool {
        let mut cur = Some(class);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }

    pub fn property_names(&self) -> &[String] {
        &self.property_names
    }

    pub fn has_property(&self, entity: &str, property: &str) -> bool {
        self.properties
            .get(entity)
            .is_some_and(|p| p.contains(property))
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|(e, _)| e.as_str())
    }

    fn rule(&self, action: &str) -> Result<&ActionRule, KbError> {
        self.rules
            .iter()
            .find(|r| r.action == action)
            .ok_or_else(|| KbError::UnknownAction(action.to_string()))
    }

    pub fn action_rules(&self) -> &[ActionRule] {
        &self.rules
    }

    /// Whether `name` (an entity or a class) satisfies one constraint term.
    pub fn satisfies(&self, name: &str, term: &str) -> bool {
        if name == term {
            return true;
        }
        let class = if self.is_class(name) {
            Some(name)
        } else {
            self.class_of(name)
        };
        if self.is_class(term) {
            return class.is_some_and(|c| self.is_subclass(c, term));
        }
        self.has_property(name, term)
    }

    pub fn satisfies_all(&self, name: &str, terms: &[String]) -> bool {
        terms.iter().all(|t| self.satisfies(name, t))
    }

    fn slot_value<'a>(&self, s: &'a Statement, slot: Slot) -> Option<&'a str> {
        match slot {
            Slot::Actor => Some(&s.actor),
            Slot::Action => Some(&s.action),
            Slot::Target => s.target.as_deref(),
            Slot::Destination => s.destination.as_deref(),
        }
    }

    /// Forward-chains the inference rules to a fixpoint, filling only empty
    /// slots.
    pub fn complete(&self, statement: &Statement) -> Statement {
        let mut s = statement.clone();
        loop {
            let mut changed = false;
            for rule in &self.inference {
                let holds = rule.conditions.iter().all(|a| match a.slot {
                    Slot::Action => s.action == a.term,
                    slot => self
                        .slot_value(&s, slot)
                        .is_some_and(|v| self.satisfies(v, &a.term)),
                });
                if !holds {
                    continue;
                }
                let slot = match rule.conclusion.slot {
                    Slot::Target => &mut s.target,
                    _ => &mut s.destination,
                };
                if slot.is_none() {
                    *slot = Some(rule.conclusion.term.clone());
                    changed = true;
                }
            }
            if !changed {
                return s;
            }
        }
    }

    /// Checks a statement against its action rule after completing it.
    pub fn validate_action(&self, statement: &Statement) -> Result<Verdict, KbError> {
        let rule = self.rule(&statement.action)?;
        if !self.is_class(&statement.actor) && !self.is_entity(&statement.actor) {
            return Err(KbError::UnknownEntity(statement.actor.clone()));
        }
        for e in statement.target.iter().chain(&statement.destination) {
            if !self.is_entity(e) {
                return Err(KbError::UnknownEntity(e.clone()));
            }
        }
        let s = self.complete(statement);
        let slots = [
            ("actor", Some(s.actor.as_str()), &rule.actor),
            ("target", s.target.as_deref(), &rule.target),
            ("destination", s.destination.as_deref(), &rule.destination),
        ];
        for (slot, value, c) in slots {
            match value {
                None if c.optional || c.terms.is_empty() => {}
                None => {
                    return Ok(Verdict::Invalid(format!(
                        "{} needs a {slot}",
                        statement.action
                    )))
                }
                Some(v) => {
                    if let Some(t) = c.terms.iter().find(|t| !self.satisfies(v, t)) {
                        return Ok(Verdict::Invalid(format!(
                            "{} {slot} {v} is not {t}",
                            statement.action
                        )));
                    }
                }
            }
        }
        Ok(Verdict::Valid)
    }

    /// Checks the objects bound to the observed leaves of an explanation
    /// against the roles its goal declares. A role variable must also keep
    /// denoting the same object across leaves.
    pub fn validate_explanation(&self, library: &PlanLibrary, e: &Explanation) -> Verdict {
        let Some(goal) = library.goal(&e.goal) else {
            return Verdict::Invalid(format!("unknown goal {}", e.goal));
        };
        let mut bound: BTreeMap<&str, &OoiId> = BTreeMap::new();
        for (leaf, binding) in goal.leaves().iter().zip(&e.bindings) {
            let (Some(obs), Some(var)) = (binding, &leaf.target) else {
                continue;
            };
            let role = goal.role(var).expect("library validated roles");
            if let Some(label) = &obs.target_label {
                if let Some(t) = role.terms.iter().find(|t| !self.satisfies(label, t)) {
                    return Verdict::Invalid(format!(
                        "{}: {} on {label}, but {var} must be {t}",
                        e.goal, leaf.symbol
                    ));
                }
            }
            if let Some(id) = &obs.target {
                match bound.get(var.as_str()) {
                    Some(prev) if *prev != id => {
                        return Verdict::Invalid(format!(
                            "{}: {var} is both {prev} and {id}",
                            e.goal
                        ))
                    }
                    _ => {
                        bound.insert(var, id);
                    }
                }
            }
        }
        Verdict::Valid
    }

    /// Scene object standing for a role: the first object in scene order
    /// whose label satisfies every term.
    pub fn resolve_role(&self, terms: &[String], world: &WorldState) -> Option<OoiId> {
        world
            .oois
            .iter()
            .find(|o| self.satisfies_all(&o.label, terms))
            .map(|o| o.id.clone())
    }

    pub fn capable(&self, class: &str, action: &str) -> bool {
        self.capabilities
            .iter()
            .filter(|(c, _)| self.is_subclass(class, c))
            .any(|(_, actions)| actions.iter().any(|a| a == action))
    }

    pub fn robot_capable(&self, action: &str) -> bool {
        self.capable("Robot", action)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::from("[classes]\n");
        for (c, p) in &self.classes {
            match p {
                Some(p) => out.push_str(&format!("{c}: {p}\n")),
                None => out.push_str(&format!("{c}\n")),
            }
        }
        out.push_str("\n[entities]\n");
        for (e, c) in &self.entities {
            out.push_str(&format!("{e}: {c}\n"));
        }
        out.push_str(&format!(
            "\n[properties]\nflags: {}\n",
            self.property_names.join(" ")
        ));
        for (e, flags) in &self.properties {
            let flags: Vec<&str> = flags.iter().map(String::as_str).collect();
            out.push_str(&format!("{e}: {}\n", flags.join(" ")).replace(": \n", ":\n"));
        }
        out.push_str("\n[action-rules]\n");
        for r in &self.rules {
            out.push_str(&format!(
                "{}: {} | {} | {}\n",
                r.action,
                r.actor.render(),
                r.target.render(),
                r.destination.render()
            ));
        }
        out.push_str("\n[inference-rules]\n");
        for r in &self.inference {
            let lhs: Vec<String> = r.conditions.iter().map(Atom::to_string).collect();
            out.push_str(&format!("{} => {}\n", lhs.join(", "), r.conclusion));
        }
        out.push_str("\n[capabilities]\n");
        for (c, a) in &self.capabilities {
            out.push_str(&format!("{c}: {}\n", a.join(" ")));
        }
        out
    }
}

fn split_atoms(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = text[start..].trim();
    if !last.is_empty() {
        out.push(last);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goal::{explain, Observation};

    fn st(actor: &str, action: &str, target: Option<&str>, dest: Option<&str>) -> Statement {
        Statement {
            actor: actor.into(),
            action: action.into(),
            target: target.map(String::from),
            destination: dest.map(String::from),
        }
    }

    #[test]
    fn taxonomy() {
        let kb = KnowledgeBase::kitchen();
        assert!(kb.is_subclass("Vessel", "Item"));
        assert!(kb.is_subclass("Vessel", "Object"));
        assert!(kb.is_subclass("Robot", "Agent"));
        assert!(!kb.is_subclass("Food", "Vessel"));
        assert!(kb.satisfies("Plate", "Vessel"));
        assert!(kb.satisfies("Plate", "washable"));
        assert!(!kb.satisfies("Sink", "movable"));
        assert!(kb.satisfies("Sink", "Sink"));
    }

    #[test]
    fn action_examples() {
        let kb = KnowledgeBase::kitchen();
        let v = kb
            .validate_action(&st("Human", "Eat", Some("Biscuits"), Some("Plate")))
            .unwrap();
        assert_eq!(v, Verdict::Valid);
        let v = kb
            .validate_action(&st("Human", "Cook", Some("Plate"), Some("Hobs")))
            .unwrap();
        assert!(!v.is_valid());
        let partial = st("Human", "Wash", Some("Glass"), None);
        assert_eq!(kb.complete(&partial).destination.as_deref(), Some("Sink"));
        assert_eq!(kb.validate_action(&partial).unwrap(), Verdict::Valid);
        let v = kb
            .validate_action(&st("Robot", "Eat", Some("Meal"), Some("Plate")))
            .unwrap();
        assert!(!v.is_valid());
        assert!(matches!(
            kb.validate_action(&st("Human", "Fly", None, None)),
            Err(KbError::UnknownAction(_))
        ));
        assert!(matches!(
            kb.validate_action(&st("Human", "Eat", Some("Cake"), None)),
            Err(KbError::UnknownEntity(_))
        ));
    }

    #[test]
    fn inference_only_fills_empty_slots() {
        let kb = KnowledgeBase::kitchen();
        let s = st("Human", "Wash", Some("Glass"), Some("Hobs"));
        assert_eq!(kb.complete(&s), s);
        assert!(!kb.validate_action(&s).unwrap().is_valid());
    }

    #[test]
    fn capabilities() {
        let kb = KnowledgeBase::kitchen();
        assert!(kb.robot_capable("Wash"));
        assert!(kb.robot_capable("PickAndPlace"));
        assert!(kb.robot_capable("Cook"));
        assert!(!kb.robot_capable("Eat"));
        assert!(!kb.robot_capable("Sip"));
    }

    #[test]
    fn document_round_trip() {
        let kb = KnowledgeBase::kitchen();
        let doc = kb.to_document();
        assert_eq!(KnowledgeBase::parse(&doc).unwrap(), kb);
    }

    #[test]
    fn malformed_documents_rejected() {
        assert!(matches!(
            KnowledgeBase::parse("[classes]\nA: B\nB: A\n"),
            Err(KbError::Cycle(_))
        ));
        assert!(matches!(
            KnowledgeBase::parse("[nope]\n"),
            Err(KbError::Syntax { line: 1, .. })
        ));
        let contradiction = "[classes]\nAgent\nObject\n[entities]\nSink: Object\nCup: Object\n\
            [properties]\nflags: washable\nCup: washable\n[action-rules]\nWash: Agent | washable | Sink\n\
            [inference-rules]\naction(Wash) => destination(Cup)\n";
        assert_eq!(
            KnowledgeBase::parse(contradiction),
            Err(KbError::Contradiction(1))
        );
        let unknown = "[classes]\nAgent\n[action-rules]\nEat: Agent | tasty | *\n";
        assert_eq!(
            KnowledgeBase::parse(unknown),
            Err(KbError::UnknownTerm("tasty".into()))
        );
    }

    fn bound(action: &str, id: &str, label: &str) -> Observation {
        Observation {
            action: action.into(),
            target: Some(id.into()),
            target_label: Some(label.into()),
            destination: None,
            destination_label: None,
        }
    }

    #[test]
    fn explanation_roles() {
        let kb = KnowledgeBase::kitchen();
        let lib = PlanLibrary::kitchen();
        let ex = explain(&lib, &[bound("PickAndPlace", "biscuits", "Biscuits")]);
        let valid: Vec<_> = ex
            .iter()
            .filter(|e| kb.validate_explanation(&lib, e).is_valid())
            .collect();
        assert_eq!(valid.len(), 1);
        assert_eq!(valid[0].goal, "Breakfast");
        let lunch_first = ex
            .iter()
            .find(|e| e.goal == "Lunch" && e.missed_count() == 0)
            .unwrap();
        assert!(!kb.validate_explanation(&lib, lunch_first).is_valid());

        let vacuous = explain(&lib, &[]);
        assert!(vacuous
            .iter()
            .all(|e| kb.validate_explanation(&lib, e).is_valid()));

        // the same role cannot switch objects between leaves
        let ex = explain(
            &lib,
            &[
                bound("PickAndPlace", "meal", "Meal"),
                bound("Cook", "meal2", "Meal"),
            ],
        );
        assert_eq!(ex.len(), 1);
        assert!(!kb.validate_explanation(&lib, &ex[0]).is_valid());
    }
}
