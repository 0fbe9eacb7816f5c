//! Goal reasoning over a library of ordered plan trees.
//!
//! Each goal is a tree whose leaves are actions in temporal order. A stream
//! of observed actions is explained by marking leaves: the matched leaf
//! becomes observed and every still-unobserved leaf to its left becomes
//! missed. Every matching leaf forks a separate explanation, so skipped
//! observations are always covered.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::OoiId;

#[derive(Debug, Error, PartialEq)]
pub enum GoalError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("goal `{goal}`: symbol `{symbol}` is not declared as {expected}")]
    UndeclaredSymbol {
        goal: String,
        symbol: String,
        expected: &'static str,
    },
    #[error("goal `{0}` has no actions")]
    EmptyGoal(String),
    #[error("symbol `{0}` is declared both as an action and as a sub-goal")]
    Overlap(String),
    #[error("goal `{goal}` refers to undeclared role `{role}`")]
    UnknownRole { goal: String, role: String },
    #[error("goal `{0}` defined twice")]
    DuplicateGoal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Goal,
    Subgoal,
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    pub symbol: String,
    pub kind: NodeKind,
    /// Role variable naming the action's target object (actions only).
    pub target: Option<String>,
    /// Role variable naming where the action takes the target.
    pub destination: Option<String>,
    pub children: Vec<PlanNode>,
}

/// Typed variable of a goal: the object it stands for must satisfy every
/// constraint term (entity name, class or property).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub symbol: String,
    pub target: Option<String>,
    pub destination: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalTree {
    pub roles: Vec<Role>,
    pub root: PlanNode,
    leaves: Vec<Leaf>,
}

impl GoalTree {
    pub fn new(roles: Vec<Role>, root: PlanNode) -> Self {
        let mut leaves = Vec::new();
        collect_leaves(&root, &mut leaves);
        Self {
            roles,
            root,
            leaves,
        }
    }

    pub fn name(&self) -> &str {
        &self.root.symbol
    }

    /// Action leaves in temporal order.
    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn role(&self, name: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.name == name)
    }
}

fn collect_leaves(node: &PlanNode, out: &mut Vec<Leaf>) {
    if node.kind == NodeKind::Action {
        out.push(Leaf {
            symbol: node.symbol.clone(),
            target: node.target.clone(),
            destination: node.destination.clone(),
        });
    }
    for c in &node.children {
        collect_leaves(c, out);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLibrary {
    pub terminals: Vec<String>,
    pub subgoals: Vec<String>,
    pub goals: Vec<GoalTree>,
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

impl PlanLibrary {
    pub fn new(
        terminals: Vec<String>,
        subgoals: Vec<String>,
        goals: Vec<GoalTree>,
    ) -> Result<Self, GoalError> {
        let lib = Self {
            terminals,
            subgoals,
            goals,
        };
        lib.validate()?;
        Ok(lib)
    }

    pub fn kitchen() -> Self {
        Self::parse(crate::fixtures::KITCHEN_PLANS).expect("built-in plan library is valid")
    }

    pub fn goal(&self, name: &str) -> Option<&GoalTree> {
        self.goals.iter().find(|g| g.name() == name)
    }

    pub fn goal_names(&self) -> Vec<&str> {
        self.goals.iter().map(GoalTree::name).collect()
    }

    fn validate(&self) -> Result<(), GoalError> {
        let sigma: BTreeSet<&str> = self.terminals.iter().map(String::as_str).collect();
        let nt: BTreeSet<&str> = self.subgoals.iter().map(String::as_str).collect();
        if let Some(s) = sigma.intersection(&nt).next() {
            return Err(GoalError::Overlap(s.to_string()));
        }
        let mut names = BTreeSet::new();
        for g in &self.goals {
            if !names.insert(g.name()) {
                return Err(GoalError::DuplicateGoal(g.name().to_string()));
            }
            if g.leaves.is_empty() {
                return Err(GoalError::EmptyGoal(g.name().to_string()));
            }
            check_node(g, &g.root, &sigma, &nt)?;
        }
        Ok(())
    }

    /// Parses the indented plan document:
    ///
    /// ```text
    /// terminals: PickAndPlace Eat
    /// subgoals: Prepare
    ///
    /// goal Snack
    ///   role food: Food eatable
    ///   subgoal Prepare
    ///     action PickAndPlace target=food
    ///   action Eat target=food
    /// ```
    pub fn parse(source: &str) -> Result<Self, GoalError> {
        let mut terminals = None;
        let mut subgoals = Vec::new();
        let mut goals = Vec::new();
        // goal roles, root, stack of (indent, path of child indices)
        type Open = (Vec<Role>, PlanNode, Vec<(usize, Vec<usize>)>);
        let mut current: Option<Open> = None;

        let flush = |cur: &mut Option<Open>, goals: &mut Vec<GoalTree>| {
            if let Some((roles, root, _)) = cur.take() {
                goals.push(GoalTree::new(roles, root));
            }
        };

        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| GoalError::Syntax {
                line: line_no,
                reason,
            };
            let content = raw.split('#').next().unwrap_or("").trim_end();
            if content.trim().is_empty() {
                continue;
            }
            let indent = indent_of(content);
            let text = content.trim();
            let mut words = text.split_whitespace();
            let keyword = words.next().unwrap_or("");
            if indent == 0 {
                flush(&mut current, &mut goals);
                match keyword {
                    "terminals:" => terminals = Some(words.map(String::from).collect()),
                    "subgoals:" => subgoals = words.map(String::from).collect(),
                    "goal" => {
                        let name = words
                            .next()
                            .ok_or_else(|| err("goal without a name".into()))?;
                        if words.next().is_some() {
                            return Err(err("unexpected text after goal name".into()));
                        }
                        let root = PlanNode {
                            symbol: name.to_string(),
                            kind: NodeKind::Goal,
                            target: None,
                            destination: None,
                            children: Vec::new(),
                        };
                        current = Some((Vec::new(), root, vec![(0, Vec::new())]));
                    }
                    other => return Err(err(format!("unexpected `{other}` at top level"))),
                }
                continue;
            }
            let Some((roles, root, stack)) = current.as_mut() else {
                return Err(err("indented line outside a goal".into()));
            };
            if keyword == "role" {
                if !root.children.is_empty() {
                    return Err(err("roles must precede the plan nodes".into()));
                }
                let rest: Vec<&str> = words.collect();
                let (name, terms) = rest
                    .split_first()
                    .and_then(|(n, t)| n.strip_suffix(':').map(|n| (n, t)))
                    .ok_or_else(|| err("expected `role <name>: <terms>`".into()))?;
                roles.push(Role {
                    name: name.to_string(),
                    terms: terms.iter().map(|t| t.to_string()).collect(),
                });
                continue;
            }
            let kind = match keyword {
                "subgoal" => NodeKind::Subgoal,
                "action" => NodeKind::Action,
                other => return Err(err(format!("unknown node kind `{other}`"))),
            };
            let symbol = words
                .next()
                .ok_or_else(|| err(format!("{keyword} without a symbol")))?;
            let mut node = PlanNode {
                symbol: symbol.to_string(),
                kind,
                target: None,
                destination: None,
                children: Vec::new(),
            };
            for w in words {
                match w.split_once('=') {
                    Some(("target", v)) if kind == NodeKind::Action => {
                        node.target = Some(v.to_string())
                    }
                    Some(("dest", v)) if kind == NodeKind::Action => {
                        node.destination = Some(v.to_string())
                    }
                    _ => return Err(err(format!("unexpected attribute `{w}`"))),
                }
            }
            while stack.len() > 1 && stack.last().expect("non-empty").0 >= indent {
                stack.pop();
            }
            let parent_path = stack.last().expect("root entry").1.clone();
            let parent = node_at(root, &parent_path);
            if parent.kind == NodeKind::Action {
                return Err(err("actions cannot have children".into()));
            }
            parent.children.push(node);
            let mut path = parent_path;
            path.push(parent.children.len() - 1);
            stack.push((indent, path));
        }
        flush(&mut current, &mut goals);
        let terminals = terminals.ok_or(GoalError::Syntax {
            line: 0,
            reason: "missing `terminals:` declaration".into(),
        })?;
        Self::new(terminals, subgoals, goals)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::new();
        writeln!(out, "terminals: {}", self.terminals.join(" ")).unwrap();
        writeln!(out, "subgoals: {}", self.subgoals.join(" ")).unwrap();
        for g in &self.goals {
            writeln!(out, "\ngoal {}", g.name()).unwrap();
            for r in &g.roles {
                writeln!(out, "  role {}: {}", r.name, r.terms.join(" ")).unwrap();
            }
            for c in &g.root.children {
                write_node(&mut out, c, 1);
            }
        }
        out
    }
}

fn node_at<'a>(root: &'a mut PlanNode, path: &[usize]) -> &'a mut PlanNode {
    path.iter().fold(root, |n, &i| &mut n.children[i])
}

fn write_node(out: &mut String, node: &PlanNode, depth: usize) {
    let pad = "  ".repeat(depth);
    match node.kind {
        NodeKind::Action => {
            write!(out, "{pad}action {}", node.symbol).unwrap();
            if let Some(t) = &node.target {
                write!(out, " target={t}").unwrap();
            }
            if let Some(d) = &node.destination {
                write!(out, " dest={d}").unwrap();
            }
            out.push('\n');
        }
        _ => writeln!(out, "{pad}subgoal {}", node.symbol).unwrap(),
    }
    for c in &node.children {
        write_node(out, c, depth + 1);
    }
}

fn check_node(
    goal: &GoalTree,
    node: &PlanNode,
    sigma: &BTreeSet<&str>,
    nt: &BTreeSet<&str>,
) -> Result<(), GoalError> {
    let undeclared = |expected| GoalError::UndeclaredSymbol {
        goal: goal.name().to_string(),
        symbol: node.symbol.clone(),
        expected,
    };
    match node.kind {
        NodeKind::Goal => {}
        NodeKind::Subgoal => {
            if !nt.contains(node.symbol.as_str()) {
                return Err(undeclared("a sub-goal"));
            }
            if node.children.is_empty() {
                return Err(GoalError::EmptyGoal(node.symbol.clone()));
            }
        }
        NodeKind::Action => {
            if !sigma.contains(node.symbol.as_str()) {
                return Err(undeclared("a terminal action"));
            }
            for var in node.target.iter().chain(&node.destination) {
                if goal.role(var).is_none() {
                    return Err(GoalError::UnknownRole {
                        goal: goal.name().to_string(),
                        role: var.clone(),
                    });
                }
            }
        }
    }
    for c in &node.children {
        check_node(goal, c, sigma, nt)?;
    }
    Ok(())
}

/// One committed action, with the objects it was bound to when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub action: String,
    pub target: Option<OoiId>,
    pub target_label: Option<String>,
    pub destination: Option<OoiId>,
    pub destination_label: Option<String>,
}

impl Observation {
    pub fn symbol(action: impl Into<String>) -> Self {
        Self {
            action: action.into(),
            target: None,
            target_label: None,
            destination: None,
            destination_label: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafStatus {
    Unobserved,
    Observed,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub goal: String,
    /// One status per leaf of the goal tree, in temporal order.
    pub marks: Vec<LeafStatus>,
    /// The observation matched to each observed leaf.
    pub bindings: Vec<Option<Observation>>,
    pub observed_fraction: f64,
    pub missed_fraction: f64,
    pub score: f64,
    pub confidence: f64,
}

impl Explanation {
    fn fresh(goal: &GoalTree) -> Self {
        let n = goal.leaves.len();
        Self {
            goal: goal.name().to_string(),
            marks: vec![LeafStatus::Unobserved; n],
            bindings: vec![None; n],
            observed_fraction: 0.0,
            missed_fraction: 0.0,
            score: 0.0,
            confidence: 0.0,
        }
    }

    fn count(&self, status: LeafStatus) -> usize {
        self.marks.iter().filter(|m| **m == status).count()
    }

    pub fn observed_count(&self) -> usize {
        self.count(LeafStatus::Observed)
    }

    pub fn missed_count(&self) -> usize {
        self.count(LeafStatus::Missed)
    }

    fn rescore(&mut self) {
        let n = self.marks.len() as f64;
        self.observed_fraction = self.observed_count() as f64 / n;
        self.missed_fraction = self.missed_count() as f64 / n;
        self.score = self.observed_fraction * (1.0 - self.missed_fraction);
    }

    /// Unobserved leaves in temporal order, as leaf indices.
    pub fn frontier(&self) -> Vec<usize> {
        self.marks
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == LeafStatus::Unobserved)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Advances every explanation by one observation (one step of the
/// explanation-generation algorithm). Explanations the observation cannot
/// extend are dropped.
pub fn extend(
    library: &PlanLibrary,
    explanations: &[Explanation],
    obs: &Observation,
) -> Vec<Explanation> {
    let mut out: Vec<Explanation> = Vec::new();
    let mut seen: BTreeSet<(String, Vec<LeafStatus>)> = BTreeSet::new();
    for e in explanations {
        let goal = library.goal(&e.goal).expect("explanation goal exists");
        for (k, leaf) in goal.leaves.iter().enumerate() {
            if e.marks[k] != LeafStatus::Unobserved || leaf.symbol != obs.action {
                continue;
            }
            let mut next = e.clone();
            next.marks[k] = LeafStatus::Observed;
            next.bindings[k] = Some(obs.clone());
            for m in &mut next.marks[..k] {
                if *m == LeafStatus::Unobserved {
                    *m = LeafStatus::Missed;
                }
            }
            if seen.insert((next.goal.clone(), next.marks.clone())) {
                next.rescore();
                out.push(next);
            }
        }
    }
    out
}

/// Normalizes scores into confidences and sorts best first (ties keep goal
/// and generation order). With every score at zero the mass is uniform.
pub fn rank(mut explanations: Vec<Explanation>) -> Vec<Explanation> {
    let total: f64 = explanations.iter().map(|e| e.score).sum();
    let n = explanations.len() as f64;
    for e in &mut explanations {
        e.confidence = if total > 0.0 {
            e.score / total
        } else {
            1.0 / n
        };
    }
    explanations.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    explanations
}

pub fn initial(library: &PlanLibrary) -> Vec<Explanation> {
    rank(library.goals.iter().map(Explanation::fresh).collect())
}

/// Ranked explanations of an observation sequence.
pub fn explain(library: &PlanLibrary, observations: &[Observation]) -> Vec<Explanation> {
    let mut current = initial(library);
    for obs in observations {
        current = extend(library, &current, obs);
    }
    rank(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitPolicy {
    /// Confidence the unique zero-miss argmax needs when other explanations
    /// survive.
    pub min_confidence: f64,
}

impl Default for CommitPolicy {
    fn default() -> Self {
        Self {
            min_confidence: 0.5,
        }
    }
}

/// Index of the explanation to commit to in a ranked list, if any: the sole
/// survivor (once anything has been observed), or a unique best explanation
/// with no missed leaves and enough confidence.
pub fn best(ranked: &[Explanation], policy: &CommitPolicy) -> Option<usize> {
    let top = ranked.first()?;
    if ranked.len() == 1 {
        return (top.observed_count() > 0).then_some(0);
    }
    let unique = ranked[1].score < top.score;
    (unique
        && top.missed_count() == 0
        && top.confidence >= policy.min_confidence
        && top.score > 0.0)
        .then_some(0)
}
