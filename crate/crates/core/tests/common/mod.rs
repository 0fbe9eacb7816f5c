#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use intent_core::action::{ActionEnsemble, ActionLibrary, ActionRecognizer, EnsembleParams};
use intent_core::focus::FocusState;
use intent_core::movement::Movement::{self, *};
use intent_core::sim::Goal;
use intent_core::supervisor::{
    simulate, Models, PipelineConfig, PipelineEvent, TrialMetrics, TrialSpec,
};
use intent_core::world::{Scenario, WorldState};

/// Leaf sequences of the kitchen goals, written out by hand from the plan
/// trees so the reasoner is checked against something it did not produce.
pub const KITCHEN_LEAVES: &[(&str, &[&str])] = &[
    (
        "Breakfast",
        &["PickAndPlace", "Eat", "PickAndPlace", "Wash"],
    ),
    ("Drink", &["PickAndPlace", "Sip", "PickAndPlace", "Wash"]),
    (
        "Lunch",
        &[
            "PickAndPlace",
            "Cook",
            "PickAndPlace",
            "Eat",
            "PickAndPlace",
            "Wash",
        ],
    ),
];

/// Brute-force explanation set: every strictly increasing assignment of
/// observations to equal leaves, deduplicated by which leaves end up
/// observed and which are skipped. Returns (goal, confidence) sorted by
/// decreasing confidence.
pub fn oracle_explain(goals: &[(&str, &[&str])], obs: &[&str]) -> Vec<(String, f64)> {
    fn assign(
        leaves: &[&str],
        obs: &[&str],
        from: usize,
        picked: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if picked.len() == obs.len() {
            out.push(picked.clone());
            return;
        }
        for j in from..leaves.len() {
            if leaves[j] == obs[picked.len()] {
                picked.push(j);
                assign(leaves, obs, j + 1, picked, out);
                picked.pop();
            }
        }
    }
    let mut scored: Vec<(String, f64)> = Vec::new();
    for (goal, leaves) in goals {
        let mut all = Vec::new();
        assign(leaves, obs, 0, &mut Vec::new(), &mut all);
        let distinct: BTreeSet<Vec<usize>> = all.into_iter().collect();
        for observed in distinct {
            let last = observed.last().copied();
            let missed = match last {
                None => 0,
                Some(l) => (0..l).filter(|j| !observed.contains(j)).count(),
            };
            let n = leaves.len() as f64;
            let score = observed.len() as f64 / n * (1.0 - missed as f64 / n);
            scored.push((goal.to_string(), score));
        }
    }
    let total: f64 = scored.iter().map(|(_, s)| s).sum();
    let k = scored.len() as f64;
    let mut ranked: Vec<(String, f64)> = scored
        .into_iter()
        .map(|(g, s)| (g, if total > 0.0 { s / total } else { 1.0 / k }))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    ranked
}

/// The three movement sequences fed to the ensemble in the action
/// recognition experiment.
pub fn action_sequences() -> [(&'static str, Vec<Movement>); 3] {
    [
        (
            "PickAndPlace",
            vec![
                Pick, Pick, Transport, Transport, Transport, Place, Place, Still, Still,
            ],
        ),
        (
            "Use",
            vec![Pick, Pick, Pick, Pick, Pick, Place, Place, Pick, Place],
        ),
        (
            "Relocate",
            vec![Still, Still, Walk, Walk, Still, Still, Still, Still, Still],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    pub action: String,
    /// 1-based index of the raw movement that triggered the commitment.
    pub raw_step: usize,
    /// Number of distinct consecutive movements seen at that point.
    pub filtered_step: usize,
}

/// Feeds a movement sequence to a fresh recognizer whose focus always has a
/// target, and reports the first committed action.
pub fn recognize(seq: &[Movement], params: EnsembleParams) -> Option<Recognition> {
    let ensemble = ActionEnsemble::new(ActionLibrary::kitchen(), params).unwrap();
    let mut r = ActionRecognizer::new(ensemble);
    let world: WorldState = Scenario::kitchen().initial;
    let focus = FocusState {
        current_target: Some("meal".into()),
        current_destination: Some("hobs".into()),
        ..FocusState::default()
    };
    let mut filtered = 0;
    let mut last = None;
    for (i, &m) in seq.iter().enumerate() {
        if last != Some(m) {
            filtered += 1;
            last = Some(m);
        }
        if let Some(a) = r.push(m, i as u64, &focus, &world).action {
            return Some(Recognition {
                action: a.base,
                raw_step: i + 1,
                filtered_step: filtered,
            });
        }
    }
    None
}

pub fn kitchen_models() -> Arc<Models> {
    static MODELS: OnceLock<Arc<Models>> = OnceLock::new();
    MODELS
        .get_or_init(|| Arc::new(Models::kitchen(&PipelineConfig::default()).unwrap()))
        .clone()
}

pub const NOISE: f64 = 0.05;

pub fn trial(goal: Goal, seed: u64, verify: bool) -> (TrialMetrics, Vec<PipelineEvent>) {
    let spec = TrialSpec {
        goal,
        seed,
        verify,
        noise_sigma: NOISE,
    };
    simulate(
        kitchen_models(),
        &PipelineConfig::default(),
        &Scenario::kitchen(),
        &spec,
        true,
    )
    .unwrap()
}

pub fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}
