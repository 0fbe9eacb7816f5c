//! Movement classification: a categorical decision tree mapping the QSRs of
//! one timestep (relative to the focus target) to a motion primitive.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::focus::{FocusConfig, FocusEstimator};
use crate::qsr::{
    qualitative_enum, HoldValue, MosValue, QdcValue, QsrConfig, QsrEngine, QsrError, QsrFrame,
    QtcValue,
};
use crate::world::{OoiId, Trace};

qualitative_enum!(
    /// Single-timestep motion primitive.
    Movement {
        Still => "STILL",
        Walk => "WALK",
        Transport => "TRANSPORT",
        Pick => "PICK",
        Place => "PLACE",
    }
);

#[derive(Debug, Error)]
pub enum MovementError {
    #[error("target `{0}` is not part of the frame")]
    MissingTarget(OoiId),
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("dataset row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("trace has no movement labels")]
    Unlabeled,
    #[error("malformed tree document: {0}")]
    BadTree(String),
    #[error(transparent)]
    Qsr(#[from] QsrError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Mos,
    HoldNow,
    HoldPrev,
    QdcTarget,
    QtcTarget,
}

impl Feature {
    /// Declaration order, which is also the tie-break order during training.
    pub const ALL: [Feature; 5] = [
        Feature::Mos,
        Feature::HoldNow,
        Feature::HoldPrev,
        Feature::QdcTarget,
        Feature::QtcTarget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Mos => "mos",
            Feature::HoldNow => "hold_now",
            Feature::HoldPrev => "hold_prev",
            Feature::QdcTarget => "qdc_target",
            Feature::QtcTarget => "qtc_target",
        }
    }

    pub fn cardinality(self) -> usize {
        match self {
            Feature::Mos | Feature::HoldNow | Feature::HoldPrev => 2,
            Feature::QdcTarget => QdcValue::ALL.len(),
            Feature::QtcTarget => QtcValue::ALL.len(),
        }
    }

    fn value_name(self, index: usize) -> &'static str {
        match self {
            Feature::Mos => MosValue::ALL[index].as_str(),
            Feature::HoldNow | Feature::HoldPrev => HoldValue::ALL[index].as_str(),
            Feature::QdcTarget => QdcValue::ALL[index].as_str(),
            Feature::QtcTarget => QtcValue::ALL[index].as_str(),
        }
    }

    fn value_index(self, name: &str) -> Result<usize, QsrError> {
        Ok(match self {
            Feature::Mos => name.parse::<MosValue>()?.index(),
            Feature::HoldNow | Feature::HoldPrev => name.parse::<HoldValue>()?.index(),
            Feature::QdcTarget => name.parse::<QdcValue>()?.index(),
            Feature::QtcTarget => name.parse::<QtcValue>()?.index(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MovementFeatures {
    pub mos: MosValue,
    pub hold_now: HoldValue,
    pub hold_prev: HoldValue,
    pub qdc_target: QdcValue,
    pub qtc_target: QtcValue,
}

impl MovementFeatures {
    pub fn value(&self, feature: Feature) -> usize {
        match feature {
            Feature::Mos => self.mos.index(),
            Feature::HoldNow => self.hold_now.index(),
            Feature::HoldPrev => self.hold_prev.index(),
            Feature::QdcTarget => self.qdc_target.index(),
            Feature::QtcTarget => self.qtc_target.index(),
        }
    }

    /// Every one of the 120 possible feature vectors.
    pub fn all_combinations() -> Vec<MovementFeatures> {
        let mut out = Vec::new();
        for &mos in MosValue::ALL {
            for &hold_now in HoldValue::ALL {
                for &hold_prev in HoldValue::ALL {
                    for &qdc_target in QdcValue::ALL {
                        for &qtc_target in QtcValue::ALL {
                            out.push(MovementFeatures {
                                mos,
                                hold_now,
                                hold_prev,
                                qdc_target,
                                qtc_target,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn extract_features(
    frame: &QsrFrame,
    prev_frame: Option<&QsrFrame>,
    target: &OoiId,
) -> Result<MovementFeatures, MovementError> {
    let rel = frame
        .relation(target)
        .ok_or_else(|| MovementError::MissingTarget(target.clone()))?;
    Ok(MovementFeatures {
        mos: frame.mos,
        hold_now: frame.hold,
        hold_prev: prev_frame.map_or(HoldValue::NotHolding, |p| p.hold),
        qdc_target: rel.qdc,
        qtc_target: rel.qtc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRow {
    /// Trial the row was recorded in; cross-validation never splits a trial.
    pub trial: u32,
    pub features: MovementFeatures,
    pub label: Movement,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
}

const CSV_HEADER: [&str; 7] = [
    "trial",
    "mos",
    "hold_now",
    "hold_prev",
    "qdc_target",
    "qtc_target",
    "label",
];

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for r in &self.rows {
            counts[r.label.index()] += 1;
        }
        counts
    }

    pub fn trials(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.rows.iter().map(|r| r.trial).collect();
        set.into_iter().collect()
    }

    pub fn extend(&mut self, other: LabeledDataset) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> Result<String, MovementError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let f = &r.features;
            w.write_record([
                r.trial.to_string().as_str(),
                f.mos.as_str(),
                f.hold_now.as_str(),
                f.hold_prev.as_str(),
                f.qdc_target.as_str(),
                f.qtc_target.as_str(),
                r.label.as_str(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, MovementError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().ne(CSV_HEADER) {
            return Err(MovementError::BadRow {
                row: 0,
                reason: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let bad = |reason: String| MovementError::BadRow { row: i + 1, reason };
            let trial = record[0]
                .parse::<u32>()
                .map_err(|e| bad(format!("trial: {e}")))?;
            let parse = || -> Result<LabeledRow, QsrError> {
                Ok(LabeledRow {
                    trial,
                    features: MovementFeatures {
                        mos: record[1].parse()?,
                        hold_now: record[2].parse()?,
                        hold_prev: record[3].parse()?,
                        qdc_target: record[4].parse()?,
                        qtc_target: record[5].parse()?,
                    },
                    label: record[6].parse()?,
                })
            };
            rows.push(parse().map_err(|e| bad(e.to_string()))?);
        }
        Ok(Self { rows })
    }

    /// Replays a labeled trace through the perception front end and keeps one
    /// row per tick that has an elected focus target.
    pub fn from_trace(
        trace: &Trace,
        trial: u32,
        qsr: &QsrConfig,
        focus: &FocusConfig,
    ) -> Result<Self, MovementError> {
        let labels = trace.labels.as_ref().ok_or(MovementError::Unlabeled)?;
        let mut engine = QsrEngine::new(*qsr);
        let mut estimator = FocusEstimator::new(*focus).map_err(|e| MovementError::BadRow {
            row: 0,
            reason: e.to_string(),
        })?;
        let mut prev: Option<QsrFrame> = None;
        let mut rows = Vec::new();
        for (world, label) in trace.states.iter().zip(labels) {
            let frame = engine.ingest(world)?.clone();
            estimator.observe(&frame, world);
            if let Some(target) = estimator.state().current_target.clone() {
                let features = extract_features(&frame, prev.as_ref(), &target)?;
                rows.push(LabeledRow {
                    trial,
                    features,
                    label: *label,
                });
            }
            prev = Some(frame);
        }
        Ok(Self { rows })
    }

    /// Loads every `*.trace` file in a directory, numbering trials in file
    /// name order.
    pub fn from_trace_dir(
        dir: &Path,
        qsr: &QsrConfig,
        focus: &FocusConfig,
    ) -> Result<Self, MovementError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "trace"))
            .collect();
        paths.sort();
        let mut data = LabeledDataset::default();
        for (i, path) in paths.iter().enumerate() {
            let text = std::fs::read_to_string(path)?;
            let trace = Trace::from_log(&text).map_err(|e| MovementError::BadRow {
                row: 0,
                reason: format!("{}: {e}", path.display()),
            })?;
            data.extend(Self::from_trace(&trace, i as u32, qsr, focus)?);
        }
        Ok(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            min_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub value: String,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        movement: Movement,
        /// Training rows per class, in `Movement::ALL` order.
        counts: [usize; 5],
    },
    Split {
        feature: Feature,
        /// Value whose child receives feature values never seen in training.
        fallback: String,
        children: Vec<Branch>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

fn gini(counts: &[usize; 5]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn count(rows: &[&LabeledRow]) -> [usize; 5] {
    let mut counts = [0; 5];
    for r in rows {
        counts[r.label.index()] += 1;
    }
    counts
}

fn majority_class(counts: &[usize; 5]) -> Movement {
    let mut best = 0;
    for i in 1..5 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    Movement::ALL[best]
}

fn partition<'a>(rows: &[&'a LabeledRow], feature: Feature) -> Vec<(usize, Vec<&'a LabeledRow>)> {
    let mut groups: Vec<Vec<&LabeledRow>> = vec![Vec::new(); feature.cardinality()];
    for r in rows {
        groups[r.features.value(feature)].push(r);
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .collect()
}

fn build(rows: &[&LabeledRow], used: &[Feature], depth: usize, params: &TrainParams) -> Node {
    let counts = count(rows);
    let leaf = Node::Leaf {
        movement: majority_class(&counts),
        counts,
    };
    let impurity = gini(&counts);
    if impurity == 0.0 || params.max_depth.is_some_and(|d| depth >= d) {
        return leaf;
    }
    let n = rows.len() as f64;
    type Split<'a> = (f64, Feature, Vec<(usize, Vec<&'a LabeledRow>)>);
    let mut best: Option<Split> = None;
    for feature in Feature::ALL {
        if used.contains(&feature) {
            continue;
        }
        let groups = partition(rows, feature);
        if groups.len() < 2 || groups.iter().any(|(_, g)| g.len() < params.min_leaf) {
            continue;
        }
        let weighted: f64 = groups
            .iter()
            .map(|(_, g)| g.len() as f64 / n * gini(&count(g)))
            .sum();
        // strict comparison keeps the earliest feature on ties
        if best.as_ref().is_none_or(|(w, _, _)| weighted < *w - 1e-12) {
            best = Some((weighted, feature, groups));
        }
    }
    let Some((_, feature, groups)) = best else {
        return leaf;
    };
    let mut used = used.to_vec();
    used.push(feature);
    // first largest group, in value order
    let fallback = groups
        .iter()
        .fold(
            &groups[0],
            |acc, g| if g.1.len() > acc.1.len() { g } else { acc },
        )
        .0;
    Node::Split {
        feature,
        fallback: feature.value_name(fallback).to_string(),
        children: groups
            .iter()
            .map(|(v, g)| Branch {
                value: feature.value_name(*v).to_string(),
                node: build(g, &used, depth + 1, params),
            })
            .collect(),
    }
}

impl DecisionTree {
    /// Multiway Gini tree over the categorical features.
    pub fn train(data: &LabeledDataset, params: &TrainParams) -> Result<Self, MovementError> {
        if data.is_empty() {
            return Err(MovementError::EmptyDataset);
        }
        let rows: Vec<&LabeledRow> = data.rows.iter().collect();
        Ok(Self {
            root: build(&rows, &[], 0, params),
        })
    }

    pub fn classify(&self, f: &MovementFeatures) -> Movement {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { movement, .. } => return *movement,
                Node::Split {
                    feature,
                    fallback,
                    children,
                } => {
                    let value = feature.value_name(f.value(*feature));
                    node = children
                        .iter()
                        .find(|b| b.value == value)
                        .or_else(|| children.iter().find(|b| &b.value == fallback))
                        .map(|b| &b.node)
                        .expect("fallback child exists");
                }
            }
        }
    }

    pub fn accuracy(&self, rows: &[LabeledRow]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let hits = rows
            .iter()
            .filter(|r| self.classify(&r.features) == r.label)
            .count();
        hits as f64 / rows.len() as f64
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_document(text: &str) -> Result<Self, MovementError> {
        let tree: Self =
            serde_json::from_str(text).map_err(|e| MovementError::BadTree(e.to_string()))?;
        tree.check(&tree.root)?;
        Ok(tree)
    }

    fn check(&self, node: &Node) -> Result<(), MovementError> {
        if let Node::Split {
            feature,
            fallback,
            children,
        } = node
        {
            if !children.iter().any(|b| &b.value == fallback) {
                return Err(MovementError::BadTree(format!(
                    "fallback `{fallback}` has no child"
                )));
            }
            for b in children {
                feature
                    .value_index(&b.value)
                    .map_err(|e| MovementError::BadTree(e.to_string()))?;
                self.check(&b.node)?;
            }
        }
        Ok(())
    }

    pub fn leaf_count(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { children, .. } => children.iter().map(|b| walk(&b.node)).sum(),
            }
        }
        walk(&self.root)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: usize,
    pub fold_accuracy: Vec<f64>,
    /// Pooled over all held-out rows.
    pub accuracy: f64,
}

/// k-fold cross-validation where each trial is held out as a whole. Trials
/// are assigned to folds round-robin in id order; with fewer trials than
/// folds every trial becomes its own fold.
pub fn cross_validate(
    data: &LabeledDataset,
    folds: usize,
    params: &TrainParams,
) -> Result<CvReport, MovementError> {
    let trials = data.trials();
    if trials.is_empty() {
        return Err(MovementError::EmptyDataset);
    }
    let k = folds.clamp(1, trials.len());
    let fold_of = |trial: u32| trials.iter().position(|&t| t == trial).unwrap() % k;
    let mut fold_accuracy = Vec::with_capacity(k);
    let mut hits = 0usize;
    let mut total = 0usize;
    for fold in 0..k {
        let (test, train): (Vec<LabeledRow>, Vec<LabeledRow>) =
            data.rows.iter().partition(|r| fold_of(r.trial) == fold);
        let train = LabeledDataset { rows: train };
        if train.is_empty() || test.is_empty() {
            continue;
        }
        let tree = DecisionTree::train(&train, params)?;
        let acc = tree.accuracy(&test);
        hits += (acc * test.len() as f64).round() as usize;
        total += test.len();
        fold_accuracy.push(acc);
    }
    Ok(CvReport {
        folds: fold_accuracy.len(),
        fold_accuracy,
        accuracy: if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsr::OoiRelation;

    fn feats(
        mos: MosValue,
        hold_now: HoldValue,
        hold_prev: HoldValue,
        qdc: QdcValue,
        qtc: QtcValue,
    ) -> MovementFeatures {
        MovementFeatures {
            mos,
            hold_now,
            hold_prev,
            qdc_target: qdc,
            qtc_target: qtc,
        }
    }

    fn row(trial: u32, f: MovementFeatures, label: Movement) -> LabeledRow {
        LabeledRow {
            trial,
            features: f,
            label,
        }
    }

    fn frame(t: u64, hold: HoldValue, mos: MosValue, qdc: QdcValue, qtc: QtcValue) -> QsrFrame {
        QsrFrame {
            timestep: t,
            relations: vec![OoiRelation {
                id: "plate".into(),
                qdc,
                qtc,
            }],
            mos,
            hold,
        }
    }

    use HoldValue::{Holding as H, NotHolding as N};
    use MosValue::{Moving as M, Stationary as S};

    #[test]
    fn movement_tokens() {
        assert_eq!(Movement::Transport.as_str(), "TRANSPORT");
        assert_eq!("PICK".parse::<Movement>().unwrap(), Movement::Pick);
        assert!("JUMP".parse::<Movement>().is_err());
    }

    #[test]
    fn feature_extraction() {
        let f0 = frame(0, N, S, QdcValue::Near, QtcValue::Zero);
        let f = extract_features(&f0, None, &"plate".into()).unwrap();
        assert_eq!(f, feats(S, N, N, QdcValue::Near, QtcValue::Zero));

        let f1 = frame(1, H, S, QdcValue::Touch, QtcValue::Zero);
        let f = extract_features(&f1, Some(&f0), &"plate".into()).unwrap();
        assert_eq!((f.hold_now, f.hold_prev), (H, N));

        let f2 = frame(2, N, S, QdcValue::Touch, QtcValue::Zero);
        let f = extract_features(&f2, Some(&f1), &"plate".into()).unwrap();
        assert_eq!((f.hold_now, f.hold_prev), (N, H));

        assert!(matches!(
            extract_features(&f2, None, &"sink".into()),
            Err(MovementError::MissingTarget(_))
        ));
    }

    #[test]
    fn single_class_gives_single_leaf() {
        let data = LabeledDataset {
            rows: vec![
                row(
                    0,
                    feats(S, N, N, QdcValue::Far, QtcValue::Zero),
                    Movement::Still
                );
                4
            ],
        };
        let tree = DecisionTree::train(&data, &TrainParams::default()).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert!(matches!(
            tree.root,
            Node::Leaf {
                movement: Movement::Still,
                counts: [4, 0, 0, 0, 0]
            }
        ));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(
            DecisionTree::train(&LabeledDataset::default(), &TrainParams::default()),
            Err(MovementError::EmptyDataset)
        ));
    }

    #[test]
    fn hold_separates_walk_from_transport() {
        // moving throughout; qdc/qtc vary independently of the label
        let mut rows = Vec::new();
        for (i, &qdc) in QdcValue::ALL.iter().enumerate() {
            for &qtc in QtcValue::ALL {
                rows.push(row(i as u32, feats(M, N, N, qdc, qtc), Movement::Walk));
                rows.push(row(i as u32, feats(M, H, H, qdc, qtc), Movement::Transport));
            }
        }
        let data = LabeledDataset { rows };
        let tree = DecisionTree::train(&data, &TrainParams::default()).unwrap();
        match &tree.root {
            Node::Split { feature, .. } => assert_eq!(*feature, Feature::HoldNow),
            leaf => panic!("expected split, got {leaf:?}"),
        }
        assert_eq!(tree.accuracy(&data.rows), 1.0);
    }

    #[test]
    fn unseen_value_routes_to_majority_child() {
        let rows = vec![
            row(
                0,
                feats(S, N, N, QdcValue::Near, QtcValue::Zero),
                Movement::Still,
            ),
            row(
                0,
                feats(S, N, N, QdcValue::Near, QtcValue::Zero),
                Movement::Still,
            ),
            row(
                0,
                feats(S, N, N, QdcValue::Touch, QtcValue::Zero),
                Movement::Place,
            ),
        ];
        let tree = DecisionTree::train(&LabeledDataset { rows }, &TrainParams::default()).unwrap();
        let unseen = feats(S, N, N, QdcValue::Far, QtcValue::Zero);
        assert_eq!(tree.classify(&unseen), Movement::Still);
    }

    #[test]
    fn csv_and_tree_documents_round_trip() {
        let data = LabeledDataset {
            rows: vec![
                row(
                    0,
                    feats(S, N, N, QdcValue::Near, QtcValue::Zero),
                    Movement::Still,
                ),
                row(
                    1,
                    feats(M, H, H, QdcValue::Far, QtcValue::Minus),
                    Movement::Transport,
                ),
                row(
                    1,
                    feats(S, H, N, QdcValue::Touch, QtcValue::Zero),
                    Movement::Pick,
                ),
            ],
        };
        let text = data.to_csv().unwrap();
        assert!(text.starts_with("trial,mos,hold_now,hold_prev,qdc_target,qtc_target,label\n"));
        assert_eq!(LabeledDataset::from_csv(&text).unwrap(), data);

        let tree = DecisionTree::train(&data, &TrainParams::default()).unwrap();
        let doc = tree.to_document();
        let back = DecisionTree::from_document(&doc).unwrap();
        assert_eq!(back, tree);
        assert_eq!(back.to_document(), doc);
    }

    #[test]
    fn bad_documents_rejected() {
        assert!(LabeledDataset::from_csv("a,b\n1,2\n").is_err());
        let bad = "trial,mos,hold_now,hold_prev,qdc_target,qtc_target,label\n0,moving,holding,holding,far,-,FLY\n";
        assert!(matches!(
            LabeledDataset::from_csv(bad),
            Err(MovementError::BadRow { row: 1, .. })
        ));
        assert!(DecisionTree::from_document("{").is_err());
        let doc = r#"{"root":{"split":{"feature":"mos","fallback":"moving","children":[]}}}"#;
        assert!(DecisionTree::from_document(doc).is_err());
    }

    #[test]
    fn grouped_cv_never_mixes_trials() {
        // trial 1 is the only one containing PLACE; holding it out must miss it
        let mut rows = Vec::new();
        for t in 0..3 {
            rows.push(row(
                t,
                feats(S, N, N, QdcValue::Near, QtcValue::Zero),
                Movement::Still,
            ));
        }
        rows.push(row(
            1,
            feats(S, N, H, QdcValue::Touch, QtcValue::Zero),
            Movement::Place,
        ));
        let report = cross_validate(&LabeledDataset { rows }, 10, &TrainParams::default()).unwrap();
        assert_eq!(report.folds, 3);
        assert!((report.accuracy - 0.75).abs() < 1e-12);
    }
}
