//! Pipeline steps behind the CLI subcommands. Each reads its inputs from the
//! configured data and output directories and writes atomically.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use neurorank_core::model::baselines::random_accuracy;
use neurorank_core::model::{
    split_by_task, train_baselines, train_classifier, Annotation, Classifier, Dataset,
    LabeledExample, Origin, ParagraphClassifier,
};
use neurorank_core::rerank::{apply_feedback, compare_ids, show_next, RankingState, TaskLabels, TraceEntry};
use neurorank_core::signal::{preprocess, slice_by_events, EegSegment, SegmentKey};
use neurorank_core::sim::{compare_strategies, simulate_session, MetricsReport, SessionLog, Strategy, StrategySpec};
use neurorank_core::synth::synth_sessions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::{write_atomic, StagedDir};
use crate::config::{Layout, RunConfig, SessionSelection};
use crate::container::{find_containers, key_path, read_container, write_container, Container, EVENTS_FILE};
use crate::error::{AppError, AppResult};
use crate::jsonl;
use crate::model_file::{ModelConfigEcho, ModelFile};
use crate::sessions::{encode_session, read_labels, read_sessions, session_file_name, write_labels};
use crate::table::{column_name, segment_id, write_descriptor, Descriptor, FeatureTable};

fn require(path: &Path, what: &str) -> AppResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(AppError::data(format!(
            "missing {what}: expected {} (run the earlier pipeline step first)",
            path.display()
        )))
    }
}

/// Orders by user, then task with numeric ids compared as numbers.
fn by_user_task(a: (&str, &str), b: (&str, &str)) -> Ordering {
    a.0.cmp(b.0).then_with(|| compare_ids(a.1, b.1))
}

/// Writes a synthetic data directory: recordings with view events,
/// session logs and label files.
pub fn cmd_synth(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    let data = synth_sessions(&cfg.synth, cfg.seed)?;

    let rec = StagedDir::new(&layout.recordings())?;
    for (log, segment) in data.logs.iter().zip(&data.recordings) {
        let c = Container {
            segment: segment.clone(),
            preprocessed: false,
            events: Some(log.view_events()),
        };
        write_container(&rec.path().join(key_path(segment.key())), &c)?;
    }
    let ses = StagedDir::new(&layout.sessions())?;
    for log in &data.logs {
        write_atomic(&ses.path().join(session_file_name(log)), &encode_session(log)?)?;
    }
    let lab = StagedDir::new(&layout.labels())?;
    for l in &data.labels {
        write_labels(&lab.path().join(format!("{}.json", l.task)), l)?;
    }
    rec.commit()?;
    ses.commit()?;
    lab.commit()?;
    Ok(format!(
        "wrote {} sessions and {} label files to {}",
        data.logs.len(),
        data.labels.len(),
        cfg.paths.data_dir.display()
    ))
}

fn preprocess_container(cfg: &RunConfig, dir: &Path) -> AppResult<Vec<EegSegment>> {
    let c = read_container(dir)?;
    if c.preprocessed {
        if !cfg.passthrough_preprocessed {
            return Err(AppError::data(format!(
                "{}: input is already marked preprocessed (set passthrough_preprocessed to pass it through)",
                dir.display()
            )));
        }
        return match &c.events {
            Some(ev) => Ok(slice_by_events(&c.segment, ev).map_err(|e| AppError::from(e).in_file(&dir.join(EVENTS_FILE)))?),
            None => Ok(vec![c.segment]),
        };
    }
    let parts = match &c.events {
        Some(ev) => slice_by_events(&c.segment, ev).map_err(|e| AppError::from(e).in_file(&dir.join(EVENTS_FILE)))?,
        None => vec![c.segment],
    };
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        if p.is_degenerate() {
            warn!("{}: skipping empty segment {}", dir.display(), segment_id(p.key()));
            continue;
        }
        out.push(preprocess(&p, &cfg.preprocess).map_err(|e| AppError::from(e).in_file(dir))?);
    }
    Ok(out)
}

/// Slices recordings by their view events and runs the preprocessing chain
/// on each segment.
pub fn cmd_preprocess(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    let inputs = find_containers(&layout.recordings())?;
    if inputs.is_empty() {
        warn!("no recordings found under {}", layout.recordings().display());
    }
    let results: Vec<(PathBuf, AppResult<Vec<EegSegment>>)> = inputs
        .par_iter()
        .map(|dir| (dir.clone(), preprocess_container(cfg, dir)))
        .collect();
    let mut segments = Vec::new();
    let mut first_err = None;
    let mut failed = 0;
    for (dir, r) in results {
        match r {
            Ok(s) => segments.extend(s),
            Err(e) => {
                log::error!("{e}");
                failed += 1;
                first_err.get_or_insert((dir, e));
            }
        }
    }
    if let Some((_, e)) = first_err {
        if failed == 1 {
            return Err(e);
        }
        return Err(AppError::data(format!("{failed} of {} inputs failed; first: {e}", inputs.len())));
    }
    segments.sort_by(|a, b| a.key().cmp(b.key()));
    if let Some(w) = segments.windows(2).find(|w| w[0].key() == w[1].key()) {
        return Err(AppError::data(format!("segment {} is produced twice", segment_id(w[0].key()))));
    }
    let staged = StagedDir::new(&layout.segments())?;
    segments.par_iter().try_for_each(|s| {
        let c = Container {
            segment: s.clone(),
            preprocessed: true,
            events: None,
        };
        write_container(&staged.path().join(key_path(s.key())), &c)
    })?;
    staged.commit()?;
    Ok(format!(
        "preprocessed {} inputs into {} segments",
        inputs.len(),
        segments.len()
    ))
}

/// Extracts one feature row per preprocessed segment.
pub fn cmd_extract(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    require(&layout.segments(), "preprocessed segments")?;
    let dirs = find_containers(&layout.segments())?;
    if dirs.is_empty() {
        return Err(AppError::data(format!("no segments under {}", layout.segments().display())));
    }
    let extractor = cfg.extractor();
    let rows: Vec<AppResult<(SegmentKey, Vec<String>, Vec<f64>)>> = dirs
        .par_iter()
        .map(|dir| {
            let c = read_container(dir)?;
            let fv = extractor.extract(&c.segment).map_err(|e| AppError::from(e).in_file(dir))?;
            Ok((c.segment.key().clone(), c.segment.channel_labels().to_vec(), fv.values))
        })
        .collect();
    let mut rows = rows.into_iter().collect::<AppResult<Vec<_>>>()?;
    let channels = rows[0].1.clone();
    if let Some(bad) = rows.iter().find(|r| r.1 != channels) {
        return Err(AppError::data(format!(
            "segment {} has channels {:?} but {} has {:?}; all segments must share one montage",
            segment_id(&bad.0),
            bad.1,
            segment_id(&rows[0].0),
            channels
        )));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let descriptor = Descriptor::new(
        neurorank_core::features::FeatureLayout::new(&cfg.features, channels),
        cfg.mode,
        cfg.bands.clone(),
    );
    let table = FeatureTable {
        columns: descriptor.columns.iter().map(column_name).collect(),
        rows: rows.into_iter().map(|(k, _, v)| (k, v)).collect(),
    };
    table.write(&layout.features())?;
    write_descriptor(&layout.descriptor(), &descriptor)?;
    Ok(format!(
        "extracted {} features from {} segments",
        table.dim(),
        table.rows.len()
    ))
}

fn read_features(cfg: &RunConfig) -> AppResult<FeatureTable> {
    let path = Layout(cfg).features();
    require(&path, "feature table")?;
    FeatureTable::read(&path)
}

fn read_model(cfg: &RunConfig) -> AppResult<ModelFile> {
    let path = Layout(cfg).model();
    require(&path, "trained model")?;
    ModelFile::read(&path)
}

fn load_sessions(cfg: &RunConfig) -> AppResult<Vec<SessionLog>> {
    let dir = Layout(cfg).sessions();
    require(&dir, "session logs")?;
    let mut logs = read_sessions(&dir)?;
    logs.sort_by(|a, b| by_user_task((&a.user, &a.task), (&b.user, &b.task)));
    Ok(logs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeSummary {
    pub round_sizes: Vec<usize>,
    pub surviving: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub version: u32,
    pub train_examples: usize,
    pub test_examples: usize,
    /// Feature rows with no annotation in any session log.
    pub unannotated_segments: usize,
    pub hard_to_say: usize,
    pub excluded_users: Vec<String>,
    pub rfe: RfeSummary,
    pub models: Vec<ModelScore>,
}

fn accuracy(clf: &dyn Classifier, data: &Dataset) -> Option<f64> {
    (!data.is_empty()).then(|| clf.accuracy(data))
}

struct Scaled<'a>(&'a ParagraphClassifier);

impl Classifier for Scaled<'_> {
    fn classify(&self, features: &[f64]) -> neurorank_core::model::Satisfaction {
        self.0.predict(features).expect("dimension checked by the dataset")
    }
}

/// Joins features with annotations, splits by task and trains the
/// paragraph classifier.
pub fn cmd_train(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    let table = read_features(cfg)?;
    let logs = load_sessions(cfg)?;
    let mut annotations: BTreeMap<SegmentKey, Annotation> = BTreeMap::new();
    for log in &logs {
        for ev in &log.events {
            if let neurorank_core::sim::SessionEvent::Annotate {
                judgment,
                paragraph,
                annotation,
            } = ev
            {
                annotations.insert(log.segment_key(judgment, paragraph), *annotation);
            }
        }
    }
    let (mut unannotated, mut hard) = (0, 0);
    let mut examples = Vec::new();
    for (key, values) in &table.rows {
        match annotations.get(key).map(|a| a.label()) {
            None => unannotated += 1,
            Some(None) => hard += 1,
            Some(Some(label)) => examples.push(LabeledExample {
                features: values.clone(),
                label,
                origin: Origin::new(&*key.user, &*key.query, &*key.judgment, &*key.paragraph),
            }),
        }
    }
    examples.sort_by(|a, b| {
        by_user_task((&a.origin.user, &a.origin.task), (&b.origin.user, &b.origin.task))
            .then_with(|| a.origin.cmp(&b.origin))
    });
    let split = split_by_task(examples, |e| (e.origin.user.as_str(), e.origin.task.as_str()));
    for u in &split.excluded_users {
        warn!("user {u} has fewer than two annotated tasks and is left out");
    }
    let train = Dataset::new(split.train)?;
    let test = Dataset::new(split.test)?;
    if train.is_empty() {
        return Err(AppError::data("no annotated training examples"));
    }
    let mut rfe_cfg = cfg.rfe.clone();
    rfe_cfg.seed = cfg.seed;
    let (clf, result) = train_classifier(&train, &rfe_cfg)?;
    if let Some(w) = &result.warning {
        warn!("{w}");
    }
    let svm = Scaled(&clf);
    let mut models = vec![ModelScore {
        model: "SVM-RFE".into(),
        train_accuracy: svm.accuracy(&train),
        test_accuracy: accuracy(&svm, &test),
    }];
    if let Some(bcfg) = &cfg.baselines {
        let scaled_train = clf.scaler.apply(&train)?;
        let scaled_test = clf.scaler.apply(&test)?;
        let b = train_baselines(&scaled_train, bcfg)?;
        let mut push = |name: String, c: &dyn Classifier| {
            models.push(ModelScore {
                model: name,
                train_accuracy: c.accuracy(&scaled_train),
                test_accuracy: accuracy(c, &scaled_test),
            })
        };
        push("Linear regression".into(), &b.linear);
        push(format!("Decision tree (depth {})", b.tree.depth), &b.tree.tree);
        push("MLP".into(), &b.mlp);
        models.push(ModelScore {
            model: "Random".into(),
            train_accuracy: random_accuracy(&scaled_train, bcfg.seed),
            test_accuracy: (!scaled_test.is_empty()).then(|| random_accuracy(&scaled_test, bcfg.seed ^ 1)),
        });
    }
    let report = TrainReport {
        version: 1,
        train_examples: train.len(),
        test_examples: test.len(),
        unannotated_segments: unannotated,
        hard_to_say: hard,
        excluded_users: split.excluded_users,
        rfe: RfeSummary {
            round_sizes: result.round_sizes.clone(),
            surviving: result.surviving().len(),
            warning: result.warning.clone(),
        },
        models,
    };
    let model = ModelFile::new(
        &clf,
        &table.columns,
        ModelConfigEcho {
            rfe: rfe_cfg,
            mode: cfg.mode,
            features: cfg.features.clone(),
        },
    );
    model.write(&layout.model())?;
    write_atomic(&layout.train_report(), &jsonl::encode_json(&report)?)?;
    let test_acc = report.models[0]
        .test_accuracy
        .map_or("-".to_string(), |a| format!("{:.1}%", a * 100.0));
    Ok(format!(
        "trained on {} examples ({} features kept), held-out accuracy {test_acc}",
        report.train_examples, report.rfe.surviving
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub segment: String,
    pub decision: f64,
    pub satisfied: bool,
}

/// Applies the trained model to every feature row.
pub fn cmd_predict(cfg: &RunConfig) -> AppResult<String> {
    let model = read_model(cfg)?;
    let table = read_features(cfg)?;
    if table.dim() != model.source_dim {
        return Err(AppError::data(format!(
            "{} has {} feature columns but the model expects {}",
            Layout(cfg).features().display(),
            table.dim(),
            model.source_dim
        )));
    }
    let clf = model.classifier()?;
    let preds = table
        .rows
        .iter()
        .map(|(k, v)| {
            let decision = clf.decision(v)?;
            Ok(Prediction {
                segment: segment_id(k),
                decision,
                satisfied: decision > 0.0,
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    write_atomic(&Layout(cfg).predictions(), &jsonl::encode_jsonl(&preds)?)?;
    let pos = preds.iter().filter(|p| p.satisfied).count();
    Ok(format!("predicted {} segments ({pos} satisfied)", preds.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLine {
    pub judgment: String,
    pub satisfied: bool,
}

/// Ranks one task's pool, applying recorded feedback as judgments appear.
pub fn cmd_rerank(cfg: &RunConfig, labels_path: &Path, feedback_path: Option<&Path>) -> AppResult<String> {
    let labels: TaskLabels = jsonl::read_json(labels_path)?;
    labels.validate().map_err(|e| AppError::from(e).in_file(labels_path))?;
    let feedback: BTreeMap<String, bool> = match feedback_path {
        Some(p) => jsonl::read_jsonl::<FeedbackLine>(p)?
            .into_iter()
            .map(|f| (f.judgment, f.satisfied))
            .collect(),
        None => BTreeMap::new(),
    };
    let pool = labels.candidate_pool(cfg.rerank.pool_size)?;
    let mut state = RankingState::new(labels.intents.clone(), &pool)?;
    let mut trace = Vec::new();
    while let Some(id) = show_next(&mut state, &labels.judgments)? {
        let fb = feedback.get(&id).copied();
        if let Some(s) = fb {
            state = apply_feedback(state, &labels.judgments, &id, s, &cfg.rerank)?;
        }
        trace.push(TraceEntry {
            step: trace.len() + 1,
            shown: id,
            feedback: fb,
            profile: state.profile.weights(),
        });
    }
    let out = cfg.paths.out_dir.join(format!("rerank_{}.jsonl", labels.task));
    write_atomic(&out, &jsonl::encode_jsonl(&trace)?)?;
    Ok(format!("ranked {} judgments into {}", trace.len(), out.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub version: u32,
    pub selection: SessionSelection,
    /// `user/task` of every replayed session.
    pub sessions: Vec<String>,
    pub report: MetricsReport,
}

/// Replays the selected sessions under every configured strategy.
pub fn cmd_simulate(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    let logs = load_sessions(cfg)?;
    require(&layout.labels(), "task labels")?;
    let labels = read_labels(&layout.labels())?;
    let logs = match cfg.simulate_sessions {
        SessionSelection::All => logs,
        SessionSelection::Test => split_by_task(logs, |l| (l.user.as_str(), l.task.as_str())).test,
    };
    if logs.is_empty() {
        return Err(AppError::data("no sessions selected for simulation"));
    }
    let needs_eeg = cfg.strategies.iter().any(|s| matches!(s, StrategySpec::Eeg { .. }));
    let (clf, source) = if needs_eeg {
        let model = read_model(cfg)?;
        let table = read_features(cfg)?;
        let source: BTreeMap<SegmentKey, Vec<f64>> = table.rows.into_iter().collect();
        (Some(model.classifier()?), source)
    } else {
        (None, BTreeMap::new())
    };
    let strategies: Vec<Strategy<'_>> = cfg
        .strategies
        .iter()
        .map(|s| match *s {
            StrategySpec::None => Strategy::None,
            StrategySpec::Click { threshold } => Strategy::Click { threshold },
            StrategySpec::Eeg { threshold } => Strategy::Eeg {
                voting: neurorank_core::model::VotingConfig { threshold },
                predictor: clf.as_ref().expect("loaded for EEG strategies"),
                source: &source,
            },
        })
        .collect();
    let report = compare_strategies(&logs, &strategies, &labels, &cfg.rerank)?;
    let mut traces = Vec::new();
    for s in &strategies {
        for log in &logs {
            let task = labels
                .get(&log.task)
                .ok_or_else(|| AppError::data(format!("no labels for task {}", log.task)))?;
            traces.push(simulate_session(log, s, task, &cfg.rerank)?);
        }
    }
    let file = SimulationFile {
        version: 1,
        selection: cfg.simulate_sessions,
        sessions: logs.iter().map(|l| format!("{}/{}", l.user, l.task)).collect(),
        report,
    };
    write_atomic(&layout.traces(), &jsonl::encode_jsonl(&traces)?)?;
    write_atomic(&layout.simulation(), &jsonl::encode_json(&file)?)?;
    info!("simulated {} traces", traces.len());
    Ok(format!(
        "replayed {} sessions under {} strategies",
        file.sessions.len(),
        strategies.len()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub paragraph_models: Option<Vec<ModelScore>>,
    pub simulation: SimulationFile,
}

fn pct(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |a| format!("{:.1}%", a * 100.0))
}

pub fn render_report(r: &ReportFile) -> String {
    let mut out = String::new();
    if let Some(models) = &r.paragraph_models {
        out.push_str("Paragraph classification\n\n");
        let w = models.iter().map(|m| m.model.len()).max().unwrap_or(5).max(5);
        out.push_str(&format!("{:<w$}  {:>6}  {:>6}\n", "Model", "Train", "Test"));
        out.push_str(&format!("{}  ------  ------\n", "-".repeat(w)));
        for m in models {
            out.push_str(&format!(
                "{:<w$}  {:>6}  {:>6}\n",
                m.model,
                pct(Some(m.train_accuracy)),
                pct(m.test_accuracy)
            ));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "Feedback strategies ({} sessions, {} selection)\n\n",
        r.simulation.sessions.len(),
        match r.simulation.selection {
            SessionSelection::Test => "held-out",
            SessionSelection::All => "all",
        }
    ));
    out.push_str(&r.simulation.report.render());
    out
}

/// Renders tables from the simulation and training outputs.
pub fn cmd_report(cfg: &RunConfig) -> AppResult<String> {
    let layout = Layout(cfg);
    require(&layout.simulation(), "simulation results")?;
    let simulation: SimulationFile = jsonl::read_json(&layout.simulation())?;
    let paragraph_models = if layout.train_report().exists() {
        Some(jsonl::read_json::<TrainReport>(&layout.train_report())?.models)
    } else {
        None
    };
    let report = ReportFile {
        version: 1,
        paragraph_models,
        simulation,
    };
    write_atomic(&layout.report_json(), &jsonl::encode_json(&report)?)?;
    write_atomic(&layout.report_txt(), render_report(&report).as_bytes())?;
    Ok(format!("wrote {}", layout.report_txt().display()))
}

/// Runs preprocess through report.
pub fn cmd_run(cfg: &RunConfig) -> AppResult<String> {
    let steps: [fn(&RunConfig) -> AppResult<String>; 6] =
        [cmd_preprocess, cmd_extract, cmd_train, cmd_predict, cmd_simulate, cmd_report];
    let mut last = String::new();
    for s in steps {
        last = s(cfg)?;
        info!("{last}");
    }
    Ok(last)
}
