use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    confusion, discriminant_power, heart_problem_sens_spec, precision_per_class, total_precision, youden,
    ConfusionMatrix,
};
use super::split::{grouped_kfold, split_challenge, stratified_kfold, SplitPlan};
use crate::config::RunConfig;
use crate::dataio::{label_unlabeled_by_patient, read_wav, relabel_extrasys_to_normal, DatasetManifest, Label};
use crate::error::{Error, Result};
use crate::features::{extract_full_vector, FeatureRow, FeatureTable};
use crate::models::{mlp_train, MlpModel, SvmParams, TrainConfig};
use crate::preprocess::preprocess_pipeline;
use crate::reduce::Reducer;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Exp1,
    Exp2,
    Exp3,
}

impl ExperimentKind {
    pub fn number(self) -> usize {
        match self {
            ExperimentKind::Exp1 => 1,
            ExperimentKind::Exp2 => 2,
            ExperimentKind::Exp3 => 3,
        }
    }

    pub fn classes(self) -> Vec<Label> {
        match self {
            ExperimentKind::Exp1 => vec![Label::Normal, Label::Murmur, Label::Extrasys],
            _ => vec![Label::Normal, Label::Murmur],
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp1" => Ok(ExperimentKind::Exp1),
            "exp2" => Ok(ExperimentKind::Exp2),
            "exp3" => Ok(ExperimentKind::Exp3),
            other => Err(Error::Config(format!("unknown experiment {other:?} (exp1, exp2, exp3)"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Dnn,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelKind::Svm),
            "dnn" | "mlp" => Ok(ModelKind::Dnn),
            other => Err(Error::Config(format!("unknown model {other:?} (svm, dnn)"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Svm => "svm",
            ModelKind::Dnn => "dnn",
        })
    }
}

/// A fitted classifier. Sees sample ids so test doubles can look up truth.
pub trait Predictor<T>: Send + Sync {
    fn predict(&self, x: &Array2<T>, ids: &[String]) -> Result<Vec<usize>>;
}

/// Fits a [`Predictor`] on one training fold.
pub trait Learner<T>: Sync {
    fn name(&self) -> String;
    fn fit(
        &self,
        x: &Array2<T>,
        y: &[usize],
        n_classes: usize,
        ids: &[String],
        seed: u64,
    ) -> Result<Box<dyn Predictor<T>>>;
}

pub struct SvmLearner {
    pub params: SvmParams,
}

impl<T: Real> Predictor<T> for crate::models::SvmModel<T> {
    fn predict(&self, x: &Array2<T>, _: &[String]) -> Result<Vec<usize>> {
        crate::models::SvmModel::predict(self, x)
    }
}

impl<T: Real> Learner<T> for SvmLearner {
    fn name(&self) -> String {
        "svm".into()
    }

    fn fit(
        &self,
        x: &Array2<T>,
        y: &[usize],
        n_classes: usize,
        _: &[String],
        seed: u64,
    ) -> Result<Box<dyn Predictor<T>>> {
        let params = SvmParams { seed, ..self.params.clone() };
        Ok(Box::new(crate::models::svm_train(x, y, n_classes, &params)?))
    }
}

pub struct MlpLearner {
    pub hidden: Vec<usize>,
    pub dropout: Vec<f64>,
    pub train: TrainConfig,
}

impl<T: Real> Predictor<T> for MlpModel<T> {
    fn predict(&self, x: &Array2<T>, _: &[String]) -> Result<Vec<usize>> {
        MlpModel::predict(self, x)
    }
}

impl<T: Real> Learner<T> for MlpLearner {
    fn name(&self) -> String {
        "dnn".into()
    }

    fn fit(
        &self,
        x: &Array2<T>,
        y: &[usize],
        n_classes: usize,
        _: &[String],
        seed: u64,
    ) -> Result<Box<dyn Predictor<T>>> {
        let mut widths = vec![x.ncols()];
        widths.extend_from_slice(&self.hidden);
        widths.push(n_classes);
        let model = MlpModel::new(widths, self.dropout.clone(), seed)?;
        let train = TrainConfig { seed, ..self.train.clone() };
        Ok(Box::new(mlp_train(model, x, y, &train)?.model))
    }
}

/// Ids a fitted object has seen; checked against every test fold.
#[derive(Debug, Clone)]
struct Provenance(BTreeSet<String>);

impl Provenance {
    fn assert_unseen(&self, what: &str, test: &[String]) -> Result<()> {
        if let Some(id) = test.iter().find(|id| self.0.contains(*id)) {
            return Err(Error::Leakage(format!("{what} was fitted on test sample {id}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub pn: f64,
    pub pm: f64,
    pub pe: Option<f64>,
    pub sens: f64,
    pub spec: f64,
    pub youden: f64,
    /// Not available when sensitivity or specificity is 0 or 1.
    pub dpower: Option<f64>,
    pub total_precision: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_components: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: FoldMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: ExperimentKind,
    pub model: String,
    pub seed: u64,
    pub classes: Vec<Label>,
    pub folds: Vec<FoldReport>,
    pub mean: FoldMetrics,
    /// Population standard deviation across folds.
    pub std: FoldMetrics,
    pub flags: Vec<String>,
}

pub const REPORT_CSV_HEADER: &str = "PN,PM,PE,Sens,Spec,Youden,D,TPr";

impl MetricsReport {
    /// Fold means in the column order of [`REPORT_CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let m = &self.mean;
        let f = |v: f64| format!("{v:.4}");
        let o = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), f);
        [f(m.pn), f(m.pm), o(m.pe), f(m.sens), f(m.spec), f(m.youden), o(m.dpower), f(m.total_precision)].join(",")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Checks the documented bounds of every metric.
    pub fn check_bounds(&self) -> Result<()> {
        let max_tpr = self.classes.len() as f64;
        for f in self.folds.iter().map(|f| &f.metrics).chain([&self.mean]) {
            let unit = [Some(f.pn), Some(f.pm), f.pe, Some(f.sens), Some(f.spec), Some(f.accuracy)];
            let ok = unit.iter().flatten().all(|v| (0.0..=1.0).contains(v))
                && (-1.0..=1.0).contains(&f.youden)
                && (0.0..=max_tpr).contains(&f.total_precision);
            if !ok {
                return Err(Error::InvalidInput(format!("metric out of range: {f:?}")));
            }
        }
        Ok(())
    }
}

/// Applies the experiment's relabeling rules. Exp1 keeps labels and drops
/// unlabeled records; exp2/3 fold extrasystole into normal and propagate
/// patient labels.
pub fn prepare_manifest(kind: ExperimentKind, m: &DatasetManifest) -> Result<(DatasetManifest, Vec<String>)> {
    let mut notes = Vec::new();
    let out = match kind {
        ExperimentKind::Exp1 => {
            let mut out = m.clone();
            out.records.retain(|r| r.label.is_labeled());
            let dropped = m.len() - out.len();
            if dropped > 0 {
                notes.push(format!("{dropped} unlabeled records excluded"));
            }
            out
        }
        _ => label_unlabeled_by_patient(&relabel_extrasys_to_normal(m))?,
    };
    Ok((out, notes))
}

pub fn make_plan(kind: ExperimentKind, m: &DatasetManifest, folds: usize, seed: u64) -> Result<SplitPlan> {
    match kind {
        ExperimentKind::Exp1 => split_challenge(m),
        ExperimentKind::Exp2 => stratified_kfold(m, folds, seed),
        ExperimentKind::Exp3 => grouped_kfold(m, folds, seed),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Reads, preprocesses and featurizes every record, in manifest order.
pub fn extract_corpus<T: Real>(m: &DatasetManifest, cfg: &RunConfig) -> Result<FeatureTable<T>> {
    let rows: Vec<FeatureRow<T>> = pool(cfg.run.jobs)?.install(|| {
        m.records
            .par_iter()
            .map(|r| {
                let sample = read_wav::<T>(m.resolve(r))?;
                let pre = preprocess_pipeline(&sample, &cfg.preprocess).map_err(|e| e.in_sample(r.id()))?;
                let values = extract_full_vector(&pre, &cfg.features).map_err(|e| e.in_sample(r.id()))?;
                Ok(FeatureRow { id: r.id().to_string(), label: r.label, patient_id: r.patient_id.clone(), values })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut table = FeatureTable::new(cfg.features.feature_names());
    for row in rows {
        table.push(row)?;
    }
    Ok(table)
}

pub fn learner_for<T: Real>(model: ModelKind, kind: ExperimentKind, cfg: &RunConfig) -> Box<dyn Learner<T>> {
    match model {
        ModelKind::Svm => Box::new(SvmLearner { params: cfg.svm.clone() }),
        ModelKind::Dnn => Box::new(MlpLearner {
            hidden: cfg.mlp.hidden.clone(),
            dropout: cfg.mlp.dropout.clone(),
            train: cfg.mlp.train_config(kind.number(), cfg.run.seed),
        }),
    }
}

/// Full pipeline: features from the WAV files, then [`run_experiment_with`].
pub fn run_experiment<T: Real>(
    kind: ExperimentKind,
    model: ModelKind,
    m: &DatasetManifest,
    cfg: &RunConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let (prepared, _) = prepare_manifest(kind, m)?;
    let table = extract_corpus::<T>(&prepared, cfg)?;
    let learner = learner_for::<T>(model, kind, cfg);
    run_experiment_with(kind, m, &table, learner.as_ref(), cfg)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(folds: &[FoldMetrics]) -> (FoldMetrics, FoldMetrics) {
    let col = |f: &dyn Fn(&FoldMetrics) -> f64| mean_std(&folds.iter().map(f).collect::<Vec<_>>());
    let opt = |f: &dyn Fn(&FoldMetrics) -> Option<f64>| {
        folds.iter().map(f).collect::<Option<Vec<f64>>>().map(|v| mean_std(&v))
    };
    let pn = col(&|f| f.pn);
    let pm = col(&|f| f.pm);
    let pe = opt(&|f| f.pe);
    let sens = col(&|f| f.sens);
    let spec = col(&|f| f.spec);
    let yo = col(&|f| f.youden);
    let d = opt(&|f| f.dpower);
    let tpr = col(&|f| f.total_precision);
    let acc = col(&|f| f.accuracy);
    let pick = |i: usize| {
        let g = |p: (f64, f64)| if i == 0 { p.0 } else { p.1 };
        FoldMetrics {
            pn: g(pn),
            pm: g(pm),
            pe: pe.map(g),
            sens: g(sens),
            spec: g(spec),
            youden: g(yo),
            dpower: d.map(g),
            total_precision: g(tpr),
            accuracy: g(acc),
        }
    };
    (pick(0), pick(1))
}

/// Runs the experiment's folds on precomputed features. Standardizer, PCA
/// and classifier are fitted on each training fold only.
pub fn run_experiment_with<T: Real>(
    kind: ExperimentKind,
    m: &DatasetManifest,
    table: &FeatureTable<T>,
    learner: &dyn Learner<T>,
    cfg: &RunConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let (prepared, mut flags) = prepare_manifest(kind, m)?;
    let classes = kind.classes();
    let plan = make_plan(kind, &prepared, cfg.run.folds, cfg.run.seed)?;
    if plan.patient_overlap > 0 {
        flags.push(format!("{} patients appear in both train and test folds", plan.patient_overlap));
    }
    if kind == ExperimentKind::Exp3 && plan.patient_overlap > 0 {
        return Err(Error::Leakage("user-independent split shares patients".into()));
    }

    let full = table.matrix();
    let row_of: BTreeMap<&str, usize> = table.rows.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let label_of: BTreeMap<&str, Label> = prepared.records.iter().map(|r| (r.id(), r.label)).collect();
    let class_of = |id: &str| -> Result<usize> {
        let label = label_of[id];
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or_else(|| Error::InvalidInput(format!("{id}: label {label} not used by {kind}")))
    };
    let gather = |ids: &[String]| -> Result<(Array2<T>, Vec<usize>)> {
        let mut idx = Vec::with_capacity(ids.len());
        let mut y = Vec::with_capacity(ids.len());
        for id in ids {
            idx.push(*row_of.get(id.as_str()).ok_or_else(|| Error::InvalidInput(format!("no features for {id}")))?);
            y.push(class_of(id)?);
        }
        Ok((full.select(Axis(0), &idx), y))
    };

    let run_fold = |(f, fold): (usize, &super::split::Fold)| -> Result<(FoldReport, Vec<String>)> {
        let (x_train, y_train) = gather(&fold.train)?;
        let (x_test, y_test) = gather(&fold.test)?;
        let seen = Provenance(fold.train.iter().cloned().collect());

        let reducer = Reducer::fit(&x_train, cfg.pca.policy(), cfg.features.hash())?;
        let z_train = reducer.transform(&x_train)?;
        let model = learner.fit(&z_train, &y_train, classes.len(), &fold.train, cfg.run.seed.wrapping_add(f as u64))?;

        seen.assert_unseen("reducer", &fold.test)?;
        seen.assert_unseen("classifier", &fold.test)?;
        let pred = model.predict(&reducer.transform(&x_test)?, &fold.test)?;

        let truth: Vec<Label> = y_test.iter().map(|&c| classes[c]).collect();
        let predicted: Vec<Label> = pred.iter().map(|&c| classes[c]).collect();
        let cm = confusion(&truth, &predicted, &classes)?;
        let prec = precision_per_class(&cm);
        let ss = heart_problem_sens_spec(&cm)?;
        let mut notes = Vec::new();
        for (c, p) in classes.iter().zip(&prec) {
            if p.undefined {
                notes.push(format!("fold {f}: precision of {c} undefined (never predicted), counted as 0"));
            }
        }
        if ss.sens.undefined {
            notes.push(format!("fold {f}: sensitivity undefined (no heart-problem samples)"));
        }
        if ss.spec.undefined {
            notes.push(format!("fold {f}: specificity undefined (no normal samples)"));
        }
        let values: Vec<f64> = prec.iter().map(|p| p.value).collect();
        let metrics = FoldMetrics {
            pn: values[0],
            pm: values[1],
            pe: values.get(2).copied(),
            sens: ss.sens.value,
            spec: ss.spec.value,
            youden: youden(ss.sens.value, ss.spec.value),
            dpower: discriminant_power(ss.sens.value, ss.spec.value),
            total_precision: total_precision(&values),
            accuracy: cm.accuracy(),
        };
        let report = FoldReport {
            fold: f,
            n_train: fold.train.len(),
            n_test: fold.test.len(),
            n_components: reducer.pca.n_components(),
            confusion: cm,
            metrics,
        };
        Ok((report, notes))
    };

    let results: Vec<(FoldReport, Vec<String>)> =
        pool(cfg.run.jobs)?.install(|| plan.folds.par_iter().enumerate().map(run_fold).collect::<Result<Vec<_>>>())?;
    let mut folds = Vec::with_capacity(results.len());
    for (r, notes) in results {
        flags.extend(notes);
        folds.push(r);
    }
    let per_fold: Vec<FoldMetrics> = folds.iter().map(|f| f.metrics.clone()).collect();
    if per_fold.iter().any(|f| f.dpower.is_none()) {
        flags.push("discriminant power undefined in at least one fold; reported as N/A".into());
    }
    let (mean, std) = summarize(&per_fold);
    let report = MetricsReport { kind, model: learner.name(), seed: cfg.run.seed, classes, folds, mean, std, flags };
    report.check_bounds()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{ManifestRecord, SplitTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Predicts the true class of every id it is asked about.
    struct Oracle {
        truth: BTreeMap<String, usize>,
    }

    impl Predictor<f64> for Oracle {
        fn predict(&self, _: &Array2<f64>, ids: &[String]) -> Result<Vec<usize>> {
            Ok(ids.iter().map(|id| self.truth[id]).collect())
        }
    }

    struct OracleLearner {
        truth: BTreeMap<String, usize>,
    }

    impl Learner<f64> for OracleLearner {
        fn name(&self) -> String {
            "oracle".into()
        }
        fn fit(&self, _: &Array2<f64>, _: &[usize], _: usize, _: &[String], _: u64) -> Result<Box<dyn Predictor<f64>>> {
            Ok(Box::new(Oracle { truth: self.truth.clone() }))
        }
    }

    fn corpus() -> (DatasetManifest, FeatureTable<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let labels = [Label::Normal, Label::Murmur, Label::Extrasys];
        let mut records = Vec::new();
        for p in 0..15 {
            for k in 0..3 {
                records.push(ManifestRecord {
                    path: format!("P{p}_{k}.wav"),
                    label: labels[p % 3],
                    patient_id: format!("P{p}"),
                    split: if k == 2 { SplitTag::Test } else { SplitTag::Train },
                    noisy: false,
                });
            }
        }
        let m = DatasetManifest::new(records).unwrap();
        let mut table = FeatureTable::new((0..6).map(|i| format!("f{i}")).collect());
        for r in &m.records {
            let values = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            table
                .push(FeatureRow { id: r.id().into(), label: r.label, patient_id: r.patient_id.clone(), values })
                .unwrap();
        }
        (m, table)
    }

    fn oracle_for(kind: ExperimentKind, m: &DatasetManifest) -> OracleLearner {
        let (prepared, _) = prepare_manifest(kind, m).unwrap();
        let classes = kind.classes();
        let truth = prepared
            .records
            .iter()
            .map(|r| (r.id().to_string(), classes.iter().position(|&c| c == r.label).unwrap()))
            .collect();
        OracleLearner { truth }
    }

    #[test]
    fn oracle_reaches_maximum_total_precision() {
        let (m, table) = corpus();
        let cfg = RunConfig::default();
        let r =
            run_experiment_with(ExperimentKind::Exp1, &m, &table, &oracle_for(ExperimentKind::Exp1, &m), &cfg).unwrap();
        assert_eq!((r.mean.pn, r.mean.pm, r.mean.pe), (1.0, 1.0, Some(1.0)));
        assert_eq!(r.mean.total_precision, 3.0);
        assert_eq!(r.folds.len(), 1);
        assert_eq!(r.mean.dpower, None);
        for kind in [ExperimentKind::Exp2, ExperimentKind::Exp3] {
            let r = run_experiment_with(kind, &m, &table, &oracle_for(kind, &m), &cfg).unwrap();
            assert_eq!(r.folds.len(), 5);
            assert_eq!(r.mean.total_precision, 2.0);
            assert_eq!(r.mean.pe, None);
            assert_eq!(r.std.total_precision, 0.0);
            assert_eq!(r.csv_row(), "1.0000,1.0000,N/A,1.0000,1.0000,1.0000,N/A,2.0000");
        }
    }

    /// Reports a training id among its test predictions' provenance.
    struct Leaky;

    impl Learner<f64> for Leaky {
        fn name(&self) -> String {
            "leaky".into()
        }
        fn fit(&self, _: &Array2<f64>, _: &[usize], _: usize, _: &[String], _: u64) -> Result<Box<dyn Predictor<f64>>> {
            Ok(Box::new(Oracle { truth: BTreeMap::new() }))
        }
    }

    #[test]
    fn provenance_catches_overlap() {
        let seen = Provenance(["a".to_string()].into_iter().collect());
        assert!(seen.assert_unseen("reducer", &["b".into()]).is_ok());
        assert!(matches!(seen.assert_unseen("reducer", &["a".into()]), Err(Error::Leakage(_))));
        let (m, table) = corpus();
        // A learner that cannot answer fails loudly rather than scoring.
        let err = std::panic::catch_unwind(|| {
            run_experiment_with(ExperimentKind::Exp3, &m, &table, &Leaky, &RunConfig::default())
        });
        assert!(err.is_err());
    }

    #[test]
    fn svm_run_is_deterministic_across_jobs() {
        let (m, table) = corpus();
        let mut cfg = RunConfig::default();
        let learner = SvmLearner { params: cfg.svm.clone() };
        let a = run_experiment_with(ExperimentKind::Exp3, &m, &table, &learner, &cfg).unwrap();
        cfg.run.jobs = 4;
        let b = run_experiment_with(ExperimentKind::Exp3, &m, &table, &learner, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        a.check_bounds().unwrap();
        let back: MetricsReport = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn parsing_kinds() {
        assert_eq!("exp3".parse::<ExperimentKind>().unwrap(), ExperimentKind::Exp3);
        assert!("exp4".parse::<ExperimentKind>().is_err());
        assert_eq!("dnn".parse::<ModelKind>().unwrap(), ModelKind::Dnn);
        assert_eq!(ExperimentKind::Exp2.to_string(), "exp2");
    }

    #[test]
    fn summary_uses_population_std() {
        let f = |v: f64, d: Option<f64>| FoldMetrics {
            pn: v,
            pm: v,
            pe: None,
            sens: v,
            spec: v,
            youden: v,
            dpower: d,
            total_precision: v,
            accuracy: v,
        };
        let (mean, std) = summarize(&[f(0.2, Some(1.0)), f(0.4, None)]);
        assert!((mean.pn - 0.3).abs() < 1e-15 && (std.pn - 0.1).abs() < 1e-15);
        assert_eq!(mean.dpower, None);
    }
}
