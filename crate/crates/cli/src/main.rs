//! `heartsound` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heartsound::dataio::{load_manifest, read_wav, synth_corpus, synth_pcg, write_wav, CorpusSpec, Label, SynthConfig};
use heartsound::eval::{run_experiment, ExperimentKind, MetricsReport, ModelKind, REPORT_CSV_HEADER};
use heartsound::features::{extract_with_trace, write_envelope_dump, FeatureRow, FeatureTable};
use heartsound::models::{mlp_train, svm_train, Classifier, MlpModel, ModelFile};
use heartsound::preprocess::preprocess_pipeline;
use heartsound::reduce::Reducer;
use heartsound::{load_config, Error, Result, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "heartsound", version, about = "Segmentation-free heart-sound classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic PCG (WAV plus JSON event sidecar) or a labelled corpus
    Synth(SynthArgs),
    /// High-pass filter, wavelet-denoise and normalize one WAV file
    Denoise(DenoiseArgs),
    /// Extract the feature table for every record of a manifest
    Features(FeaturesArgs),
    /// Fit a standardizer+PCA reducer, or apply one to a feature table
    Reduce(ReduceArgs),
    /// Train a classifier on a feature table
    Train(TrainArgs),
    /// Predict labels for a feature table with a trained model
    Predict(PredictArgs),
    /// Run one of the three evaluation protocols end to end
    Experiment(ExperimentArgs),
    /// Render a report JSON as a CSV row or JSON
    Report(ReportArgs),
}

/// Options shared by every subcommand that reads a configuration.
#[derive(Args, Debug, Clone)]
struct Common {
    /// `section.key=value` configuration file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output is identical for any value [default: 1]
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct PreprocessFlags {
    /// High-pass cutoff in Hz [default: 60]
    #[arg(long)]
    cutoff: Option<f64>,
    /// FIR order at 4 kHz, scaled with the sample rate [default: 256]
    #[arg(long)]
    order: Option<usize>,
    /// Wavelet: db1..db4 [default: db4]
    #[arg(long)]
    wavelet: Option<String>,
    /// Decomposition levels [default: 6]
    #[arg(long)]
    levels: Option<usize>,
    /// Thresholding rule: hard or soft [default: hard]
    #[arg(long)]
    threshold: Option<String>,
    /// Threshold selection: heursure, sure or universal [default: heursure]
    #[arg(long)]
    selection: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
struct FeatureFlags {
    /// Shannon-energy smoothing window in samples [default: 100]
    #[arg(long)]
    window: Option<usize>,
    /// Minimum peak height of the normalized envelope [default: 0.08]
    #[arg(long)]
    height: Option<f64>,
    /// Minimum distance between peaks in samples [default: 400]
    #[arg(long)]
    distance: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct PcaFlags {
    /// Principal components kept (capped by the data rank) [default: 460]
    #[arg(long)]
    components: Option<usize>,
    /// Keep components up to this cumulative variance instead of a fixed count
    /// [default: off; 0.9999 when pca.policy=variance]
    #[arg(long)]
    variance_target: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelFlags {
    /// SVM box constraint C [default: 1]
    #[arg(long = "svm-c")]
    svm_c: Option<f64>,
    /// RBF gamma, or "auto" for 1/(n_features·var) [default: auto]
    #[arg(long)]
    gamma: Option<String>,
    /// MLP training epochs [default: 500 exp1, 50 exp2, 100 exp3]
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output WAV; the event sidecar is written next to it as .json
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    out: Option<PathBuf>,
    /// Write a 30-patient labelled corpus with manifest.csv into this directory
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Heart rate in beats per minute
    #[arg(long, default_value_t = 72.0)]
    bpm: f64,
    /// Duration in seconds
    #[arg(long, default_value_t = 8.0)]
    duration: f64,
    /// Sample rate in Hz
    #[arg(long, default_value_t = 4000)]
    fs: u32,
    /// Add a systolic murmur
    #[arg(long)]
    murmur: bool,
    /// Add extrasystoles
    #[arg(long)]
    extrasystole: bool,
    /// White-noise RMS
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pre: PreprocessFlags,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Manifest CSV (path,label,patient_id,split,noisy)
    #[arg(long)]
    manifest: PathBuf,
    /// Output feature CSV: id, label, patient_id, then named features
    #[arg(long)]
    out: PathBuf,
    /// Write one index,envelope,is_peak CSV per sample into this directory
    #[arg(long)]
    dump_envelope: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pre: PreprocessFlags,
    #[command(flatten)]
    feat: FeatureFlags,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["fit", "apply"]))]
struct ReduceArgs {
    /// Fit a reducer on --features and write it to --out
    #[arg(long)]
    fit: bool,
    /// Apply --reducer to --features and write the projected table to --out
    #[arg(long, requires = "reducer")]
    apply: bool,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    reducer: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pca: PcaFlags,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    Svm,
    Dnn,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Svm => ModelKind::Svm,
            ModelArg::Dnn => ModelKind::Dnn,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Feature CSV; unlabeled rows are skipped
    #[arg(long)]
    features: PathBuf,
    /// Reducer applied before training; its hash is embedded in the model
    #[arg(long)]
    reducer: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model_flags: ModelFlags,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Required when the model was trained behind a reducer
    #[arg(long)]
    reducer: Option<PathBuf>,
    /// Output CSV (id,predicted); stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KindArg {
    Exp1,
    Exp2,
    Exp3,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Exp1 => ExperimentKind::Exp1,
            KindArg::Exp2 => ExperimentKind::Exp2,
            KindArg::Exp3 => ExperimentKind::Exp3,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// exp1: challenge split, 3 classes; exp2: stratified k-fold, 2 classes;
    /// exp3: patient-grouped k-fold, 2 classes
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    manifest: PathBuf,
    /// Report JSON
    #[arg(long)]
    out: PathBuf,
    /// Folds for exp2/exp3 [default: 5]
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pre: PreprocessFlags,
    #[command(flatten)]
    feat: FeatureFlags,
    #[command(flatten)]
    pca: PcaFlags,
    #[command(flatten)]
    model_flags: ModelFlags,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// csv: header plus one row; json: the report as stored
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Config file (or defaults) with explicit flags layered on top.
struct Overrides<'a> {
    file: Option<&'a Path>,
    pairs: Vec<(&'static str, String)>,
}

impl<'a> Overrides<'a> {
    fn new(file: Option<&'a Path>) -> Self {
        Overrides { file, pairs: Vec::new() }
    }

    fn add<V: ToString>(&mut self, key: &'static str, value: &Option<V>) -> &mut Self {
        if let Some(v) = value {
            self.pairs.push((key, v.to_string()));
        }
        self
    }

    fn common(&mut self, c: &Common) -> &mut Self {
        self.add("run.seed", &c.seed)
    }

    fn pre(&mut self, p: &PreprocessFlags) -> &mut Self {
        self.add("filter.cutoff_hz", &p.cutoff)
            .add("filter.order", &p.order)
            .add("dwt.wavelet", &p.wavelet)
            .add("dwt.levels", &p.levels)
            .add("dwt.threshold", &p.threshold)
            .add("dwt.selection", &p.selection)
    }

    fn feat(&mut self, f: &FeatureFlags) -> &mut Self {
        self.add("envelope.window", &f.window).add("peak.height", &f.height).add("peak.distance", &f.distance)
    }

    fn pca(&mut self, p: &PcaFlags) -> &mut Self {
        if p.variance_target.is_some() {
            self.pairs.push(("pca.policy", "variance".into()));
        }
        self.add("pca.components", &p.components).add("pca.variance_target", &p.variance_target)
    }

    fn model(&mut self, m: &ModelFlags, epochs_key: &'static str) -> &mut Self {
        self.add("svm.c", &m.svm_c).add("svm.gamma", &m.gamma).add(epochs_key, &m.epochs)
    }

    fn build(&self, jobs: Option<usize>) -> Result<RunConfig> {
        let mut cfg = match self.file {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        for (k, v) in &self.pairs {
            cfg.set(k, v)?;
        }
        if let Some(j) = jobs {
            cfg.run.jobs = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    if let Some(dir) = &a.corpus {
        let spec = CorpusSpec { seed: a.seed, ..CorpusSpec::default() };
        let m = synth_corpus(&spec, dir)?;
        eprintln!("wrote {} samples and manifest.csv to {}", m.len(), dir.display());
        return Ok(());
    }
    let out = a.out.as_ref().expect("clap requires --out without --corpus");
    let cfg = SynthConfig {
        bpm: a.bpm,
        duration_s: a.duration,
        sample_rate_hz: a.fs,
        murmur: a.murmur,
        extrasystole: a.extrasystole,
        noise_rms: a.noise,
        seed: a.seed,
    };
    let s = synth_pcg::<f64>(&cfg)?;
    write_wav(&s.sample, out)?;
    let sidecar = out.with_extension("json");
    std::fs::write(&sidecar, s.sidecar_json(&cfg)?).map_err(|e| io_error(&sidecar, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn denoise(a: &DenoiseArgs) -> Result<()> {
    let cfg = Overrides::new(a.config.as_deref()).pre(&a.pre).build(None)?;
    let s = read_wav::<f64>(&a.input)?;
    let clean = preprocess_pipeline(&s, &cfg.preprocess).map_err(|e| e.in_sample(a.input.display().to_string()))?;
    write_wav(&clean, &a.out)
}

fn features(a: &FeaturesArgs) -> Result<()> {
    let cfg =
        Overrides::new(a.common.config.as_deref()).common(&a.common).pre(&a.pre).feat(&a.feat).build(a.common.jobs)?;
    let m = load_manifest(&a.manifest)?;
    let table = match &a.dump_envelope {
        None => heartsound::eval::extract_corpus::<f64>(&m, &cfg)?,
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            let mut table = FeatureTable::new(cfg.features.feature_names());
            for r in &m.records {
                let s = read_wav::<f64>(m.resolve(r))?;
                let pre = preprocess_pipeline(&s, &cfg.preprocess).map_err(|e| e.in_sample(r.id()))?;
                let ex = extract_with_trace(&pre, &cfg.features).map_err(|e| e.in_sample(r.id()))?;
                let stem = Path::new(r.id()).with_extension("");
                let name = stem.to_string_lossy().replace(['/', '\\'], "_");
                write_envelope_dump(&ex.envelope, &ex.peaks, &dir.join(format!("{name}.csv")))?;
                table.push(FeatureRow {
                    id: r.id().to_string(),
                    label: r.label,
                    patient_id: r.patient_id.clone(),
                    values: ex.values,
                })?;
            }
            table
        }
    };
    table.write_csv(&a.out)
}

fn reduce(a: &ReduceArgs) -> Result<()> {
    let table = FeatureTable::<f64>::read_csv(&a.features)?;
    if a.fit {
        let cfg = Overrides::new(a.config.as_deref()).pca(&a.pca).build(None)?;
        let reducer = Reducer::fit(&table.matrix(), cfg.pca.policy(), cfg.features.hash())?;
        eprintln!("kept {} components", reducer.pca.n_components());
        return reducer.save(&a.out);
    }
    let reducer = Reducer::<f64>::load(a.reducer.as_ref().expect("clap requires --reducer with --apply"))?;
    let z = reducer.transform(&table.matrix())?;
    let mut out = FeatureTable::new((1..=z.ncols()).map(|i| format!("pc{i}")).collect());
    for (row, values) in table.rows.iter().zip(z.rows()) {
        out.push(FeatureRow { values: values.to_vec(), ..row.clone() })?;
    }
    out.write_csv(&a.out)
}

fn train(a: &TrainArgs) -> Result<()> {
    let cfg = Overrides::new(a.common.config.as_deref())
        .common(&a.common)
        .model(&a.model_flags, "mlp.epochs_exp1")
        .build(a.common.jobs)?;
    let table = FeatureTable::<f64>::read_csv(&a.features)?;
    let rows: Vec<usize> = (0..table.len()).filter(|&i| table.rows[i].label.is_labeled()).collect();
    let has_extrasys = rows.iter().any(|&i| table.rows[i].label == Label::Extrasys);
    let classes = if has_extrasys { ExperimentKind::Exp1 } else { ExperimentKind::Exp2 }.classes();
    let y: Vec<usize> = rows
        .iter()
        .map(|&i| classes.iter().position(|&c| c == table.rows[i].label).expect("labelled row has a class"))
        .collect();
    let mut x = table.matrix().select(ndarray::Axis(0), &rows);
    let (feature_hash, reducer_hash) = match &a.reducer {
        Some(path) => {
            let reducer = Reducer::<f64>::load(path)?;
            x = reducer.transform(&x)?;
            (reducer.feature_config_hash.clone(), Some(reducer.hash()))
        }
        None => (cfg.features.hash(), None),
    };
    let classifier = match a.model {
        ModelArg::Svm => {
            let params = heartsound::models::SvmParams { seed: cfg.run.seed, ..cfg.svm.clone() };
            Classifier::Svm { model: svm_train(&x, &y, classes.len(), &params)?, params }
        }
        ModelArg::Dnn => {
            let mut widths = vec![x.ncols()];
            widths.extend_from_slice(&cfg.mlp.hidden);
            widths.push(classes.len());
            let model = MlpModel::new(widths, cfg.mlp.dropout.clone(), cfg.run.seed)?;
            let train = cfg.mlp.train_config(1, cfg.run.seed);
            Classifier::Dnn { model: mlp_train(model, &x, &y, &train)?.model, train }
        }
    };
    ModelFile::new(classes, feature_hash, reducer_hash, classifier).save(&a.out)
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = ModelFile::<f64>::load(&a.model)?;
    let table = FeatureTable::<f64>::read_csv(&a.features)?;
    let mut x = table.matrix();
    match (&model.reducer_hash, &a.reducer) {
        (Some(expected), Some(path)) => {
            let reducer = Reducer::<f64>::load(path)?;
            if &reducer.hash() != expected {
                return Err(Error::ModelFormat(format!("{}: reducer does not match the model", path.display())));
            }
            x = reducer.transform(&x)?;
        }
        (Some(_), None) => {
            return Err(Error::InvalidInput("model was trained behind a reducer; pass --reducer".into()))
        }
        (None, Some(_)) => return Err(Error::InvalidInput("model was trained without a reducer".into())),
        (None, None) => {}
    }
    let labels = model.predict_labels(&x)?;
    let mut text = String::from("id,predicted\n");
    for (row, label) in table.rows.iter().zip(&labels) {
        text.push_str(&format!("{},{}\n", row.id, label));
    }
    match &a.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let kind: ExperimentKind = a.kind.into();
    let epochs_key = ["mlp.epochs_exp1", "mlp.epochs_exp2", "mlp.epochs_exp3"][kind.number() - 1];
    let cfg = Overrides::new(a.common.config.as_deref())
        .common(&a.common)
        .pre(&a.pre)
        .feat(&a.feat)
        .pca(&a.pca)
        .model(&a.model_flags, epochs_key)
        .add("run.folds", &a.folds)
        .build(a.common.jobs)?;
    let m = load_manifest(&a.manifest)?;
    let report = run_experiment::<f64>(kind, a.model.into(), &m, &cfg)?;
    std::fs::write(&a.out, report.to_json()?).map_err(|e| io_error(&a.out, e))?;
    println!("{REPORT_CSV_HEADER}\n{}", report.csv_row());
    for flag in &report.flags {
        eprintln!("note: {flag}");
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_error(&a.input, e))?;
    let r: MetricsReport = serde_json::from_str(&text)?;
    r.check_bounds()?;
    match a.format {
        Format::Csv => println!("{REPORT_CSV_HEADER}\n{}", r.csv_row()),
        Format::Json => print!("{}", r.to_json()?),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Denoise(a) => denoise(a),
        Command::Features(a) => features(a),
        Command::Reduce(a) => reduce(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn help(sub: &str) -> String {
        let mut cmd = Cli::command();
        cmd.build();
        cmd.find_subcommand_mut(sub).unwrap().render_long_help().to_string()
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_shows_library_defaults() {
        let d = RunConfig::default();
        let den = help("denoise");
        assert!(den.contains(&format!("[default: {}]", d.preprocess.cutoff_hz)));
        assert!(den.contains(&format!("[default: {}]", d.preprocess.fir_order)));
        assert!(den.contains(&format!("[default: {}]", d.preprocess.denoise.levels)));
        let feat = help("features");
        assert!(feat.contains(&format!("[default: {}]", d.features.envelope_window)));
        assert!(feat.contains(&format!("[default: {}]", d.features.peaks.min_height)));
        assert!(feat.contains(&format!("[default: {}]", d.features.peaks.min_distance)));
        let exp = help("experiment");
        assert!(exp.contains(&format!("[default: {}]", d.pca.components)));
        assert!(exp.contains(&format!("{} exp1, {} exp2, {} exp3", d.mlp.epochs[0], d.mlp.epochs[1], d.mlp.epochs[2])));
        assert!(exp.contains(&format!("[default: {}]", d.run.folds)));
        let s = SynthConfig::default();
        let syn = help("synth");
        assert!(syn.contains(&format!("[default: {}]", s.bpm)) && syn.contains(&format!("[default: {}]", s.noise_rms)));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "peak.height=0.2\nenvelope.window=50\n").unwrap();
        let feat = FeatureFlags { height: Some(0.3), ..FeatureFlags::default() };
        let cfg = Overrides::new(Some(&path)).feat(&feat).build(Some(2)).unwrap();
        assert_eq!(cfg.features.peaks.min_height, 0.3);
        assert_eq!(cfg.features.envelope_window, 50);
        assert_eq!(cfg.run.jobs, 2);
        let bad = PreprocessFlags { levels: Some(0), ..PreprocessFlags::default() };
        let err = Overrides::new(None).pre(&bad).build(None).unwrap_err();
        assert_eq!(exit_code(&err), 1);
    }
}
