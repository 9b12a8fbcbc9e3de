//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any fail.
//!
//! Every numeric check is made against an oracle computed here, not by the
//! library code under test.

// `!(a < b)` in `ensure!` is deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use heartsound::dataio::{
    synth_corpus, synth_pcg, CorpusSpec, DatasetManifest, Label, ManifestRecord, SplitTag, SynthConfig,
};
use heartsound::eval::{
    discriminant_power, extract_corpus, grouped_kfold, run_experiment, run_experiment_with, stratified_kfold,
    total_precision, youden, ExperimentKind, Learner, MetricsReport, ModelKind, Predictor, REPORT_CSV_HEADER,
};
use heartsound::features::{envelope, find_peaks, shannon_energy, FeatureConfig, PeakParams};
use heartsound::models::{kernel_matrix, mlp_init, mlp_train, solve_dual, svm_train, MlpModel, SvmParams, TrainConfig};
use heartsound::preprocess::{
    apply_fir, default_order, design_highpass, dwt, idwt, preprocess_pipeline, PreprocessConfig, Wavelet,
};
use heartsound::reduce::{fit_pca, PcaPolicy};
use heartsound::RunConfig;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = Box<dyn Fn() -> Option<Outcome>>;
type PeakTrace = (Vec<usize>, Vec<f64>, Vec<f64>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn c1_table_metrics() -> Outcome {
    let y = youden(0.54, 0.77);
    ensure!(y == 0.31, "youden = {y:?}");
    // (√3/π)·(log10(sens/(1−sens)) + log10(spec/(1−spec)))
    let oracle = 3f64.sqrt() / std::f64::consts::PI * ((0.54f64 / 0.46).log10() + (0.77f64 / 0.23).log10());
    let d = discriminant_power(0.54, 0.77).ok_or("D undefined")?;
    ensure!((d - oracle).abs() < 1e-12, "D = {d}, formula gives {oracle}");
    ensure!((d - 0.33).abs() <= 0.005, "D = {d}");
    let t = total_precision(&[0.82, 0.70, 0.20]);
    ensure!(t == 1.72, "TPr = {t:?}");
    Ok(format!("youden 0.31, D {d:.4}, TPr 1.72"))
}

struct Oracle(BTreeMap<String, usize>);

impl Predictor<f64> for Oracle {
    fn predict(&self, _: &Array2<f64>, ids: &[String]) -> heartsound::Result<Vec<usize>> {
        Ok(ids.iter().map(|id| self.0[id]).collect())
    }
}

struct OracleLearner(BTreeMap<String, usize>);

impl Learner<f64> for OracleLearner {
    fn name(&self) -> String {
        "oracle".into()
    }
    fn fit(
        &self,
        _: &Array2<f64>,
        _: &[usize],
        _: usize,
        _: &[String],
        _: u64,
    ) -> heartsound::Result<Box<dyn Predictor<f64>>> {
        Ok(Box::new(Oracle(self.0.clone())))
    }
}

fn c2_max_total_precision() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = CorpusSpec {
        normal_patients: 5,
        murmur_patients: 5,
        extrasys_patients: 5,
        duration_s: 3.0,
        ..Default::default()
    };
    let m = synth_corpus(&spec, dir.path()).map_err(|e| e.to_string())?;
    let cfg = RunConfig::default();
    let table = extract_corpus::<f64>(&m, &cfg).map_err(|e| e.to_string())?;
    let truth = |classes: &[Label], relabel: bool| {
        OracleLearner(
            m.records
                .iter()
                .map(|r| {
                    let l = if relabel && r.label == Label::Extrasys { Label::Normal } else { r.label };
                    (r.id().to_string(), classes.iter().position(|&c| c == l).unwrap())
                })
                .collect(),
        )
    };
    let three =
        run_experiment_with(ExperimentKind::Exp1, &m, &table, &truth(&ExperimentKind::Exp1.classes(), false), &cfg)
            .map_err(|e| e.to_string())?;
    ensure!(three.mean.total_precision == 3.0, "three-class TPr {}", three.mean.total_precision);
    let two =
        run_experiment_with(ExperimentKind::Exp2, &m, &table, &truth(&ExperimentKind::Exp2.classes(), true), &cfg)
            .map_err(|e| e.to_string())?;
    ensure!(two.mean.total_precision == 2.0, "binary TPr {}", two.mean.total_precision);
    ensure!(two.folds.iter().all(|f| f.metrics.total_precision == 2.0), "a binary fold fell short of 2.0");
    Ok("three-class 3.0, binary 2.0".into())
}

fn c3_shannon_energy() -> Outcome {
    let e = shannon_energy(&[1.0_f64, 0.1, 0.0, -0.1]);
    // −x²·log10(x²)
    let oracle = [0.0, -0.01 * 0.01f64.log10(), 0.0, -0.01 * 0.01f64.log10()];
    ensure!(max_abs_diff(&e, &oracle) <= 1e-12, "{e:?}");
    ensure!((e[1] - 0.02).abs() <= 1e-12, "E(0.1) = {}", e[1]);
    Ok(format!("E(1) = {}, E(0.1) = {}, E(0) = {}", e[0], e[1], e[2]))
}

fn c4_wavelets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_rec, mut worst_energy) = (0.0f64, 0.0f64);
    for &n in &[512usize, 1000, 4096] {
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = dwt(&x, Wavelet::DB4, 6).map_err(|e| e.to_string())?;
            let y = idwt(&d).map_err(|e| e.to_string())?;
            ensure!(y.len() == n, "length {} != {n}", y.len());
            worst_rec = worst_rec.max(max_abs_diff(&x, &y));
            let coeff: f64 = d.approx.iter().chain(d.details.iter().flatten()).map(|c| c * c).sum();
            let signal: f64 = x.iter().map(|v| v * v).sum();
            worst_energy = worst_energy.max(((coeff - signal) / signal).abs());
        }
    }
    ensure!(worst_rec < 1e-8, "reconstruction error {worst_rec:e}");
    ensure!(worst_energy < 1e-10, "relative energy error {worst_energy:e}");
    let taps: f64 = Wavelet::DB4.scaling_filter().iter().sum();
    ensure!((taps - 2f64.sqrt()).abs() < 1e-12, "db4 tap sum {taps}");
    let squares: f64 = Wavelet::DB4.scaling_filter().iter().map(|h| h * h).sum();
    ensure!((squares - 1.0).abs() < 1e-12, "db4 taps not unit norm: {squares}");
    Ok(format!("reconstruction {worst_rec:.1e}, energy {worst_energy:.1e}, taps √2"))
}

fn c5_fir() -> Outcome {
    let fs = 4000u32;
    let order = default_order(fs);
    let filter = design_highpass::<f64>(60.0, fs, order).map_err(|e| e.to_string())?;
    let gain_db = |f: f64| -> Result<f64, String> {
        let x: Vec<f64> =
            (0..4 * fs as usize).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / f64::from(fs)).sin()).collect();
        let y = apply_fir(&filter, &x).map_err(|e| e.to_string())?;
        let skip = order + 1;
        Ok(20.0 * (rms(&y[skip..y.len() - skip]) / rms(&x[skip..x.len() - skip])).log10())
    };
    let stop = gain_db(30.0)?;
    let pass = gain_db(200.0)?;
    ensure!(stop <= -30.0, "30 Hz gain {stop:.2} dB");
    ensure!(pass >= -1.0, "200 Hz gain {pass:.3} dB");
    Ok(format!("order {order}: 30 Hz {stop:.1} dB, 200 Hz {pass:.3} dB"))
}

fn c6_peaks() -> Outcome {
    let pre = PreprocessConfig::default();
    let feat = FeatureConfig::default();
    let peak_pipeline = |bpm: f64, noise: f64, seed: u64| -> Result<PeakTrace, String> {
        let s = synth_pcg::<f64>(&SynthConfig { bpm, duration_s: 10.0, noise_rms: noise, seed, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let p = preprocess_pipeline(&s.sample, &pre).map_err(|e| e.to_string())?;
        let env = envelope(&p.samples, feat.envelope_window, p.sample_rate_hz).map_err(|e| e.to_string())?;
        let peaks = find_peaks(&env, &feat.peaks);
        Ok((peaks.indices, peaks.heights, env.values))
    };
    let count_at_60 = peak_pipeline(60.0, 0.0, 0)?.0.len();
    // The generator emits S1 and S2 once per cycle: 10 cycles at 60 bpm.
    ensure!(count_at_60.abs_diff(20) <= 2, "60 bpm: {count_at_60} peaks");
    let idx75 = peak_pipeline(75.0, 0.0, 0)?.0;
    let gaps: Vec<f64> = idx75.windows(2).map(|w| (w[1] - w[0]) as f64 / 4000.0).collect();
    let d_mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    ensure!((d_mean - 0.40).abs() <= 0.05, "75 bpm: d_mean {d_mean:.3}");

    let PeakParams { min_height, min_distance } = feat.peaks;
    let mut checked = 0;
    for bpm in [50.0, 60.0, 75.0, 90.0, 110.0, 140.0] {
        for (seed, noise) in [(0, 0.0), (1, 0.02), (2, 0.1)] {
            let (idx, heights, env) = peak_pipeline(bpm, noise, seed)?;
            ensure!(
                idx.windows(2).all(|w| w[1] - w[0] >= min_distance),
                "bpm {bpm} seed {seed}: gap below {min_distance}"
            );
            ensure!(heights.iter().all(|&h| h >= min_height), "bpm {bpm} seed {seed}: height below {min_height}");
            ensure!(idx.iter().zip(&heights).all(|(&i, &h)| env[i] == h), "heights disagree with the envelope");
            checked += idx.len();
        }
    }
    Ok(format!("60 bpm count {count_at_60}, 75 bpm d_mean {d_mean:.3} s, {checked} peaks checked"))
}

/// Covariance eigenvalues (descending) normalised to ratios.
fn covariance_ratios(x: &Array2<f64>) -> Vec<f64> {
    let (n, d) = x.dim();
    let m = nalgebra::DMatrix::from_row_slice(n, d, x.as_slice().unwrap());
    let mean = m.row_mean();
    let mut c = m.clone();
    for mut r in c.row_iter_mut() {
        r -= &mean;
    }
    let cov = c.transpose() * &c / (n as f64 - 1.0);
    let mut ev: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ev.iter().sum();
    ev.iter().map(|v| v / total).collect()
}

fn c7_pca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_ortho, mut worst_ratio) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let x = Array2::from_shape_simple_fn((50, 233), || rng.random_range(-1.0..1.0));
        let p = fit_pca(&x, PcaPolicy::default()).map_err(|e| e.to_string())?;
        let g = p.components.dot(&p.components.t());
        for ((i, j), v) in g.indexed_iter() {
            let e: f64 = if i == j { 1.0 } else { 0.0 };
            worst_ortho = worst_ortho.max((v - e).abs());
        }
        let oracle = covariance_ratios(&x);
        let k = p.explained_variance_ratio.len();
        ensure!(k == 49, "kept {k} components of a rank-49 matrix");
        worst_ratio = worst_ratio.max(max_abs_diff(&p.explained_variance_ratio, &oracle[..k]));
    }
    ensure!(worst_ortho < 1e-8, "orthonormality error {worst_ortho:e}");
    ensure!(worst_ratio < 1e-8, "ratio error {worst_ratio:e}");
    let u: Vec<f64> = (0..233).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rank1 = Array2::from_shape_fn((50, 233), |(i, j)| (i as f64 - 20.0) * 0.1 * u[j] + 3.0);
    let p = fit_pca(&rank1, PcaPolicy::default()).map_err(|e| e.to_string())?;
    let first = p.explained_variance_ratio[0];
    ensure!((first - 1.0).abs() <= 1e-10, "rank-1 first ratio {first}");
    Ok(format!("orthonormality {worst_ortho:.1e}, ratios {worst_ratio:.1e}, rank-1 ratio {first}"))
}

fn toy_set(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((20, 4), || rng.random_range(-1.0..1.0));
    let y = x.rows().into_iter().map(|r| usize::from(r[0] * r[1] + 0.3 * r[2] > 0.0)).collect();
    (x, y)
}

/// Central-difference check of every parameter of `model`.
fn finite_difference_error(model: &MlpModel<f64>, x: &Array2<f64>, y: &[usize]) -> f64 {
    let h = 1e-5;
    let (_, grads) = model.loss_and_gradients(x, y).unwrap();
    let mut m = model.clone();
    let mut worst = 0.0f64;
    for (l, grad) in grads.iter().enumerate() {
        let n_w = m.layers[l].weights.len();
        for k in 0..n_w + m.layers[l].biases.len() {
            let cols = m.layers[l].weights.ncols();
            fn slot(m: &mut MlpModel<f64>, l: usize, k: usize, n_w: usize, cols: usize) -> &mut f64 {
                if k < n_w {
                    &mut m.layers[l].weights[[k / cols, k % cols]]
                } else {
                    &mut m.layers[l].biases[k - n_w]
                }
            }
            let orig = *slot(&mut m, l, k, n_w, cols);
            *slot(&mut m, l, k, n_w, cols) = orig + h;
            let up = m.loss(x, y).unwrap();
            *slot(&mut m, l, k, n_w, cols) = orig - h;
            let down = m.loss(x, y).unwrap();
            *slot(&mut m, l, k, n_w, cols) = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = if k < n_w { grad.weights[[k / cols, k % cols]] } else { grad.biases[k - n_w] };
            worst = worst.max((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6));
        }
    }
    worst
}

fn c8_mlp() -> Outcome {
    let (x, y) = toy_set(1);
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let mut m = MlpModel::<f64>::new(vec![4, 9, 8, 7, 6, 5, 4, 2], vec![0.2, 0.5, 0.5, 0.5, 0.5, 0.5], seed)
            .map_err(|e| e.to_string())?;
        // Zero biases put dead units exactly on the ReLU kink, where the
        // central difference is not a derivative; move them off it.
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        for layer in &mut m.layers {
            layer.biases.mapv_inplace(|_| rng.random_range(-0.1..0.1));
        }
        worst = worst.max(finite_difference_error(&m, &x, &y));
    }
    ensure!(worst < 1e-4, "gradient relative error {worst:e}");
    let (x, y) = toy_set(2);
    let cfg = TrainConfig { epochs: 200, dropout: false, seed: 1, ..Default::default() };
    let out = mlp_train(mlp_init(4, 2, 5).map_err(|e| e.to_string())?, &x, &y, &cfg).map_err(|e| e.to_string())?;
    let pred = out.model.predict(&x).map_err(|e| e.to_string())?;
    ensure!(pred == y, "toy set not fitted after 200 epochs");
    let h = &out.loss_history;
    ensure!(h[..6].windows(2).all(|w| w[1] < w[0]), "loss not strictly decreasing: {:?}", &h[..6]);
    Ok(format!("gradient error {worst:.1e}, toy set 100%, first losses {:.4} → {:.4}", h[0], h[5]))
}

/// Largest violation of the box-constrained dual KKT conditions.
fn kkt_gap(k: &Array2<f64>, y: &[f64], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = y.len();
    (0..n)
        .map(|i| {
            let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[[i, j]]).sum::<f64>() + bias;
            let margin = y[i] * f - 1.0;
            if alpha[i] <= 0.0 {
                (-margin).max(0.0)
            } else if alpha[i] >= c {
                margin.max(0.0)
            } else {
                margin.abs()
            }
        })
        .fold(0.0, f64::max)
}

fn c9_svm() -> Outcome {
    let x = ndarray::array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let y = vec![0, 0, 1, 1];
    let xor = svm_train(&x, &y, 2, &SvmParams { c: 10.0, gamma: Some(2.0), ..Default::default() })
        .map_err(|e| e.to_string())?;
    ensure!(xor.predict(&x).map_err(|e| e.to_string())? == y, "XOR not separated");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let centers = [(0.0, 0.0), (4.0, 0.0), (2.0, 4.0)];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..100 {
            rows.extend([cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0)]);
            labels.push(c);
        }
    }
    let blobs = Array2::from_shape_vec((300, 2), rows).unwrap();
    let tol = 1e-3;
    let mut worst_kkt = 0.0f64;
    for (pos, neg) in [(0, 1), (0, 2), (1, 2)] {
        let idx: Vec<usize> = (0..300).filter(|&i| labels[i] == pos || labels[i] == neg).collect();
        let sub = blobs.select(Axis(0), &idx);
        let sy: Vec<f64> = idx.iter().map(|&i| if labels[i] == pos { 1.0 } else { -1.0 }).collect();
        let k = kernel_matrix(&sub, 0.5);
        let sol = solve_dual(&k, &sy, 1.0, tol, 1_000_000, 0, |_, _| {});
        ensure!(sol.converged, "pair ({pos},{neg}) did not converge");
        ensure!(sol.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)), "alpha outside the box");
        let eq: f64 = sol.alpha.iter().zip(&sy).map(|(a, y)| a * y).sum();
        ensure!(eq.abs() < 1e-9, "Σ α y = {eq:e}");
        worst_kkt = worst_kkt.max(kkt_gap(&k, &sy, &sol.alpha, sol.bias, 1.0));
    }
    ensure!(worst_kkt <= tol, "KKT violation {worst_kkt:e} > {tol}");
    let model = svm_train(&blobs, &labels, 3, &SvmParams::default()).map_err(|e| e.to_string())?;
    let pred = model.predict(&blobs).map_err(|e| e.to_string())?;
    let acc = pred.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / 300.0;
    ensure!(acc >= 0.99, "3-class accuracy {acc}");
    Ok(format!("XOR 100%, KKT {worst_kkt:.1e} ≤ {tol}, blobs {:.1}%", acc * 100.0))
}

fn random_manifest(rng: &mut ChaCha8Rng) -> DatasetManifest {
    let n_patients = rng.random_range(6..25);
    let mut records = Vec::new();
    for p in 0..n_patients {
        let label = [Label::Normal, Label::Murmur][rng.random_range(0..2)];
        for k in 0..rng.random_range(1..6) {
            records.push(ManifestRecord {
                path: format!("p{p}_{k}.wav"),
                label,
                patient_id: format!("p{p}"),
                split: SplitTag::Unassigned,
                noisy: false,
            });
        }
    }
    DatasetManifest::new(records).unwrap()
}

fn c10_splits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut grouped = 0;
    while grouped < 200 {
        let m = random_manifest(&mut rng);
        let patient: BTreeMap<&str, &str> = m.records.iter().map(|r| (r.id(), r.patient_id.as_str())).collect();
        let plan = grouped_kfold(&m, 5, grouped).map_err(|e| e.to_string())?;
        for f in &plan.folds {
            let train: BTreeSet<&str> = f.train.iter().map(|id| patient[id.as_str()]).collect();
            ensure!(
                f.test.iter().all(|id| !train.contains(patient[id.as_str()])),
                "manifest {grouped}: patient overlap"
            );
            ensure!(f.train.len() + f.test.len() == m.len(), "manifest {grouped}: fold does not cover the data");
        }
        grouped += 1;
    }
    let mut stratified = 0;
    for seed in 0..200u64 {
        let mut records = Vec::new();
        let counts = [rng.random_range(5..60), rng.random_range(5..60), rng.random_range(5..60)];
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                records.push(ManifestRecord {
                    path: format!("c{c}_{i}.wav"),
                    label: [Label::Normal, Label::Murmur, Label::Extrasys][c],
                    patient_id: format!("q{c}_{i}"),
                    split: SplitTag::Unassigned,
                    noisy: false,
                });
            }
        }
        records.shuffle(&mut rng);
        let m = DatasetManifest::new(records).unwrap();
        let label: BTreeMap<&str, Label> = m.records.iter().map(|r| (r.id(), r.label)).collect();
        let plan = stratified_kfold(&m, 5, seed).map_err(|e| e.to_string())?;
        for f in &plan.folds {
            for (c, &n) in counts.iter().enumerate() {
                let got = f
                    .test
                    .iter()
                    .filter(|id| label[id.as_str()] == [Label::Normal, Label::Murmur, Label::Extrasys][c])
                    .count();
                let ideal = n as f64 / 5.0;
                ensure!((got as f64 - ideal).abs() <= 1.0, "class {c}: {got} in a fold, proportional {ideal}");
            }
        }
        stratified += 1;
    }
    Ok(format!("{grouped} grouped plans without overlap, {stratified} stratified plans within ±1"))
}

fn corpus(dir: &Path) -> Result<DatasetManifest, String> {
    synth_corpus(&CorpusSpec::default(), dir).map_err(|e| e.to_string())
}

fn c11_rehearsal(dir: &Path) -> Outcome {
    let m = corpus(dir)?;
    ensure!(m.len() == 90, "corpus has {} samples", m.len());
    let mut cfg = RunConfig::default();
    cfg.run.seed = 7;
    let mut line = Vec::new();
    for model in [ModelKind::Svm, ModelKind::Dnn] {
        let a = run_experiment::<f64>(ExperimentKind::Exp3, model, &m, &cfg).map_err(|e| e.to_string())?;
        let b = run_experiment::<f64>(ExperimentKind::Exp3, model, &m, &cfg).map_err(|e| e.to_string())?;
        ensure!(a == b, "{model:?}: repeated run differs");
        // Murmur precision pooled over the folds' confusion matrices, and per-fold mean.
        let (mut tp, mut predicted) = (0usize, 0usize);
        for f in &a.folds {
            let col = f.confusion.classes.iter().position(|&c| c == Label::Murmur).unwrap();
            tp += f.confusion.counts[col][col];
            predicted += f.confusion.counts.iter().map(|row| row[col]).sum::<usize>();
        }
        let pooled = tp as f64 / predicted.max(1) as f64;
        ensure!(a.mean.pm >= 0.8, "{model:?}: murmur precision {:.3} (pooled {pooled:.3})", a.mean.pm);
        line.push(format!("{model:?} PM {:.3} (pooled {pooled:.3})", a.mean.pm));
    }
    Ok(line.join(", "))
}

fn cli_experiment(manifest: &Path, out: &Path, model: &str, jobs: usize) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_heartsound"))
        .args(["experiment", "--kind", "exp3", "--model", model, "--seed", "7", "--jobs", &jobs.to_string()])
        .arg("--manifest")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn c12_determinism(dir: &Path) -> Outcome {
    let manifest = dir.join("manifest.csv");
    if !manifest.exists() {
        corpus(dir)?;
    }
    let mut sizes = Vec::new();
    for model in ["svm", "dnn"] {
        let a = dir.join(format!("{model}_a.json"));
        let b = dir.join(format!("{model}_b.json"));
        let c = dir.join(format!("{model}_c.json"));
        cli_experiment(&manifest, &a, model, 1)?;
        cli_experiment(&manifest, &b, model, 1)?;
        cli_experiment(&manifest, &c, model, 4)?;
        let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
        let (ba, bb, bc) = (read(&a)?, read(&b)?, read(&c)?);
        ensure!(ba == bb, "{model}: repeated run differs");
        ensure!(ba == bc, "{model}: --jobs 4 differs from --jobs 1");
        let parsed: MetricsReport = serde_json::from_slice(&ba).map_err(|e| e.to_string())?;
        ensure!(parsed.folds.len() == 5, "{model}: {} folds", parsed.folds.len());
        sizes.push(format!("{model} {} bytes", ba.len()));
    }
    Ok(format!("byte-identical reports ({}), also under --jobs 4", sizes.join(", ")))
}

fn c13_pascal() -> Option<Outcome> {
    let manifest = std::env::var_os("HEARTSOUND_PASCAL_MANIFEST")?;
    Some((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("report.json");
        let o = Command::new(env!("CARGO_BIN_EXE_heartsound"))
            .args(["experiment", "--kind", "exp1", "--model", "svm", "--seed", "0", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        let mut lines = stdout.lines();
        ensure!(lines.next() == Some(REPORT_CSV_HEADER), "missing header");
        let row = lines.next().ok_or("missing metric row")?;
        let cells: Vec<&str> = row.split(',').collect();
        ensure!(cells.len() == 8, "row has {} cells", cells.len());
        ensure!(cells.iter().all(|c| *c == "N/A" || c.parse::<f64>().is_ok()), "bad cell in {row}");
        Ok(row.to_string())
    })())
}

fn main() {
    let corpus_dir = tempfile::tempdir().expect("temp dir");
    let corpus_path = corpus_dir.path().to_path_buf();
    let c11_dir = corpus_path.clone();
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("1 metric arithmetic", Duration::from_secs(1), Box::new(|| Some(c1_table_metrics()))),
        ("2 maximum TPr", Duration::from_secs(10), Box::new(|| Some(c2_max_total_precision()))),
        ("3 Shannon energy", Duration::from_secs(1), Box::new(|| Some(c3_shannon_energy()))),
        ("4 wavelets", Duration::from_secs(5), Box::new(|| Some(c4_wavelets()))),
        ("5 FIR high-pass", Duration::from_secs(2), Box::new(|| Some(c5_fir()))),
        ("6 peak pipeline", Duration::from_secs(10), Box::new(|| Some(c6_peaks()))),
        ("7 PCA", Duration::from_secs(5), Box::new(|| Some(c7_pca()))),
        ("8 MLP numerics", Duration::from_secs(60), Box::new(|| Some(c8_mlp()))),
        ("9 SVM numerics", Duration::from_secs(30), Box::new(|| Some(c9_svm()))),
        ("10 split guarantees", Duration::from_secs(5), Box::new(|| Some(c10_splits()))),
        ("11 exp3 rehearsal", Duration::from_secs(300), Box::new(move || Some(c11_rehearsal(&c11_dir)))),
        ("12 determinism", Duration::from_secs(600), Box::new(move || Some(c12_determinism(&corpus_path)))),
        ("13 PASCAL exp1", Duration::from_secs(3600), Box::new(c13_pascal)),
    ];
    let (mut failed, mut skipped) = (0, 0);
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Some(Err(format!("panicked: {}", msg.unwrap_or_default())))
        });
        let elapsed = start.elapsed();
        let line = match outcome {
            None => {
                skipped += 1;
                format!("SKIP criterion {name}: HEARTSOUND_PASCAL_MANIFEST not set")
            }
            Some(Ok(detail)) if elapsed <= *budget => format!("PASS criterion {name} ({elapsed:.2?}): {detail}"),
            Some(Ok(detail)) => {
                failed += 1;
                format!("FAIL criterion {name}: over budget {elapsed:.2?} > {budget:?} ({detail})")
            }
            Some(Err(why)) => {
                failed += 1;
                format!("FAIL criterion {name} ({elapsed:.2?}): {why}")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {} passed, {failed} failed, {skipped} skipped", criteria.len() - failed - skipped);
    if failed > 0 {
        std::process::exit(1);
    }
}
