use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AudioSample, Label};
use crate::error::{Error, Result};
use crate::scalar::Real;

const S1_FREQ_HZ: f64 = 100.0;
const S1_DURATION_S: f64 = 0.040;
const S1_AMPLITUDE: f64 = 0.8;
const S2_FREQ_HZ: f64 = 150.0;
const S2_DURATION_S: f64 = 0.030;
const S2_AMPLITUDE: f64 = 0.6;
/// S1 onset within a cycle, as a fraction of the cycle length.
const S1_PHASE: f64 = 0.1;
/// S1 to S2 gap, as a fraction of the cycle length.
const SYSTOLE_FRACTION: f64 = 0.3;
/// Extra beat position after S1, mid-diastole.
const EXTRA_FRACTION: f64 = SYSTOLE_FRACTION + (1.0 - SYSTOLE_FRACTION) / 2.0;
const MURMUR_BAND_HZ: (f64, f64) = (120.0, 400.0);
const MURMUR_MIN_RMS: f64 = 0.08;
const MURMUR_TAPER_S: f64 = 0.010;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub bpm: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub murmur: bool,
    pub extrasystole: bool,
    pub noise_rms: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            bpm: 72.0,
            duration_s: 8.0,
            sample_rate_hz: 4000,
            murmur: false,
            extrasystole: false,
            noise_rms: 0.01,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if !(self.bpm.is_finite() && self.bpm > 0.0) {
            return bad("bpm must be positive");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive");
        }
        if !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return bad("noise_rms must be non-negative");
        }
        if self.duration_s < self.cycle_s() {
            return bad("duration shorter than one cardiac cycle");
        }
        if 2.0 * MURMUR_BAND_HZ.1 >= f64::from(self.sample_rate_hz) {
            return bad("sample rate too low for the murmur band");
        }
        Ok(())
    }

    pub fn cycle_s(&self) -> f64 {
        60.0 / self.bpm
    }

    pub fn cycles(&self) -> usize {
        (self.duration_s * self.bpm / 60.0).floor() as usize
    }

    pub fn murmur_rms(&self) -> f64 {
        (3.0 * self.noise_rms).max(MURMUR_MIN_RMS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    S1,
    S2,
    Extra,
    Murmur,
}

/// Ground-truth event: centre time for tones, onset for murmur spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEvent {
    pub kind: EventKind,
    pub cycle: usize,
    pub time_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput<T> {
    pub sample: AudioSample<T>,
    /// The waveform before the additive white noise.
    pub clean: Vec<T>,
    pub events: Vec<SynthEvent>,
}

impl<T> SynthOutput<T> {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// JSON sidecar with the generator settings and the event log.
    pub fn sidecar_json(&self, cfg: &SynthConfig) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            config: &'a SynthConfig,
            events: &'a [SynthEvent],
        }
        Ok(serde_json::to_string_pretty(&Sidecar { config: cfg, events: &self.events })?)
    }
}

fn add_tone(out: &mut [f64], fs: f64, centre_s: f64, freq: f64, duration_s: f64, amp: f64) {
    let sigma = duration_s / 6.0;
    let half = 4.0 * sigma;
    let lo = ((centre_s - half) * fs).floor().max(0.0) as usize;
    let hi = (((centre_s + half) * fs).ceil() as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let dt = i as f64 / fs - centre_s;
        *v += amp * (-0.5 * (dt / sigma).powi(2)).exp() * (2.0 * PI * freq * dt).cos();
    }
}

/// Band-limited noise as a sum of random-phase sinusoids across the murmur band.
struct MurmurSource {
    freqs: Vec<f64>,
    phases: Vec<f64>,
    gain: f64,
}

impl MurmurSource {
    fn new(rng: &mut impl Rng, rms: f64) -> Self {
        let step = 2.0;
        let n = ((MURMUR_BAND_HZ.1 - MURMUR_BAND_HZ.0) / step) as usize + 1;
        let freqs: Vec<f64> =
            (0..n).map(|k| MURMUR_BAND_HZ.0 + step * k as f64 + rng.random_range(-0.5..0.5)).collect();
        let phases = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        // Each unit sinusoid carries power 1/2.
        let gain = rms / (n as f64 / 2.0).sqrt();
        MurmurSource { freqs, phases, gain }
    }

    fn at(&self, t: f64) -> f64 {
        self.gain * self.freqs.iter().zip(&self.phases).map(|(f, p)| (2.0 * PI * f * t + p).sin()).sum::<f64>()
    }
}

/// Generates a synthetic phonocardiogram with a ground-truth event log.
///
/// Each cycle holds an S1 tone at 10% of the cycle and an S2 tone 30% of
/// the cycle later. A murmur fills the S1-S2 gap with band-limited noise;
/// an extrasystole adds one S1-like tone mid-diastole in a random cycle.
pub fn synth_pcg<T: Real>(cfg: &SynthConfig) -> Result<SynthOutput<T>> {
    cfg.validate()?;
    let fs = f64::from(cfg.sample_rate_hz);
    let n = (cfg.duration_s * fs).round() as usize;
    let cycle = cfg.cycle_s();
    let cycles = cfg.cycles();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut clean = vec![0.0_f64; n];
    let mut events = Vec::new();
    for c in 0..cycles {
        let s1 = (c as f64 + S1_PHASE) * cycle;
        let s2 = s1 + SYSTOLE_FRACTION * cycle;
        let a1 = S1_AMPLITUDE * rng.random_range(0.9..1.1);
        let a2 = S2_AMPLITUDE * rng.random_range(0.9..1.1);
        add_tone(&mut clean, fs, s1, S1_FREQ_HZ, S1_DURATION_S, a1);
        add_tone(&mut clean, fs, s2, S2_FREQ_HZ, S2_DURATION_S, a2);
        events.push(SynthEvent { kind: EventKind::S1, cycle: c, time_s: s1, duration_s: S1_DURATION_S });
        events.push(SynthEvent { kind: EventKind::S2, cycle: c, time_s: s2, duration_s: S2_DURATION_S });
    }

    if cfg.extrasystole {
        let c = rng.random_range(0..cycles);
        let t = (c as f64 + S1_PHASE + EXTRA_FRACTION) * cycle;
        add_tone(&mut clean, fs, t, S1_FREQ_HZ, S1_DURATION_S, S1_AMPLITUDE);
        events.push(SynthEvent { kind: EventKind::Extra, cycle: c, time_s: t, duration_s: S1_DURATION_S });
    }

    if cfg.murmur {
        let source = MurmurSource::new(&mut rng, cfg.murmur_rms());
        for c in 0..cycles {
            let s1 = (c as f64 + S1_PHASE) * cycle;
            let start = s1 + S1_DURATION_S / 2.0;
            let end = s1 + SYSTOLE_FRACTION * cycle - S2_DURATION_S / 2.0;
            if end <= start {
                continue;
            }
            let lo = (start * fs).ceil() as usize;
            let hi = ((end * fs).floor() as usize).min(n);
            for (i, v) in clean.iter_mut().enumerate().take(hi).skip(lo) {
                let t = i as f64 / fs;
                let edge = (t - start).min(end - t);
                let taper = if edge < MURMUR_TAPER_S { 0.5 - 0.5 * (PI * edge / MURMUR_TAPER_S).cos() } else { 1.0 };
                *v += taper * source.at(t);
            }
            events.push(SynthEvent { kind: EventKind::Murmur, cycle: c, time_s: start, duration_s: end - start });
        }
    }
    events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));

    let mut noisy = clean.clone();
    if cfg.noise_rms > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_rms).expect("valid noise scale");
        for v in &mut noisy {
            *v += normal.sample(&mut rng);
        }
    }
    let peak = noisy.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // Keep the waveform writable as PCM.
    let gain = if peak > 0.99 { 0.99 / peak } else { 1.0 };

    let to_t = |v: &[f64]| v.iter().map(|&x| T::lit(x * gain)).collect::<Vec<T>>();
    let mut sample = AudioSample::new(format!("synth-{}", cfg.seed), to_t(&noisy), cfg.sample_rate_hz)?;
    sample.label = match (cfg.murmur, cfg.extrasystole) {
        (true, _) => Label::Murmur,
        (false, true) => Label::Extrasys,
        _ => Label::Normal,
    };
    Ok(SynthOutput { sample, clean: to_t(&clean), events })
}
