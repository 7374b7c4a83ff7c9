//! Monte Carlo sampling of detector models and logical-error estimation.
//!
//! Shots are produced in fixed batches of [`BATCH_SHOTS`]. Batch `b` draws
//! from ChaCha8 seeded with the run seed and switched to stream `b`, so the
//! output depends only on `(model, shots, seed)` and never on thread count.
//! Within a batch each mechanism fires on a set of shots drawn by geometric
//! skipping.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::gf2::{BitMatrix, BitVec};
use crate::noise::DetectorModel;

pub const BATCH_SHOTS: usize = 1024;
/// Batches decoded between two checks of the stop rule.
pub const WAVE_BATCHES: usize = 32;

#[derive(Clone, Debug)]
pub struct ShotBatch {
    /// shots × detectors
    pub detectors: BitMatrix,
    /// shots × observables
    pub observables: BitMatrix,
    pub seed: u64,
}

impl ShotBatch {
    pub fn shots(&self) -> usize {
        self.detectors.rows()
    }
}

/// Precomputed per-mechanism skip parameters.
struct Prepared<'a> {
    model: &'a DetectorModel,
    ln_q: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(model: &'a DetectorModel) -> Self {
        let ln_q = model.mechanisms.iter().map(|m| (-m.p).ln_1p()).collect();
        Self { model, ln_q }
    }

    fn is_silent(&self) -> bool {
        self.model.mechanisms.iter().all(|m| m.p <= 0.0)
    }

    /// Samples `shots` shots of global batch `index`.
    fn batch(&self, seed: u64, index: usize, shots: usize) -> (BitMatrix, BitMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut dets = BitMatrix::zeros(shots, self.model.num_detectors);
        let mut obs = BitMatrix::zeros(shots, self.model.num_observables);
        for (m, &lnq) in self.model.mechanisms.iter().zip(&self.ln_q) {
            if m.p <= 0.0 {
                continue;
            }
            let mut fire = |s: usize| {
                for &d in &m.detectors {
                    dets.toggle(s, d as usize);
                }
                for &o in &m.observables {
                    obs.toggle(s, o as usize);
                }
            };
            if m.p >= 1.0 {
                (0..shots).for_each(&mut fire);
                continue;
            }
            let mut s = 0usize;
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / lnq).floor();
                if !skip.is_finite() || skip >= (shots - s) as f64 {
                    break;
                }
                s += skip as usize;
                fire(s);
                s += 1;
                if s >= shots {
                    break;
                }
            }
        }
        (dets, obs)
    }
}

fn batch_sizes(shots: usize) -> Vec<usize> {
    (0..shots.div_ceil(BATCH_SHOTS))
        .map(|b| (shots - b * BATCH_SHOTS).min(BATCH_SHOTS))
        .collect()
}

/// Draws `shots` independent shots from the model.
pub fn sample(model: &DetectorModel, shots: usize, seed: u64, exec: Execution) -> ShotBatch {
    let prep = Prepared::new(model);
    let sizes = batch_sizes(shots);
    let parts = exec.map_range(sizes.len(), |b| prep.batch(seed, b, sizes[b]));
    let mut detectors = BitMatrix::zeros(shots, model.num_detectors);
    let mut observables = BitMatrix::zeros(shots, model.num_observables);
    let mut row = 0;
    for (d, o) in parts {
        for r in 0..d.rows() {
            detectors.row_mut(row).copy_from_slice(d.row(r));
            observables.row_mut(row).copy_from_slice(o.row(r));
            row += 1;
        }
    }
    ShotBatch {
        detectors,
        observables,
        seed,
    }
}

/// Predicts logical observable flips from a full detector syndrome.
pub trait ShotDecoder: Sync {
    fn predict(&self, model: &DetectorModel, syndrome: &BitVec) -> BitVec;
}

/// Always predicts no flip; its failure rate is the raw observable flip rate.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullDecoder;

impl ShotDecoder for NullDecoder {
    fn predict(&self, model: &DetectorModel, _: &BitVec) -> BitVec {
        BitVec::zeros(model.num_observables)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_shots: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 1000,
            max_shots: 1_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LerResult {
    pub shots: u64,
    pub errors: u64,
    pub rounds: usize,
    pub p_l_per_round: f64,
    /// 95% Wilson interval on the per-shot rate, mapped to per-round.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl LerResult {
    pub fn from_counts(errors: u64, shots: u64, rounds: usize, seed: u64) -> Self {
        let (lo, hi) = wilson_interval(errors, shots, 1.96);
        Self {
            shots,
            errors,
            rounds,
            p_l_per_round: per_round_ler(errors, shots, rounds),
            ci_low: per_round_from_shot_rate(lo, rounds),
            ci_high: per_round_from_shot_rate(hi, rounds),
            seed,
        }
    }

    pub fn shot_error_rate(&self) -> f64 {
        self.errors as f64 / self.shots as f64
    }
}

/// `1 − (1 − N_e/N_s)^{1/d}`, evaluated without cancellation.
pub fn per_round_ler(errors: u64, shots: u64, rounds: usize) -> f64 {
    assert!(shots >= 1 && errors <= shots && rounds >= 1);
    per_round_from_shot_rate(errors as f64 / shots as f64, rounds)
}

fn per_round_from_shot_rate(rate: f64, rounds: usize) -> f64 {
    if rate >= 1.0 {
        return 1.0;
    }
    -((-rate).ln_1p() / rounds as f64).exp_m1()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(errors: u64, shots: u64, z: f64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let n = shots as f64;
    let ph = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Samples and decodes in waves until `stop` is met. A shot fails when any
/// predicted observable differs from the sampled flip.
pub fn adaptive_run<D: ShotDecoder>(
    model: &DetectorModel,
    decoder: &D,
    stop: StopRule,
    seed: u64,
    exec: Execution,
) -> LerResult {
    let prep = Prepared::new(model);
    let rounds = model.rounds.max(1);
    if prep.is_silent() {
        // Every shot has an empty syndrome and no flips.
        let pred = decoder.predict(model, &BitVec::zeros(model.num_detectors));
        let errors = if pred.is_zero() { 0 } else { stop.max_shots };
        return LerResult::from_counts(errors, stop.max_shots, rounds, seed);
    }
    let mut shots = 0u64;
    let mut errors = 0u64;
    let mut next_batch = 0usize;
    while shots < stop.max_shots && errors < stop.min_errors {
        let remaining = stop.max_shots - shots;
        let wave: Vec<(usize, usize)> = (0..WAVE_BATCHES)
            .map(|i| {
                let start = i as u64 * BATCH_SHOTS as u64;
                (
                    next_batch + i,
                    remaining.saturating_sub(start).min(BATCH_SHOTS as u64) as usize,
                )
            })
            .filter(|&(_, n)| n > 0)
            .collect();
        let counts = exec.map(&wave, |&(b, n)| {
            let (d, o) = prep.batch(seed, b, n);
            (0..n)
                .filter(|&s| {
                    let syn = BitVec::from_words(d.cols(), d.row(s));
                    let pred = decoder.predict(model, &syn);
                    pred.words() != o.row(s)
                })
                .count() as u64
        });
        next_batch += wave.len();
        shots += wave.iter().map(|&(_, n)| n as u64).sum::<u64>();
        errors += counts.iter().sum::<u64>();
    }
    LerResult::from_counts(errors, shots, rounds, seed)
}

pub const CSV_HEADER: &str = "code,p,t_coherence,d,N_s,N_e,p_L,seed";

/// Quotes a CSV field when it holds a separator or a quote; code labels
/// such as `[72,12,6]` always do.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(code: &str, p: f64, t_coherence_s: f64, r: &LerResult) -> String {
    let mut s = String::new();
    let code = csv_field(code);
    let _ = write!(
        s,
        "{code},{p:e},{t_coherence_s},{},{},{},{:e},{}",
        r.rounds, r.shots, r.errors, r.p_l_per_round, r.seed
    );
    s
}

/// Two-sample chi-square over per-column firing counts and the histogram
/// of per-shot firing weight. `a` and `b` list matrices with matching
/// columns (e.g. detectors then observables). Returns `(statistic, dof)`.
pub fn two_sample_chi_square(a: &[&BitMatrix], b: &[&BitMatrix]) -> (f64, usize) {
    let na = a[0].rows() as f64;
    let nb = b[0].rows() as f64;
    let mut chi = 0.0;
    let mut dof = 0;
    let add_table = |ca: f64, cb: f64, chi: &mut f64, dof: &mut usize| {
        // 2 x 2 table: fired / not fired in each sample.
        let tot = ca + cb;
        let n = na + nb;
        if tot == 0.0 || tot == n {
            return;
        }
        for (obs, rows) in [(ca, na), (cb, nb)] {
            let e1 = rows * tot / n;
            let e0 = rows * (n - tot) / n;
            *chi += (obs - e1).powi(2) / e1 + ((rows - obs) - e0).powi(2) / e0;
        }
        *dof += 1;
    };
    for (ma, mb) in a.iter().zip(b) {
        for c in 0..ma.cols() {
            let ca = (0..ma.rows()).filter(|&r| ma.get(r, c)).count() as f64;
            let cb = (0..mb.rows()).filter(|&r| mb.get(r, c)).count() as f64;
            add_table(ca, cb, &mut chi, &mut dof);
        }
    }
    let weights = |ms: &[&BitMatrix]| -> Vec<usize> {
        (0..ms[0].rows())
            .map(|r| ms.iter().map(|m| m.row_weight(r)).sum())
            .collect()
    };
    let wa = weights(a);
    let wb = weights(b);
    let maxw = wa.iter().chain(&wb).copied().max().unwrap_or(0);
    let mut ha = vec![0.0; maxw + 1];
    let mut hb = vec![0.0; maxw + 1];
    wa.iter().for_each(|&w| ha[w] += 1.0);
    wb.iter().for_each(|&w| hb[w] += 1.0);
    // Merge sparse tail buckets until each has at least 10 pooled counts.
    let mut buckets: Vec<(f64, f64)> = Vec::new();
    let (mut accum_a, mut accum_b) = (0.0, 0.0);
    for w in 0..=maxw {
        accum_a += ha[w];
        accum_b += hb[w];
        if accum_a + accum_b >= 10.0 {
            buckets.push((accum_a, accum_b));
            accum_a = 0.0;
            accum_b = 0.0;
        }
    }
    if let Some(last) = buckets.last_mut() {
        last.0 += accum_a;
        last.1 += accum_b;
    }
    if buckets.len() > 1 {
        let n = na + nb;
        for &(x, y) in &buckets {
            let tot = x + y;
            let ea = na * tot / n;
            let eb = nb * tot / n;
            chi += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
        }
        dof += buckets.len() - 1;
    }
    (chi, dof)
}
