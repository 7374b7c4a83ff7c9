//! Circuit-level noisy memory experiments and their detector error models.
//!
//! The round circuit follows a movement schedule: X checks are measured with
//! Hadamard-conjugated CZ pulses (data and X ancillas rotated for the whole X
//! half), Z checks with CZ pulses conjugated on the Z ancillas only. Every
//! moving step leaves all qubits idle for its duration.
//!
//! Qubit order: data `0..n`, X ancillas `n..n+mx`, Z ancillas after that.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::CssCode;
use crate::gf2::{BitMatrix, BitVec};
use crate::layout::CheckType;
use crate::schedule::{MovementSchedule, ScheduleStep};

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("at least one round is required")]
    NoRounds,
    #[error("physical error rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error("coherence time must be positive, got {0}")]
    BadCoherence(f64),
    #[error("schedule pairs check {check} with data {data}, outside a code with {n} qubits")]
    ScheduleMismatch { check: usize, data: usize, n: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    #[default]
    Z,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p: f64,
    pub t_coherence_s: f64,
    pub basis: Basis,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            p: 1e-3,
            t_coherence_s: 10.0,
            basis: Basis::Z,
        }
    }
}

impl NoiseParams {
    pub fn new(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    /// `p = 0` selects the noiseless circuit, idle channels included.
    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0
    }
}

/// Pauli-twirled amplitude and phase damping over `duration_us` with
/// `T1 = T2 = t_coherence_s`. Returns `(p_X, p_Y, p_Z)`.
pub fn idle_channel(duration_us: f64, t_coherence_s: f64) -> (f64, f64, f64) {
    idle_channel_t1_t2(duration_us, t_coherence_s, t_coherence_s)
}

/// Twirl with separate relaxation and dephasing times.
pub fn idle_channel_t1_t2(duration_us: f64, t1_s: f64, t2_s: f64) -> (f64, f64, f64) {
    let t = duration_us * 1e-6;
    let a = -(-t / t1_s).exp_m1();
    let b = -(-t / t2_s).exp_m1();
    let pxy = a / 4.0;
    (pxy, pxy, (b / 2.0 - a / 4.0).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instr {
    Reset(Vec<u32>),
    H(Vec<u32>),
    Cz(Vec<(u32, u32)>),
    /// Each target appends one measurement record.
    Measure(Vec<u32>),
    /// Independent single-qubit Pauli channel on each target.
    Err1 {
        targets: Vec<u32>,
        px: f64,
        py: f64,
        pz: f64,
    },
    /// Two-qubit Pauli channel; `probs[i-1]` is the probability of the
    /// Pauli pair with index `i = 4·P₁ + P₂`, where I=0, X=1, Y=2, Z=3.
    Err2 {
        pairs: Vec<(u32, u32)>,
        probs: [f64; 15],
    },
    /// Marks elapsed wall-clock time (a movement step).
    Idle {
        duration_us: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub records: Vec<u32>,
    pub kind: CheckType,
    pub round: usize,
    pub check: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoisyCircuit {
    pub num_qubits: usize,
    pub num_measurements: usize,
    pub instrs: Vec<Instr>,
    pub detectors: Vec<Detector>,
    /// Measurement records whose parity is each logical observable.
    pub observables: Vec<Vec<u32>>,
    pub rounds: usize,
    pub basis: Basis,
}

fn depolarize1(p: f64) -> (f64, f64, f64) {
    (p / 3.0, p / 3.0, p / 3.0)
}

/// Builds a memory experiment over `rounds` rounds of the scheduled checks.
pub fn build_memory_circuit(
    code: &CssCode,
    schedule: &MovementSchedule,
    noise: &NoiseParams,
    rounds: usize,
) -> Result<NoisyCircuit, NoiseError> {
    if rounds == 0 {
        return Err(NoiseError::NoRounds);
    }
    if !(0.0..=1.0).contains(&noise.p) {
        return Err(NoiseError::BadRate(noise.p));
    }
    if noise.t_coherence_s.is_nan() || noise.t_coherence_s <= 0.0 {
        return Err(NoiseError::BadCoherence(noise.t_coherence_s));
    }
    let n = code.n;
    let mx = code.num_x_checks();
    let mz = code.num_z_checks();
    let nq = n + mx + mz;
    let xa = |j: usize| (n + j) as u32;
    let za = |j: usize| (n + mx + j) as u32;
    let data: Vec<u32> = (0..n as u32).collect();
    let x_anc: Vec<u32> = (0..mx).map(xa).collect();
    let z_anc: Vec<u32> = (0..mz).map(za).collect();
    let all_anc: Vec<u32> = x_anc.iter().chain(&z_anc).copied().collect();
    let all: Vec<u32> = (0..nq as u32).collect();
    let noisy = !noise.is_noiseless();
    let p = noise.p;
    let mut c = Circuit::default();

    let two_qubit_probs = [p / 15.0; 15];
    let h = |c: &mut Circuit, qs: &[u32]| {
        c.push(Instr::H(qs.to_vec()));
        if noisy {
            let (px, py, pz) = depolarize1(p);
            c.push(Instr::Err1 {
                targets: qs.to_vec(),
                px,
                py,
                pz,
            });
        }
    };
    let flip = |c: &mut Circuit, qs: &[u32]| {
        if noisy {
            c.push(Instr::Err1 {
                targets: qs.to_vec(),
                px: p,
                py: 0.0,
                pz: 0.0,
            });
        }
    };
    let idle = |c: &mut Circuit, t: f64| {
        if t > 0.0 {
            c.push(Instr::Idle { duration_us: t });
            if noisy {
                let (px, py, pz) = idle_channel(t, noise.t_coherence_s);
                c.push(Instr::Err1 {
                    targets: all.clone(),
                    px,
                    py,
                    pz,
                });
            }
        }
    };

    c.push(Instr::Reset(data.clone()));
    flip(&mut c, &data);
    if noise.basis == Basis::X {
        h(&mut c, &data);
    }

    let per_round = (mx + mz) as u32;
    for _ in 0..rounds {
        c.push(Instr::Reset(all_anc.clone()));
        flip(&mut c, &all_anc);
        for half in [CheckType::X, CheckType::Z] {
            let rotated: Vec<u32> = match half {
                CheckType::X => x_anc.iter().chain(&data).copied().collect(),
                CheckType::Z => z_anc.clone(),
            };
            h(&mut c, &rotated);
            for (step, &t) in schedule.steps.iter().zip(&schedule.per_step_times_us) {
                match step {
                    ScheduleStep::Move { group, .. } | ScheduleStep::Transfer { group, .. } if *group == half => {
                        idle(&mut c, t)
                    }
                    ScheduleStep::Pulse { group, pairs, .. } if *group == half => {
                        let mut cz = Vec::with_capacity(pairs.len());
                        for &(check, d) in pairs {
                            let (limit, anc) = match half {
                                CheckType::X => (mx, xa(check)),
                                CheckType::Z => (mz, za(check)),
                            };
                            if d >= n || check >= limit {
                                return Err(NoiseError::ScheduleMismatch { check, data: d, n });
                            }
                            cz.push((anc, d as u32));
                        }
                        c.push(Instr::Cz(cz.clone()));
                        if noisy {
                            c.push(Instr::Err2 {
                                pairs: cz,
                                probs: two_qubit_probs,
                            });
                        }
                        if t > 0.0 {
                            c.push(Instr::Idle { duration_us: t });
                        }
                    }
                    _ => {}
                }
            }
            h(&mut c, &rotated);
        }
        flip(&mut c, &all_anc);
        c.push(Instr::Measure(all_anc.clone()));
    }
    if noise.basis == Basis::X {
        h(&mut c, &data);
    }
    flip(&mut c, &data);
    c.push(Instr::Measure(data.clone()));

    // Detectors and observables.
    let rec = |r: usize, kind: CheckType, j: usize| -> u32 {
        r as u32 * per_round
            + match kind {
                CheckType::X => j as u32,
                CheckType::Z => (mx + j) as u32,
            }
    };
    let data_rec = |q: usize| rounds as u32 * per_round + q as u32;
    let deterministic = match noise.basis {
        Basis::Z => CheckType::Z,
        Basis::X => CheckType::X,
    };
    let mut detectors = Vec::new();
    for r in 0..rounds {
        for (kind, count) in [(CheckType::X, mx), (CheckType::Z, mz)] {
            if r == 0 && kind != deterministic {
                continue;
            }
            for j in 0..count {
                let mut records = vec![rec(r, kind, j)];
                if r > 0 {
                    records.push(rec(r - 1, kind, j));
                }
                detectors.push(Detector {
                    records,
                    kind,
                    round: r,
                    check: j,
                });
            }
        }
    }
    let (final_checks, logicals) = match noise.basis {
        Basis::Z => (&code.gz, &code.logicals_z),
        Basis::X => (&code.gx, &code.logicals_x),
    };
    for j in 0..final_checks.rows() {
        let mut records: Vec<u32> = final_checks.row_ones(j).into_iter().map(data_rec).collect();
        records.push(rec(rounds - 1, deterministic, j));
        detectors.push(Detector {
            records,
            kind: deterministic,
            round: rounds,
            check: j,
        });
    }
    let observables = (0..logicals.rows())
        .map(|i| logicals.row_ones(i).into_iter().map(data_rec).collect())
        .collect();

    Ok(NoisyCircuit {
        num_qubits: nq,
        num_measurements: (rounds * (mx + mz) + n),
        instrs: c.instrs,
        detectors,
        observables,
        rounds,
        basis: noise.basis,
    })
}

#[derive(Default)]
struct Circuit {
    instrs: Vec<Instr>,
}

impl Circuit {
    fn push(&mut self, i: Instr) {
        self.instrs.push(i);
    }
}

impl NoisyCircuit {
    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// Line-based text export: one instruction per target line, then
    /// `DETECTOR` and `OBSERVABLE` lines listing measurement records.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# qubits {} measurements {}",
            self.num_qubits, self.num_measurements
        );
        for instr in &self.instrs {
            match instr {
                Instr::Reset(qs) => qs.iter().for_each(|q| {
                    let _ = writeln!(out, "R {q}");
                }),
                Instr::H(qs) => qs.iter().for_each(|q| {
                    let _ = writeln!(out, "H {q}");
                }),
                Instr::Measure(qs) => qs.iter().for_each(|q| {
                    let _ = writeln!(out, "M {q}");
                }),
                Instr::Cz(ps) => ps.iter().for_each(|(a, b)| {
                    let _ = writeln!(out, "CZ {a} {b}");
                }),
                Instr::Err1 { targets, px, py, pz } => targets.iter().for_each(|q| {
                    let _ = writeln!(out, "ERR1 {q} {px:e} {py:e} {pz:e}");
                }),
                Instr::Err2 { pairs, probs } => pairs.iter().for_each(|(a, b)| {
                    let ps: Vec<String> = probs.iter().map(|p| format!("{p:e}")).collect();
                    let _ = writeln!(out, "ERR2 {a} {b} {}", ps.join(" "));
                }),
                Instr::Idle { duration_us } => {
                    let _ = writeln!(out, "IDLE {duration_us}");
                }
            }
        }
        for d in &self.detectors {
            let recs: Vec<String> = d.records.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "DETECTOR {}", recs.join(" "));
        }
        for (i, o) in self.observables.iter().enumerate() {
            let recs: Vec<String> = o.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "OBSERVABLE {i} {}", recs.join(" "));
        }
        out
    }

    /// For each measurement record, the detector and observable bits it
    /// feeds; observables are numbered after detectors.
    fn record_targets(&self) -> Vec<Vec<u32>> {
        let mut t = vec![Vec::new(); self.num_measurements];
        for (i, d) in self.detectors.iter().enumerate() {
            for &r in &d.records {
                t[r as usize].push(i as u32);
            }
        }
        let nd = self.detectors.len() as u32;
        for (i, o) in self.observables.iter().enumerate() {
            for &r in o {
                t[r as usize].push(nd + i as u32);
            }
        }
        t
    }
}

/// Pauli as `(x, z)` bits: I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
fn pauli_bits(index: usize) -> (bool, bool) {
    match index {
        0 => (false, false),
        1 => (true, false),
        2 => (true, true),
        3 => (false, true),
        _ => unreachable!(),
    }
}

fn anticommutes(a: (bool, bool), b: (bool, bool)) -> bool {
    (a.0 & b.1) ^ (a.1 & b.0)
}

/// Rewrites a Pauli channel with disjoint outcome probabilities `probs`
/// (over the non-identity Paulis, as `(x, z)` bit vectors per qubit) as
/// independent mechanisms with the same overall action.
///
/// Uses the Pauli eigenvalues `λ_P = 1 − 2 Σ_{Q anticommuting P} p_Q`; the
/// independent rates `q_Q` satisfy `Π_{Q anticommuting P} (1 − 2q_Q) = λ_P`,
/// which is linear in `ln(1 − 2q_Q)`.
pub fn independent_rates(paulis: &[Vec<(bool, bool)>], probs: &[f64]) -> Vec<f64> {
    let k = paulis.len();
    debug_assert_eq!(k, probs.len());
    if probs.iter().all(|&p| p == 0.0) {
        return vec![0.0; k];
    }
    let anti = |a: &[(bool, bool)], b: &[(bool, bool)]| {
        a.iter().zip(b).filter(|(x, y)| anticommutes(**x, **y)).count() % 2 == 1
    };
    let mut m = vec![vec![0.0f64; k + 1]; k];
    for (i, pi) in paulis.iter().enumerate() {
        let mut lam = 1.0;
        for (j, pj) in paulis.iter().enumerate() {
            if anti(pi, pj) {
                lam -= 2.0 * probs[j];
                m[i][j] = 1.0;
            }
        }
        m[i][k] = lam.max(1e-300).ln();
    }
    // Gauss-Jordan with partial pivoting.
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("finite"))
            .expect("rows");
        m.swap(col, piv);
        let d = m[col][col];
        for x in m[col].iter_mut() {
            *x /= d;
        }
        for r in 0..k {
            if r != col && m[r][col] != 0.0 {
                let f = m[r][col];
                for c2 in 0..=k {
                    m[r][c2] -= f * m[col][c2];
                }
            }
        }
    }
    m.iter()
        .map(|row| ((1.0 - row[k].min(0.0).exp()) / 2.0).clamp(0.0, 0.5))
        .collect()
}

/// Closed form for a uniform two-qubit depolarizing channel of total
/// strength `p` (each of the 15 Paulis at `p/15`).
pub fn depolarize2_independent_rate(p: f64) -> f64 {
    let lam = (1.0 - 16.0 * p / 15.0).max(0.0);
    (1.0 - lam.powf(1.0 / 8.0)) / 2.0
}

fn single_qubit_paulis() -> Vec<Vec<(bool, bool)>> {
    (1..4).map(|i| vec![pauli_bits(i)]).collect()
}

fn two_qubit_paulis() -> Vec<Vec<(bool, bool)>> {
    (1..16).map(|i| vec![pauli_bits(i / 4), pauli_bits(i % 4)]).collect()
}

/// Independent-mechanism rates for a single-qubit channel, cached by value.
fn err1_rates(px: f64, py: f64, pz: f64) -> [f64; 3] {
    if px > 0.0 && py == 0.0 && pz == 0.0 {
        return [px, 0.0, 0.0];
    }
    let r = independent_rates(&single_qubit_paulis(), &[px, py, pz]);
    [r[0], r[1], r[2]]
}

fn err2_rates(probs: &[f64; 15]) -> [f64; 15] {
    let mut out = [0.0; 15];
    if probs.iter().all(|&p| p == probs[0]) {
        out.fill(depolarize2_independent_rate(15.0 * probs[0]));
    } else {
        out.copy_from_slice(&independent_rates(&two_qubit_paulis(), probs));
    }
    out
}

/// One independent error mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub p: f64,
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
}

/// Decoding subproblem: the detectors of one check type and the projection
/// of every mechanism onto them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubProblem {
    pub kind: CheckType,
    /// Global detector ids; position is the local row index.
    pub detectors: Vec<u32>,
    /// Per column, local detector rows.
    pub columns: Vec<Vec<u32>>,
    /// Per column, observables flipped.
    pub observables: Vec<Vec<u32>>,
    pub priors: Vec<f64>,
}

impl SubProblem {
    pub fn num_rows(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Dense check matrix, rows = detectors, columns = mechanisms.
    pub fn check_matrix(&self) -> BitMatrix {
        let mut h = BitMatrix::zeros(self.num_rows(), self.num_columns());
        for (c, rows) in self.columns.iter().enumerate() {
            for &r in rows {
                h.set(r as usize, c, true);
            }
        }
        h
    }

    /// Selects this subproblem's bits of a full detector syndrome.
    pub fn local_syndrome(&self, syndrome: &BitVec) -> BitVec {
        BitVec::from_ones(
            self.num_rows(),
            self.detectors
                .iter()
                .enumerate()
                .filter(|(_, &d)| syndrome.get(d as usize))
                .map(|(i, _)| i),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorModel {
    pub mechanisms: Vec<Mechanism>,
    pub num_detectors: usize,
    pub num_observables: usize,
    pub detector_kinds: Vec<CheckType>,
    /// Indexed by check type: `[X-check detectors, Z-check detectors]`.
    pub split: [SubProblem; 2],
    pub rounds: usize,
    pub basis: Basis,
}

impl DetectorModel {
    pub fn subproblem(&self, kind: CheckType) -> &SubProblem {
        &self.split[kind as usize]
    }
}

/// `p₁ + p₂ − 2p₁p₂`: probability that exactly one of two independent
/// events with the same effect fires.
pub fn xor_merge(p1: f64, p2: f64) -> f64 {
    p1 + p2 - 2.0 * p1 * p2
}

/// Derives the detector error model by sweeping backwards through the
/// circuit while tracking, for every qubit, which detectors and observables
/// an X or Z error at the current point would flip.
pub fn build_detector_model(circ: &NoisyCircuit) -> DetectorModel {
    let nd = circ.num_detectors();
    let no = circ.num_observables();
    let bits = nd + no;
    let w = bits.div_ceil(64).max(1);
    let nq = circ.num_qubits;
    let mut sx = vec![0u64; nq * w];
    let mut sz = vec![0u64; nq * w];
    let rec_targets = circ.record_targets();
    let mut next_rec = circ.num_measurements;
    let mut merged: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut add = |sig: Vec<u64>, p: f64| {
        if p <= 0.0 || sig.iter().all(|&x| x == 0) {
            return;
        }
        let e = merged.entry(sig).or_insert(0.0);
        *e = xor_merge(*e, p);
    };
    let row = |v: &[u64], q: u32| -> Vec<u64> { v[q as usize * w..(q as usize + 1) * w].to_vec() };

    for instr in circ.instrs.iter().rev() {
        match instr {
            Instr::Measure(qs) => {
                next_rec -= qs.len();
                for (i, &q) in qs.iter().enumerate() {
                    let r = next_rec + i;
                    let base = q as usize * w;
                    for &t in &rec_targets[r] {
                        sx[base + t as usize / 64] ^= 1 << (t % 64);
                    }
                    sz[base..base + w].fill(0);
                }
            }
            Instr::Reset(qs) => {
                for &q in qs {
                    let base = q as usize * w;
                    sx[base..base + w].fill(0);
                    sz[base..base + w].fill(0);
                }
            }
            Instr::H(qs) => {
                for &q in qs {
                    let base = q as usize * w;
                    for i in 0..w {
                        std::mem::swap(&mut sx[base + i], &mut sz[base + i]);
                    }
                }
            }
            Instr::Cz(pairs) => {
                for &(a, b) in pairs {
                    let (ba, bb) = (a as usize * w, b as usize * w);
                    for i in 0..w {
                        sx[ba + i] ^= sz[bb + i];
                        sx[bb + i] ^= sz[ba + i];
                    }
                }
            }
            Instr::Err1 { targets, px, py, pz } => {
                let r = err1_rates(*px, *py, *pz);
                for &q in targets {
                    let x = row(&sx, q);
                    let z = row(&sz, q);
                    let y: Vec<u64> = x.iter().zip(&z).map(|(a, b)| a ^ b).collect();
                    add(x, r[0]);
                    add(y, r[1]);
                    add(z, r[2]);
                }
            }
            Instr::Err2 { pairs, probs } => {
                let r = err2_rates(probs);
                for &(a, b) in pairs {
                    let comps = |q: u32| {
                        let x = row(&sx, q);
                        let z = row(&sz, q);
                        let y: Vec<u64> = x.iter().zip(&z).map(|(a, b)| a ^ b).collect();
                        [vec![0u64; w], x, y, z]
                    };
                    let ca = comps(a);
                    let cb = comps(b);
                    for idx in 1..16 {
                        let sig: Vec<u64> = ca[idx / 4].iter().zip(&cb[idx % 4]).map(|(u, v)| u ^ v).collect();
                        add(sig, r[idx - 1]);
                    }
                }
            }
            Instr::Idle { .. } => {}
        }
    }

    let mut entries: Vec<(Vec<u32>, Vec<u32>, f64)> = merged
        .into_iter()
        .map(|(sig, p)| {
            let ones: Vec<u32> = iter_ones(&sig).map(|i| i as u32).collect();
            let (d, o): (Vec<u32>, Vec<u32>) = ones.into_iter().partition(|&i| (i as usize) < nd);
            (d, o.into_iter().map(|i| i - nd as u32).collect(), p)
        })
        .collect();
    entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mechanisms: Vec<Mechanism> = entries
        .into_iter()
        .map(|(detectors, observables, p)| Mechanism {
            p,
            detectors,
            observables,
        })
        .collect();

    let kinds: Vec<CheckType> = circ.detectors.iter().map(|d| d.kind).collect();
    DetectorModel::from_mechanisms(mechanisms, kinds, no, circ.rounds, circ.basis)
}

impl DetectorModel {
    /// Assembles a model from already-merged mechanisms; observables attach
    /// to the subproblem whose check type matches `basis`.
    pub fn from_mechanisms(
        mechanisms: Vec<Mechanism>,
        detector_kinds: Vec<CheckType>,
        num_observables: usize,
        rounds: usize,
        basis: Basis,
    ) -> Self {
        let obs_kind = match basis {
            Basis::Z => CheckType::Z,
            Basis::X => CheckType::X,
        };
        let split =
            [CheckType::X, CheckType::Z].map(|kind| split_view(&mechanisms, &detector_kinds, kind, kind == obs_kind));
        DetectorModel {
            mechanisms,
            num_detectors: detector_kinds.len(),
            num_observables,
            detector_kinds,
            split,
            rounds,
            basis,
        }
    }
}

fn split_view(mechanisms: &[Mechanism], kinds: &[CheckType], kind: CheckType, with_obs: bool) -> SubProblem {
    let detectors: Vec<u32> = (0..kinds.len() as u32).filter(|&d| kinds[d as usize] == kind).collect();
    let mut local = vec![u32::MAX; kinds.len()];
    for (i, &d) in detectors.iter().enumerate() {
        local[d as usize] = i as u32;
    }
    let mut merged: HashMap<(Vec<u32>, Vec<u32>), f64> = HashMap::new();
    for m in mechanisms {
        let rows: Vec<u32> = m
            .detectors
            .iter()
            .filter(|&&d| kinds[d as usize] == kind)
            .map(|&d| local[d as usize])
            .collect();
        let obs = if with_obs { m.observables.clone() } else { Vec::new() };
        if rows.is_empty() && obs.is_empty() {
            continue;
        }
        let e = merged.entry((rows, obs)).or_insert(0.0);
        *e = xor_merge(*e, m.p);
    }
    let mut entries: Vec<_> = merged.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut sp = SubProblem {
        kind,
        detectors,
        columns: Vec::new(),
        observables: Vec::new(),
        priors: Vec::new(),
    };
    for ((rows, obs), p) in entries {
        sp.columns.push(rows);
        sp.observables.push(obs);
        sp.priors.push(p);
    }
    sp
}

/// Direct Pauli-frame simulation of the circuit, 64 shots per word.
/// Error channels are sampled as disjoint outcomes. Returns per-shot
/// detector and observable bits.
pub fn frame_simulate(circ: &NoisyCircuit, shots: usize, seed: u64) -> (BitMatrix, BitMatrix) {
    let mut dets = BitMatrix::zeros(shots, circ.num_detectors());
    let mut obs = BitMatrix::zeros(shots, circ.num_observables());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in 0..shots.div_ceil(64) {
        rng.set_stream(w as u64);
        let lanes = (shots - w * 64).min(64);
        let mut sample = |probs: &[f64]| -> Vec<u64> {
            let mut out = vec![0u64; probs.len()];
            let total: f64 = probs.iter().sum();
            if total <= 0.0 {
                return out;
            }
            for lane in 0..lanes {
                let u: f64 = rng.random();
                if u >= total {
                    continue;
                }
                let mut acc = 0.0;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        out[i] |= 1 << lane;
                        break;
                    }
                }
            }
            out
        };
        let records = run_frames(circ, |_, _, probs| sample(probs));
        for lane in 0..lanes {
            let shot = w * 64 + lane;
            for (i, d) in circ.detectors.iter().enumerate() {
                if parity(&d.records, &records) >> lane & 1 == 1 {
                    dets.set(shot, i, true);
                }
            }
            for (i, o) in circ.observables.iter().enumerate() {
                if parity(o, &records) >> lane & 1 == 1 {
                    obs.set(shot, i, true);
                }
            }
        }
    }
    (dets, obs)
}

fn parity(recs: &[u32], records: &[u64]) -> u64 {
    recs.iter().fold(0u64, |a, &r| a ^ records[r as usize])
}

/// Runs a 64-lane Pauli frame through the circuit. At each channel site,
/// `inject(instr_index, target_index, probs)` returns the lanes on which
/// each non-identity outcome occurs. Returns one word per measurement.
fn run_frames<F>(circ: &NoisyCircuit, mut inject: F) -> Vec<u64>
where
    F: FnMut(usize, usize, &[f64]) -> Vec<u64>,
{
    let nq = circ.num_qubits;
    let mut x = vec![0u64; nq];
    let mut z = vec![0u64; nq];
    let apply = |q: u32, pb: (bool, bool), mask: u64, x: &mut [u64], z: &mut [u64]| {
        if pb.0 {
            x[q as usize] ^= mask;
        }
        if pb.1 {
            z[q as usize] ^= mask;
        }
    };
    let mut records = Vec::with_capacity(circ.num_measurements);
    for (ii, instr) in circ.instrs.iter().enumerate() {
        match instr {
            Instr::Reset(qs) => qs.iter().for_each(|&q| {
                x[q as usize] = 0;
                z[q as usize] = 0;
            }),
            Instr::H(qs) => qs
                .iter()
                .for_each(|&q| std::mem::swap(&mut x[q as usize], &mut z[q as usize])),
            Instr::Cz(ps) => ps.iter().for_each(|&(a, b)| {
                z[b as usize] ^= x[a as usize];
                z[a as usize] ^= x[b as usize];
            }),
            Instr::Measure(qs) => qs.iter().for_each(|&q| {
                records.push(x[q as usize]);
                z[q as usize] = 0;
            }),
            Instr::Err1 { targets, px, py, pz } => {
                for (t, &q) in targets.iter().enumerate() {
                    let m = inject(ii, t, &[*px, *py, *pz]);
                    for (k, &mask) in m.iter().enumerate() {
                        apply(q, pauli_bits(k + 1), mask, &mut x, &mut z);
                    }
                }
            }
            Instr::Err2 { pairs, probs } => {
                for (t, &(a, b)) in pairs.iter().enumerate() {
                    let m = inject(ii, t, probs);
                    for (k, &mask) in m.iter().enumerate() {
                        apply(a, pauli_bits((k + 1) / 4), mask, &mut x, &mut z);
                        apply(b, pauli_bits((k + 1) % 4), mask, &mut x, &mut z);
                    }
                }
            }
            Instr::Idle { .. } => {}
        }
    }
    records
}

/// Every elementary error component of the circuit with nonzero rate,
/// injected alone and propagated forward. Returns the distinct nonempty
/// `(detectors, observables)` signatures in sorted order.
pub fn enumerate_signatures(circ: &NoisyCircuit) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut comps: Vec<(usize, usize, usize)> = Vec::new();
    for (ii, instr) in circ.instrs.iter().enumerate() {
        let (sites, probs): (usize, Vec<f64>) = match instr {
            Instr::Err1 { targets, px, py, pz } => (targets.len(), vec![*px, *py, *pz]),
            Instr::Err2 { pairs, probs } => (pairs.len(), probs.to_vec()),
            _ => continue,
        };
        for t in 0..sites {
            for (k, p) in probs.iter().enumerate() {
                if *p > 0.0 {
                    comps.push((ii, t, k));
                }
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for chunk in comps.chunks(64) {
        let mut at: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (lane, &(ii, t, k)) in chunk.iter().enumerate() {
            at.entry((ii, t)).or_default().push((lane, k));
        }
        let records = run_frames(circ, |ii, t, probs| {
            let mut out = vec![0u64; probs.len()];
            for &(lane, k) in at.get(&(ii, t)).into_iter().flatten() {
                out[k] |= 1 << lane;
            }
            out
        });
        for lane in 0..chunk.len() {
            let d: Vec<u32> = (0..circ.detectors.len() as u32)
                .filter(|&i| parity(&circ.detectors[i as usize].records, &records) >> lane & 1 == 1)
                .collect();
            let o: Vec<u32> = (0..circ.observables.len() as u32)
                .filter(|&i| parity(&circ.observables[i as usize], &records) >> lane & 1 == 1)
                .collect();
            if !d.is_empty() || !o.is_empty() {
                seen.insert((d, o));
            }
        }
    }
    seen.into_iter().collect()
}

fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(wi * 64 + b)
        })
    })
}
