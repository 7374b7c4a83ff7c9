//! Min-sum belief propagation with combination-sweep ordered-statistics
//! post-processing.
//!
//! Soft weight of a correction is `Σ ln((1 − p_c)/p_c)` over its support,
//! using the prior of each column. All ties are broken toward the lower
//! column index or the earlier candidate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, BitVec};
use crate::layout::CheckType;
use crate::noise::{DetectorModel, SubProblem};
use crate::sampler::ShotDecoder;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("syndrome is not in the column space of the check matrix")]
    Unsatisfiable,
    #[error("invalid decoder configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OsdMethod {
    /// Return the BP hard decision even when it misses the syndrome.
    None,
    Osd0,
    CombinationSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iters: usize,
    pub ms_scale: f64,
    pub osd_method: OsdMethod,
    pub osd_order: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            ms_scale: 1.0,
            osd_method: OsdMethod::CombinationSweep,
            osd_order: 10,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iters == 0 {
            return Err(DecodeError::Config("max_iters must be at least 1".into()));
        }
        if !(self.ms_scale > 0.0 && self.ms_scale <= 1.0) {
            return Err(DecodeError::Config(format!(
                "ms_scale {} outside (0, 1]",
                self.ms_scale
            )));
        }
        Ok(())
    }
}

/// Column- and row-adjacency form of a parity-check matrix.
#[derive(Clone, Debug)]
pub struct SparseCheck {
    pub rows: usize,
    pub cols: usize,
    pub col_rows: Vec<Vec<u32>>,
    pub row_cols: Vec<Vec<u32>>,
    /// Edge `e` of column `c` lives at `col_start[c] + k`.
    col_start: Vec<usize>,
    edge_row: Vec<u32>,
    /// Edge ids per row, flattened with `row_start`.
    row_start: Vec<usize>,
    row_edges: Vec<u32>,
}

impl SparseCheck {
    pub fn from_columns(rows: usize, col_rows: Vec<Vec<u32>>) -> Self {
        let mut row_cols = vec![Vec::new(); rows];
        let mut row_edge_lists: Vec<Vec<u32>> = vec![Vec::new(); rows];
        let mut col_start = Vec::with_capacity(col_rows.len() + 1);
        let mut edge_row = Vec::new();
        for (c, rs) in col_rows.iter().enumerate() {
            col_start.push(edge_row.len());
            for &r in rs {
                row_cols[r as usize].push(c as u32);
                row_edge_lists[r as usize].push(edge_row.len() as u32);
                edge_row.push(r);
            }
        }
        col_start.push(edge_row.len());
        let mut row_start = Vec::with_capacity(rows + 1);
        let mut row_edges = Vec::with_capacity(edge_row.len());
        for es in row_edge_lists {
            row_start.push(row_edges.len());
            row_edges.extend(es);
        }
        row_start.push(row_edges.len());
        Self {
            rows,
            cols: col_rows.len(),
            col_rows,
            row_cols,
            col_start,
            edge_row,
            row_start,
            row_edges,
        }
    }

    pub fn from_dense(h: &BitMatrix) -> Self {
        let cols = (0..h.cols())
            .map(|c| h.col_ones(c).into_iter().map(|r| r as u32).collect())
            .collect();
        Self::from_columns(h.rows(), cols)
    }

    pub fn from_subproblem(sp: &SubProblem) -> Self {
        Self::from_columns(sp.num_rows(), sp.columns.clone())
    }

    pub fn syndrome_of(&self, e: &BitVec) -> BitVec {
        let mut s = BitVec::zeros(self.rows);
        for c in e.ones() {
            for &r in &self.col_rows[c] {
                s.toggle(r as usize);
            }
        }
        s
    }

    fn dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, self.cols);
        for (c, rs) in self.col_rows.iter().enumerate() {
            for &r in rs {
                m.set(r as usize, c, true);
            }
        }
        m
    }
}

pub fn prior_weights(priors: &[f64]) -> Vec<f64> {
    priors.iter().map(|&p| ((1.0 - p) / p).ln()).collect()
}

pub fn soft_weight(e: &BitVec, weights: &[f64]) -> f64 {
    e.ones().map(|c| weights[c]).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutput {
    pub hard: BitVec,
    /// Posterior log-likelihood ratios; negative means "flipped".
    pub llr: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding min-sum. Stops as soon as the hard decision reproduces the
/// syndrome, which for a zero syndrome happens before the first iteration.
pub fn bp_decode(h: &SparseCheck, priors: &[f64], syndrome: &BitVec, cfg: &DecoderConfig) -> BpOutput {
    let prior = prior_weights(priors);
    let hard_of = |llr: &[f64]| BitVec::from_ones(h.cols, (0..h.cols).filter(|&c| llr[c] < 0.0));
    let hard = hard_of(&prior);
    if h.syndrome_of(&hard) == *syndrome {
        return BpOutput {
            hard,
            llr: prior,
            converged: true,
            iterations: 0,
        };
    }
    let edges = h.edge_row.len();
    let mut v2c = vec![0.0f64; edges];
    for c in 0..h.cols {
        v2c[h.col_start[c]..h.col_start[c + 1]].fill(prior[c]);
    }
    let mut c2v = vec![0.0f64; edges];
    let mut llr = prior.clone();
    let mut check = vec![false; h.rows];
    for it in 1..=cfg.max_iters {
        for r in 0..h.rows {
            let es = &h.row_edges[h.row_start[r]..h.row_start[r + 1]];
            let mut sign = syndrome.get(r);
            let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, u32::MAX);
            for &e in es {
                let m = v2c[e as usize];
                sign ^= m < 0.0;
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for &e in es {
                let mag = if e == arg { min2 } else { min1 };
                let s = sign ^ (v2c[e as usize] < 0.0);
                let v = cfg.ms_scale * if mag.is_finite() { mag } else { 0.0 };
                c2v[e as usize] = if s { -v } else { v };
            }
        }
        check.iter_mut().enumerate().for_each(|(r, b)| *b = syndrome.get(r));
        for c in 0..h.cols {
            let es = h.col_start[c]..h.col_start[c + 1];
            let total = prior[c] + c2v[es.clone()].iter().sum::<f64>();
            llr[c] = total;
            for e in es {
                v2c[e] = total - c2v[e];
                if total < 0.0 {
                    check[h.edge_row[e] as usize] ^= true;
                }
            }
        }
        if check.iter().all(|&b| !b) {
            return BpOutput {
                hard: hard_of(&llr),
                llr,
                converged: true,
                iterations: it,
            };
        }
    }
    BpOutput {
        hard: hard_of(&llr),
        llr,
        converged: false,
        iterations: cfg.max_iters,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub correction: BitVec,
    pub converged: bool,
    pub used_osd: bool,
    pub predicted_observables: BitVec,
    pub soft_weight: f64,
}

/// Ordered-statistics decoding on the reliability order given by `soft`.
///
/// Columns are sorted by posterior LLR, least reliable first, stably.
/// The first independent columns in that order form the information set.
/// Candidates are OSD-0, then every single non-pivot flip, then every pair
/// among the first `osd_order` non-pivot columns. Order zero is plain OSD-0.
pub fn osd_postprocess(
    h: &SparseCheck,
    priors: &[f64],
    syndrome: &BitVec,
    soft: &[f64],
    cfg: &DecoderConfig,
) -> Result<(BitVec, f64), DecodeError> {
    let weights = prior_weights(priors);
    let mut order: Vec<usize> = (0..h.cols).collect();
    order.sort_by(|&a, &b| {
        soft[a]
            .partial_cmp(&soft[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    // Augmented matrix [H_order | s], reduced row echelon form.
    let dense = h.dense();
    let n = h.cols;
    let mut m = BitMatrix::zeros(h.rows, n + 1);
    for r in 0..h.rows {
        for (pos, &c) in order.iter().enumerate() {
            if dense.get(r, c) {
                m.set(r, pos, true);
            }
        }
        if syndrome.get(r) {
            m.set(r, n, true);
        }
    }
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for pos in 0..n {
        if row == h.rows {
            break;
        }
        let Some(p) = (row..h.rows).find(|&r| m.get(r, pos)) else {
            continue;
        };
        m.swap_rows(row, p);
        for r in 0..h.rows {
            if r != row && m.get(r, pos) {
                m.xor_row_into(row, r);
            }
        }
        pivots.push(pos);
        row += 1;
    }
    let rank = row;
    if (rank..h.rows).any(|r| m.get(r, n)) {
        return Err(DecodeError::Unsatisfiable);
    }
    let is_pivot = {
        let mut v = vec![false; n];
        pivots.iter().for_each(|&p| v[p] = true);
        v
    };
    let s_red = BitVec::from_ones(rank, (0..rank).filter(|&r| m.get(r, n)));
    let pivot_w: Vec<f64> = pivots.iter().map(|&p| weights[order[p]]).collect();
    let cost_of = |v: &BitVec| -> f64 { v.ones().map(|i| pivot_w[i]).sum() };
    let col_of = |pos: usize| BitVec::from_ones(rank, (0..rank).filter(|&r| m.get(r, pos)));

    let mut best_flips: Vec<usize> = Vec::new();
    let mut best_cost = cost_of(&s_red);
    let mut best_piv = s_red.clone();
    if cfg.osd_method == OsdMethod::CombinationSweep && cfg.osd_order > 0 {
        let non_pivot: Vec<usize> = (0..n).filter(|&p| !is_pivot[p]).collect();
        let cols: Vec<BitVec> = non_pivot.iter().map(|&p| col_of(p)).collect();
        let better = |c: f64, best: f64| c < best - 1e-12 * best.abs().max(1.0);
        for (i, &p) in non_pivot.iter().enumerate() {
            let mut v = s_red.clone();
            v.xor_assign(&cols[i]);
            let c = cost_of(&v) + weights[order[p]];
            if better(c, best_cost) {
                best_cost = c;
                best_flips = vec![p];
                best_piv = v;
            }
        }
        let lam = cfg.osd_order.min(non_pivot.len());
        for i in 0..lam {
            for j in i + 1..lam {
                let mut v = s_red.clone();
                v.xor_assign(&cols[i]);
                v.xor_assign(&cols[j]);
                let c = cost_of(&v) + weights[order[non_pivot[i]]] + weights[order[non_pivot[j]]];
                if better(c, best_cost) {
                    best_cost = c;
                    best_flips = vec![non_pivot[i], non_pivot[j]];
                    best_piv = v;
                }
            }
        }
    }
    let mut e = BitVec::zeros(n);
    for r in best_piv.ones() {
        e.set(order[pivots[r]], true);
    }
    for p in best_flips {
        e.set(order[p], true);
    }
    Ok((e, best_cost))
}

/// BP followed by OSD when BP fails (or always, with `force_osd`).
pub fn bp_osd(
    h: &SparseCheck,
    priors: &[f64],
    syndrome: &BitVec,
    cfg: &DecoderConfig,
    force_osd: bool,
) -> Result<(BitVec, bool, bool, f64), DecodeError> {
    let bp = bp_decode(h, priors, syndrome, cfg);
    let weights = prior_weights(priors);
    if (bp.converged && !force_osd) || cfg.osd_method == OsdMethod::None {
        let w = soft_weight(&bp.hard, &weights);
        return Ok((bp.hard, bp.converged, false, w));
    }
    let (e, w) = osd_postprocess(h, priors, syndrome, &bp.llr, cfg)?;
    Ok((e, bp.converged, true, w))
}

/// A decoder bound to both subproblems of one detector model.
#[derive(Clone, Debug)]
pub struct BpOsdDecoder {
    pub cfg: DecoderConfig,
    checks: [SparseCheck; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitDecodeResult {
    /// Indexed like [`DetectorModel::split`].
    pub parts: [DecodeResult; 2],
    pub predicted_observables: BitVec,
}

impl BpOsdDecoder {
    pub fn new(model: &DetectorModel, cfg: DecoderConfig) -> Result<Self, DecodeError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            checks: [
                SparseCheck::from_subproblem(&model.split[0]),
                SparseCheck::from_subproblem(&model.split[1]),
            ],
        })
    }

    pub fn decode(&self, model: &DetectorModel, syndrome: &BitVec) -> Result<SplitDecodeResult, DecodeError> {
        let mut predicted = BitVec::zeros(model.num_observables);
        let mut parts = Vec::with_capacity(2);
        for kind in [CheckType::X, CheckType::Z] {
            let sp = model.subproblem(kind);
            let h = &self.checks[kind as usize];
            let local = sp.local_syndrome(syndrome);
            let (e, converged, used_osd, w) = bp_osd(h, &sp.priors, &local, &self.cfg, false)?;
            let mut obs = BitVec::zeros(model.num_observables);
            for c in e.ones() {
                for &o in &sp.observables[c] {
                    obs.toggle(o as usize);
                }
            }
            predicted.xor_assign(&obs);
            parts.push(DecodeResult {
                correction: e,
                converged,
                used_osd,
                predicted_observables: obs,
                soft_weight: w,
            });
        }
        let z = parts.pop().expect("two parts");
        let x = parts.pop().expect("two parts");
        Ok(SplitDecodeResult {
            parts: [x, z],
            predicted_observables: predicted,
        })
    }
}

/// Decodes both subproblems of `model` for one full detector syndrome.
pub fn decode_split(
    model: &DetectorModel,
    syndrome: &BitVec,
    cfg: &DecoderConfig,
) -> Result<SplitDecodeResult, DecodeError> {
    BpOsdDecoder::new(model, *cfg)?.decode(model, syndrome)
}

impl ShotDecoder for BpOsdDecoder {
    fn predict(&self, model: &DetectorModel, syndrome: &BitVec) -> BitVec {
        match self.decode(model, syndrome) {
            Ok(r) => r.predicted_observables,
            // Every sampled syndrome lies in the column space; fall back to
            // "no flip" so a broken model shows up as logical failures.
            Err(_) => BitVec::zeros(model.num_observables),
        }
    }
}

/// Code-capacity decoding problem for one check matrix at flip rate `p`.
pub fn code_capacity(h: &BitMatrix, p: f64) -> (SparseCheck, Vec<f64>) {
    (SparseCheck::from_dense(h), vec![p; h.cols()])
}
