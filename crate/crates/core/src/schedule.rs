//! Movement schedules for the parity-check round.
//!
//! Each half of the round (X checks, then Z checks) transfers its check grid
//! into the movable traps, visits one displacement per term phase, fires a
//! global pulse at each, returns home and transfers back. A phase is a
//! distinct check-to-data offset of a term; the non-wrapped phase of every
//! term is visited before any fully wrapped phase.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CssCode, PolySpec, PolyTerm};
use crate::exec::Execution;
use crate::layout::{
    check_targets, periodicity, term_blocks, CheckType, GridPos, Group, LayoutMap, LayoutVariant, Periodicity,
};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CostModel {
    pub spacing_um: f64,
    pub accel_um_per_us2: f64,
    pub transfer_time_us: f64,
    pub pulse_time_us: f64,
    /// Additive per-round constant, for calibrating against measured rounds.
    pub per_round_constant_us: f64,
    /// Whether the final homeward move of each half counts toward the round.
    pub bill_return_legs: bool,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            spacing_um: 5.0,
            accel_um_per_us2: 0.02,
            transfer_time_us: 0.0,
            pulse_time_us: 0.0,
            per_round_constant_us: 0.0,
            bill_return_legs: false,
        }
    }
}

/// `√(6·Δx/a) + √(6·Δy/a)` microseconds for Manhattan legs `Δx`, `Δy` in µm.
pub fn move_time(dx_um: f64, dy_um: f64, model: &CostModel) -> f64 {
    let leg = |d: f64| (6.0 * d.abs() / model.accel_um_per_us2).sqrt();
    leg(dx_um) + leg(dy_um)
}

fn site_move_time(d_row: i64, d_col: i64, model: &CostModel) -> f64 {
    move_time(d_col as f64 * model.spacing_um, d_row as f64 * model.spacing_um, model)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Cz,
    Cnot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trap {
    Aod,
    Slm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScheduleStep {
    Transfer {
        group: CheckType,
        to: Trap,
    },
    /// Displacement of the whole check grid, in sites. Executed as a
    /// horizontal leg followed by a vertical leg.
    Move {
        group: CheckType,
        d_row: i64,
        d_col: i64,
        homeward: bool,
    },
    Pulse {
        group: CheckType,
        gate: Gate,
        term: PolyTerm,
        block: Group,
        offset: (i64, i64),
        periodicity: Periodicity,
        /// `(check index, data column)` pairs this pulse entangles.
        pairs: Vec<(usize, usize)>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MovementSchedule {
    pub steps: Vec<ScheduleStep>,
    pub per_step_times_us: Vec<f64>,
    /// Billed round duration under the cost model.
    pub round_time_us: f64,
    /// Every step including homeward moves.
    pub full_round_time_us: f64,
    /// Duration of the homeward moves alone.
    pub return_time_us: f64,
}

impl MovementSchedule {
    pub fn pulse_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ScheduleStep::Pulse { .. }))
            .count()
    }

    pub fn round_time_ms(&self) -> f64 {
        self.round_time_us / 1000.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<_> = self
            .steps
            .iter()
            .zip(&self.per_step_times_us)
            .map(|(s, t)| serde_json::json!({ "step": s, "duration_us": t }))
            .collect();
        serde_json::json!({
            "round_time_us": self.round_time_us,
            "full_round_time_us": self.full_round_time_us,
            "return_time_us": self.return_time_us,
            "steps": steps,
        })
    }

    fn recompute_times(&mut self, model: &CostModel) {
        let mut full = 0.0;
        let mut ret = 0.0;
        self.per_step_times_us = self
            .steps
            .iter()
            .map(|s| {
                let t = match *s {
                    ScheduleStep::Transfer { .. } => model.transfer_time_us,
                    ScheduleStep::Move {
                        d_row, d_col, homeward, ..
                    } => {
                        let t = site_move_time(d_row, d_col, model);
                        if homeward {
                            ret += t;
                        }
                        t
                    }
                    ScheduleStep::Pulse { .. } => model.pulse_time_us,
                };
                full += t;
                t
            })
            .collect();
        self.full_round_time_us = full;
        self.return_time_us = ret;
        let billed = if model.bill_return_legs { full } else { full - ret };
        self.round_time_us = billed + model.per_round_constant_us;
    }
}

/// `d × round_time`, in microseconds.
pub fn cycle_time(sched: &MovementSchedule, d: usize) -> f64 {
    d as f64 * sched.round_time_us
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("{phases} phases in the {group:?} half give {states} search states, above the limit of {limit}")]
    SearchTooLarge {
        group: CheckType,
        phases: usize,
        states: usize,
        limit: usize,
    },
    #[error("more than 8 terms per check type ({0})")]
    TooManyTerms(usize),
    #[error("internal: check {check} would pair with two data atoms in one pulse")]
    DoublePairing { check: usize },
}

/// Strategy for ordering phases within a half.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderStrategy {
    /// Minimum billed movement time subject to the phase precedence rule.
    #[default]
    Optimal,
    /// Terms sorted by `p + q`; all non-wrapped phases in that order, then
    /// all wrapped phases in the same order.
    SortedHeuristic,
}

/// A point the check grid must visit during one half.
#[derive(Clone, Debug)]
pub struct Phase {
    pub term: PolyTerm,
    pub block: Group,
    pub offset: (i64, i64),
    pub class: Periodicity,
    /// Grid displacement from home, in sites.
    pub displacement: (i64, i64),
    pub pairs: Vec<(usize, usize)>,
    /// Position of the term in the half's term list.
    pub term_index: usize,
}

/// Phases of one half, ordered non-periodic, partial, periodic; ties by
/// term order and offset.
pub fn half_phases(spec: &PolySpec, layout: &LayoutMap, check: CheckType) -> Vec<Phase> {
    let home = layout.group_offset(check.group());
    let mut phases = Vec::new();
    for (term_index, (term, block)) in term_blocks(spec, check).into_iter().enumerate() {
        let mut by_offset: BTreeMap<(i64, i64), Vec<(usize, usize)>> = BTreeMap::new();
        for t in check_targets(term, check, block, spec) {
            by_offset.entry(t.offset).or_default().push((t.check, t.data));
        }
        let s = layout.group_offset(block);
        for (offset, pairs) in by_offset {
            phases.push(Phase {
                term,
                block,
                offset,
                class: periodicity(term, check, offset),
                displacement: (2 * offset.0 + s.0 - home.0, 2 * offset.1 + s.1 - home.1),
                pairs,
                term_index,
            });
        }
    }
    phases.sort_by_key(|p| (p.class, p.term_index, p.offset));
    phases
}

/// Upper bound on the number of precedence-respecting subsets explored.
pub const MAX_SEARCH_STATES: usize = 1 << 21;

fn leg_cost(a: (i64, i64), b: (i64, i64), model: &CostModel) -> f64 {
    site_move_time(b.0 - a.0, b.1 - a.1, model)
}

/// Exact minimum-cost visiting order under the precedence rule, by dynamic
/// programming over subsets. Among equal-cost orders the lexicographically
/// smallest index sequence is returned.
pub fn optimal_order(
    phases: &[Phase],
    model: &CostModel,
    exec: Execution,
    group: CheckType,
) -> Result<(Vec<usize>, f64), ScheduleError> {
    let k = phases.len();
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mask_of = |class: Periodicity| -> u64 {
        phases
            .iter()
            .enumerate()
            .filter(|(_, p)| p.class == class)
            .fold(0, |m, (i, _)| m | 1 << i)
    };
    let np = mask_of(Periodicity::NonPeriodic);
    let free = mask_of(Periodicity::Partial);
    let per = mask_of(Periodicity::Periodic);
    let (n_np, n_free, n_per) = (np.count_ones(), free.count_ones(), per.count_ones());
    let states = ((1usize << n_np) - 1 + (1usize << n_per)).saturating_mul(1usize << n_free);
    if k > 40 || states > MAX_SEARCH_STATES {
        return Err(ScheduleError::SearchTooLarge {
            group,
            phases: k,
            states,
            limit: MAX_SEARCH_STATES,
        });
    }
    let valid = |mask: u64| mask & per == 0 || mask & np == np;

    // Enumerate valid masks by iterating subsets of each class.
    let subsets = |set: u64| {
        let mut out = vec![0u64];
        let mut s = set;
        while s != 0 {
            out.push(s);
            s = (s - 1) & set;
        }
        out
    };
    let mut masks = Vec::with_capacity(states);
    for f in subsets(free) {
        for a in subsets(np) {
            if a == np {
                for b in subsets(per) {
                    masks.push(f | a | b);
                }
            } else {
                masks.push(f | a);
            }
        }
    }
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    let index: HashMap<u64, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();

    let pos: Vec<(i64, i64)> = phases.iter().map(|p| p.displacement).collect();
    let cost: Vec<Vec<f64>> = pos
        .iter()
        .map(|&a| pos.iter().map(|&b| leg_cost(a, b, model)).collect())
        .collect();
    let end: Vec<f64> = pos
        .iter()
        .map(|&a| {
            if model.bill_return_legs {
                leg_cost(a, (0, 0), model)
            } else {
                0.0
            }
        })
        .collect();
    let full = (1u64 << k) - 1;

    // g[idx * k + last]: cheapest completion after visiting mask, ending at last.
    let mut g = vec![f64::INFINITY; masks.len() * k];
    let mut start = 0;
    while start < masks.len() {
        let pc = masks[start].count_ones();
        let end_idx = masks[start..]
            .iter()
            .position(|m| m.count_ones() != pc)
            .map_or(masks.len(), |o| start + o);
        let layer = &masks[start..end_idx];
        let g_ref = &g;
        let rows: Vec<Vec<f64>> = exec.map(layer, |&mask| {
            let mut row = vec![f64::INFINITY; k];
            for last in 0..k {
                if mask >> last & 1 == 0 {
                    continue;
                }
                if mask == full {
                    row[last] = end[last];
                    continue;
                }
                let mut best = f64::INFINITY;
                for next in 0..k {
                    let nm = mask | 1 << next;
                    if nm == mask || !valid(nm) {
                        continue;
                    }
                    let v = cost[last][next] + g_ref[index[&nm] * k + next];
                    if v < best {
                        best = v;
                    }
                }
                row[last] = best;
            }
            row
        });
        for (off, row) in rows.into_iter().enumerate() {
            let base = (start + off) * k;
            g[base..base + k].copy_from_slice(&row);
        }
        start = end_idx;
    }

    let tol = |v: f64| 1e-9 * v.abs().max(1.0);
    let value = |mask: u64, last: usize| g[index[&mask] * k + last];
    let first_cost = |j: usize| leg_cost((0, 0), pos[j], model) + value(1 << j, j);
    let total = (0..k)
        .filter(|&j| valid(1 << j))
        .map(first_cost)
        .fold(f64::INFINITY, f64::min);
    let mut order = Vec::with_capacity(k);
    let first = (0..k)
        .find(|&j| valid(1 << j) && first_cost(j) <= total + tol(total))
        .expect("some start");
    order.push(first);
    let mut mask = 1u64 << first;
    let mut remaining = value(mask, first);
    while mask != full {
        let last = *order.last().expect("non-empty");
        let next = (0..k)
            .find(|&j| {
                let nm = mask | 1 << j;
                nm != mask && valid(nm) && cost[last][j] + value(nm, j) <= remaining + tol(remaining)
            })
            .expect("optimal continuation exists");
        remaining = value(mask | 1 << next, next);
        mask |= 1 << next;
        order.push(next);
    }
    Ok((order, total))
}

/// Visiting order used by the sorted heuristic.
pub fn heuristic_order(phases: &[Phase]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..phases.len()).collect();
    idx.sort_by_key(|&i| {
        let p = &phases[i];
        let wrapped = p.class != Periodicity::NonPeriodic;
        (wrapped, p.term.p + p.term.q, p.term_index, p.class, p.offset)
    });
    idx
}

/// Billed movement cost of visiting `phases` in `order` from home.
pub fn order_cost(phases: &[Phase], order: &[usize], model: &CostModel) -> f64 {
    let mut at = (0, 0);
    let mut total = 0.0;
    for &i in order {
        total += leg_cost(at, phases[i].displacement, model);
        at = phases[i].displacement;
    }
    if model.bill_return_legs {
        total += leg_cost(at, (0, 0), model);
    }
    total
}

/// Whether `order` keeps every non-periodic phase ahead of every periodic one.
pub fn respects_precedence(phases: &[Phase], order: &[usize]) -> bool {
    let last_np = order.iter().rposition(|&i| phases[i].class == Periodicity::NonPeriodic);
    let first_p = order.iter().position(|&i| phases[i].class == Periodicity::Periodic);
    match (last_np, first_p) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScheduleOptions {
    pub strategy: OrderStrategy,
    pub gate: Option<Gate>,
    pub exec: Execution,
}

/// Builds the full round: X half then Z half.
pub fn schedule_round(
    spec: &PolySpec,
    layout: &LayoutMap,
    model: &CostModel,
    options: &ScheduleOptions,
) -> Result<MovementSchedule, ScheduleError> {
    debug_assert_eq!((layout.l, layout.m), (spec.l, spec.m));
    let terms = spec.a.len() + spec.b.len();
    if terms > 8 {
        return Err(ScheduleError::TooManyTerms(terms));
    }
    let gate = options.gate.unwrap_or(Gate::Cz);
    let mut steps = Vec::new();
    for check in [CheckType::X, CheckType::Z] {
        let phases = half_phases(spec, layout, check);
        for p in &phases {
            let checks: BTreeSet<usize> = p.pairs.iter().map(|x| x.0).collect();
            if checks.len() != p.pairs.len() {
                return Err(ScheduleError::DoublePairing { check: p.pairs[0].0 });
            }
        }
        let order = match options.strategy {
            OrderStrategy::Optimal => optimal_order(&phases, model, options.exec, check)?.0,
            OrderStrategy::SortedHeuristic => heuristic_order(&phases),
        };
        steps.push(ScheduleStep::Transfer {
            group: check,
            to: Trap::Aod,
        });
        let mut at = (0i64, 0i64);
        for i in order {
            let p = &phases[i];
            steps.push(ScheduleStep::Move {
                group: check,
                d_row: p.displacement.0 - at.0,
                d_col: p.displacement.1 - at.1,
                homeward: false,
            });
            at = p.displacement;
            steps.push(ScheduleStep::Pulse {
                group: check,
                gate,
                term: p.term,
                block: p.block,
                offset: p.offset,
                periodicity: p.class,
                pairs: p.pairs.clone(),
            });
        }
        if at != (0, 0) {
            steps.push(ScheduleStep::Move {
                group: check,
                d_row: -at.0,
                d_col: -at.1,
                homeward: true,
            });
        }
        steps.push(ScheduleStep::Transfer {
            group: check,
            to: Trap::Slm,
        });
    }
    let mut sched = MovementSchedule {
        steps,
        per_step_times_us: Vec::new(),
        round_time_us: 0.0,
        full_round_time_us: 0.0,
        return_time_us: 0.0,
    };
    sched.recompute_times(model);
    Ok(sched)
}

/// Recomputes step durations after a manual edit of `steps`.
pub fn retime(sched: &mut MovementSchedule, model: &CostModel) {
    sched.recompute_times(model);
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("coverage (a) at step {step}: {detail}")]
    Coverage { step: usize, detail: String },
    #[error("exclusivity (b) at step {step}: {detail}")]
    Exclusivity { step: usize, detail: String },
    #[error("return (c) at step {step}: {group:?} checks displaced by {residual:?}")]
    NotHome {
        step: usize,
        group: CheckType,
        residual: (i64, i64),
    },
    #[error("collision at step {step}: {detail}")]
    Collision { step: usize, detail: String },
}

impl ScheduleViolation {
    pub fn step(&self) -> usize {
        match self {
            Self::Coverage { step, .. }
            | Self::Exclusivity { step, .. }
            | Self::NotHome { step, .. }
            | Self::Collision { step, .. } => *step,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pulses: usize,
    pub pairs: usize,
    /// Check atoms passing through an occupied site during a move.
    pub collisions: usize,
}

/// Replays `sched` on the layout and checks (a) exact coverage of the check
/// matrices, (b) that each pulse touches exactly its annotated pairs with
/// non-periodic phases first, (c) that check grids end where they started.
/// Collision freedom is enforced for the collision-free variant.
pub fn verify_schedule(
    sched: &MovementSchedule,
    code: &CssCode,
    layout: &LayoutMap,
) -> Result<VerifyReport, ScheduleViolation> {
    let lm = layout.block_size();
    let mut data_at: HashMap<GridPos, usize> = HashMap::new();
    for i in 0..lm {
        data_at.insert(layout.site(Group::A, i), i);
        data_at.insert(layout.site(Group::B, i), lm + i);
    }
    let mut disp = [(0i64, 0i64); 2];
    let slot = |c: CheckType| if c == CheckType::X { 0 } else { 1 };
    let mut realized: [HashMap<(usize, usize), Vec<usize>>; 2] = [HashMap::new(), HashMap::new()];
    let mut geometric: Vec<(usize, BTreeSet<(usize, usize)>)> = Vec::new();
    let mut collisions = 0usize;
    let mut first_collision: Option<ScheduleViolation> = None;
    let mut not_home: Option<ScheduleViolation> = None;

    for (idx, step) in sched.steps.iter().enumerate() {
        match step {
            ScheduleStep::Move {
                group, d_row, d_col, ..
            } => {
                let s = slot(*group);
                let (hits, detail) = leg_collisions(layout, *group, disp[s], (*d_row, *d_col), disp[1 - s]);
                if hits > 0 {
                    collisions += hits;
                    if first_collision.is_none() {
                        first_collision = Some(ScheduleViolation::Collision { step: idx, detail });
                    }
                }
                disp[s].0 += d_row;
                disp[s].1 += d_col;
            }
            ScheduleStep::Pulse { group, .. } => {
                let s = slot(*group);
                let mut set = BTreeSet::new();
                for j in 0..lm {
                    let pos = layout.site(group.group(), j).offset(disp[s].0, disp[s].1);
                    if let Some(&d) = data_at.get(&pos) {
                        set.insert((j, d));
                        realized[s].entry((j, d)).or_default().push(idx);
                    }
                }
                geometric.push((idx, set));
            }
            ScheduleStep::Transfer { group, to: Trap::Slm } => {
                let s = slot(*group);
                if disp[s] != (0, 0) && not_home.is_none() {
                    not_home = Some(ScheduleViolation::NotHome {
                        step: idx,
                        group: *group,
                        residual: disp[s],
                    });
                }
            }
            ScheduleStep::Transfer { .. } => {}
        }
    }

    // (a) coverage, reported at the earliest offending step.
    let mut coverage: Vec<ScheduleViolation> = Vec::new();
    let last_step = sched.steps.len().saturating_sub(1);
    for (s, (matrix, label)) in [(&code.gx, "Gx"), (&code.gz, "Gz")].into_iter().enumerate() {
        for (&(j, d), steps) in &realized[s] {
            if !matrix.get(j, d) {
                coverage.push(ScheduleViolation::Coverage {
                    step: steps[0],
                    detail: format!("pair (check {j}, data {d}) is not an entry of {label}"),
                });
            } else if steps.len() > 1 {
                coverage.push(ScheduleViolation::Coverage {
                    step: steps[1],
                    detail: format!("{label} entry ({j}, {d}) realized {} times", steps.len()),
                });
            }
        }
        for j in 0..matrix.rows() {
            for d in matrix.row_ones(j) {
                if !realized[s].contains_key(&(j, d)) {
                    coverage.push(ScheduleViolation::Coverage {
                        step: last_step,
                        detail: format!("{label} entry ({j}, {d}) never realized"),
                    });
                }
            }
        }
    }
    if let Some(v) = coverage.into_iter().min_by_key(|v| (v.step(), v.to_string())) {
        return Err(v);
    }

    // (b) annotated pairs match geometry; precedence within each half.
    let mut geo = geometric.into_iter();
    let mut seen_periodic = [false; 2];
    for (idx, step) in sched.steps.iter().enumerate() {
        if let ScheduleStep::Pulse {
            group,
            pairs,
            periodicity,
            ..
        } = step
        {
            let (gidx, set) = geo.next().expect("one geometric set per pulse");
            debug_assert_eq!(gidx, idx);
            let annotated: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
            if annotated != set {
                let extra = set.difference(&annotated).count();
                let missing = annotated.difference(&set).count();
                return Err(ScheduleViolation::Exclusivity {
                    step: idx,
                    detail: format!("{extra} unannotated adjacent pairs, {missing} annotated pairs not adjacent"),
                });
            }
            let s = slot(*group);
            match periodicity {
                Periodicity::Periodic => seen_periodic[s] = true,
                Periodicity::NonPeriodic if seen_periodic[s] => {
                    return Err(ScheduleViolation::Exclusivity {
                        step: idx,
                        detail: "non-periodic phase after a periodic phase".into(),
                    })
                }
                _ => {}
            }
        }
    }

    // (c) home at the end of each half.
    if let Some(v) = not_home {
        return Err(v);
    }
    for (s, group) in [CheckType::X, CheckType::Z].into_iter().enumerate() {
        if disp[s] != (0, 0) {
            return Err(ScheduleViolation::NotHome {
                step: last_step,
                group,
                residual: disp[s],
            });
        }
    }

    if layout.variant == LayoutVariant::CollisionFree {
        if let Some(v) = first_collision {
            return Err(v);
        }
    }

    let pulses = sched.pulse_count();
    let pairs = realized.iter().map(|m| m.len()).sum();
    Ok(VerifyReport {
        pulses,
        pairs,
        collisions,
    })
}

/// Counts moving check atoms that pass through an occupied position during
/// the horizontal-then-vertical legs of one move.
fn leg_collisions(
    layout: &LayoutMap,
    group: CheckType,
    from: (i64, i64),
    delta: (i64, i64),
    other_disp: (i64, i64),
) -> (usize, String) {
    let lm = layout.block_size();
    let other = if group == CheckType::X { Group::Z } else { Group::X };
    let mut by_row: HashMap<i64, Vec<i64>> = HashMap::new();
    let mut by_col: HashMap<i64, Vec<i64>> = HashMap::new();
    let mut add = |(r, c): (i64, i64)| {
        by_row.entry(r).or_default().push(c);
        by_col.entry(c).or_default().push(r);
    };
    for i in 0..lm {
        add(layout.position_quarters(Group::A, i));
        add(layout.position_quarters(Group::B, i));
        let (r, c) = layout.position_quarters(other, i);
        add((r + 4 * other_disp.0, c + 4 * other_disp.1));
    }
    let mut hits = 0;
    let mut detail = String::new();
    for j in 0..lm {
        let (r0, c0) = layout.position_quarters(group.group(), j);
        let (r, c) = (r0 + 4 * from.0, c0 + 4 * from.1);
        let c1 = c + 4 * delta.1;
        let r1 = r + 4 * delta.0;
        let h = by_row.get(&r).map_or(0, |cols| {
            cols.iter()
                .filter(|&&x| x != c && x >= c.min(c1) && x <= c.max(c1))
                .count()
        });
        let v = by_col.get(&c1).map_or(0, |rows| {
            rows.iter()
                .filter(|&&y| y != r && y >= r.min(r1) && y <= r.max(r1))
                .count()
        });
        if h + v > 0 && detail.is_empty() {
            detail = format!("{group:?} check {j} crosses {} occupied positions", h + v);
        }
        hits += h + v;
    }
    (hits, detail)
}
