//! Compiles Clifford+T programs onto the memory hierarchy and onto the
//! surface-code-only baseline.
//!
//! Time advances in surface-code logical cycles ("steps"). Each step:
//! finished operations, loads and stores retire; free single-qubit Cliffords
//! run; ready CNOT and T operations start when their operands are resident
//! and their routing (and T state) is available; then each memory block's
//! LD/ST ancilla, if idle, loads the block's soonest-needed qubit or stores
//! a resident one to make room for it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{footprint, ArchConfig, ArchError, CnotMode, LogicalOp};
use crate::config::ParseError;
use crate::exec::Execution;

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("{n_qubits} qubits do not fit in {n_blocks} blocks of {capacity}")]
    Capacity {
        n_qubits: usize,
        n_blocks: usize,
        capacity: usize,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("no progress possible at step {step}; blocked operations {blocked:?}")]
    Deadlock { step: u64, blocked: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", content = "qubits", rename_all = "lowercase")]
pub enum Op {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    T(usize),
    Cnot(usize, usize),
}

impl Op {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Op::X(q) | Op::Y(q) | Op::Z(q) | Op::H(q) | Op::S(q) | Op::T(q) => (q, None),
            Op::Cnot(a, b) => (a, Some(b)),
        }
    }

    pub fn kind(&self) -> LogicalOp {
        match self {
            Op::Cnot(..) => LogicalOp::Cnot,
            Op::T(_) => LogicalOp::T,
            _ => LogicalOp::Clifford1,
        }
    }

    fn is_free(&self) -> bool {
        self.kind() == LogicalOp::Clifford1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
    pub n_rz: u64,
    pub eps_rz: f64,
}

impl Program {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ..Self::default()
        }
    }

    pub fn push(&mut self, op: Op) {
        self.ops.push(op);
    }

    pub fn t_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::T(_))).count()
    }

    pub fn cnot_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::Cnot(..))).count()
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, op) in self.ops.iter().enumerate() {
            let (a, b) = op.qubits();
            if a >= self.n_qubits || b.is_some_and(|b| b >= self.n_qubits) {
                return Err(format!("op {i} addresses a qubit outside 0..{}", self.n_qubits));
            }
            if b == Some(a) {
                return Err(format!("op {i} is a CNOT on a single qubit"));
            }
        }
        Ok(())
    }

    /// Line format: `qubits N`, then `cnot a b`, `t a`, `h a`, `s a`, `x a`,
    /// `y a`, `z a`, and optional `meta n_rz V` / `meta eps_rz V`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut prog: Option<Program> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lno = ln + 1;
            let col = raw.len() - raw.trim_start().len() + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |m: String| ParseError::new(lno, col, m);
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("expected an integer, found {s:?}")))
            };
            let cmd = toks[0].to_ascii_lowercase();
            if cmd == "qubits" {
                if toks.len() != 2 {
                    return Err(err("`qubits` takes one count".into()));
                }
                prog = Some(Program::new(num(toks[1])?));
                continue;
            }
            let p = prog.as_mut().ok_or_else(|| err("missing `qubits N` header".into()))?;
            if cmd == "meta" {
                match (toks.get(1), toks.get(2)) {
                    (Some(&"n_rz"), Some(v)) => p.n_rz = num(v)? as u64,
                    (Some(&"eps_rz"), Some(v)) => {
                        p.eps_rz = v.parse().map_err(|_| err(format!("bad eps_rz {v:?}")))?;
                    }
                    _ => return Err(err(format!("unknown metadata line {line:?}"))),
                }
                continue;
            }
            let arity = if cmd == "cnot" { 3 } else { 2 };
            if toks.len() != arity {
                return Err(err(format!("`{cmd}` takes {} operand(s)", arity - 1)));
            }
            let a = num(toks[1])?;
            let op = match cmd.as_str() {
                "x" => Op::X(a),
                "y" => Op::Y(a),
                "z" => Op::Z(a),
                "h" => Op::H(a),
                "s" => Op::S(a),
                "t" => Op::T(a),
                "cnot" => Op::Cnot(a, num(toks[2])?),
                other => return Err(err(format!("unknown gate {other:?}"))),
            };
            p.ops.push(op);
            p.validate().map_err(err)?;
        }
        prog.ok_or_else(|| ParseError::new(1, 1, "missing `qubits N` header"))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n_qubits);
        if self.n_rz > 0 {
            s += &format!("meta n_rz {}\nmeta eps_rz {:e}\n", self.n_rz, self.eps_rz);
        }
        for op in &self.ops {
            s += &match *op {
                Op::X(q) => format!("x {q}\n"),
                Op::Y(q) => format!("y {q}\n"),
                Op::Z(q) => format!("z {q}\n"),
                Op::H(q) => format!("h {q}\n"),
                Op::S(q) => format!("s {q}\n"),
                Op::T(q) => format!("t {q}\n"),
                Op::Cnot(a, b) => format!("cnot {a} {b}\n"),
            };
        }
        s
    }

    /// ASAP layer of every op, counting every gate as one layer.
    pub fn layers(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.n_qubits];
        self.ops
            .iter()
            .map(|op| {
                let (a, b) = op.qubits();
                let l = b.map_or(depth[a], |b| depth[a].max(depth[b]));
                depth[a] = l + 1;
                if let Some(b) = b {
                    depth[b] = l + 1;
                }
                l
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramProfile {
    /// Mean ratio of idle to busy qubits per ASAP layer.
    pub serialization: f64,
    /// T gates per Clifford gate.
    pub t_consumption: f64,
}

pub fn profile(prog: &Program) -> ProgramProfile {
    let layers = prog.layers();
    let depth = layers.iter().map(|l| l + 1).max().unwrap_or(0);
    let mut active = vec![0usize; depth];
    for (op, &l) in prog.ops.iter().zip(&layers) {
        active[l] += if op.qubits().1.is_some() { 2 } else { 1 };
    }
    let serialization = if depth == 0 {
        0.0
    } else {
        active
            .iter()
            .map(|&a| (prog.n_qubits - a) as f64 / a as f64)
            .sum::<f64>()
            / depth as f64
    };
    let t = prog.t_count() as f64;
    let cliff = (prog.ops.len() - prog.t_count()) as f64;
    ProgramProfile {
        serialization,
        t_consumption: if cliff == 0.0 { t } else { t / cliff },
    }
}

/// Total CNOT weight between qubits in different blocks.
pub fn bichromatic_weight(prog: &Program, assignment: &[usize]) -> usize {
    prog.ops
        .iter()
        .filter(|op| matches!(op, Op::Cnot(a, b) if assignment[*a] != assignment[*b]))
        .count()
}

/// Chaitin-style coloring of the CNOT interference graph into `n_blocks`
/// colors of capacity `capacity`, maximizing the CNOT weight between
/// different colors.
///
/// Simplify repeatedly removes the node of least weighted degree among the
/// remaining graph (lowest index on ties); select pops nodes and gives each
/// the block with least same-block weight, then fewest occupants, then
/// lowest index.
pub fn map_qubits(prog: &Program, n_blocks: usize, capacity: usize) -> Result<Vec<usize>, CompileError> {
    map_weighted(prog, n_blocks, capacity, &vec![1; n_blocks])
}

/// Same as [`map_qubits`], with same-block CNOTs in block `b` counted
/// `clash_cost[b]` times.
fn map_weighted(
    prog: &Program,
    n_blocks: usize,
    capacity: usize,
    clash_cost: &[usize],
) -> Result<Vec<usize>, CompileError> {
    let n = prog.n_qubits;
    if n_blocks * capacity < n {
        return Err(CompileError::Capacity {
            n_qubits: n,
            n_blocks,
            capacity,
        });
    }
    let mut w = vec![vec![0usize; n]; n];
    for op in &prog.ops {
        if let Op::Cnot(a, b) = *op {
            w[a][b] += 1;
            w[b][a] += 1;
        }
    }
    let mut removed = vec![false; n];
    let mut degree: Vec<usize> = (0..n).map(|i| w[i].iter().sum()).collect();
    let mut stack = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&i| !removed[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("node left");
        removed[v] = true;
        stack.push(v);
        for u in 0..n {
            if !removed[u] {
                degree[u] -= w[v][u];
            }
        }
    }
    let mut color = vec![usize::MAX; n];
    let mut load = vec![0usize; n_blocks];
    while let Some(v) = stack.pop() {
        let c = (0..n_blocks)
            .filter(|&c| load[c] < capacity)
            .min_by_key(|&c| {
                let clash: usize = (0..n).filter(|&u| color[u] == c).map(|u| w[v][u]).sum();
                (clash * clash_cost[c], load[c], c)
            })
            .expect("capacity checked");
        color[v] = c;
        load[c] += 1;
    }
    Ok(color)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StallCause {
    /// An operand is not resident in a surface slot.
    Residency,
    Routing,
    TState,
    /// The single movement-based CNOT/T lane is busy.
    Serialized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    Load { qubit: usize, block: usize, slot: usize },
    Store { qubit: usize, block: usize, slot: usize },
    Cnot { op: usize, control: usize, target: usize },
    TInject { op: usize, qubit: usize },
    Stall { op: usize, cause: StallCause },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub start: u64,
    pub end: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// What each step was spent on, for cost attribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    pub compute: bool,
    pub ldst: bool,
    pub waiting_on_ldst: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledProgram {
    pub n_cycles: u64,
    pub n_ldst: u64,
    pub n_t: u64,
    pub timeline: Vec<TimedEvent>,
    pub steps: Vec<StepFlags>,
    pub op_start: Vec<u64>,
    pub op_end: Vec<u64>,
    pub assignment: Option<Vec<usize>>,
    /// Stores of active qubits made to free space for a CNOT whose partner
    /// is resident.
    pub tiebreak_stores: u64,
    /// Stores of active qubits made only because nothing else could move.
    pub forced_evictions: u64,
    pub arch: ArchConfig,
    pub cost: CostReport,
}

impl CompiledProgram {
    pub fn events_at(&self, step: u64) -> impl Iterator<Item = &TimedEvent> {
        self.timeline
            .iter()
            .filter(move |e| e.start <= step && step < e.end.max(e.start + 1))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub memory: f64,
    pub ldst: f64,
    pub compute: f64,
    pub factory: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.memory + self.ldst + self.compute + self.factory
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub space_qubits: usize,
    pub time_seconds: f64,
    pub spacetime_qubit_seconds: f64,
    pub breakdown: Breakdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    Memory,
    Surface(usize),
    Loading(usize),
    Storing(usize),
}

struct Machine<'a> {
    prog: &'a Program,
    arch: &'a ArchConfig,
    assignment: Option<&'a [usize]>,
    loc: Vec<Loc>,
    slot_owner: Vec<Option<usize>>,
    /// Per qubit, pending op indices in program order.
    queue: Vec<VecDeque<usize>>,
    qubit_busy: Vec<u64>,
    ancilla_busy: Vec<u64>,
    ancilla_end: Vec<Option<(u64, usize, bool)>>,
    corridor_busy: Vec<u64>,
    lane_busy: u64,
    t_consumed: u64,
    op_start: Vec<u64>,
    op_end: Vec<u64>,
    started: Vec<bool>,
    /// Steps on the longest dependency chain starting at each op.
    tail: Vec<u64>,
    done: usize,
    timeline: Vec<TimedEvent>,
    steps: Vec<StepFlags>,
    n_ldst: u64,
    tiebreak: u64,
    forced: u64,
}

const NEVER: usize = usize::MAX;

impl<'a> Machine<'a> {
    fn new(prog: &'a Program, arch: &'a ArchConfig, assignment: Option<&'a [usize]>) -> Self {
        let n = prog.n_qubits;
        let mut queue = vec![VecDeque::new(); n];
        for (i, op) in prog.ops.iter().enumerate() {
            let (a, b) = op.qubits();
            queue[a].push_back(i);
            if let Some(b) = b {
                queue[b].push_back(i);
            }
        }
        let mut tail = vec![0u64; prog.ops.len()];
        let mut after = vec![0u64; n];
        for (i, op) in prog.ops.iter().enumerate().rev() {
            let (a, b) = op.qubits();
            let own = if op.is_free() {
                0
            } else {
                arch.op_steps(op.kind()) as u64
            };
            tail[i] = own + b.map_or(after[a], |b| after[a].max(after[b]));
            after[a] = tail[i];
            if let Some(b) = b {
                after[b] = tail[i];
            }
        }
        let (loc, slot_owner) = match assignment {
            Some(_) => (vec![Loc::Memory; n], vec![None; arch.n_surface]),
            None => (
                (0..n).map(Loc::Surface).collect(),
                (0..arch.n_surface).map(|s| (s < n).then_some(s)).collect(),
            ),
        };
        Self {
            prog,
            arch,
            assignment,
            loc,
            slot_owner,
            queue,
            qubit_busy: vec![0; n],
            ancilla_busy: vec![0; arch.n_blocks],
            ancilla_end: vec![None; arch.n_blocks],
            corridor_busy: vec![0; arch.n_surface],
            lane_busy: 0,
            t_consumed: 0,
            op_start: vec![0; prog.ops.len()],
            op_end: vec![0; prog.ops.len()],
            started: vec![false; prog.ops.len()],
            tail,
            done: 0,
            timeline: Vec::new(),
            steps: Vec::new(),
            n_ldst: 0,
            tiebreak: 0,
            forced: 0,
        }
    }

    fn produced(&self, t: u64) -> u64 {
        if self.arch.n_factories == 0 {
            return 0;
        }
        self.arch.n_factories as u64 * (t / self.arch.factory.cycles_per_state as u64)
    }

    /// Index of the next pending CNOT or T on `q`, or `NEVER`.
    fn next_use(&self, q: usize) -> usize {
        self.queue[q]
            .iter()
            .copied()
            .find(|&i| !self.prog.ops[i].is_free())
            .unwrap_or(NEVER)
    }

    fn is_head(&self, op: usize) -> bool {
        let (a, b) = self.prog.ops[op].qubits();
        self.queue[a].front() == Some(&op) && b.is_none_or(|b| self.queue[b].front() == Some(&op))
    }

    /// A qubit is active when its next operation has all predecessors done.
    fn is_active(&self, q: usize) -> bool {
        self.queue[q].front().is_some_and(|&op| self.is_head(op))
    }

    fn retire(&mut self, t: u64) {
        for b in 0..self.ancilla_end.len() {
            if let Some((end, q, is_load)) = self.ancilla_end[b] {
                if end <= t {
                    self.ancilla_end[b] = None;
                    match (self.loc[q], is_load) {
                        (Loc::Loading(s), true) => self.loc[q] = Loc::Surface(s),
                        (Loc::Storing(s), false) => {
                            self.loc[q] = Loc::Memory;
                            self.slot_owner[s] = None;
                        }
                        other => unreachable!("inconsistent LD/ST state {other:?}"),
                    }
                }
            }
        }
        for q in 0..self.prog.n_qubits {
            while let Some(&op) = self.queue[q].front() {
                if self.started[op] && self.op_end[op] <= t {
                    self.queue[q].pop_front();
                    let (a, b) = self.prog.ops[op].qubits();
                    if (q == a && b.is_none()) || Some(q) == b {
                        self.done += 1;
                    }
                } else {
                    break;
                }
            }
        }
    }

    /// Runs free Cliffords at the head of each queue.
    fn run_free(&mut self, t: u64) {
        for q in 0..self.prog.n_qubits {
            while let Some(&op) = self.queue[q].front() {
                if self.prog.ops[op].is_free() && !self.started[op] {
                    self.started[op] = true;
                    self.op_start[op] = t;
                    self.op_end[op] = t;
                    self.queue[q].pop_front();
                    self.done += 1;
                } else {
                    break;
                }
            }
        }
    }

    fn resident_idle(&self, q: usize, t: u64) -> Option<usize> {
        match self.loc[q] {
            Loc::Surface(s) if self.qubit_busy[q] <= t => Some(s),
            _ => None,
        }
    }

    /// Starts every ready CNOT/T that can run. Returns (started any,
    /// waiting on residency, waiting on a factory).
    fn execute(&mut self, t: u64) -> (bool, bool, bool) {
        let mut heads: Vec<usize> = (0..self.prog.n_qubits)
            .filter_map(|q| self.queue[q].front().copied())
            .filter(|&op| !self.started[op])
            .collect();
        heads.sort_unstable();
        heads.dedup();
        // Longest remaining chain first, so scarce T states and lanes go to
        // the critical path.
        heads.sort_by_key(|&op| (std::cmp::Reverse(self.tail[op]), op));
        let (mut any, mut waiting_ld, mut waiting_t) = (false, false, false);
        for op in heads {
            if !self.is_head(op) {
                continue;
            }
            let o = self.prog.ops[op];
            let (a, b) = o.qubits();
            let sa = self.resident_idle(a, t);
            let sb = b.map(|b| self.resident_idle(b, t));
            let resident = sa.is_some() && sb.is_none_or(|s| s.is_some());
            let stall = |m: &mut Self, cause| {
                m.timeline.push(TimedEvent {
                    start: t,
                    end: t + 1,
                    event: Event::Stall { op, cause },
                });
            };
            if !resident {
                let loaded_somewhere = [Some(a), b]
                    .into_iter()
                    .flatten()
                    .all(|q| matches!(self.loc[q], Loc::Surface(_) | Loc::Loading(_)));
                if !loaded_somewhere || self.assignment.is_some() {
                    waiting_ld |= !matches!(self.loc[a], Loc::Surface(_))
                        || b.is_some_and(|b| !matches!(self.loc[b], Loc::Surface(_)));
                }
                stall(self, StallCause::Residency);
                continue;
            }
            let sa = sa.expect("resident");
            let steps = self.arch.op_steps(o.kind()) as u64;
            let transversal = self.arch.cnot_mode == CnotMode::Transversal;
            if transversal && self.lane_busy > t {
                stall(self, StallCause::Serialized);
                continue;
            }
            let span = match sb {
                Some(Some(sb)) => sa.min(sb)..=sa.max(sb),
                _ => sa..=sa,
            };
            if !transversal && span.clone().any(|c| self.corridor_busy[c] > t) {
                stall(self, StallCause::Routing);
                continue;
            }
            if matches!(o, Op::T(_)) {
                if self.produced(t) <= self.t_consumed {
                    stall(self, StallCause::TState);
                    waiting_t = true;
                    continue;
                }
                self.t_consumed += 1;
            }
            let end = t + steps;
            if transversal {
                self.lane_busy = end;
            } else {
                span.for_each(|c| self.corridor_busy[c] = end);
            }
            self.qubit_busy[a] = end;
            if let Some(b) = b {
                self.qubit_busy[b] = end;
            }
            self.started[op] = true;
            self.op_start[op] = t;
            self.op_end[op] = end;
            let event = match o {
                Op::Cnot(c, tg) => Event::Cnot {
                    op,
                    control: c,
                    target: tg,
                },
                _ => Event::TInject { op, qubit: a },
            };
            self.timeline.push(TimedEvent { start: t, end, event });
            any = true;
        }
        (any, waiting_ld, waiting_t)
    }

    /// One LD/ST decision per idle ancilla. With `force`, an active
    /// resident qubit may be stored when nothing else can move.
    fn ldst(&mut self, t: u64, force: bool) -> bool {
        let Some(assign) = self.assignment else { return false };
        let mut any = false;
        for b in 0..self.arch.n_blocks {
            if self.ancilla_busy[b] > t {
                continue;
            }
            let mut wants: Vec<(usize, usize)> = (0..self.prog.n_qubits)
                .filter(|&q| assign[q] == b && self.loc[q] == Loc::Memory)
                .map(|q| (self.next_use(q), q))
                .filter(|&(u, _)| u != NEVER)
                .collect();
            wants.sort_unstable();
            let Some(&(_, want_q)) = wants.first() else { continue };
            let group = &self.arch.ldst_groups[b];
            if let Some(&slot) = group.iter().find(|&&s| self.slot_owner[s].is_none()) {
                let end = t + self.arch.op_steps(LogicalOp::Load) as u64;
                self.slot_owner[slot] = Some(want_q);
                self.loc[want_q] = Loc::Loading(slot);
                self.ancilla_busy[b] = end;
                self.ancilla_end[b] = Some((end, want_q, true));
                self.timeline.push(TimedEvent {
                    start: t,
                    end,
                    event: Event::Load {
                        qubit: want_q,
                        block: b,
                        slot,
                    },
                });
                self.n_ldst += 1;
                any = true;
                continue;
            }
            // The earliest-needed qubit gets the first try. If no resident may
            // give way to it, a later qubit whose CNOT partner already sits in
            // a surface patch may claim an active victim (the tiebreak).
            let mut victim = None;
            let mut tiebreak = false;
            for (i, &(want_use, want_q)) in wants.iter().enumerate() {
                let partner_resident = self.cnot_partner_resident(want_q);
                if i > 0 && !partner_resident {
                    continue;
                }
                victim = self.pick_victim(b, t, want_use, partner_resident || force);
                if victim.is_some() {
                    tiebreak = partner_resident;
                    break;
                }
            }
            if let Some((q, slot)) = victim {
                if self.is_active(q) {
                    if tiebreak {
                        self.tiebreak += 1;
                    } else {
                        self.forced += 1;
                    }
                }
                let end = t + self.arch.op_steps(LogicalOp::Store) as u64;
                self.loc[q] = Loc::Storing(slot);
                self.ancilla_busy[b] = end;
                self.ancilla_end[b] = Some((end, q, false));
                self.timeline.push(TimedEvent {
                    start: t,
                    end,
                    event: Event::Store {
                        qubit: q,
                        block: b,
                        slot,
                    },
                });
                self.n_ldst += 1;
                any = true;
            }
        }
        any
    }

    /// True when `q`'s next op is a ready CNOT whose other operand is resident.
    fn cnot_partner_resident(&self, q: usize) -> bool {
        let op = self.next_use(q);
        match self.prog.ops.get(op) {
            Some(Op::Cnot(x, y)) => {
                let other = if *x == q { *y } else { *x };
                self.is_head(op) && matches!(self.loc[other], Loc::Surface(_))
            }
            _ => false,
        }
    }

    /// Resident, idle qubit of block `b` with the latest next use, provided
    /// that use comes after `want_use`.
    fn pick_victim(&self, b: usize, t: u64, want_use: usize, allow_active: bool) -> Option<(usize, usize)> {
        self.arch.ldst_groups[b]
            .iter()
            .filter_map(|&s| self.slot_owner[s].map(|q| (q, s)))
            .filter(|&(q, _)| matches!(self.loc[q], Loc::Surface(_)) && self.qubit_busy[q] <= t)
            .filter(|&(q, _)| self.next_use(q) > want_use)
            .filter(|&(q, _)| !self.is_active(q) || allow_active)
            .max_by_key(|&(q, s)| (self.next_use(q), std::cmp::Reverse(s)))
    }

    fn in_flight(&self, t: u64) -> bool {
        self.qubit_busy.iter().any(|&e| e > t) || self.ancilla_busy.iter().any(|&e| e > t)
    }

    fn run(mut self) -> Result<CompiledProgram, CompileError> {
        let total = self.prog.ops.len();
        let mut t = 0u64;
        loop {
            self.retire(t);
            self.run_free(t);
            if self.done == total && !self.in_flight(t) {
                break;
            }
            let (ran, waiting_ld, waiting_t) = self.execute(t);
            let mut moved = self.ldst(t, false);
            if !ran && !moved && !self.in_flight(t) && !waiting_t {
                moved = self.ldst(t, true);
                if !moved {
                    let blocked = (0..total).filter(|&i| !self.started[i] && self.is_head(i)).collect();
                    return Err(CompileError::Deadlock { step: t, blocked });
                }
            }
            let compute = self.qubit_busy.iter().any(|&e| e > t);
            let ldst = self.ancilla_busy.iter().any(|&e| e > t);
            self.steps.push(StepFlags {
                compute,
                ldst,
                waiting_on_ldst: waiting_ld,
            });
            t += 1;
        }
        let n_cycles = t;
        self.steps.truncate(n_cycles as usize);
        let cost = CostReport::default();
        let mut cp = CompiledProgram {
            n_cycles,
            n_ldst: self.n_ldst,
            n_t: self.prog.t_count() as u64,
            timeline: self.timeline,
            steps: self.steps,
            op_start: self.op_start,
            op_end: self.op_end,
            assignment: self.assignment.map(<[usize]>::to_vec),
            tiebreak_stores: self.tiebreak,
            forced_evictions: self.forced,
            arch: self.arch.clone(),
            cost,
        };
        cp.cost = cost_report(&cp, self.arch);
        Ok(cp)
    }
}

/// Rejects configurations in which some CNOT can never find both operands
/// resident at once.
fn liveness_check(prog: &Program, arch: &ArchConfig, assignment: &[usize]) -> Result<(), CompileError> {
    for (i, op) in prog.ops.iter().enumerate() {
        if let Op::Cnot(a, b) = *op {
            if assignment[a] == assignment[b] && arch.ldst_groups[assignment[a]].len() < 2 {
                return Err(CompileError::Infeasible(format!(
                    "op {i} needs two qubits of block {} resident, but its LD/ST ancilla reaches one surface slot",
                    assignment[a]
                )));
            }
        }
    }
    Ok(())
}

/// Greedy compilation onto the memory hierarchy.
pub fn schedule(prog: &Program, assignment: &[usize], arch: &ArchConfig) -> Result<CompiledProgram, CompileError> {
    arch.validate()?;
    prog.validate().map_err(CompileError::Infeasible)?;
    if !arch.is_hierarchical() {
        return Err(CompileError::Infeasible(
            "schedule needs at least one memory block".into(),
        ));
    }
    if assignment.len() != prog.n_qubits || assignment.iter().any(|&b| b >= arch.n_blocks) {
        return Err(CompileError::Infeasible(
            "assignment does not match the program and blocks".into(),
        ));
    }
    for b in 0..arch.n_blocks {
        let used = assignment.iter().filter(|&&x| x == b).count();
        if used > arch.memory_k {
            return Err(CompileError::Capacity {
                n_qubits: prog.n_qubits,
                n_blocks: arch.n_blocks,
                capacity: arch.memory_k,
            });
        }
    }
    liveness_check(prog, arch, assignment)?;
    Machine::new(prog, arch, Some(assignment)).run()
}

/// Maps and schedules. Blocks whose LD/ST ancilla reaches a single
/// surface slot cannot run CNOTs between their own qubits, so the mapper
/// treats such pairs as far more costly there.
pub fn compile(prog: &Program, arch: &ArchConfig) -> Result<CompiledProgram, CompileError> {
    let big = prog.cnot_count() + 1;
    let clash: Vec<usize> = arch
        .ldst_groups
        .iter()
        .map(|g| if g.len() < 2 { big } else { 1 })
        .collect();
    let assignment = map_weighted(prog, arch.n_blocks, arch.memory_k, &clash)?;
    schedule(prog, &assignment, arch)
}

/// The baseline machine for `arch`: one data patch per program qubit,
/// same distance, CNOT mode and factories, no memory.
pub fn baseline_arch(prog: &Program, arch: &ArchConfig) -> ArchConfig {
    ArchConfig {
        n_blocks: 0,
        n_surface: prog.n_qubits.max(1),
        ldst_groups: Vec::new(),
        ..arch.clone()
    }
}

pub fn compile_baseline(prog: &Program, arch: &ArchConfig) -> Result<CompiledProgram, CompileError> {
    prog.validate().map_err(CompileError::Infeasible)?;
    let base = baseline_arch(prog, arch);
    base.validate()?;
    Machine::new(prog, &base, None).run()
}

/// Spacetime volume with the breakdown rule: a step in which no compute
/// operation runs while LD/ST is in flight and some operation waits on it
/// bills the compute space to LD/ST.
pub fn cost_report(cp: &CompiledProgram, arch: &ArchConfig) -> CostReport {
    let fp = footprint(arch);
    let dt = arch.surface_cycle_ms() * 1e-3;
    // Whole qubit-steps first, so identical schedules give identical volumes.
    let steps = cp.steps.len() as u128;
    let billed_to_ldst = cp
        .steps
        .iter()
        .filter(|f| !f.compute && f.ldst && f.waiting_on_ldst)
        .count() as u128;
    let qs = |q: usize, n: u128| (q as u128 * n) as f64 * dt;
    let b = Breakdown {
        memory: qs(fp.memory_qubits, steps),
        ldst: qs(fp.ldst_qubits, steps) + qs(fp.compute_qubits, billed_to_ldst),
        compute: qs(fp.compute_qubits, steps - billed_to_ldst),
        factory: qs(fp.factory_qubits, steps),
    };
    let time = cp.n_cycles as f64 * dt;
    CostReport {
        space_qubits: if cp.n_cycles == 0 { 0 } else { fp.total_qubits },
        time_seconds: time,
        spacetime_qubit_seconds: b.total(),
        breakdown: b,
    }
}

/// Benchmark-class generators.
pub mod fixtures {
    use super::{Op, Program};

    /// `H 0` then a CNOT chain.
    pub fn ghz(n: usize) -> Program {
        let mut p = Program::new(n);
        p.push(Op::H(0));
        for i in 0..n.saturating_sub(1) {
            p.push(Op::Cnot(i, i + 1));
        }
        p
    }

    /// Bernstein-Vazirani with an all-ones secret over `n − 1` inputs.
    pub fn bv(n: usize) -> Program {
        let anc = n - 1;
        let mut p = Program::new(n);
        p.push(Op::X(anc));
        (0..n).for_each(|q| p.push(Op::H(q)));
        (0..anc).for_each(|q| p.push(Op::Cnot(q, anc)));
        (0..anc).for_each(|q| p.push(Op::H(q)));
        p
    }

    /// Clifford+T Toffoli (7 T-type gates, 6 CNOTs); T† is emitted as Z·S·T.
    pub fn toffoli(p: &mut Program, a: usize, b: usize, c: usize) {
        let tdg = |p: &mut Program, q| {
            p.push(Op::Z(q));
            p.push(Op::S(q));
            p.push(Op::T(q));
        };
        p.push(Op::H(c));
        p.push(Op::Cnot(b, c));
        tdg(p, c);
        p.push(Op::Cnot(a, c));
        p.push(Op::T(c));
        p.push(Op::Cnot(b, c));
        tdg(p, c);
        p.push(Op::Cnot(a, c));
        p.push(Op::T(b));
        p.push(Op::T(c));
        p.push(Op::H(c));
        p.push(Op::Cnot(a, b));
        p.push(Op::T(a));
        tdg(p, b);
        p.push(Op::Cnot(a, b));
    }

    /// Ripple-carry adder over two `(n−1)/2`-bit registers and a carry.
    pub fn adder(n: usize) -> Program {
        let bits = (n - 1) / 2;
        let mut p = Program::new(n);
        let a = |i: usize| 1 + 2 * i;
        let b = |i: usize| 2 + 2 * i;
        let mut carry = 0;
        for i in 0..bits {
            // MAJ
            p.push(Op::Cnot(a(i), b(i)));
            p.push(Op::Cnot(a(i), carry));
            toffoli(&mut p, carry, b(i), a(i));
            carry = a(i);
        }
        for i in (0..bits).rev() {
            // UMA
            let c = if i == 0 { 0 } else { a(i - 1) };
            toffoli(&mut p, c, b(i), a(i));
            p.push(Op::Cnot(a(i), c));
            p.push(Op::Cnot(c, b(i)));
        }
        p
    }

    /// Deterministic stand-in for a synthesized rotation: `len` T gates
    /// interleaved with H and S.
    fn rz(p: &mut Program, q: usize, len: usize, salt: usize) {
        for k in 0..len {
            p.push(Op::T(q));
            p.push(if (k * 7 + salt).is_multiple_of(3) {
                Op::S(q)
            } else {
                Op::H(q)
            });
        }
        p.n_rz += 1;
    }

    /// Trotterized transverse-field Ising chain; rotations synthesized to
    /// `rz_len` T gates each.
    pub fn ising(n: usize, steps: usize, rz_len: usize) -> Program {
        let mut p = Program::new(n);
        p.eps_rz = 1e-10;
        for s in 0..steps {
            for parity in 0..2 {
                for i in (parity..n.saturating_sub(1)).step_by(2) {
                    p.push(Op::Cnot(i, i + 1));
                    rz(&mut p, i + 1, rz_len, s + i);
                    p.push(Op::Cnot(i, i + 1));
                }
            }
            for q in 0..n {
                p.push(Op::H(q));
                rz(&mut p, q, rz_len, s + q + 1);
                p.push(Op::H(q));
            }
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    LdstMultiplier,
    TargetFidelity,
    NBlocks,
    NSurface,
    CnotMode,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim() {
            "ldst_multiplier" => Self::LdstMultiplier,
            "target_fidelity" => Self::TargetFidelity,
            "n_blocks" => Self::NBlocks,
            "n_surface" => Self::NSurface,
            "cnot_mode" => Self::CnotMode,
            other => return Err(format!("unknown sweep axis {other:?}")),
        })
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::LdstMultiplier => "ldst_multiplier",
            Self::TargetFidelity => "target_fidelity",
            Self::NBlocks => "n_blocks",
            Self::NSurface => "n_surface",
            Self::CnotMode => "cnot_mode",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub space_qubits: usize,
    pub time_seconds: f64,
    pub spacetime_qubit_seconds: f64,
    pub breakdown: Breakdown,
    pub surface_d: usize,
}

pub const SWEEP_CSV_HEADER: &str =
    "value,space_qubits,time_s,spacetime_qubit_s,memory_qubit_s,ldst_qubit_s,compute_qubit_s,factory_qubit_s,surface_d";

impl SweepRow {
    pub fn csv(&self) -> String {
        let b = &self.breakdown;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.value,
            self.space_qubits,
            self.time_seconds,
            self.spacetime_qubit_seconds,
            b.memory,
            b.ldst,
            b.compute,
            b.factory,
            self.surface_d
        )
    }
}

/// Parses `a..b` (integer steps), `a..b:step`, or a comma list.
/// For `cnot_mode`, 0 is lattice surgery and 1 transversal.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let p = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?}"));
        let (lo, hi, step) = (p(lo)?, p(hi)?, p(step)?);
        if step <= 0.0 || hi < lo {
            return Err(format!("empty range {text:?}"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + i as f64 * step).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?}")))
        .collect()
}

/// Recompiles `prog` at every value of `axis`, in parallel over points.
/// Fidelity targets pick the surface distance with the default memory
/// calibration at physical rate `1e-3`.
pub fn sweep(
    prog: &Program,
    arch: &ArchConfig,
    axis: SweepAxis,
    values: &[f64],
    exec: Execution,
) -> Result<Vec<SweepRow>, CompileError> {
    let rows = exec.map(values, |&v| -> Result<SweepRow, CompileError> {
        let mut a = arch.clone();
        match axis {
            SweepAxis::LdstMultiplier => a.ldst_multiplier = v,
            SweepAxis::NBlocks => {
                a.n_blocks = v as usize;
                a.ldst_groups = crate::arch::default_ldst_groups(a.n_blocks, a.n_surface);
            }
            SweepAxis::NSurface => {
                a.n_surface = v as usize;
                a.ldst_groups = crate::arch::default_ldst_groups(a.n_blocks, a.n_surface);
            }
            SweepAxis::CnotMode => {
                a.cnot_mode = if v == 0.0 {
                    CnotMode::LatticeSurgery
                } else {
                    CnotMode::Transversal
                }
            }
            SweepAxis::TargetFidelity => {
                let first = compile(prog, &a)?;
                let demand = crate::arch::ResourceDemand {
                    n_blocks: a.n_blocks as u64,
                    n_surface: a.n_surface as u64,
                    n_cycles: first.n_cycles,
                    n_ldst: first.n_ldst,
                    n_t: first.n_t,
                    n_rz: prog.n_rz,
                    eps_rz: prog.eps_rz,
                };
                let sel = crate::arch::select_resources(
                    &demand,
                    v,
                    1e-3,
                    &crate::arch::default_memory_calibration(),
                    std::slice::from_ref(&a.factory),
                )?;
                a.surface_d = sel.surface_d;
            }
        }
        let cp = compile(prog, &a)?;
        Ok(SweepRow {
            value: v,
            space_qubits: cp.cost.space_qubits,
            time_seconds: cp.cost.time_seconds,
            spacetime_qubit_seconds: cp.cost.spacetime_qubit_seconds,
            breakdown: cp.cost.breakdown,
            surface_d: a.surface_d,
        })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "qubits 3\nmeta n_rz 2\nmeta eps_rz 1e-9\nh 0\ncnot 0 1\nt 2\n";
        let p = Program::parse(text).unwrap();
        assert_eq!(p.ops, vec![Op::H(0), Op::Cnot(0, 1), Op::T(2)]);
        assert_eq!(p.n_rz, 2);
        assert_eq!(Program::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = Program::parse("qubits 2\ncnot 0 5\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Program::parse("qubits 2\n  frob 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert!(Program::parse("cnot 0 1\n").is_err());
        assert!(Program::parse("qubits 2\ncnot 1 1\n").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..5").unwrap(), vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_range("1..2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("0.9, 0.99").unwrap(), vec![0.9, 0.99]);
        assert_eq!(parse_range("7").unwrap(), vec![7.0]);
    }
}
