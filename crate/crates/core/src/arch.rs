//! Physical resource model of the memory-hierarchy machine and of the
//! surface-code-only baseline: footprints, cycle times, gate costs, program
//! fidelity and T-state supply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{catalog_lookup, high_distance_code, parse_polynomial, PolySpec};
use crate::config::{KvFile, ParseError};

#[derive(Debug, Error, PartialEq)]
pub enum ArchError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid architecture: {0}")]
    Invalid(String),
    #[error("no resources reach fidelity {target}; best achievable is {best}")]
    Infeasible { target: f64, best: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CnotMode {
    #[default]
    LatticeSurgery,
    Transversal,
}

impl std::str::FromStr for CnotMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "lattice-surgery" | "lattice_surgery" | "ls" => Ok(Self::LatticeSurgery),
            "transversal" => Ok(Self::Transversal),
            other => Err(format!("unknown cnot mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorySpec {
    pub name: String,
    pub qubit_cost: usize,
    /// Surface-code logical cycles per produced state.
    pub cycles_per_state: usize,
    pub output_error: f64,
}

impl FactorySpec {
    pub fn validate(&self) -> Result<(), ArchError> {
        if self.qubit_cost == 0 || self.cycles_per_state == 0 || !(self.output_error > 0.0 && self.output_error <= 1.0)
        {
            return Err(ArchError::Invalid(format!(
                "factory {:?} needs positive parameters",
                self.name
            )));
        }
        Ok(())
    }
}

/// Default factory list. The single entry is a placeholder taken from
/// external 15-to-1 distillation literature; override it in the config.
pub fn default_factory_catalog() -> Vec<FactorySpec> {
    vec![FactorySpec {
        name: "15-to-1".into(),
        qubit_cost: 4620,
        cycles_per_state: 6,
        output_error: 4.5e-8,
    }]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeKind {
    Surface,
    Ldst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalOp {
    Clifford1,
    Cnot,
    T,
    Load,
    Store,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCost {
    pub cycles: u32,
    pub code: Option<CodeKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCostTable {
    pub clifford1: GateCost,
    pub cnot: GateCost,
    pub t: GateCost,
    pub load: GateCost,
    pub store: GateCost,
}

impl GateCostTable {
    pub fn new(mode: CnotMode) -> Self {
        let surface = |cycles| GateCost {
            cycles,
            code: Some(CodeKind::Surface),
        };
        let ldst = |cycles| GateCost {
            cycles,
            code: Some(CodeKind::Ldst),
        };
        Self {
            clifford1: GateCost { cycles: 0, code: None },
            cnot: surface(if mode == CnotMode::LatticeSurgery { 2 } else { 1 }),
            t: surface(2),
            load: ldst(2),
            store: ldst(1),
        }
    }

    pub fn cost(&self, op: LogicalOp) -> GateCost {
        match op {
            LogicalOp::Clifford1 => self.clifford1,
            LogicalOp::Cnot => self.cnot,
            LogicalOp::T => self.t,
            LogicalOp::Load => self.load,
            LogicalOp::Store => self.store,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleTimes {
    pub surface_round_ms: f64,
    pub ldst_round_ms: f64,
    pub memory_round_ms: f64,
}

impl Default for CycleTimes {
    fn default() -> Self {
        // Memory round of the [144,12,12] schedule under the default cost model.
        Self {
            surface_round_ms: 1.0,
            ldst_round_ms: 2.5,
            memory_round_ms: 2.398,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub memory_name: String,
    pub memory_spec: PolySpec,
    pub memory_k: usize,
    pub memory_d: usize,
    pub n_blocks: usize,
    pub n_surface: usize,
    pub surface_d: usize,
    /// `ldst_groups[i]` lists the surface slots reachable from block `i`.
    pub ldst_groups: Vec<Vec<usize>>,
    pub cnot_mode: CnotMode,
    pub factory: FactorySpec,
    pub n_factories: usize,
    pub cycle_times: CycleTimes,
    /// Scales the LD/ST round time (sensitivity axis).
    pub ldst_multiplier: f64,
    pub spacing_um: f64,
    pub buffer_factor: f64,
}

/// Splits `n_surface` slots into `n_blocks` contiguous groups whose sizes
/// differ by at most one, larger groups first.
pub fn default_ldst_groups(n_blocks: usize, n_surface: usize) -> Vec<Vec<usize>> {
    if n_blocks == 0 {
        return Vec::new();
    }
    let base = n_surface / n_blocks;
    let extra = n_surface % n_blocks;
    let mut start = 0;
    (0..n_blocks)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let g = (start..start + len).collect();
            start += len;
            g
        })
        .collect()
}

impl ArchConfig {
    /// Hierarchical machine with `n_blocks` blocks of [144,12,12].
    pub fn hierarchical(n_blocks: usize, n_surface: usize, surface_d: usize) -> Self {
        let entry = catalog_lookup("[144,12,12]").expect("catalog entry");
        Self {
            memory_name: entry.name.to_string(),
            memory_spec: entry.spec,
            memory_k: entry.k,
            memory_d: entry.d,
            n_blocks,
            n_surface,
            surface_d,
            ldst_groups: default_ldst_groups(n_blocks, n_surface),
            cnot_mode: CnotMode::LatticeSurgery,
            factory: default_factory_catalog().remove(0),
            n_factories: 1,
            cycle_times: CycleTimes::default(),
            ldst_multiplier: 1.0,
            spacing_um: 5.0,
            buffer_factor: 2.0,
        }
    }

    /// Surface-code-only machine holding `n_surface` data patches.
    pub fn baseline(n_surface: usize, surface_d: usize) -> Self {
        Self {
            n_blocks: 0,
            ldst_groups: Vec::new(),
            ..Self::hierarchical(0, n_surface, surface_d)
        }
    }

    pub fn is_hierarchical(&self) -> bool {
        self.n_blocks > 0
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let bad = |m: String| Err(ArchError::Invalid(m));
        if self.n_surface == 0 {
            return bad("at least one surface slot is required".into());
        }
        if self.surface_d == 0 || self.memory_d == 0 {
            return bad("code distances must be positive".into());
        }
        if !(self.ldst_multiplier > 0.0) || !(self.spacing_um > 0.0) || !(self.buffer_factor > 0.0) {
            return bad("multipliers, spacing and buffer factor must be positive".into());
        }
        if self.ldst_groups.len() != self.n_blocks {
            return bad(format!(
                "{} LD/ST groups for {} blocks",
                self.ldst_groups.len(),
                self.n_blocks
            ));
        }
        for (i, g) in self.ldst_groups.iter().enumerate() {
            if g.is_empty() {
                return bad(format!("LD/ST ancilla {i} serves no surface code"));
            }
            if let Some(s) = g.iter().find(|&&s| s >= self.n_surface) {
                return bad(format!("LD/ST ancilla {i} names slot {s} of {}", self.n_surface));
            }
        }
        if self.n_factories > 0 {
            self.factory.validate()?;
        }
        Ok(())
    }

    pub fn gate_costs(&self) -> GateCostTable {
        GateCostTable::new(self.cnot_mode)
    }

    pub fn surface_cycle_ms(&self) -> f64 {
        self.surface_d as f64 * self.cycle_times.surface_round_ms
    }

    /// LD/ST ancillas share the surface distance.
    pub fn ldst_cycle_ms(&self) -> f64 {
        self.surface_d as f64 * self.cycle_times.ldst_round_ms * self.ldst_multiplier
    }

    pub fn memory_cycle_ms(&self) -> f64 {
        self.memory_d as f64 * self.cycle_times.memory_round_ms
    }

    /// Scheduler steps (surface logical cycles) taken by `op`.
    pub fn op_steps(&self, op: LogicalOp) -> u32 {
        let c = self.gate_costs().cost(op);
        let ms = match c.code {
            None => return 0,
            Some(CodeKind::Surface) => self.surface_cycle_ms(),
            Some(CodeKind::Ldst) => self.ldst_cycle_ms(),
        };
        let steps = c.cycles as f64 * ms / self.surface_cycle_ms();
        // Guard against 2.0000000001 rounding up.
        (steps - 1e-9).ceil().max(0.0) as u32
    }

    pub fn routing_slots(&self) -> usize {
        match self.cnot_mode {
            CnotMode::LatticeSurgery => self.n_surface,
            CnotMode::Transversal => 0,
        }
    }

    /// Parses the sectioned key/value architecture file.
    ///
    /// ```text
    /// [memory]
    /// code = [144,12,12]      # or l, m, a, b, d, k
    /// blocks = 4
    /// [compute]
    /// surface = 4
    /// d = 11
    /// cnot = lattice-surgery
    /// [ldst]
    /// multiplier = 1.0
    /// group.0 = 0 1
    /// [factory]
    /// name = 15-to-1
    /// qubits = 4620
    /// cycles = 6
    /// error = 4.5e-8
    /// count = 1
    /// [timing]
    /// surface_round_ms = 1.0
    /// ldst_round_ms = 2.5
    /// memory_round_ms = 2.398
    /// spacing_um = 5
    /// buffer_factor = 2
    /// ```
    pub fn parse(text: &str) -> Result<Self, ArchError> {
        let kv = KvFile::parse(text)?;
        let mut cfg = Self::hierarchical(0, 1, 11);
        if let Some(e) = kv.get("memory", "code") {
            let entry = catalog_lookup(e.value.trim())
                .or_else(|| (high_distance_code().name == e.value.trim()).then(high_distance_code))
                .ok_or_else(|| e.error(format!("unknown code {:?}", e.value)))?;
            cfg.memory_name = entry.name.to_string();
            cfg.memory_spec = entry.spec;
            cfg.memory_k = entry.k;
            cfg.memory_d = entry.d;
        } else if let Some(l) = kv.get("memory", "l") {
            let poly = |key: &str| -> Result<_, ArchError> {
                let e = kv.require("memory", key)?;
                parse_polynomial(&e.value).map_err(|(c, m)| ArchError::Parse(ParseError::new(e.line, e.column + c, m)))
            };
            let spec = PolySpec::new(l.parse()?, kv.require("memory", "m")?.parse()?, poly("a")?, poly("b")?)
                .map_err(|e| ArchError::Invalid(e.to_string()))?;
            cfg.memory_spec = spec;
            cfg.memory_k = kv.require("memory", "k")?.parse()?;
            cfg.memory_d = kv.require("memory", "d")?.parse()?;
            cfg.memory_name = kv
                .get("memory", "name")
                .map(|e| e.value.clone())
                .unwrap_or_else(|| "custom".into());
        }
        if let Some(e) = kv.get("memory", "blocks") {
            cfg.n_blocks = e.parse()?;
        }
        if let Some(e) = kv.get("compute", "surface") {
            cfg.n_surface = e.parse()?;
        }
        if let Some(e) = kv.get("compute", "d") {
            cfg.surface_d = e.parse()?;
        }
        if let Some(e) = kv.get("compute", "cnot") {
            cfg.cnot_mode = e.value.parse().map_err(|m: String| e.error(m))?;
        }
        if let Some(e) = kv.get("ldst", "multiplier") {
            cfg.ldst_multiplier = e.parse()?;
        }
        cfg.ldst_groups = default_ldst_groups(cfg.n_blocks, cfg.n_surface);
        for i in 0..cfg.n_blocks {
            if let Some(e) = kv.get("ldst", &format!("group.{i}")) {
                cfg.ldst_groups[i] = e
                    .value
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| e.error(format!("bad slot {t:?}"))))
                    .collect::<Result<_, _>>()?;
            }
        }
        if let Some(e) = kv.get("factory", "name") {
            cfg.factory.name = e.value.clone();
        }
        if let Some(e) = kv.get("factory", "qubits") {
            cfg.factory.qubit_cost = e.parse()?;
        }
        if let Some(e) = kv.get("factory", "cycles") {
            cfg.factory.cycles_per_state = e.parse()?;
        }
        if let Some(e) = kv.get("factory", "error") {
            cfg.factory.output_error = e.parse()?;
        }
        if let Some(e) = kv.get("factory", "count") {
            cfg.n_factories = e.parse()?;
        }
        for (key, slot) in [
            ("surface_round_ms", &mut cfg.cycle_times.surface_round_ms),
            ("ldst_round_ms", &mut cfg.cycle_times.ldst_round_ms),
            ("memory_round_ms", &mut cfg.cycle_times.memory_round_ms),
        ] {
            if let Some(e) = kv.get("timing", key) {
                *slot = e.parse()?;
            }
        }
        if let Some(e) = kv.get("timing", "spacing_um") {
            cfg.spacing_um = e.parse()?;
        }
        if let Some(e) = kv.get("timing", "buffer_factor") {
            cfg.buffer_factor = e.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub memory_mm2: f64,
    pub compute_mm2: f64,
    pub ldst_mm2: f64,
    pub factory_mm2: f64,
    pub total_mm2: f64,
    pub memory_qubits: usize,
    pub compute_qubits: usize,
    pub ldst_qubits: usize,
    pub factory_qubits: usize,
    pub total_qubits: usize,
}

pub fn surface_patch_qubits(d: usize) -> usize {
    2 * d * d
}

/// `(2d)²` sites at the given spacing, in mm².
pub fn surface_patch_mm2(d: usize, spacing_um: f64) -> f64 {
    let side = 2.0 * d as f64 * spacing_um;
    side * side * 1e-6
}

/// `2m × 2l` sites scaled by the buffer factor, in mm².
pub fn memory_block_mm2(spec: &PolySpec, spacing_um: f64, buffer_factor: f64) -> f64 {
    let rows = 2.0 * spec.m as f64 * spacing_um;
    let cols = 2.0 * spec.l as f64 * spacing_um;
    rows * cols * buffer_factor * 1e-6
}

pub fn footprint(cfg: &ArchConfig) -> Footprint {
    let patch_q = surface_patch_qubits(cfg.surface_d);
    let patch_a = surface_patch_mm2(cfg.surface_d, cfg.spacing_um);
    let patches = cfg.n_surface + cfg.routing_slots();
    let memory_qubits = cfg.n_blocks * 2 * cfg.memory_spec.n();
    let compute_qubits = patches * patch_q;
    let ldst_qubits = cfg.n_blocks * patch_q;
    let factory_qubits = cfg.n_factories * cfg.factory.qubit_cost;
    let site_mm2 = cfg.spacing_um * cfg.spacing_um * 1e-6;
    let memory_mm2 = cfg.n_blocks as f64 * memory_block_mm2(&cfg.memory_spec, cfg.spacing_um, cfg.buffer_factor);
    let compute_mm2 = patches as f64 * patch_a;
    let ldst_mm2 = cfg.n_blocks as f64 * patch_a;
    // A surface patch holds 2d² qubits on (2d)² sites: two sites per qubit.
    let factory_mm2 = 2.0 * factory_qubits as f64 * site_mm2;
    Footprint {
        memory_mm2,
        compute_mm2,
        ldst_mm2,
        factory_mm2,
        total_mm2: memory_mm2 + compute_mm2 + ldst_mm2 + factory_mm2,
        memory_qubits,
        compute_qubits,
        ldst_qubits,
        factory_qubits,
        total_qubits: memory_qubits + compute_qubits + ldst_qubits + factory_qubits,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityModel {
    pub eps_mem: f64,
    pub eps_ldst: f64,
    pub eps_surface: f64,
    pub eps_rz: f64,
    pub eps_t: f64,
    pub n_blocks: u64,
    pub n_ldst: u64,
    pub n_surface: u64,
    pub n_cycles: u64,
    pub n_rz: u64,
    pub n_t: u64,
}

/// Product of per-component survival probabilities.
pub fn program_fidelity(fm: &FidelityModel) -> f64 {
    let term = |eps: f64, count: f64| if count == 0.0 { 0.0 } else { count * (-eps).ln_1p() };
    let log = term(fm.eps_mem, (fm.n_blocks * fm.n_cycles) as f64)
        + term(fm.eps_ldst, (fm.n_blocks * fm.n_ldst) as f64)
        + term(fm.eps_surface, (fm.n_surface * fm.n_cycles) as f64)
        + term(fm.eps_rz, fm.n_rz as f64)
        + term(fm.eps_t, fm.n_t as f64);
    log.exp()
}

/// Per-cycle logical error of a distance-`d` surface code at physical
/// rate `p`, using the usual `0.1·(p/p_th)^((d+1)/2)` fit with `p_th = 1%`.
pub fn surface_logical_error(d: usize, p: f64) -> f64 {
    (0.1 * (p / 1e-2).powf((d as f64 + 1.0) / 2.0)).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryCalibration {
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub eps_per_cycle: f64,
}

/// Default calibration: only the conservative fixed entry for the
/// high-distance code. Simulated entries are appended by the caller.
pub fn default_memory_calibration() -> Vec<MemoryCalibration> {
    let hd = high_distance_code();
    vec![MemoryCalibration {
        name: hd.name.into(),
        d: hd.d,
        n: hd.spec.n(),
        eps_per_cycle: 1e-9,
    }]
}

/// Counts that drive the fidelity estimate, taken from a compiled program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceDemand {
    pub n_blocks: u64,
    pub n_surface: u64,
    pub n_cycles: u64,
    pub n_ldst: u64,
    pub n_t: u64,
    pub n_rz: u64,
    pub eps_rz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceSelection {
    pub surface_d: usize,
    pub memory: Option<MemoryCalibration>,
    pub factory: FactorySpec,
    pub fidelity: f64,
}

pub const MAX_SURFACE_D: usize = 51;

/// Smallest surface distance, then smallest memory code (by distance and
/// size), then cheapest factory, reaching `target`. Physical rate `p` feeds
/// the surface and LD/ST error fit.
pub fn select_resources(
    demand: &ResourceDemand,
    target: f64,
    p: f64,
    memory: &[MemoryCalibration],
    factories: &[FactorySpec],
) -> Result<ResourceSelection, ArchError> {
    let mut mems: Vec<Option<&MemoryCalibration>> = if demand.n_blocks == 0 {
        vec![None]
    } else {
        let mut v: Vec<&MemoryCalibration> = memory.iter().collect();
        v.sort_by(|a, b| (a.d, a.n, &a.name).cmp(&(b.d, b.n, &b.name)));
        v.into_iter().map(Some).collect()
    };
    if mems.is_empty() {
        return Err(ArchError::Invalid("no memory calibration entries".into()));
    }
    let mut facs: Vec<&FactorySpec> = factories.iter().collect();
    facs.sort_by(|a, b| (a.qubit_cost, &a.name).cmp(&(b.qubit_cost, &b.name)));
    if facs.is_empty() {
        return Err(ArchError::Invalid("no factories".into()));
    }
    let mut best = 0.0f64;
    for d in (3..=MAX_SURFACE_D).step_by(2) {
        let eps_s = surface_logical_error(d, p);
        for mem in mems.iter_mut() {
            for fac in &facs {
                let fm = FidelityModel {
                    eps_mem: mem.map_or(0.0, |m| m.eps_per_cycle),
                    eps_ldst: eps_s,
                    eps_surface: eps_s,
                    eps_rz: demand.eps_rz,
                    eps_t: fac.output_error,
                    n_blocks: demand.n_blocks,
                    n_ldst: demand.n_ldst,
                    n_surface: demand.n_surface,
                    n_cycles: demand.n_cycles,
                    n_rz: demand.n_rz,
                    n_t: demand.n_t,
                };
                let f = program_fidelity(&fm);
                best = best.max(f);
                if f >= target {
                    return Ok(ResourceSelection {
                        surface_d: d,
                        memory: mem.cloned(),
                        factory: (*fac).clone(),
                        fidelity: f,
                    });
                }
            }
        }
    }
    Err(ArchError::Infeasible { target, best })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SupplyReport {
    /// Stall in cycles suffered by each T gate, in demand order.
    pub stalls: Vec<u64>,
    pub total_stall: u64,
}

/// Simulates one factory feeding an unbounded queue. `demand[t]` T gates
/// are requested at nominal cycle `t`; a request that finds the queue empty
/// delays it and every later request until the next state arrives. States
/// complete at cycles `cps, 2·cps, ...` on top of `initial` stocked ones.
pub fn t_supply(factory: &FactorySpec, demand: &[u32], initial: u64) -> SupplyReport {
    let cps = factory.cycles_per_state as u64;
    let mut delay = 0u64;
    let mut used = 0u64;
    let mut stalls = Vec::new();
    for (t, &count) in demand.iter().enumerate() {
        for _ in 0..count {
            let now = t as u64 + delay;
            // States available by `now`: initial stock plus completed ones.
            let ready_at = if used < initial { 0 } else { (used - initial + 1) * cps };
            let stall = ready_at.saturating_sub(now);
            delay += stall;
            used += 1;
            stalls.push(stall);
        }
    }
    SupplyReport {
        total_stall: stalls.iter().sum(),
        stalls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_table_matches_modes() {
        let ls = GateCostTable::new(CnotMode::LatticeSurgery);
        assert_eq!(
            (
                ls.cnot.cycles,
                ls.t.cycles,
                ls.load.cycles,
                ls.store.cycles,
                ls.clifford1.cycles
            ),
            (2, 2, 2, 1, 0)
        );
        assert_eq!(GateCostTable::new(CnotMode::Transversal).cnot.cycles, 1);
    }

    #[test]
    fn step_conversion() {
        let cfg = ArchConfig::hierarchical(4, 4, 11);
        assert_eq!(cfg.op_steps(LogicalOp::Load), 5);
        assert_eq!(cfg.op_steps(LogicalOp::Store), 3);
        assert_eq!(cfg.op_steps(LogicalOp::Cnot), 2);
        assert_eq!(cfg.op_steps(LogicalOp::T), 2);
        assert_eq!(cfg.op_steps(LogicalOp::Clifford1), 0);
    }

    #[test]
    fn default_groups_follow_pattern() {
        assert_eq!(
            default_ldst_groups(4, 7),
            vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6]]
        );
        assert_eq!(default_ldst_groups(2, 2), vec![vec![0], vec![1]]);
    }

    #[test]
    fn trivial_footprint() {
        let mut cfg = ArchConfig::baseline(1, 3);
        cfg.cnot_mode = CnotMode::Transversal;
        cfg.n_factories = 0;
        let f = footprint(&cfg);
        assert!((f.total_mm2 - 900e-6).abs() < 1e-15);
        assert_eq!(f.total_qubits, 18);
    }

    #[test]
    fn supply_examples() {
        let fac = FactorySpec {
            name: "f".into(),
            qubit_cost: 1,
            cycles_per_state: 2,
            output_error: 1e-6,
        };
        assert_eq!(t_supply(&fac, &[0, 0, 0], 0).total_stall, 0);
        let r = t_supply(&fac, &[1; 6], 0);
        assert_eq!(r.stalls, vec![2, 1, 1, 1, 1, 1]);
        let r = t_supply(&fac, &[0, 0, 0, 0, 0, 0, 2], 0);
        assert_eq!(r.total_stall, 0);
    }
}
