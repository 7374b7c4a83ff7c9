//! Generalized-bicycle CSS codes and the rotated surface code.
//!
//! A generalized-bicycle code is given by cycle lengths `l`, `m` and two
//! polynomials `a`, `b` over commuting variables `x`, `y`, where the monomial
//! `x^p y^q` stands for the permutation `S_l^p ⊗ S_m^q`. With `A = a(x, y)`
//! and `B = b(x, y)` the check matrices are `Gx = (A | B)` and
//! `Gz = (Bᵀ | Aᵀ)`.
//!
//! Qubit indices: columns `0..lm` are the A-block data qubits, `lm..2lm` the
//! B-block. Within a block, index `i = col * m + row` for a monomial grid of
//! `m` rows and `l` columns.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{KvFile, ParseError};
use crate::exec::Execution;
use crate::gf2::{BitMatrix, BitVec, XorBasis};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid code specification: {0}")]
    InvalidSpec(String),
    #[error("exponent {exponent} out of range for cycle length {cycle}")]
    ExponentOutOfRange { exponent: usize, cycle: usize },
    #[error("CSS commutation check failed: Gx·Gzᵀ has {0} nonzero entries")]
    CommutationFailure(usize),
    #[error("logical operator extraction failed: {0}")]
    Logicals(String),
    #[error("surface code distance must be odd and at least 3, got {0}")]
    SurfaceDistance(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Monomial `x^p y^q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolyTerm {
    pub p: usize,
    pub q: usize,
}

impl PolyTerm {
    pub const ONE: PolyTerm = PolyTerm { p: 0, q: 0 };

    pub fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    pub fn is_mixed(&self) -> bool {
        self.p > 0 && self.q > 0
    }

    /// Number of distinct check-to-data offsets this term produces on a
    /// periodic grid: 1 for the constant term, 2 for pure powers, 4 for mixed.
    pub fn offset_variants(&self) -> usize {
        match (self.p > 0, self.q > 0) {
            (false, false) => 1,
            (true, true) => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for PolyTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pow = |v: &str, e: usize| if e == 1 { v.to_string() } else { format!("{v}^{e}") };
        match (self.p, self.q) {
            (0, 0) => write!(f, "1"),
            (p, 0) => write!(f, "{}", pow("x", p)),
            (0, q) => write!(f, "{}", pow("y", q)),
            (p, q) => write!(f, "{}*{}", pow("x", p), pow("y", q)),
        }
    }
}

/// Parameters `(l, m, a, b)` of a generalized-bicycle code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolySpec {
    pub l: usize,
    pub m: usize,
    pub a: Vec<PolyTerm>,
    pub b: Vec<PolyTerm>,
}

impl PolySpec {
    pub fn new(l: usize, m: usize, a: Vec<PolyTerm>, b: Vec<PolyTerm>) -> Result<Self, CodeError> {
        let spec = Self { l, m, a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        if self.l == 0 || self.m == 0 {
            return Err(CodeError::InvalidSpec("l and m must be at least 1".into()));
        }
        for (name, poly) in [("a", &self.a), ("b", &self.b)] {
            if poly.is_empty() {
                return Err(CodeError::InvalidSpec(format!("polynomial {name} is empty")));
            }
            let mut seen = BTreeSet::new();
            for t in poly {
                if t.p >= self.l {
                    return Err(CodeError::ExponentOutOfRange {
                        exponent: t.p,
                        cycle: self.l,
                    });
                }
                if t.q >= self.m {
                    return Err(CodeError::ExponentOutOfRange {
                        exponent: t.q,
                        cycle: self.m,
                    });
                }
                if !seen.insert(*t) {
                    return Err(CodeError::InvalidSpec(format!("repeated term {t} in {name}")));
                }
            }
        }
        Ok(())
    }

    /// Number of checks of each type (`l·m`).
    pub fn block_size(&self) -> usize {
        self.l * self.m
    }

    pub fn n(&self) -> usize {
        2 * self.block_size()
    }

    pub fn check_weight(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn has_mixed_terms(&self) -> bool {
        self.a.iter().chain(&self.b).any(PolyTerm::is_mixed)
    }

    /// Label matching the "# Steps/Op" convention: `"2"` or `"2 or 4"`.
    pub fn steps_per_op_label(&self) -> String {
        let mut counts: BTreeSet<usize> = self
            .a
            .iter()
            .chain(&self.b)
            .map(|t| t.offset_variants().max(2))
            .collect();
        if counts.is_empty() {
            counts.insert(2);
        }
        counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" or ")
    }

    pub fn parse(text: &str) -> Result<(Self, Option<usize>, Option<String>), CodeError> {
        let kv = KvFile::parse(text)?;
        let section = if kv.get("", "l").is_some() { "" } else { "memory" };
        let l: usize = kv.require(section, "l")?.parse()?;
        let m: usize = kv.require(section, "m")?.parse()?;
        let a_entry = kv.require(section, "a")?;
        let b_entry = kv.require(section, "b")?;
        let a = parse_polynomial(&a_entry.value)
            .map_err(|(col, msg)| ParseError::new(a_entry.line, a_entry.column + col, msg))?;
        let b = parse_polynomial(&b_entry.value)
            .map_err(|(col, msg)| ParseError::new(b_entry.line, b_entry.column + col, msg))?;
        let d = kv.get(section, "d").map(|e| e.parse::<usize>()).transpose()?;
        let name = kv.get(section, "name").map(|e| e.value.clone());
        let spec = PolySpec::new(l, m, a, b)?;
        Ok((spec, d, name))
    }

    pub fn to_spec_text(&self) -> String {
        format!(
            "l = {}\nm = {}\na = {}\nb = {}\n",
            self.l,
            self.m,
            format_polynomial(&self.a),
            format_polynomial(&self.b)
        )
    }
}

pub fn format_polynomial(terms: &[PolyTerm]) -> String {
    terms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" + ")
}

/// Parses `y + y^2 + x^3`, `1 + x*y`, `x^9y^2`. Errors carry a 0-based
/// column offset into `text`.
pub fn parse_polynomial(text: &str) -> Result<Vec<PolyTerm>, (usize, String)> {
    let mut terms = Vec::new();
    let mut offset = 0;
    for piece in text.split('+') {
        let lead = piece.len() - piece.trim_start().len();
        let term_text = piece.trim();
        if term_text.is_empty() {
            return Err((offset + lead, "empty term".into()));
        }
        terms.push(parse_term(term_text).map_err(|(c, m)| (offset + lead + c, m))?);
        offset += piece.len() + 1;
    }
    Ok(terms)
}

fn parse_term(text: &str) -> Result<PolyTerm, (usize, String)> {
    if text == "1" {
        return Ok(PolyTerm::ONE);
    }
    let bytes = text.as_bytes();
    let mut i = 0;
    let (mut p, mut q) = (None::<usize>, None::<usize>);
    while i < bytes.len() {
        let var = bytes[i];
        if var == b'*' && i > 0 {
            i += 1;
            continue;
        }
        if var != b'x' && var != b'y' {
            return Err((i, format!("unexpected `{}` in term `{text}`", var as char)));
        }
        let var_col = i;
        i += 1;
        let mut exp = 1usize;
        if i < bytes.len() && bytes[i] == b'^' {
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err((start, "expected exponent after `^`".into()));
            }
            exp = text[start..i]
                .parse()
                .map_err(|_| (start, "exponent too large".to_string()))?;
        }
        let slot = if var == b'x' { &mut p } else { &mut q };
        if slot.is_some() {
            return Err((var_col, format!("variable `{}` repeated in term `{text}`", var as char)));
        }
        *slot = Some(exp);
    }
    Ok(PolyTerm {
        p: p.unwrap_or(0),
        q: q.unwrap_or(0),
    })
}

impl FromStr for PolySpec {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s).map(|(spec, _, _)| spec)
    }
}

/// `l × l` cyclic shift raised to the power `p`: entry `(i, (i + p) mod l)`.
pub fn cyclic_power(l: usize, p: usize) -> Result<BitMatrix, CodeError> {
    if p >= l {
        return Err(CodeError::ExponentOutOfRange { exponent: p, cycle: l });
    }
    let mut s = BitMatrix::zeros(l, l);
    for i in 0..l {
        s.set(i, (i + p) % l, true);
    }
    Ok(s)
}

/// Matrix of a polynomial: `Σ S_l^p ⊗ S_m^q`.
pub fn polynomial_matrix(l: usize, m: usize, terms: &[PolyTerm]) -> Result<BitMatrix, CodeError> {
    let mut acc = BitMatrix::zeros(l * m, l * m);
    for t in terms {
        let term = cyclic_power(l, t.p)?.kron(&cyclic_power(m, t.q)?);
        acc = acc.add(&term);
    }
    Ok(acc)
}

/// A CSS code with canonical logical bases.
///
/// `logicals_x` rows are X-type logical operators (in ker Gz, outside
/// rowspace Gx); `logicals_z` likewise with roles swapped. The bases are
/// paired: `logicals_x · logicals_zᵀ = I`.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d_claimed: Option<usize>,
    pub gx: BitMatrix,
    pub gz: BitMatrix,
    pub logicals_x: BitMatrix,
    pub logicals_z: BitMatrix,
    pub spec: Option<PolySpec>,
}

impl CssCode {
    /// Builds a CSS code from its check matrices and derives k and logicals.
    pub fn from_checks(name: impl Into<String>, gx: BitMatrix, gz: BitMatrix) -> Result<Self, CodeError> {
        if gx.cols() != gz.cols() {
            return Err(CodeError::InvalidSpec("Gx and Gz have different column counts".into()));
        }
        let n = gx.cols();
        let comm = gx.mul(&gz.transpose()).expect("dimensions checked");
        if !comm.is_zero() {
            return Err(CodeError::CommutationFailure(comm.count_ones()));
        }
        let k = n - gx.rank() - gz.rank();
        let lx_raw = gz
            .nullspace()
            .quotient_basis(&gx)
            .map_err(|e| CodeError::Logicals(e.to_string()))?;
        let lz_raw = gx
            .nullspace()
            .quotient_basis(&gz)
            .map_err(|e| CodeError::Logicals(e.to_string()))?;
        if lx_raw.rows() != k || lz_raw.rows() != k {
            return Err(CodeError::Logicals(format!(
                "expected {k} logicals, found {} X and {} Z",
                lx_raw.rows(),
                lz_raw.rows()
            )));
        }
        let (logicals_x, logicals_z) = pair_logicals(&lx_raw, &lz_raw)?;
        Ok(Self {
            name: name.into(),
            n,
            k,
            d_claimed: None,
            gx,
            gz,
            logicals_x,
            logicals_z,
            spec: None,
        })
    }

    pub fn with_claimed_distance(mut self, d: Option<usize>) -> Self {
        self.d_claimed = d;
        self
    }

    pub fn num_x_checks(&self) -> usize {
        self.gx.rows()
    }

    pub fn num_z_checks(&self) -> usize {
        self.gz.rows()
    }
}

/// Row-reduces the X logicals and re-expresses the Z logicals so that the
/// symplectic product matrix is the identity.
fn pair_logicals(lx: &BitMatrix, lz: &BitMatrix) -> Result<(BitMatrix, BitMatrix), CodeError> {
    let k = lx.rows();
    if k == 0 {
        return Ok((lx.clone(), lz.clone()));
    }
    let (lx_red, _) = lx.rref();
    let lx_red = lx_red.select_rows(&(0..k).collect::<Vec<_>>());
    let product = lx_red.mul(&lz.transpose()).expect("same width");
    let inv = product
        .inverse()
        .ok_or_else(|| CodeError::Logicals("symplectic product matrix is singular".into()))?;
    let lz_paired = inv.transpose().mul(lz).expect("k×k times k×n");
    Ok((lx_red, lz_paired))
}

/// Constructs the generalized-bicycle code `Gx = (A|B)`, `Gz = (Bᵀ|Aᵀ)`.
pub fn build_code(spec: &PolySpec) -> Result<CssCode, CodeError> {
    spec.validate()?;
    let a = polynomial_matrix(spec.l, spec.m, &spec.a)?;
    let b = polynomial_matrix(spec.l, spec.m, &spec.b)?;
    let gx = a.hstack(&b);
    let gz = b.transpose().hstack(&a.transpose());
    let name = format!(
        "GB(l={}, m={}, a={}, b={})",
        spec.l,
        spec.m,
        format_polynomial(&spec.a),
        format_polynomial(&spec.b)
    );
    let mut code = CssCode::from_checks(name, gx, gz)?;
    code.spec = Some(spec.clone());
    Ok(code)
}

/// Rotated surface code on a `d × d` data patch (`n = d²`, `k = 1`).
///
/// Data qubit `(r, c)` has index `r·d + c`. Plaquette `(i, j)` with
/// `0 ≤ i, j ≤ d` covers the data qubits at `(i-1..=i, j-1..=j)`; it is
/// X-type when `i + j` is even. Weight-2 X plaquettes sit on the top and
/// bottom edges, weight-2 Z plaquettes on the left and right edges.
pub fn build_surface_code(d: usize) -> Result<CssCode, CodeError> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(CodeError::SurfaceDistance(d));
    }
    let mut x_rows = Vec::new();
    let mut z_rows = Vec::new();
    for i in 0..=d {
        for j in 0..=d {
            let support: Vec<usize> = [
                (i as isize - 1, j as isize - 1),
                (i as isize - 1, j as isize),
                (i as isize, j as isize - 1),
                (i as isize, j as isize),
            ]
            .iter()
            .filter(|(r, c)| *r >= 0 && *c >= 0 && (*r as usize) < d && (*c as usize) < d)
            .map(|(r, c)| *r as usize * d + *c as usize)
            .collect();
            let is_x = (i + j) % 2 == 0;
            let interior = (1..d).contains(&i) && (1..d).contains(&j);
            let top_bottom = (i == 0 || i == d) && (1..d).contains(&j);
            let left_right = (j == 0 || j == d) && (1..d).contains(&i);
            if interior || (top_bottom && is_x) || (left_right && !is_x) {
                if is_x {
                    x_rows.push(support);
                } else {
                    z_rows.push(support);
                }
            }
        }
    }
    let n = d * d;
    let code = CssCode::from_checks(
        format!("rotated surface code d={d}"),
        BitMatrix::from_row_ones(n, &x_rows),
        BitMatrix::from_row_ones(n, &z_rows),
    )?;
    Ok(code.with_claimed_distance(Some(d)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Z,
}

/// Result of a distance search.
#[derive(Clone, Debug)]
pub struct DistanceEstimate {
    /// Lightest nontrivial logical found; `None` when the code has no logicals.
    pub bound: Option<usize>,
    /// True when the search enumerated every codeword.
    pub exact: bool,
    pub x_bound: Option<usize>,
    pub z_bound: Option<usize>,
    /// Set when a logical lighter than the claimed distance was found.
    pub below_claimed: bool,
    pub witness: Option<(PauliKind, BitVec)>,
}

impl DistanceEstimate {
    pub fn no_logicals(&self) -> bool {
        self.bound.is_none()
    }
}

/// Largest code length for which the distance is computed exhaustively.
pub const EXHAUSTIVE_DISTANCE_MAX_N: usize = 30;

/// Searches for low-weight logical operators.
///
/// For `n ≤ 30` every element of `ker(Gz)` (resp. `ker(Gx)`) is enumerated and
/// the result is exact. Otherwise `trials` random information sets are tried:
/// the kernel basis is row-reduced under a random column order and each basis
/// row and each pairwise sum is tested. The result is then an upper bound.
pub fn estimate_distance(code: &CssCode, trials: usize, seed: u64, exec: Execution) -> DistanceEstimate {
    if code.k == 0 {
        return DistanceEstimate {
            bound: None,
            exact: true,
            x_bound: None,
            z_bound: None,
            below_claimed: false,
            witness: None,
        };
    }
    let exact = code.n <= EXHAUSTIVE_DISTANCE_MAX_N;
    let search = |kernel_of: &BitMatrix, stabilizers: &BitMatrix, salt: u64| {
        let kernel = kernel_of.nullspace();
        let stab = XorBasis::from_matrix(stabilizers);
        if exact {
            exhaustive_min_logical(&kernel, &stab)
        } else {
            random_min_logical(&kernel, &stab, trials, seed ^ salt, exec)
        }
    };
    let x = search(&code.gz, &code.gx, 0x5851_f42d_4c95_7f2d);
    let z = search(&code.gx, &code.gz, 0x1405_7b7e_f767_814f);
    let x_bound = x.as_ref().map(|v| v.weight());
    let z_bound = z.as_ref().map(|v| v.weight());
    let (bound, witness) = match (x, z) {
        (Some(a), Some(b)) if b.weight() < a.weight() => (Some(b.weight()), Some((PauliKind::Z, b))),
        (Some(a), _) => (Some(a.weight()), Some((PauliKind::X, a))),
        (None, Some(b)) => (Some(b.weight()), Some((PauliKind::Z, b))),
        (None, None) => (None, None),
    };
    let below_claimed = matches!((bound, code.d_claimed), (Some(b), Some(d)) if b < d);
    DistanceEstimate {
        bound,
        exact,
        x_bound,
        z_bound,
        below_claimed,
        witness,
    }
}

fn exhaustive_min_logical(kernel: &BitMatrix, stab: &XorBasis) -> Option<BitVec> {
    let dim = kernel.rows();
    assert!(dim < 40, "exhaustive search over 2^{dim} codewords");
    let cols = kernel.cols();
    let mut current = BitVec::zeros(cols);
    let mut best: Option<BitVec> = None;
    // Gray-code walk over all nonzero combinations.
    for i in 1u64..(1u64 << dim) {
        let flip = i.trailing_zeros() as usize;
        current.xor_assign(&kernel.row_vec(flip));
        let w = current.weight();
        if best.as_ref().is_some_and(|b| b.weight() <= w) {
            continue;
        }
        if !stab.contains(current.words()) {
            best = Some(current.clone());
        }
    }
    best
}

fn random_min_logical(
    kernel: &BitMatrix,
    stab: &XorBasis,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Option<BitVec> {
    let cols = kernel.cols();
    let per_trial = |t: usize| -> Option<BitVec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut order: Vec<usize> = (0..cols).collect();
        order.shuffle(&mut rng);
        let (reduced, _) = kernel.select_cols(&order).rref();
        let mut inverse = vec![0; cols];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let rows: Vec<BitVec> = (0..reduced.rows())
            .map(|r| {
                let v = reduced.row_vec(r);
                BitVec::from_ones(cols, v.ones().map(|i| order[i]))
            })
            .collect();
        let mut best: Option<BitVec> = None;
        let mut consider = |v: BitVec| {
            let w = v.weight();
            if w == 0 || best.as_ref().is_some_and(|b| b.weight() <= w) {
                return;
            }
            if !stab.contains(v.words()) {
                best = Some(v);
            }
        };
        for i in 0..rows.len() {
            consider(rows[i].clone());
            for j in i + 1..rows.len() {
                let mut s = rows[i].clone();
                s.xor_assign(&rows[j]);
                consider(s);
            }
        }
        best
    };
    exec.map_range(trials.max(1), per_trial)
        .into_iter()
        .flatten()
        .min_by_key(|v| v.weight())
}

/// A named code together with published reference figures.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: PolySpec,
    pub k: usize,
    pub d: usize,
    /// Reference movement-only round time, where one exists.
    pub reference_round_ms: Option<f64>,
    /// Reference logical-cycle time, where one exists.
    pub reference_cycle_ms: Option<f64>,
}

fn entry(
    name: &'static str,
    (l, m): (usize, usize),
    (a, b): (&str, &str),
    (k, d): (usize, usize),
    round: Option<f64>,
    cycle: Option<f64>,
) -> CatalogEntry {
    let a = parse_polynomial(a).expect("catalog polynomial");
    let b = parse_polynomial(b).expect("catalog polynomial");
    CatalogEntry {
        name,
        spec: PolySpec::new(l, m, a, b).expect("catalog spec"),
        k,
        d,
        reference_round_ms: round,
        reference_cycle_ms: cycle,
    }
}

/// The six simulated generalized-bicycle codes, in table order.
pub fn simulated_codes() -> Vec<CatalogEntry> {
    vec![
        entry(
            "[72,12,6]",
            (6, 6),
            ("y + y^2 + x^3", "y^3 + x + x^2"),
            (12, 6),
            Some(2.13),
            Some(14.7),
        ),
        entry(
            "[90,8,10]",
            (15, 3),
            ("y + y^2 + x^9", "1 + x^2 + x^7"),
            (8, 10),
            Some(2.57),
            Some(29.1),
        ),
        entry(
            "[144,12,12]",
            (12, 6),
            ("y + y^2 + x^3", "y^3 + x + x^2"),
            (12, 12),
            Some(2.31),
            Some(31.8),
        ),
        entry(
            "[128,16,8]",
            (8, 8),
            ("y + y^2 + y^5 + x^6", "y^2 + x^2 + x^3 + x^7"),
            (16, 8),
            Some(3.18),
            Some(25.44),
        ),
        entry(
            "[72,8,10]",
            (36, 1),
            ("1 + x^9 + x^28 + x^31", "1 + x + x^21 + x^34"),
            (8, 10),
            Some(4.16),
            Some(41.6),
        ),
        entry(
            "[96,10,12]",
            (12, 4),
            ("1 + y + x*y + x^9", "1 + x^2 + x^7 + x^9*y^2"),
            (10, 12),
            Some(3.25),
            Some(39.0),
        ),
    ]
}

/// The distance-18 memory code used when a program needs a lower memory
/// error rate than the simulated codes provide.
pub fn high_distance_code() -> CatalogEntry {
    entry(
        "[288,12,18]",
        (12, 12),
        ("x^3 + y^2 + y^7", "y^3 + x + x^2"),
        (12, 18),
        None,
        None,
    )
}

/// Small code with exhaustively computable distance.
pub fn toy_code() -> PolySpec {
    PolySpec::new(
        3,
        3,
        parse_polynomial("1 + x + y").expect("toy"),
        parse_polynomial("1 + x^2 + y^2").expect("toy"),
    )
    .expect("toy")
}

/// Looks up a catalog code by its `[n,k,d]` label.
pub fn catalog_lookup(name: &str) -> Option<CatalogEntry> {
    let wanted: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    simulated_codes()
        .into_iter()
        .chain(std::iter::once(high_distance_code()))
        .find(|e| e.name == wanted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: usize, m: usize, a: &str, b: &str) -> PolySpec {
        PolySpec::new(l, m, parse_polynomial(a).unwrap(), parse_polynomial(b).unwrap()).unwrap()
    }

    #[test]
    fn cyclic_power_matches_printed_matrices() {
        let s1 = cyclic_power(3, 1).unwrap();
        assert_eq!(s1, BitMatrix::from_dense(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 0]]));
        let s2 = cyclic_power(3, 2).unwrap();
        assert_eq!(s2, BitMatrix::from_dense(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]]));
        assert_eq!(cyclic_power(3, 0).unwrap(), BitMatrix::identity(3));
        assert!(cyclic_power(3, 3).is_err());
    }

    #[test]
    fn term_parsing() {
        let t = parse_polynomial("1 + y + x*y + x^9 + x^9y^2 + x^2*y^3").unwrap();
        assert_eq!(
            t,
            vec![
                PolyTerm::new(0, 0),
                PolyTerm::new(0, 1),
                PolyTerm::new(1, 1),
                PolyTerm::new(9, 0),
                PolyTerm::new(9, 2),
                PolyTerm::new(2, 3)
            ]
        );
        assert!(parse_polynomial("y + z").is_err());
        assert!(parse_polynomial("y + + x").is_err());
        assert!(parse_polynomial("x^").is_err());
        assert!(parse_polynomial("xx").is_err());
    }

    #[test]
    fn spec_file_errors_carry_position() {
        let err = PolySpec::parse("l = 6\nm = 6\na = y + q^2\nb = x\n").unwrap_err();
        match err {
            CodeError::Parse(p) => assert_eq!((p.line, p.column), (3, 9)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(PolySpec::parse("l = 2\nm = 1\na = x^2\nb = 1\n").is_err());
    }

    #[test]
    fn spec_text_round_trip() {
        let s = spec(12, 4, "1 + y + x*y + x^9", "1 + x^2 + x^7 + x^9*y^2");
        let back: PolySpec = s.to_spec_text().parse().unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn trivial_code_has_no_logicals() {
        let code = build_code(&spec(1, 1, "1", "1")).unwrap();
        assert_eq!((code.n, code.k), (2, 0));
        let est = estimate_distance(&code, 10, 1, Execution::Sequential);
        assert!(est.no_logicals());
    }

    #[test]
    fn logical_pairing_is_identity() {
        let code = build_code(&spec(6, 6, "y + y^2 + x^3", "y^3 + x + x^2")).unwrap();
        let prod = code.logicals_x.mul(&code.logicals_z.transpose()).unwrap();
        assert_eq!(prod, BitMatrix::identity(code.k));
        assert!(code.gz.mul(&code.logicals_x.transpose()).unwrap().is_zero());
        assert!(code.gx.mul(&code.logicals_z.transpose()).unwrap().is_zero());
    }

    #[test]
    fn surface_code_rejects_even_distance() {
        assert!(build_surface_code(4).is_err());
        assert!(build_surface_code(1).is_err());
        let c = build_surface_code(3).unwrap();
        assert_eq!((c.n, c.k, c.gx.rows(), c.gz.rows()), (9, 1, 4, 4));
    }

    #[test]
    fn steps_label() {
        assert_eq!(spec(6, 6, "y + y^2 + x^3", "y^3 + x + x^2").steps_per_op_label(), "2");
        assert_eq!(
            spec(12, 4, "1 + y + x*y + x^9", "1 + x^2 + x^7 + x^9*y^2").steps_per_op_label(),
            "2 or 4"
        );
    }
}
