//! Placement of a generalized-bicycle code on an interleaved atom grid.
//!
//! Each of the four qubit groups (A data, B data, X checks, Z checks) forms
//! an `m × l` subgrid; qubit `i` of a group sits at subgrid position
//! `(i mod m, ⌊i/m⌋)`. Subgrids are interleaved with factor 2, so a subgrid
//! step is two device sites and the group offset selects the parity class of
//! the site.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::code::{PolySpec, PolyTerm};

/// Device site, in units of the site pitch. Negative values lie in the
/// buffer area around the data region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub row: i64,
    pub col: i64,
}

impl GridPos {
    pub const fn new(row: i64, col: i64) -> Self {
        Self { row, col }
    }

    pub fn offset(self, d_row: i64, d_col: i64) -> Self {
        Self {
            row: self.row + d_row,
            col: self.col + d_col,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    X,
    Z,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::A, Group::B, Group::X, Group::Z];

    /// Offset of this group's subgrid in interleave units.
    pub fn subgrid_offset(self) -> (i64, i64) {
        match self {
            Group::A => (0, 0),
            Group::B => (1, 1),
            Group::X => (0, 1),
            Group::Z => (1, 0),
        }
    }

    pub fn is_data(self) -> bool {
        matches!(self, Group::A | Group::B)
    }

    pub fn label(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
            Group::X => "X",
            Group::Z => "Z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckType {
    X,
    Z,
}

impl CheckType {
    pub fn group(self) -> Group {
        match self {
            CheckType::X => Group::X,
            CheckType::Z => Group::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutVariant {
    #[default]
    Standard,
    /// Check atoms ride in interstitial lanes a quarter site off the lattice,
    /// X checks at `(+¼, +¼)` and Z checks at `(−¼, −¼)`.
    CollisionFree,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayoutMap {
    pub l: usize,
    pub m: usize,
    pub spacing_um: f64,
    pub variant: LayoutVariant,
    /// Exchange the sites of the A and B data subgrids.
    #[serde(default)]
    pub swap_data_blocks: bool,
}

pub const DEFAULT_SPACING_UM: f64 = 5.0;

/// Lays out the code described by `spec` on a `2m × 2l` device grid.
pub fn layout(spec: &PolySpec, variant: LayoutVariant) -> LayoutMap {
    LayoutMap {
        l: spec.l,
        m: spec.m,
        spacing_um: DEFAULT_SPACING_UM,
        variant,
        swap_data_blocks: false,
    }
}

impl LayoutMap {
    pub fn block_size(&self) -> usize {
        self.l * self.m
    }

    /// `(i mod m, ⌊i/m⌋)`.
    pub fn subgrid_position(&self, i: usize) -> (i64, i64) {
        ((i % self.m) as i64, (i / self.m) as i64)
    }

    /// Subgrid offset of `group` in this layout.
    pub fn group_offset(&self, group: Group) -> (i64, i64) {
        match (self.swap_data_blocks, group) {
            (true, Group::A) => Group::B.subgrid_offset(),
            (true, Group::B) => Group::A.subgrid_offset(),
            _ => group.subgrid_offset(),
        }
    }

    /// Lattice site of qubit `i` of `group`. For the collision-free variant
    /// the check atom sits a lane offset away from this site.
    pub fn site(&self, group: Group, i: usize) -> GridPos {
        let (r, c) = self.subgrid_position(i);
        let (or, oc) = self.group_offset(group);
        GridPos::new(2 * r + or, 2 * c + oc)
    }

    /// Lane offset of a group in quarter-site units.
    pub fn lane_offset_quarters(&self, group: Group) -> (i64, i64) {
        match (self.variant, group) {
            (LayoutVariant::CollisionFree, Group::X) => (1, 1),
            (LayoutVariant::CollisionFree, Group::Z) => (-1, -1),
            _ => (0, 0),
        }
    }

    /// Physical position in quarter-site units.
    pub fn position_quarters(&self, group: Group, i: usize) -> (i64, i64) {
        let s = self.site(group, i);
        let (lr, lc) = self.lane_offset_quarters(group);
        (4 * s.row + lr, 4 * s.col + lc)
    }

    /// Height and width of the data region in sites.
    pub fn device_dims(&self) -> (usize, usize) {
        (2 * self.m, 2 * self.l)
    }

    /// Width of the empty margin needed around the data region for the
    /// largest periodic excursion, in sites (rows, cols).
    pub fn buffer_sites(&self) -> (usize, usize) {
        (2 * self.m, 2 * self.l)
    }

    /// Every qubit as `(group, index, site)`.
    pub fn positions(&self) -> Vec<(Group, usize, GridPos)> {
        Group::ALL
            .iter()
            .flat_map(|&g| (0..self.block_size()).map(move |i| (g, i, self.site(g, i))))
            .collect()
    }

    /// CSV with header `qubit_id,group,row,col`. Coordinates are in sites
    /// and include lane offsets.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qubit_id,group,row,col\n");
        let lm = self.block_size();
        for (g, i, _) in self.positions() {
            let id = match g {
                Group::A => i,
                Group::B => lm + i,
                Group::X => 2 * lm + i,
                Group::Z => 3 * lm + i,
            };
            let (qr, qc) = self.position_quarters(g, i);
            let _ = writeln!(out, "{id},{},{},{}", g.label(), qr as f64 / 4.0, qc as f64 / 4.0);
        }
        out
    }
}

/// Relative `(row, col)` offsets from an X check to its data partner for
/// `term`, over all check positions.
pub fn relative_positions(term: PolyTerm, l: usize, m: usize) -> BTreeSet<(i64, i64)> {
    let (p, q) = (term.p as i64, term.q as i64);
    let rows: &[i64] = if q == 0 { &[0] } else { &[q, q - m as i64] };
    let cols: &[i64] = if p == 0 { &[0] } else { &[p, p - l as i64] };
    rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect()
}

/// Classification of an offset variant relative to the unwrapped shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Periodicity {
    /// No wrap in either axis.
    NonPeriodic,
    /// Wrapped in exactly one axis of a mixed term.
    Partial,
    /// Wrapped in every axis the term moves along.
    Periodic,
}

/// Periodicity class of `offset` for `term` and the given check type.
pub fn periodicity(term: PolyTerm, check: CheckType, offset: (i64, i64)) -> Periodicity {
    let sign = if check == CheckType::X { 1 } else { -1 };
    let base = (sign * term.q as i64, sign * term.p as i64);
    let wrapped = [(term.q > 0, offset.0 != base.0), (term.p > 0, offset.1 != base.1)];
    let moving = wrapped.iter().filter(|(m, _)| *m).count();
    let wraps = wrapped.iter().filter(|(m, w)| *m && *w).count();
    match wraps {
        0 => Periodicity::NonPeriodic,
        w if w == moving => Periodicity::Periodic,
        _ => Periodicity::Partial,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CheckTarget {
    pub check: usize,
    /// Column index in the check matrix (`0..lm` for A, `lm..2lm` for B).
    pub data: usize,
    /// `(row, col)` offset from the check's subgrid position to the data's.
    pub offset: (i64, i64),
}

/// Data partners of every check of type `check` under `term` acting on
/// `block`. X checks use the shift `(q, p)`, Z checks the mirrored `(−q, −p)`.
pub fn check_targets(term: PolyTerm, check: CheckType, block: Group, spec: &PolySpec) -> Vec<CheckTarget> {
    assert!(block.is_data(), "block must be A or B");
    let (l, m) = (spec.l as i64, spec.m as i64);
    let sign = if check == CheckType::X { 1 } else { -1 };
    let (dq, dp) = (sign * term.q as i64, sign * term.p as i64);
    let base = if block == Group::A { 0 } else { spec.block_size() };
    (0..spec.block_size())
        .map(|i| {
            let (r, c) = ((i as i64) % m, (i as i64) / m);
            let (tr, tc) = ((r + dq).rem_euclid(m), (c + dp).rem_euclid(l));
            CheckTarget {
                check: i,
                data: base + (tc * m + tr) as usize,
                offset: (tr - r, tc - c),
            }
        })
        .collect()
}

/// Which polynomial feeds which data block for each check type.
pub fn term_blocks(spec: &PolySpec, check: CheckType) -> Vec<(PolyTerm, Group)> {
    let (on_a, on_b) = match check {
        CheckType::X => (&spec.a, &spec.b),
        CheckType::Z => (&spec.b, &spec.a),
    };
    on_a.iter()
        .map(|&t| (t, Group::A))
        .chain(on_b.iter().map(|&t| (t, Group::B)))
        .collect()
}
