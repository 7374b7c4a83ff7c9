use std::collections::BTreeSet;

use gbmem::code::{build_code, parse_polynomial, simulated_codes, PolySpec, PolyTerm};
use gbmem::layout::{check_targets, layout, relative_positions, term_blocks, CheckType, GridPos, Group, LayoutVariant};
use proptest::prelude::*;

/// Offsets found by walking every check index and applying the wrap rule.
fn enumerate_offsets(term: PolyTerm, l: usize, m: usize) -> BTreeSet<(i64, i64)> {
    let mut out = BTreeSet::new();
    for i in 0..l * m {
        let (r, c) = (i % m, i / m);
        let dr = if r + term.q >= m {
            term.q as i64 - m as i64
        } else {
            term.q as i64
        };
        let dc = if c + term.p >= l {
            term.p as i64 - l as i64
        } else {
            term.p as i64
        };
        out.insert((dr, dc));
    }
    out
}

#[test]
fn relative_positions_match_enumeration() {
    for e in simulated_codes() {
        for &t in e.spec.a.iter().chain(&e.spec.b) {
            let rp = relative_positions(t, e.spec.l, e.spec.m);
            assert_eq!(rp, enumerate_offsets(t, e.spec.l, e.spec.m), "{} {t}", e.name);
            let expected = match (t.p > 0, t.q > 0) {
                (false, false) => 1,
                (true, true) => 4,
                _ => 2,
            };
            assert_eq!(rp.len(), expected);
        }
    }
}

#[test]
fn horizontal_wrap_of_x_squared() {
    let spec = PolySpec::new(5, 4, parse_polynomial("x^2").unwrap(), parse_polynomial("1").unwrap()).unwrap();
    for t in check_targets(PolyTerm::new(2, 0), CheckType::X, Group::A, &spec) {
        let col = t.check / 4;
        assert_eq!(t.offset, if col >= 3 { (0, -3) } else { (0, 2) });
    }
    for t in check_targets(PolyTerm::ONE, CheckType::X, Group::B, &spec) {
        assert_eq!(t.data, 20 + t.check);
    }
}

#[test]
fn one_dimensional_layout() {
    let e = simulated_codes().into_iter().find(|e| e.name == "[72,8,10]").unwrap();
    let lay = layout(&e.spec, LayoutVariant::Standard);
    assert_eq!(lay.device_dims(), (2, 72));
    assert!((0..36).all(|i| lay.site(Group::A, i).row == 0));
}

#[test]
fn targets_reproduce_check_matrices() {
    for e in simulated_codes() {
        let code = build_code(&e.spec).unwrap();
        for (check, matrix) in [(CheckType::X, &code.gx), (CheckType::Z, &code.gz)] {
            let mut rebuilt = gbmem::gf2::BitMatrix::zeros(matrix.rows(), matrix.cols());
            for (term, block) in term_blocks(&e.spec, check) {
                for t in check_targets(term, check, block, &e.spec) {
                    assert!(!rebuilt.get(t.check, t.data), "duplicate entry");
                    rebuilt.set(t.check, t.data, true);
                }
            }
            assert_eq!(&rebuilt, matrix, "{} {check:?}", e.name);
        }
    }
}

#[test]
fn z_offsets_mirror_x_offsets() {
    for e in simulated_codes() {
        for (term, block) in term_blocks(&e.spec, CheckType::X) {
            let x: BTreeSet<_> = check_targets(term, CheckType::X, block, &e.spec)
                .iter()
                .map(|t| t.offset)
                .collect();
            let z: BTreeSet<_> = check_targets(term, CheckType::Z, Group::A, &e.spec)
                .iter()
                .map(|t| (-t.offset.0, -t.offset.1))
                .collect();
            assert_eq!(x, z, "{} {term}", e.name);
        }
    }
}

#[test]
fn boundary_exclusivity_for_every_phase() {
    for e in simulated_codes() {
        let lay = layout(&e.spec, LayoutVariant::Standard);
        let (rows, cols) = lay.device_dims();
        let inside = |p: GridPos| p.row >= 0 && p.col >= 0 && (p.row as usize) < rows && (p.col as usize) < cols;
        for check in [CheckType::X, CheckType::Z] {
            let home = check.group().subgrid_offset();
            for (term, block) in term_blocks(&e.spec, check) {
                let targets = check_targets(term, check, block, &e.spec);
                let offsets: BTreeSet<_> = targets.iter().map(|t| t.offset).collect();
                let s = block.subgrid_offset();
                for &o in &offsets {
                    let d = (2 * o.0 + s.0 - home.0, 2 * o.1 + s.1 - home.1);
                    for t in &targets {
                        let landed = lay.site(check.group(), t.check).offset(d.0, d.1);
                        if t.offset == o {
                            let data_local = t.data % lay.block_size();
                            assert_eq!(landed, lay.site(block, data_local));
                        } else {
                            assert!(
                                !inside(landed),
                                "{} {term} {o:?}: check {} lands inside",
                                e.name,
                                t.check
                            );
                        }
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn sites_follow_formula(l in 1usize..10, m in 1usize..10, i in 0usize..100) {
        let spec = PolySpec::new(l, m, vec![PolyTerm::ONE], vec![PolyTerm::ONE]).unwrap();
        let lay = layout(&spec, LayoutVariant::Standard);
        let i = i % (l * m);
        for g in Group::ALL {
            let (or, oc) = g.subgrid_offset();
            prop_assert_eq!(lay.site(g, i), GridPos::new(2 * (i % m) as i64 + or, 2 * (i / m) as i64 + oc));
        }
    }
}
