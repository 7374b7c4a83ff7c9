use gbmem::code::{build_code, simulated_codes, CssCode};
use gbmem::decoder::{
    bp_osd, code_capacity, decode_split, osd_postprocess, prior_weights, soft_weight, DecoderConfig, OsdMethod,
    SparseCheck,
};
use gbmem::gf2::{BitMatrix, BitVec};
use gbmem::layout::{layout, CheckType, LayoutVariant};
use gbmem::noise::{build_detector_model, build_memory_circuit, NoiseParams};
use gbmem::schedule::{schedule_round, CostModel, ScheduleOptions};
use gbmem::Execution;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum soft weight over every error pattern consistent with `s`.
fn brute_force_min(h: &SparseCheck, priors: &[f64], s: &BitVec) -> Option<f64> {
    let w = prior_weights(priors);
    let n = h.cols;
    (0u32..1 << n)
        .map(|mask| BitVec::from_ones(n, (0..n).filter(|&i| mask >> i & 1 == 1)))
        .filter(|e| h.syndrome_of(e) == *s)
        .map(|e| soft_weight(&e, &w))
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

fn random_instance(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> (SparseCheck, Vec<f64>) {
    loop {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.random_bool(0.4) {
                    m.set(r, c, true);
                }
            }
        }
        if m.rank() == rows {
            let priors = (0..cols).map(|_| rng.random_range(0.01..0.3)).collect();
            return (SparseCheck::from_dense(&m), priors);
        }
    }
}

#[test]
fn combination_sweep_matches_brute_force_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = DecoderConfig::default();
    for _ in 0..100 {
        let (h, priors) = random_instance(&mut rng, 10, 12);
        let e = BitVec::from_ones(12, (0..12).filter(|_| rng.random_bool(0.25)));
        let s = h.syndrome_of(&e);
        let (got, _, _, w) = bp_osd(&h, &priors, &s, &cfg, true).unwrap();
        assert_eq!(h.syndrome_of(&got), s);
        let best = brute_force_min(&h, &priors, &s).unwrap();
        assert!((w - best).abs() < 1e-9, "osd {w} brute {best}");
        assert!((soft_weight(&got, &prior_weights(&priors)) - w).abs() < 1e-9);
    }
}

#[test]
fn order_zero_is_osd_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let (h, priors) = random_instance(&mut rng, 6, 10);
        let s = h.syndrome_of(&BitVec::from_ones(
            10,
            [rng.random_range(0..10), rng.random_range(0..10)],
        ));
        let soft: Vec<f64> = prior_weights(&priors);
        let zero = osd_postprocess(
            &h,
            &priors,
            &s,
            &soft,
            &DecoderConfig {
                osd_order: 0,
                ..DecoderConfig::default()
            },
        );
        let osd0 = osd_postprocess(
            &h,
            &priors,
            &s,
            &soft,
            &DecoderConfig {
                osd_method: OsdMethod::Osd0,
                ..DecoderConfig::default()
            },
        );
        assert_eq!(zero, osd0);
    }
}

fn first_code() -> CssCode {
    build_code(&simulated_codes()[0].spec).unwrap()
}

/// Decodes every X error of weight at most two against Gz, and every Z
/// error against Gx, counting logical failures.
fn weight_two_failures(code: &CssCode, exec: Execution) -> usize {
    let cfg = DecoderConfig::default();
    let n = code.n;
    let mut patterns: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            patterns.push(vec![i, j]);
        }
    }
    assert_eq!(patterns.len(), 2628);
    let mut failures = 0;
    for (checks, logicals) in [(&code.gz, &code.logicals_z), (&code.gx, &code.logicals_x)] {
        let (h, priors) = code_capacity(checks, 1e-3);
        failures += exec
            .map(&patterns, |pat| {
                let e = BitVec::from_ones(n, pat.iter().copied());
                let s = h.syndrome_of(&e);
                let (c, _, _, _) = bp_osd(&h, &priors, &s, &cfg, false).unwrap();
                let mut r = e.clone();
                r.xor_assign(&c);
                assert!(h.syndrome_of(&r).is_zero());
                usize::from(!logicals.mul_vec(&r).is_zero())
            })
            .iter()
            .sum::<usize>();
    }
    failures
}

#[test]
fn all_low_weight_errors_decode_on_first_code() {
    assert_eq!(weight_two_failures(&first_code(), Execution::Parallel), 0);
}

#[test]
fn code_capacity_failure_rate_is_small() {
    let cfg = DecoderConfig {
        max_iters: 100,
        ..DecoderConfig::default()
    };
    for entry in simulated_codes() {
        let code = build_code(&entry.spec).unwrap();
        let (h, priors) = code_capacity(&code.gz, 1e-3);
        let trials = 100_000usize;
        let fails: usize = Execution::Parallel
            .map_range(100, |chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(77);
                rng.set_stream(chunk as u64);
                let mut f = 0;
                for _ in 0..trials / 100 {
                    let e = BitVec::from_ones(code.n, (0..code.n).filter(|_| rng.random_bool(1e-3)));
                    if e.is_zero() {
                        continue;
                    }
                    let s = h.syndrome_of(&e);
                    let (c, _, _, _) = bp_osd(&h, &priors, &s, &cfg, false).unwrap();
                    let mut r = e;
                    r.xor_assign(&c);
                    f += usize::from(!code.logicals_z.mul_vec(&r).is_zero());
                }
                f
            })
            .iter()
            .sum();
        assert!(
            (fails as f64) / (trials as f64) < 1e-4,
            "{}: {fails} failures",
            entry.name
        );
    }
}

#[test]
fn split_decoding_respects_css_separation() {
    let spec = simulated_codes()[0].spec.clone();
    let code = build_code(&spec).unwrap();
    let lay = layout(&spec, LayoutVariant::Standard);
    let sched = schedule_round(&spec, &lay, &CostModel::default(), &ScheduleOptions::default()).unwrap();
    let circ = build_memory_circuit(&code, &sched, &NoiseParams::new(1e-3), 2).unwrap();
    let model = build_detector_model(&circ);
    let cfg = DecoderConfig {
        max_iters: 50,
        ..DecoderConfig::default()
    };

    let zero = decode_split(&model, &BitVec::zeros(model.num_detectors), &cfg).unwrap();
    assert!(zero.predicted_observables.is_zero());
    assert!(zero.parts.iter().all(|p| p.correction.is_zero()));

    // Syndrome of a single X-subproblem mechanism only.
    let xsp = model.subproblem(CheckType::X);
    let col = xsp.columns.iter().position(|c| !c.is_empty()).unwrap();
    let syn = BitVec::from_ones(
        model.num_detectors,
        xsp.columns[col].iter().map(|&r| xsp.detectors[r as usize] as usize),
    );
    let r = decode_split(&model, &syn, &cfg).unwrap();
    assert!(r.parts[CheckType::Z as usize].correction.is_zero());
    assert!(!r.parts[CheckType::X as usize].correction.is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn osd_satisfies_syndrome_and_is_monotone(seed in any::<u64>(), rows in 4usize..9, extra in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = rows + extra;
        let (h, priors) = random_instance(&mut rng, rows, cols);
        let e = BitVec::from_ones(cols, (0..cols).filter(|_| rng.random_bool(0.3)));
        let s = h.syndrome_of(&e);
        let soft: Vec<f64> = (0..cols).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut last = f64::INFINITY;
        for order in [0usize, 1, 2, 4, 10] {
            let cfg = DecoderConfig { osd_order: order, ..DecoderConfig::default() };
            let (c, w) = osd_postprocess(&h, &priors, &s, &soft, &cfg).unwrap();
            prop_assert_eq!(h.syndrome_of(&c), s.clone());
            prop_assert!(w <= last + 1e-9);
            last = w;
            let again = osd_postprocess(&h, &priors, &s, &soft, &cfg).unwrap();
            prop_assert_eq!(again.0, c);
        }
    }
}
