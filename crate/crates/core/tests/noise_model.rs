use gbmem::code::{build_code, simulated_codes, toy_code, CssCode, PolySpec};
use gbmem::layout::{layout, CheckType, LayoutVariant};
use gbmem::noise::{
    build_detector_model, build_memory_circuit, enumerate_signatures, frame_simulate, Basis, Instr, NoiseParams,
};
use gbmem::schedule::{schedule_round, CostModel, MovementSchedule, ScheduleOptions};

fn setup(spec: &PolySpec) -> (CssCode, MovementSchedule) {
    let code = build_code(spec).unwrap();
    let lay = layout(spec, LayoutVariant::Standard);
    let sched = schedule_round(spec, &lay, &CostModel::default(), &ScheduleOptions::default()).unwrap();
    (code, sched)
}

fn first_code() -> PolySpec {
    simulated_codes()[0].spec.clone()
}

#[test]
fn measurement_count_matches_rounds() {
    let (code, sched) = setup(&first_code());
    let c = build_memory_circuit(&code, &sched, &NoiseParams::new(1e-3), 6).unwrap();
    assert_eq!(c.num_measurements, 6 * 36 * 2 + 72);
    // Z-basis: 36 first-round Z detectors, 5 comparisons of 72 checks, 36 final.
    assert_eq!(c.num_detectors(), 36 + 5 * 72 + 36);
    assert_eq!(c.num_observables(), 12);
}

#[test]
fn zero_rounds_rejected() {
    let (code, sched) = setup(&first_code());
    assert!(build_memory_circuit(&code, &sched, &NoiseParams::new(1e-3), 0).is_err());
    assert!(build_memory_circuit(&code, &sched, &NoiseParams::new(1.5), 1).is_err());
}

#[test]
fn noiseless_circuit_is_deterministic() {
    let (code, sched) = setup(&first_code());
    for basis in [Basis::Z, Basis::X] {
        let noise = NoiseParams {
            p: 0.0,
            basis,
            ..NoiseParams::default()
        };
        let c = build_memory_circuit(&code, &sched, &noise, 2).unwrap();
        assert!(!c
            .instrs
            .iter()
            .any(|i| matches!(i, Instr::Err1 { .. } | Instr::Err2 { .. })));
        let dem = build_detector_model(&c);
        assert!(dem.mechanisms.is_empty());
        let (d, o) = frame_simulate(&c, 128, 1);
        assert!(d.is_zero() && o.is_zero());
    }
}

/// Detectors must be deterministic in the absence of errors even when the
/// frame tracks random stabilizer outcomes; a single injected error of every
/// kind must be caught by the backward sweep exactly as by forward propagation.
#[test]
fn mechanism_signatures_match_forward_enumeration() {
    for (spec, rounds) in [(toy_code(), 2), (first_code(), 1)] {
        let (code, sched) = setup(&spec);
        for basis in [Basis::Z, Basis::X] {
            let noise = NoiseParams {
                p: 1e-3,
                basis,
                ..NoiseParams::default()
            };
            let c = build_memory_circuit(&code, &sched, &noise, rounds).unwrap();
            let dem = build_detector_model(&c);
            let forward = enumerate_signatures(&c);
            let backward: Vec<(Vec<u32>, Vec<u32>)> = dem
                .mechanisms
                .iter()
                .map(|m| (m.detectors.clone(), m.observables.clone()))
                .collect();
            assert_eq!(backward.len(), forward.len());
            assert_eq!(backward, forward);
        }
    }
}

#[test]
fn split_views_partition_detectors() {
    let (code, sched) = setup(&first_code());
    let c = build_memory_circuit(&code, &sched, &NoiseParams::new(1e-3), 3).unwrap();
    let dem = build_detector_model(&c);
    let x = dem.subproblem(CheckType::X);
    let z = dem.subproblem(CheckType::Z);
    assert_eq!(x.num_rows() + z.num_rows(), dem.num_detectors);
    assert!(x.observables.iter().all(|o| o.is_empty()));
    assert!(z.observables.iter().any(|o| !o.is_empty()));
    for sp in [x, z] {
        assert!(sp.priors.iter().all(|&p| p > 0.0 && p < 0.5));
        let mut cols = sp.columns.iter().zip(&sp.observables).collect::<Vec<_>>();
        let before = cols.len();
        cols.dedup();
        assert_eq!(before, cols.len());
    }
}

/// Two-sample chi-square between model sampling and direct frame
/// simulation over detector firing counts and syndrome-weight buckets.
#[test]
fn detector_model_matches_frame_simulation() {
    let (code, sched) = setup(&first_code());
    let c = build_memory_circuit(&code, &sched, &NoiseParams::new(5e-3), 1).unwrap();
    let dem = build_detector_model(&c);
    let shots = 20_000;
    let (fd, fo) = frame_simulate(&c, shots, 11);
    let batch = gbmem::sampler::sample(&dem, shots, 12, gbmem::Execution::Parallel);
    let (chi, dof) = gbmem::sampler::two_sample_chi_square(&[&fd, &fo], &[&batch.detectors, &batch.observables]);
    // 99.9% quantile of chi-square via Wilson-Hilferty.
    let z = 3.09;
    let k = dof as f64;
    let q = k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3);
    assert!(chi < q, "chi2 {chi} over {dof} dof exceeds {q}");
}

#[test]
fn injected_data_x_error_flips_its_gz_column() {
    let (code, sched) = setup(&first_code());
    let rounds = 4;
    let c = build_memory_circuit(
        &code,
        &sched,
        &NoiseParams {
            p: 0.0,
            ..NoiseParams::default()
        },
        rounds,
    )
    .unwrap();
    let round_starts: Vec<usize> = c
        .instrs
        .iter()
        .enumerate()
        .filter(|(_, i)| matches!(i, Instr::Reset(qs) if qs[0] >= 72))
        .map(|(k, _)| k)
        .collect();
    assert_eq!(round_starts.len(), rounds);
    for (r, q) in [(1usize, 0usize), (2, 17), (3, 71)] {
        let mut inj = c.clone();
        inj.instrs.insert(
            round_starts[r],
            Instr::Err1 {
                targets: vec![q as u32],
                px: 1.0,
                py: 0.0,
                pz: 0.0,
            },
        );
        let (d, o) = frame_simulate(&inj, 1, 0);
        let fired: Vec<usize> = d.row_ones(0);
        let expected: Vec<usize> = c
            .detectors
            .iter()
            .enumerate()
            .filter(|(_, det)| det.kind == CheckType::Z && det.round == r && code.gz.get(det.check, q))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(fired, expected);
        let flips: Vec<usize> = (0..code.k).filter(|&i| code.logicals_z.get(i, q)).collect();
        assert_eq!(o.row_ones(0), flips);
    }
}
