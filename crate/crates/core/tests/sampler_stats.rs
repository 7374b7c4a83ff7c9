use gbmem::code::{build_code, simulated_codes};
use gbmem::decoder::{BpOsdDecoder, DecoderConfig};
use gbmem::layout::{layout, CheckType, LayoutVariant};
use gbmem::noise::{build_detector_model, build_memory_circuit, Basis, DetectorModel, Mechanism, NoiseParams};
use gbmem::sampler::{
    adaptive_run, csv_row, per_round_ler, sample, wilson_interval, LerResult, NullDecoder, StopRule, CSV_HEADER,
};
use gbmem::schedule::{schedule_round, CostModel, ScheduleOptions};
use gbmem::Execution;
use proptest::prelude::*;

fn toy_model(ps: &[f64]) -> DetectorModel {
    let mechanisms = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| Mechanism {
            p,
            detectors: vec![i as u32],
            observables: if i == 0 { vec![0] } else { vec![] },
        })
        .collect();
    DetectorModel::from_mechanisms(mechanisms, vec![CheckType::Z; ps.len()], 1, 1, Basis::Z)
}

fn column_count(m: &gbmem::gf2::BitMatrix, c: usize) -> usize {
    (0..m.rows()).filter(|&r| m.get(r, c)).count()
}

#[test]
fn certain_mechanism_fires_every_shot() {
    let model = toy_model(&[1.0, 0.0]);
    let b = sample(&model, 3000, 7, Execution::Parallel);
    assert_eq!(column_count(&b.detectors, 0), 3000);
    assert_eq!(column_count(&b.detectors, 1), 0);
    assert_eq!(column_count(&b.observables, 0), 3000);
}

#[test]
fn firing_rate_within_three_sigma() {
    let p = 0.3;
    let n = 1_000_000;
    let b = sample(&toy_model(&[p, 1e-3]), n, 99, Execution::Parallel);
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    let k = column_count(&b.detectors, 0) as f64;
    assert!((k - n as f64 * p).abs() < 3.0 * sigma, "{k}");
    let sigma2 = (n as f64 * 1e-3 * (1.0 - 1e-3)).sqrt();
    let k2 = column_count(&b.detectors, 1) as f64;
    assert!((k2 - n as f64 * 1e-3).abs() < 3.0 * sigma2, "{k2}");
}

#[test]
fn sampling_is_deterministic_and_thread_independent() {
    let model = toy_model(&[0.1, 0.02, 0.4]);
    let a = sample(&model, 5000, 3, Execution::Parallel);
    let b = sample(&model, 5000, 3, Execution::Sequential);
    assert_eq!(a.detectors, b.detectors);
    assert_eq!(a.observables, b.observables);
    let c = sample(&model, 5000, 4, Execution::Parallel);
    assert_ne!(a.detectors, c.detectors);
}

#[test]
fn null_decoder_counts_raw_flips() {
    let model = toy_model(&[0.05]);
    let stop = StopRule {
        min_errors: u64::MAX,
        max_shots: 50_000,
    };
    let r = adaptive_run(&model, &NullDecoder, stop, 21, Execution::Parallel);
    assert_eq!(r.shots, 50_000);
    let raw = sample(&model, 50_000, 21, Execution::Sequential);
    assert_eq!(r.errors as usize, column_count(&raw.observables, 0));
    let seq = adaptive_run(&model, &NullDecoder, stop, 21, Execution::Sequential);
    assert_eq!(seq, r);
}

#[test]
fn stop_rule_on_errors_and_cap() {
    let model = toy_model(&[0.5]);
    let r = adaptive_run(
        &model,
        &NullDecoder,
        StopRule {
            min_errors: 10,
            max_shots: 1_000_000,
        },
        1,
        Execution::Parallel,
    );
    assert!(r.errors >= 10);
    assert!(r.shots < 1_000_000);
    let capped = adaptive_run(
        &model,
        &NullDecoder,
        StopRule {
            min_errors: u64::MAX,
            max_shots: 1500,
        },
        1,
        Execution::Parallel,
    );
    assert_eq!(capped.shots, 1500);
}

#[test]
fn silent_model_has_zero_rate() {
    let model = toy_model(&[0.0, 0.0]);
    let r = adaptive_run(
        &model,
        &NullDecoder,
        StopRule {
            min_errors: 100,
            max_shots: 1_000_000,
        },
        5,
        Execution::Parallel,
    );
    assert_eq!((r.errors, r.shots, r.p_l_per_round), (0, 1_000_000, 0.0));
}

#[test]
fn per_round_formula_and_interval() {
    let want = 1.0 - 0.9988f64.powf(1.0 / 6.0);
    let got = per_round_ler(120, 100_000, 6);
    assert!(((got - want) / want).abs() < 1e-12);
    assert_eq!(per_round_ler(0, 10, 3), 0.0);
    assert_eq!(per_round_ler(10, 10, 3), 1.0);
    let (lo, hi) = wilson_interval(120, 100_000, 1.96);
    assert!(lo < 0.0012 && 0.0012 < hi);
    let r = LerResult::from_counts(120, 100_000, 6, 9);
    assert!(r.ci_low < r.p_l_per_round && r.p_l_per_round < r.ci_high);
    let row = csv_row("[72,12,6]", 1e-3, 10.0, &r);
    let text = format!("{CSV_HEADER}\n{row}\n");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rec = reader.records().next().unwrap().unwrap();
    assert_eq!(rec.len(), CSV_HEADER.split(',').count());
    assert_eq!(&rec[0], "[72,12,6]");
    assert_eq!(rec[4].parse::<u64>().unwrap(), 100_000);
}

#[test]
fn sampling_throughput() {
    let spec = simulated_codes()[0].spec.clone();
    let code = build_code(&spec).unwrap();
    let lay = layout(&spec, LayoutVariant::Standard);
    let sched = schedule_round(&spec, &lay, &CostModel::default(), &ScheduleOptions::default()).unwrap();
    let circ = build_memory_circuit(&code, &sched, &NoiseParams::new(1e-3), 6).unwrap();
    let model = build_detector_model(&circ);
    let t = std::time::Instant::now();
    let b = sample(&model, 100_000, 1, Execution::Parallel);
    let rate = b.shots() as f64 / t.elapsed().as_secs_f64();
    assert!(rate > 1e4, "{rate} shots/s");
}

#[test]
fn decoded_rate_below_raw_rate() {
    let spec = simulated_codes()[0].spec.clone();
    let code = build_code(&spec).unwrap();
    let lay = layout(&spec, LayoutVariant::Standard);
    let sched = schedule_round(&spec, &lay, &CostModel::default(), &ScheduleOptions::default()).unwrap();
    let circ = build_memory_circuit(&code, &sched, &NoiseParams::new(3e-3), 2).unwrap();
    let model = build_detector_model(&circ);
    let stop = StopRule {
        min_errors: u64::MAX,
        max_shots: 2048,
    };
    let raw = adaptive_run(&model, &NullDecoder, stop, 8, Execution::Parallel);
    let dec = BpOsdDecoder::new(
        &model,
        DecoderConfig {
            max_iters: 30,
            ..DecoderConfig::default()
        },
    )
    .unwrap();
    let decoded = adaptive_run(&model, &dec, stop, 8, Execution::Parallel);
    assert!(decoded.errors < raw.errors, "{} vs {}", decoded.errors, raw.errors);
}

proptest! {
    #[test]
    fn per_round_rate_is_monotone(e in 0u64..1000, extra in 1u64..1000, n in 2000u64..1_000_000, d in 1usize..20) {
        let a = per_round_ler(e, n, d);
        let b = per_round_ler(e + extra, n, d);
        prop_assert!(b > a);
        prop_assert!((0.0..=1.0).contains(&a));
        // More rounds at the same shot rate mean a smaller per-round rate.
        prop_assert!(per_round_ler(e + extra, n, d + 1) < b);
    }
}
