use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbmem::code::{build_code, simulated_codes};
use gbmem::decoder::{BpOsdDecoder, DecoderConfig};
use gbmem::layout::{layout, LayoutVariant};
use gbmem::noise::{build_detector_model, build_memory_circuit, DetectorModel, NoiseParams};
use gbmem::sampler::{adaptive_run, sample, StopRule};
use gbmem::schedule::{schedule_round, CostModel, ScheduleOptions};
use gbmem::Execution;

fn model(p: f64, rounds: usize) -> DetectorModel {
    let spec = simulated_codes()[0].spec.clone();
    let code = build_code(&spec).unwrap();
    let lay = layout(&spec, LayoutVariant::Standard);
    let sched = schedule_round(&spec, &lay, &CostModel::default(), &ScheduleOptions::default()).unwrap();
    build_detector_model(&build_memory_circuit(&code, &sched, &NoiseParams::new(p), rounds).unwrap())
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let m = model(1e-3, 6);
    let mut g = c.benchmark_group("sample_65536_shots");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample(&m, 65_536, 1, exec))
        });
    }
    g.finish();
}

fn decoding(c: &mut Criterion) {
    let m = model(3e-3, 2);
    let dec = BpOsdDecoder::new(
        &m,
        DecoderConfig {
            max_iters: 30,
            ..DecoderConfig::default()
        },
    )
    .unwrap();
    let stop = StopRule {
        min_errors: u64::MAX,
        max_shots: 4096,
    };
    let mut g = c.benchmark_group("decode_4096_shots");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| adaptive_run(&m, &dec, stop, 1, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, decoding);
criterion_main!(benches);
