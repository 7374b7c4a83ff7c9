use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use gbmem::arch::ArchConfig;
use gbmem::code::{build_code, catalog_lookup, estimate_distance, CssCode, PolySpec};
use gbmem::compiler::{
    compile, compile_baseline, fixtures, parse_range, profile, sweep, CompiledProgram, Program, SweepAxis,
    SWEEP_CSV_HEADER,
};
use gbmem::decoder::{BpOsdDecoder, DecoderConfig, OsdMethod};
use gbmem::gf2::BitVec;
use gbmem::layout::{layout, LayoutMap, LayoutVariant};
use gbmem::noise::{build_detector_model, build_memory_circuit, Basis, DetectorModel, NoiseParams};
use gbmem::sampler::{adaptive_run, csv_field, csv_row, sample, LerResult, StopRule, CSV_HEADER};
use gbmem::schedule::{schedule_round, verify_schedule, CostModel, MovementSchedule, OrderStrategy, ScheduleOptions};
use gbmem::Execution;
use serde_json::json;

use crate::output::{append_csv, RunDir};
use crate::{BasisArg, Cli, CodeInput, Command, CompileArgs, Failure, MovementArgs, NoiseArgs, StopArgs, Variant};

type Res<T> = Result<T, Failure>;

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

pub fn run(cli: &Cli) -> Res<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let (cmd, inputs): (&str, Vec<String>) = match &cli.command {
        Command::Code(a) => ("code", vec![a.input.code.clone()]),
        Command::Layout(a) => ("layout", vec![a.input.code.clone()]),
        Command::Schedule(a) => ("schedule", vec![a.input.code.clone()]),
        Command::CostTable(a) => ("cost-table", a.codes.clone()),
        Command::Simulate(a) => ("simulate", vec![a.input.code.clone()]),
        Command::DecodeBench(a) => ("decode-bench", vec![a.input.code.clone()]),
        Command::Compile(a) => ("compile", vec![a.program.clone()]),
        Command::Sweep(a) => ("sweep", vec![a.input.code.clone()]),
    };
    let mut dir = RunDir::create(&cli.out, cmd, cli.name.as_deref(), cli.seed)?;
    inputs.into_iter().for_each(|i| dir.input(i));
    let path = dir.path.clone();
    let result = dispatch(cli, &mut dir, exec);
    if result.is_err() {
        // Leave no half-written run behind.
        let _ = std::fs::remove_dir_all(&path);
        return result;
    }
    let path = dir.finish()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn dispatch(cli: &Cli, dir: &mut RunDir, exec: Execution) -> Res<()> {
    match &cli.command {
        Command::Code(a) => code(dir, &a.input, a.trials, exec)?,
        Command::Layout(a) => {
            let (spec, name) = load_spec(&a.input)?;
            let lay = layout(&spec, variant(a.variant));
            dir.set("variant", format!("{:?}", a.variant));
            let (w, h) = lay.device_dims();
            dir.write("layout.csv", &lay.to_csv())?;
            println!("{name}: {w} x {h} sites, {} atoms", lay.positions().len());
        }
        Command::Schedule(a) => {
            let (spec, name) = load_spec(&a.input)?;
            let code = build_code(&spec)?;
            let (lay, sched) = movement(&spec, &a.movement, exec, dir)?;
            let rep = verify_schedule(&sched, &code, &lay).map_err(|e| internal(anyhow!("{e:?}")))?;
            dir.write_json("schedule.json", sched.to_json())?;
            println!(
                "{name}: round {:.4} ms (full {:.4} ms, return legs {:.4} ms), {} pulses, {} pairs verified",
                sched.round_time_ms(),
                sched.full_round_time_us / 1e3,
                sched.return_time_us / 1e3,
                rep.pulses,
                rep.pairs
            );
        }
        Command::CostTable(a) => cost_table(dir, &a.codes, &a.movement, a.json, exec)?,
        Command::Simulate(a) => {
            let (spec, name) = load_spec(&a.input)?;
            let r = simulate(dir, &spec, &a.noise, a.noise.p, &a.stop, exec)?;
            let row = csv_row(&name, a.noise.p, a.noise.t_coherence, &r);
            let header = format!("{CSV_HEADER},ci_low,ci_high");
            let row = format!("{row},{:e},{:e}", r.ci_low, r.ci_high);
            append_csv(&dir.path.join("results.csv"), &header, &row)?;
            if let Some(path) = &a.csv {
                append_csv(path, &header, &row)?;
            }
            println!("{header}\n{row}");
        }
        Command::DecodeBench(a) => decode_bench(dir, &a.input, &a.noise, a.shots, exec)?,
        Command::Compile(a) => compile_cmd(dir, a, exec)?,
        Command::Sweep(a) => {
            let (spec, name) = load_spec(&a.input)?;
            let ps: Vec<f64> =
                a.ps.split(',')
                    .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad rate {s:?}")))
                    .collect::<Result<_, _>>()?;
            let header = format!("{CSV_HEADER},ci_low,ci_high");
            for (i, &p) in ps.iter().enumerate() {
                let r = simulate(dir, &spec, &a.noise, p, &a.stop, exec)?;
                let row = format!(
                    "{},{:e},{:e}",
                    csv_row(&name, p, a.noise.t_coherence, &r),
                    r.ci_low,
                    r.ci_high
                );
                append_csv(&dir.path.join("sweep.csv"), &header, &row)?;
                if i == 0 {
                    println!("{header}");
                }
                println!("{row}");
            }
        }
    }
    Ok(())
}

fn variant(v: Variant) -> LayoutVariant {
    match v {
        Variant::Standard => LayoutVariant::Standard,
        Variant::CollisionFree => LayoutVariant::CollisionFree,
    }
}

/// Reads a spec file; falls back to a catalog label when no such file exists.
fn load_spec(input: &CodeInput) -> Res<(PolySpec, String)> {
    load_spec_claimed(input).map(|(spec, name, _)| (spec, name))
}

/// Like [`load_spec`], also returning the claimed distance when one is known.
fn load_spec_claimed(input: &CodeInput) -> Res<(PolySpec, String, Option<usize>)> {
    let path = Path::new(&input.code);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (spec, d, name) = PolySpec::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let name = name.unwrap_or_else(|| match d {
            Some(d) => format!("[{},?,{d}]", spec.n()),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        });
        return Ok((spec, name, d));
    }
    let entry = catalog_lookup(&input.code).ok_or_else(|| anyhow!("no file or catalog code named {:?}", input.code))?;
    Ok((entry.spec, entry.name.to_string(), Some(entry.d)))
}

fn code(dir: &mut RunDir, input: &CodeInput, trials: usize, exec: Execution) -> Res<()> {
    let (spec, name, claimed) = load_spec_claimed(input)?;
    let code = build_code(&spec)?.with_claimed_distance(claimed);
    let est = estimate_distance(&code, trials, dir.seed(), exec);
    let steps = spec.steps_per_op_label();
    let bound = match (est.bound, est.exact) {
        (Some(b), true) => format!("d={b}"),
        (Some(b), false) => format!("d<={b}"),
        (None, _) => "d=none".into(),
    };
    dir.set("trials", trials);
    dir.write_json(
        "code.json",
        json!({
            "name": name, "n": code.n, "k": code.k, "check_weight": spec.check_weight(),
            "distance_bound": est.bound, "distance_exact": est.exact, "steps_per_op": steps,
            "witness": est.witness.as_ref().map(|(kind, v)| json!({"pauli": format!("{kind:?}"), "support": v.ones().collect::<Vec<_>>()})),
            "claimed_distance": claimed, "lighter_logical_found": est.below_claimed,
            "spec": spec.to_spec_text(),
        }),
    )?;
    println!(
        "n={} k={} w={} steps={steps} {bound}",
        code.n,
        code.k,
        spec.check_weight()
    );
    if est.below_claimed {
        eprintln!(
            "note: {name} claims d={}, but a weight-{} logical was found",
            claimed.unwrap_or(0),
            est.bound.unwrap_or(0)
        );
    }
    Ok(())
}

fn movement(
    spec: &PolySpec,
    m: &MovementArgs,
    exec: Execution,
    dir: &mut RunDir,
) -> Res<(LayoutMap, MovementSchedule)> {
    let model = CostModel {
        accel_um_per_us2: m.accel,
        per_round_constant_us: m.constant_us,
        bill_return_legs: m.bill_return,
        ..CostModel::default()
    };
    let options = ScheduleOptions {
        strategy: if m.heuristic {
            OrderStrategy::SortedHeuristic
        } else {
            OrderStrategy::Optimal
        },
        exec,
        ..ScheduleOptions::default()
    };
    dir.set("accel_um_per_us2", m.accel);
    dir.set("per_round_constant_us", m.constant_us);
    dir.set("bill_return_legs", m.bill_return);
    dir.set("heuristic", m.heuristic);
    let lay = layout(spec, variant(m.variant));
    let sched = schedule_round(spec, &lay, &model, &options)?;
    Ok((lay, sched))
}

fn cost_table(dir: &mut RunDir, codes: &[String], m: &MovementArgs, as_json: bool, exec: Execution) -> Res<()> {
    let inputs: Vec<CodeInput> = if codes.is_empty() {
        gbmem::code::simulated_codes()
            .iter()
            .map(|e| CodeInput {
                code: e.name.to_string(),
            })
            .collect()
    } else {
        codes.iter().map(|c| CodeInput { code: c.clone() }).collect()
    };
    let mut rows = Vec::new();
    for input in &inputs {
        let (spec, name) = load_spec(input)?;
        let d = catalog_lookup(&name)
            .map(|e| e.d)
            .ok_or_else(|| anyhow!("distance of {name} unknown"));
        let d = match d {
            Ok(d) => d,
            Err(_) => {
                let code = build_code(&spec)?;
                estimate_distance(&code, 200, dir.seed(), exec).bound.unwrap_or(1)
            }
        };
        let (_, sched) = movement(&spec, m, exec, dir)?;
        rows.push((name, sched.round_time_ms(), d, sched.round_time_ms() * d as f64));
    }
    let mut csv = String::from("code,Round (ms),Rounds/Cycle,Cycle (ms),seed\n");
    for (n, r, d, c) in &rows {
        csv += &format!("{},{r:.6},{d},{c:.6},{}\n", csv_field(n), dir.seed());
    }
    dir.write("cost_table.csv", &csv)?;
    let value = json!({
        "rows": rows.iter().map(|(n, r, d, c)| json!({"code": n, "round_ms": r, "rounds_per_cycle": d, "cycle_ms": c})).collect::<Vec<_>>()
    });
    dir.write_json("cost_table.json", value.clone())?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&value).map_err(internal)?);
    } else {
        println!(
            "{:<14} {:>11} {:>14} {:>11}",
            "code", "Round (ms)", "Rounds/Cycle", "Cycle (ms)"
        );
        for (n, r, d, c) in &rows {
            println!("{n:<14} {r:>11.3} {d:>14} {c:>11.2}");
        }
    }
    Ok(())
}

fn memory_model(
    spec: &PolySpec,
    noise: &NoiseArgs,
    p: f64,
    exec: Execution,
    dir: &mut RunDir,
) -> Res<(CssCode, DetectorModel, usize)> {
    let code = build_code(spec)?;
    let lay = layout(spec, LayoutVariant::Standard);
    let sched = schedule_round(
        spec,
        &lay,
        &CostModel::default(),
        &ScheduleOptions {
            exec,
            ..ScheduleOptions::default()
        },
    )?;
    verify_schedule(&sched, &code, &lay).map_err(|e| internal(anyhow!("{e:?}")))?;
    let rounds = match noise.rounds {
        Some(r) => r,
        None => catalog_lookup(&format!("[{},{},", code.n, code.k))
            .map(|e| e.d)
            .or_else(|| {
                gbmem::code::simulated_codes()
                    .into_iter()
                    .find(|e| e.spec == *spec)
                    .map(|e| e.d)
            })
            .ok_or_else(|| anyhow!("--rounds is required for codes outside the catalog"))?,
    };
    let basis = match noise.basis {
        BasisArg::X => Basis::X,
        BasisArg::Z => Basis::Z,
    };
    let params = NoiseParams {
        p,
        t_coherence_s: noise.t_coherence,
        basis,
    };
    let circ = build_memory_circuit(&code, &sched, &params, rounds)?;
    dir.set("rounds", rounds);
    dir.set("t_coherence_s", noise.t_coherence);
    dir.set("basis", format!("{:?}", noise.basis));
    dir.set("max_iters", noise.max_iters);
    dir.set("osd_order", noise.osd_order);
    Ok((code, build_detector_model(&circ), rounds))
}

fn decoder_config(noise: &NoiseArgs) -> DecoderConfig {
    DecoderConfig {
        max_iters: noise.max_iters,
        osd_method: OsdMethod::CombinationSweep,
        osd_order: noise.osd_order,
        ..DecoderConfig::default()
    }
}

fn simulate(
    dir: &mut RunDir,
    spec: &PolySpec,
    noise: &NoiseArgs,
    p: f64,
    stop: &StopArgs,
    exec: Execution,
) -> Res<LerResult> {
    let (_, model, _) = memory_model(spec, noise, p, exec, dir)?;
    let dec = BpOsdDecoder::new(&model, decoder_config(noise))?;
    dir.set("min_errors", stop.min_errors);
    dir.set("max_shots", stop.max_shots);
    let stop = StopRule {
        min_errors: stop.min_errors,
        max_shots: stop.max_shots,
    };
    let r = adaptive_run(&model, &dec, stop, dir.seed(), exec);
    Ok(r)
}

fn decode_bench(dir: &mut RunDir, input: &CodeInput, noise: &NoiseArgs, shots: usize, exec: Execution) -> Res<()> {
    let (spec, name) = load_spec(input)?;
    let (_, model, rounds) = memory_model(&spec, noise, noise.p, exec, dir)?;
    let dec = BpOsdDecoder::new(&model, decoder_config(noise))?;
    let batch = sample(&model, shots, dir.seed(), exec);
    let t = Instant::now();
    let stats = exec.map_range(shots, |s| {
        let syn = BitVec::from_words(batch.detectors.cols(), batch.detectors.row(s));
        let r = dec.decode(&model, &syn);
        match r {
            Ok(r) => {
                let converged = r.parts.iter().all(|p| p.converged);
                let osd = r.parts.iter().any(|p| p.used_osd);
                let fail = r.predicted_observables.words() != batch.observables.row(s);
                (converged, osd, fail, false)
            }
            Err(_) => (false, true, true, true),
        }
    });
    let secs = t.elapsed().as_secs_f64();
    let count = |f: fn(&(bool, bool, bool, bool)) -> bool| stats.iter().filter(|s| f(s)).count();
    let value = json!({
        "code": name, "p": noise.p, "rounds": rounds, "shots": shots,
        "mechanisms": model.mechanisms.len(), "detectors": model.num_detectors,
        "seconds": secs, "shots_per_second": shots as f64 / secs,
        "bp_converged": count(|s| s.0), "used_osd": count(|s| s.1),
        "logical_failures": count(|s| s.2), "unsatisfiable": count(|s| s.3),
    });
    dir.write_json("decode_bench.json", value.clone())?;
    println!("{}", serde_json::to_string_pretty(&value).map_err(internal)?);
    Ok(())
}

fn load_program(arg: &str) -> Res<Program> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return Ok(Program::parse(&text).with_context(|| format!("in {arg}"))?);
    }
    let parts: Vec<&str> = arg.split(':').collect();
    let num = |i: usize, default: usize| -> Res<usize> {
        match parts.get(i) {
            Some(s) => Ok(s.parse().with_context(|| format!("bad number {s:?} in {arg:?}"))?),
            None => Ok(default),
        }
    };
    let n = num(1, 0)?;
    if n < 2 {
        return Err(anyhow!("no program file {arg:?}; fixtures are written kind:width with width >= 2").into());
    }
    Ok(match parts[0] {
        "ghz" => fixtures::ghz(n),
        "bv" => fixtures::bv(n),
        "adder" => fixtures::adder(n.max(3)),
        "ising" => fixtures::ising(n, num(2, 1)?, num(3, 20)?),
        other => return Err(anyhow!("unknown fixture {other:?}").into()),
    })
}

fn cost_csv_row(label: &str, cp: &CompiledProgram, seed: u64) -> String {
    let c = &cp.cost;
    let b = &c.breakdown;
    format!(
        "{label},{},{},{},{},{},{},{},{},{},{},{}",
        c.space_qubits,
        c.time_seconds,
        c.spacetime_qubit_seconds,
        b.memory,
        b.ldst,
        b.compute,
        b.factory,
        cp.n_cycles,
        cp.n_ldst,
        cp.n_t,
        seed
    )
}

const COST_HEADER: &str = "target,space_qubits,time_s,spacetime_qubit_s,memory_qubit_s,ldst_qubit_s,compute_qubit_s,factory_qubit_s,n_cycles,n_ldst,n_t,seed";

fn compile_cmd(dir: &mut RunDir, a: &CompileArgs, exec: Execution) -> Res<()> {
    let prog = load_program(&a.program)?;
    let arch = match &a.arch {
        Some(p) => {
            dir.input(p.display().to_string());
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ArchConfig::parse(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => {
            dir.set("blocks", a.blocks);
            dir.set("surface", a.surface);
            dir.set("d", a.d);
            ArchConfig::hierarchical(a.blocks, a.surface, a.d)
        }
    };
    let prof = profile(&prog);
    if let Some(s) = &a.sweep {
        let (axis, range) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--sweep expects axis=range, got {s:?}"))?;
        let axis: SweepAxis = axis.parse().map_err(|e: String| anyhow!(e))?;
        let values = parse_range(range).map_err(|e| anyhow!(e))?;
        dir.set("sweep", s);
        let rows = sweep(&prog, &arch, axis, &values, exec)?;
        let header = format!("{},{},seed", axis.name(), SWEEP_CSV_HEADER.trim_start_matches("value,"));
        let mut csv = header.clone() + "\n";
        for r in &rows {
            csv += &format!("{},{}\n", r.csv(), dir.seed());
        }
        dir.write("sweep.csv", &csv)?;
        print!("{csv}");
        return Ok(());
    }
    let hier = if arch.is_hierarchical() {
        Some(compile(&prog, &arch).map_err(classify)?)
    } else {
        None
    };
    let base = if a.baseline || hier.is_none() {
        Some(compile_baseline(&prog, &arch).map_err(classify)?)
    } else {
        None
    };
    let mut csv = format!("{COST_HEADER}\n");
    for (label, cp) in [("hierarchical", &hier), ("baseline", &base)] {
        if let Some(cp) = cp {
            csv += &(cost_csv_row(label, cp, dir.seed()) + "\n");
            dir.write_json(
                &format!("timeline_{label}.json"),
                json!({
                    "n_cycles": cp.n_cycles, "n_ldst": cp.n_ldst, "n_t": cp.n_t,
                    "assignment": cp.assignment, "events": cp.timeline,
                    "tiebreak_stores": cp.tiebreak_stores, "forced_evictions": cp.forced_evictions,
                }),
            )?;
        }
    }
    dir.write("cost.csv", &csv)?;
    dir.write_json(
        "profile.json",
        json!({ "serialization": prof.serialization, "t_consumption": prof.t_consumption }),
    )?;
    print!("{csv}");
    Ok(())
}

fn classify(e: gbmem::compiler::CompileError) -> Failure {
    match e {
        gbmem::compiler::CompileError::Deadlock { .. } => internal(e),
        other => Failure::Input(other.into()),
    }
}
