//! Sequential against parallel execution on the hot paths.
//!
//! Build with `--no-default-features` to see the fallback: both variants then
//! run the same sequential code.

use std::hint::black_box;

use bimanual_core::agents::{compose, OraclePolicy, PolicyParts, Topology};
use bimanual_core::camvox::{fuse, GridSpec};
use bimanual_core::codec::encode_batch;
use bimanual_core::demo::Observation;
use bimanual_core::harness::{evaluate, EvalConfig};
use bimanual_core::par::Execution;
use bimanual_core::simworld::{render_models, reset, rollout, CameraRig, TaskId};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn perception(c: &mut Criterion) {
    let (w, _) = reset(TaskId::LiftTray, 0, 1).unwrap();
    let proprio = w.proprio();
    let cams = CameraRig::standard(128).resolve(&proprio);
    let spec = GridSpec::default();
    let obs = Observation {
        images: render_models(&w, &cams, Execution::Sequential),
        proprio,
        timestep_fraction: 0.0,
    };

    let mut g = c.benchmark_group("render");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| render_models(black_box(&w), &cams, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("fuse");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fuse(black_box(&obs), &cams, &spec, exec).unwrap())
        });
    }
    g.finish();
}

fn codec(c: &mut Criterion) {
    let spec = GridSpec::default();
    let mut actions = Vec::new();
    for seed in 0..40 {
        let (w, _) = reset(TaskId::HandoverEasy, 0, seed).unwrap();
        actions.extend(rollout(TaskId::HandoverEasy, &w).1);
    }
    let mut g = c.benchmark_group("encode_batch");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| encode_batch(black_box(&actions), &spec, exec))
        });
    }
    g.finish();
}

fn eval(c: &mut Criterion) {
    let policy = compose(
        PolicyParts::Bimanual(Box::new(OraclePolicy::default())),
        Topology::Joint,
    )
    .unwrap();
    let mut g = c.benchmark_group("eval");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = EvalConfig {
            exec,
            ..EvalConfig::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate(&policy, TaskId::PushButtons, 16, 7, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, perception, codec, eval);
criterion_main!(benches);
