//! Sequential vs rayon-parallel cost of the two hot paths: one free-evolution
//! step on a 12-qubit state, and a batch of independent trajectories.
//! `--no-default-features` builds run only the sequential group.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hamtomo::evolution::{run_schedule, EnvInit, Propagator, QuantumState};
use hamtomo::par::map_collect;
use hamtomo::pauli::StateLabel;
use hamtomo::schedule::{environment_sequence, PulseErrorModel};
use hamtomo::seed::child_rng;
use hamtomo::spin_system::SpinSystem;

const N_SPINS: usize = 12;
const TAU: f64 = 0.01;

fn setup() -> (Propagator, QuantumState) {
    let sys = SpinSystem::random_instance(N_SPINS, 0).unwrap();
    let prop = Propagator::new(&sys, TAU, 1e-10).unwrap();
    let psi = QuantumState::prepare(N_SPINS, &[(6, StateLabel::Plus)], EnvInit::Zero).unwrap();
    (prop, psi)
}

fn trajectories(prop: &Propagator, psi: &QuantumState, count: usize) -> Vec<f64> {
    let sched = environment_sequence(6, N_SPINS, 4, TAU).unwrap();
    map_collect((0..count).collect(), |k| {
        let mut rng = child_rng(0, &format!("bench/{k}"));
        run_schedule(psi, prop, &sched, &PulseErrorModel::NONE, &mut rng)
            .unwrap()
            .norm()
    })
}

fn bench_in_pool(c: &mut Criterion, label: &str, threads: usize) {
    let (prop, psi) = setup();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let mut group = c.benchmark_group("propagation");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("step", label), |b| {
        b.iter(|| {
            pool.install(|| {
                let mut s = psi.clone();
                prop.apply(&mut s);
                s
            })
        })
    });
    group.bench_function(BenchmarkId::new("trajectories", label), |b| {
        b.iter(|| pool.install(|| trajectories(&prop, &psi, 8)))
    });
    group.finish();
}

fn sequential(c: &mut Criterion) {
    bench_in_pool(c, "1-thread", 1);
}

fn parallel(c: &mut Criterion) {
    bench_in_pool(c, "all-threads", 0);
}

criterion_group!(benches, sequential, parallel);
criterion_main!(benches);
