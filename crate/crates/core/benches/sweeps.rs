use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use delaywave::characteristic::scan;
use delaywave::nonlinearity::NonlinearityModel;
use delaywave::simulator::{shift_sweep, InitialDatum, SimConfig};

fn char_scan() {
    let mus = [-2.0, -5.0, -10.0, -20.0];
    let hs = [0.5, 1.0, 2.0];
    let taus = [1.0, 4.0, 16.0];
    scan(&mus, &hs, &taus).unwrap();
}

fn small_shift_sweep() {
    let g = NonlinearityModel::cubic_shift(1.0, 0.25).unwrap();
    let cfg = SimConfig { a: 40.0, dx: 0.2, horizon: 20.0, ..SimConfig::default() };
    shift_sweep(&g, &[0.0, 0.2, 0.5, 1.0], &InitialDatum::Step { at: 20.0 }, &cfg).unwrap();
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("sequential".into(), single), (format!("parallel-{}", default.current_num_threads()), default)]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let pools = pools();
    for (name, work) in [("char_scan", char_scan as fn()), ("shift_sweep", small_shift_sweep)] {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        for (label, pool) in &pools {
            group.bench_function(BenchmarkId::from_parameter(label), |b| b.iter(|| pool.install(work)));
        }
        group.finish();
    }
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    for (name, work) in [("char_scan", char_scan as fn()), ("shift_sweep", small_shift_sweep)] {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        group.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(work));
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
