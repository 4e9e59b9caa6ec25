//! Hot kernels on one worker versus the full pool.
//!
//! With `--no-default-features` the same kernels run through the sequential
//! fallback under the single id `sequential`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use phasecone::algebra::twisted_convolve;
use phasecone::fock::{state_cat, DensityState};
use phasecone::phase::PhaseGrid;
use phasecone::positivity::{quantum_gram, SampleSet};
use phasecone::semigroup::{twirl_apply, GaussianSemigroupParams, TwirlingQuadrature};
use phasecone::transforms::{dequantize, OperatorChar};

struct Inputs {
    grid: PhaseGrid,
    cat: DensityState,
}

fn inputs() -> Inputs {
    Inputs { grid: PhaseGrid::new(10.0, 128).unwrap(), cat: state_cat(Complex64::new(1.5, 0.0), 64).unwrap() }
}

/// Runs `f` once per pool configuration under a shared group name.
fn compare(c: &mut Criterion, group: &str, f: impl Fn() + Sync) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function(criterion::BenchmarkId::new("single", 1), |b| one.install(|| b.iter(&f)));
        let n = rayon::current_num_threads();
        g.bench_function(criterion::BenchmarkId::new("pool", n), |b| b.iter(&f));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function("sequential", |b| b.iter(&f));
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let inp = inputs();
    let chi = dequantize(inp.cat.op(), inp.grid).into_value();

    compare(c, "dequantize N=64 M=128", || {
        black_box(dequantize(black_box(inp.cat.op()), inp.grid));
    });
    compare(c, "twisted_convolve M=128", || {
        black_box(twisted_convolve(&chi, &chi).unwrap());
    });
    let samples = SampleSet::random(200, 2.5, 1).unwrap();
    compare(c, "quantum_gram 200 points", || {
        black_box(quantum_gram(&OperatorChar::new(inp.cat.op()), &samples).unwrap());
    });
    let params = GaussianSemigroupParams::isotropic(0.5).unwrap();
    let quad = TwirlingQuadrature::gauss_hermite(20).unwrap();
    compare(c, "twirl_apply GH20", || {
        black_box(twirl_apply(&params, 0.5, &inp.cat, &quad).unwrap());
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
