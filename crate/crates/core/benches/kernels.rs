//! Parallel-vs-sequential comparison of the per-pixel hot kernels and a
//! small end-to-end solve.
//!
//! Built with the default `parallel` feature, the "seq" arm runs the same
//! code inside a single-thread rayon pool while the "par" arm uses the
//! default pool, so one `cargo bench` run yields the comparison directly.
//! Built with `--no-default-features`, both arms run the plain sequential
//! fallback (useful for measuring rayon overhead itself):
//!
//! ```text
//! cargo bench -p bswtv
//! cargo bench -p bswtv --no-default-features
//! ```

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use bswtv::degrade::{add_mpg_noise, FrameModel, LinearOp, NoiseParams};
use bswtv::image::{convolve, gaussian_kernel, GrayImage};
use bswtv::solver::{solve, Regularizer, SolverConfig};
use bswtv::weighting::{eigen_gap_map, nltv_weights, BswtvParams};
use bswtv::{fidelity, metrics, synth};

fn single_thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool")
}

fn noisy_scene(side: usize, seed: u64) -> GrayImage {
    let clean = synth::shapes_image(side, side, 200.0);
    add_mpg_noise(&clean, &NoiseParams::new(1.0, 0.0, 2.0).unwrap(), seed).unwrap()
}

fn bench_convolve(c: &mut Criterion) {
    let img = noisy_scene(256, 1);
    let k = gaussian_kernel(2.0).unwrap();
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("convolve_256_sigma2");
    g.bench_function("par", |b| b.iter(|| black_box(convolve(black_box(&img), &k))));
    g.bench_function("seq", |b| {
        b.iter(|| pool.install(|| black_box(convolve(black_box(&img), &k))))
    });
    g.finish();
}

fn bench_eigen_gap(c: &mut Criterion) {
    let img = noisy_scene(256, 2);
    let xi = GrayImage::constant(256, 256, 0.7);
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("eigen_gap_256_r3");
    g.bench_function("par", |b| {
        b.iter(|| black_box(eigen_gap_map(black_box(&img), &xi, 3).unwrap()))
    });
    g.bench_function("seq", |b| {
        b.iter(|| pool.install(|| black_box(eigen_gap_map(black_box(&img), &xi, 3).unwrap())))
    });
    g.finish();
}

fn bench_nltv_weights(c: &mut Criterion) {
    let img = noisy_scene(128, 3);
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("nltv_weights_128_r3_w3");
    g.bench_function("par", |b| {
        b.iter(|| black_box(nltv_weights(black_box(&img), 3, 3, 40.0).unwrap()))
    });
    g.bench_function("seq", |b| {
        b.iter(|| pool.install(|| black_box(nltv_weights(black_box(&img), 3, 3, 40.0).unwrap())))
    });
    g.finish();
}

fn bench_fidelity_grad(c: &mut Criterion) {
    let z = synth::shapes_image(128, 128, 200.0);
    let y = noisy_scene(128, 4);
    let frame = FrameModel::new(
        y,
        LinearOp::identity((128, 128)),
        NoiseParams::new(1.0, 0.0, 2.0).unwrap(),
    )
    .unwrap();
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("mpg_value_grad_128");
    g.bench_function("par", |b| {
        b.iter(|| black_box(fidelity::mpg_value_grad(black_box(&frame), &z).unwrap()))
    });
    g.bench_function("seq", |b| {
        b.iter(|| pool.install(|| black_box(fidelity::mpg_value_grad(black_box(&frame), &z).unwrap())))
    });
    g.finish();
}

fn bench_ssim(c: &mut Criterion) {
    let a = synth::shapes_image(256, 256, 200.0);
    let b_img = noisy_scene(256, 5);
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("ssim_256");
    g.bench_function("par", |b| {
        b.iter(|| black_box(metrics::ssim(black_box(&a), &b_img, 255.0).unwrap()))
    });
    g.bench_function("seq", |b| {
        b.iter(|| pool.install(|| black_box(metrics::ssim(black_box(&a), &b_img, 255.0).unwrap())))
    });
    g.finish();
}

fn bench_denoise_solve(c: &mut Criterion) {
    let y = noisy_scene(48, 6);
    let noise = NoiseParams::new(1.0, 0.0, 2.0).unwrap();
    let cfg = SolverConfig {
        max_iter: 3,
        early_stop: false,
        ..SolverConfig::new(1.0, Regularizer::Bswtv(BswtvParams::default()))
    };
    let run = || {
        let frame =
            FrameModel::new(y.clone(), LinearOp::identity(y.shape()), noise).unwrap();
        black_box(solve(&[frame], &cfg, &y).unwrap())
    };
    let pool = single_thread_pool();
    let mut g = c.benchmark_group("bswtv_denoise_48_3iter");
    g.sample_size(20);
    g.bench_function("par", |b| b.iter(run));
    g.bench_function("seq", |b| b.iter(|| pool.install(run)));
    g.finish();
}

criterion_group!(
    benches,
    bench_convolve,
    bench_eigen_gap,
    bench_nltv_weights,
    bench_fidelity_grad,
    bench_ssim,
    bench_denoise_solve
);
criterion_main!(benches);
