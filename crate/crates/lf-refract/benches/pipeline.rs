//! Stage benchmarks. Group names carry the active backend so runs of the
//! default (rayon) build and `--no-default-features` (sequential) build can
//! be compared side by side:
//!
//!   cargo bench -p lf-refract
//!   cargo bench -p lf-refract --no-default-features

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lf_refract::config::PipelineConfig;
use lf_refract::curves::extract_feature_curves;
use lf_refract::fit::{classify, Thresholds};
use lf_refract::keypoint::detect_keypoints;
use lf_refract::lf::LightField;
use lf_refract::parallel;
use lf_refract::pipeline::classify_lightfield;
use lf_refract::synth::{preset_scene, render_lightfield, SceneSpec};

fn bench_scene() -> SceneSpec {
    // Quarter-resolution variant of the refractive-sphere scene: same optics,
    // small enough for statistically stable timing.
    let mut spec = preset_scene("sphere_large_baseline").unwrap();
    spec.camera.n_u = 128;
    spec.camera.n_v = 128;
    spec.camera.focal_px = 160.0;
    spec.camera.principal = [63.5, 63.5];
    spec
}

fn rendered() -> LightField {
    render_lightfield(&bench_scene(), 7).unwrap().0
}

fn bench_render(c: &mut Criterion) {
    let spec = bench_scene();
    c.bench_function(&format!("render_9x9x128/{}", parallel::backend()), |b| {
        b.iter(|| render_lightfield(black_box(&spec), 7).unwrap())
    });
}

fn bench_detect(c: &mut Criterion) {
    let lf = rendered();
    let cfg = PipelineConfig::default().detector();
    c.bench_function(&format!("detect_keypoints_128/{}", parallel::backend()), |b| {
        b.iter(|| detect_keypoints(black_box(lf.central_view()), &cfg).unwrap())
    });
}

fn bench_curves_and_fit(c: &mut Criterion) {
    let lf = rendered();
    let cfg = PipelineConfig::default();
    let kps = detect_keypoints(lf.central_view(), &cfg.detector()).unwrap();
    let kp = kps[kps.len() / 2];
    let curve_cfg = cfg.curve();
    c.bench_function(&format!("feature_curves_one_kp/{}", parallel::backend()), |b| {
        b.iter(|| extract_feature_curves(black_box(&lf), &kp, &curve_cfg))
    });

    let (f_h, f_v) = extract_feature_curves(&lf, &kp, &curve_cfg);
    let th = Thresholds::default();
    c.bench_function(&format!("fit_and_label_one_kp/{}", parallel::backend()), |b| {
        b.iter(|| classify(black_box(&f_h), &f_v, &kp, &th))
    });
}

fn bench_full_pipeline(c: &mut Criterion) {
    let lf = rendered();
    let cfg = PipelineConfig::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function(format!("classify_lightfield_128/{}", parallel::backend()), |b| {
        b.iter(|| classify_lightfield(black_box(&lf), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_render,
    bench_detect,
    bench_curves_and_fit,
    bench_full_pipeline
);
criterion_main!(benches);
