use criterion::{black_box, criterion_group, criterion_main, Criterion};

use halfplane::constants::{bekolle_bonami, class_constant, ClassCondition};
use halfplane::lab::{box_sum_family, sharpness_sweep, FamilySpec, SweepOptions};
use halfplane::operators::{
    dyadic_maximal, fractional_maximal_bracket, lq_norm_tiles, superlevel_measure, FractionalAverage, Moments, Params,
};
use halfplane::{BorelMeasure, Point, QuadratureSpec, ScalarField, ScaleWindow, Shift};

fn setup() -> (ScalarField, Params, ScaleWindow, QuadratureSpec) {
    let (f, _) = box_sum_family(&FamilySpec::default()).unwrap().swap_remove(0);
    let params = Params::critical(2.0, 0.0, 0.5).unwrap();
    (f, params, ScaleWindow::new(-8, 3, -4.0, 4.0).unwrap(), QuadratureSpec::default())
}

fn maximal(c: &mut Criterion) {
    let (f, params, w, spec) = setup();
    let avg = FractionalAverage::side_length(&f, &params, &spec);
    let z = Point::new(0.1, 0.01);
    c.bench_function("dyadic_maximal", |b| b.iter(|| dyadic_maximal(&avg, Shift::Zero, black_box(z), &w).unwrap()));
    let m = Moments::new(f.clone(), 0.0, spec);
    c.bench_function("fractional_maximal_bracket", |b| {
        b.iter(|| fractional_maximal_bracket(&m, &params, black_box(z), &w, 3).unwrap())
    });
}

fn norms(c: &mut Criterion) {
    let (f, params, w, spec) = setup();
    let avg = FractionalAverage::side_length(&f, &params, &spec);
    let mu = BorelMeasure::lebesgue(0.0);
    c.bench_function("lq_norm_tiles", |b| b.iter(|| lq_norm_tiles(&avg, Shift::Zero, &mu, params.q, &w, &spec).unwrap()));
    let (top, _) = halfplane::operators::window_max_average(&avg, Shift::Zero, &w).unwrap();
    c.bench_function("superlevel_measure", |b| {
        b.iter(|| superlevel_measure(&avg, Shift::Zero, black_box(0.5 * top), &mu, &w, &spec).unwrap())
    });
}

fn constants(c: &mut Criterion) {
    let (_, params, w, spec) = setup();
    let omega = ScalarField::power_y(0.5);
    c.bench_function("bekolle_bonami", |b| b.iter(|| bekolle_bonami(&omega, 2.0, 0.0, &w, &spec).unwrap()));
    let cond = ClassCondition::BpqJoint { omega: ScalarField::power_abs(0.3) };
    c.bench_function("bpq_joint", |b| b.iter(|| class_constant(&cond, &params, &w, &spec).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let params = Params::critical(2.0, 0.0, 0.5).unwrap();
    let mut g = c.benchmark_group("sharpness");
    g.sample_size(10);
    g.bench_function("sweep_4_eps", |b| {
        b.iter(|| sharpness_sweep(&params, &[0.2, 0.1, 0.05, 0.025], &SweepOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, maximal, norms, constants, sweep);
criterion_main!(benches);
