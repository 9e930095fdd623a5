use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use steinlab::derivations::{
    derivation_space, derivation_space_of, relative_derivations, Envelope,
};
use steinlab::report::{self, corpus_specs, RunOptions};
use steinlab::vndim::{derivation_dimension, phi_x, restrict_scalars, vn_dimension};
use steinlab::FiniteGroup;
use steinlab_bench::{cyclic_shift_context, group_algebra_of, largest_multimatrix};

fn derivation_spaces(c: &mut Criterion) {
    let mut group = c.benchmark_group("derivation_space");
    for g in [FiniteGroup::cyclic(4), FiniteGroup::symmetric3()] {
        let a = Arc::new(group_algebra_of(&g));
        group.bench_with_input(BenchmarkId::new("group_algebra", g.label()), &a, |b, a| {
            b.iter(|| derivation_space(&Envelope::new(a.clone())).unwrap())
        });
    }
    let big = Arc::new(largest_multimatrix());
    group.bench_function("M3+M3+M3", |b| {
        b.iter(|| derivation_space(&Envelope::new(big.clone())).unwrap())
    });
    group.finish();
}

fn dimensions(c: &mut Criterion) {
    let space = derivation_space_of(Arc::new(largest_multimatrix())).unwrap();
    c.bench_function("vn_dimension/M3+M3+M3", |b| {
        b.iter(|| derivation_dimension(black_box(&space)).unwrap())
    });

    let ctx = cyclic_shift_context();
    let der = derivation_space(ctx.big())
        .unwrap()
        .with_generators(ctx.default_generators())
        .unwrap();
    c.bench_function("crossed/Der(C³⋊Z3)", |b| {
        b.iter(|| vn_dimension(&phi_x(&der, der.generators()).unwrap()).unwrap())
    });
    let vanishing = relative_derivations(&der, &ctx.group_subalgebra()).unwrap();
    let image = phi_x(&vanishing, vanishing.generators()).unwrap();
    c.bench_function("crossed/restrict_scalars", |b| {
        b.iter(|| vn_dimension(&restrict_scalars(&image, &ctx).unwrap()).unwrap())
    });
}

fn corpus(c: &mut Criterion) {
    let specs = corpus_specs();
    let mut group = c.benchmark_group("corpus");
    group.sample_size(10);
    group.bench_function("full", |b| {
        b.iter(|| report::run(&specs, &RunOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, derivation_spaces, dimensions, corpus);
criterion_main!(benches);
