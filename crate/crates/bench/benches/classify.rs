use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nhoc_core::fixtures::{
    reference_kinematic, reference_mechanical, reproduce_section5, section5_system,
    MechanicalReading,
};
use nhoc_core::hamiltonian::Linearization;
use nhoc_core::pmp::{classify, ClassificationProblem, Settings};
use nhoc_core::systems::extend;
use nhoc_core::{ChristoffelPairing, CostSpec, Mode, SourceKind};

fn classification(c: &mut Criterion) {
    let sys = section5_system(SourceKind::Table);
    let cost = CostSpec::time_optimal();
    let kin = ClassificationProblem::new(&sys, &cost, reference_kinematic(), Settings::default())
        .unwrap();
    let mech = ClassificationProblem::new(
        &sys,
        &cost,
        reference_mechanical(MechanicalReading::CONSISTENT),
        Settings::default(),
    )
    .unwrap();
    c.bench_function("classify kinematic section5", |b| {
        b.iter(|| classify(black_box(&kin)).unwrap())
    });
    c.bench_function("classify mechanical section5", |b| {
        b.iter(|| classify(black_box(&mech)).unwrap())
    });
}

fn transition(c: &mut Criterion) {
    let sys = section5_system(SourceKind::Table);
    let cost = CostSpec::time_optimal();
    let traj = reference_mechanical(MechanicalReading::CONSISTENT);
    let model = extend(&sys, &cost, Mode::Mechanical, ChristoffelPairing::Full);
    c.bench_function("mechanical transition matrix", |b| {
        b.iter(|| {
            Linearization::new(model.as_ref(), black_box(&traj))
                .unwrap()
                .transition()
        })
    });
}

fn reproduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reproduction");
    group.sample_size(10);
    group.bench_function("section5", |b| b.iter(reproduce_section5));
    group.finish();
}

criterion_group!(benches, classification, transition, reproduction);
criterion_main!(benches);
