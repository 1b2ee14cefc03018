use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use posmech::{
    best_menu_search, check_weak_majorization, iron, ironed_allocation, optimal_exclusion,
    DiscreteEconomy, Objective, StatusAllocation, TypeDistribution, ValueFunction,
};

fn bench_optimal_exclusion(c: &mut Criterion) {
    let dist = TypeDistribution::parse("uniform(0,1)").unwrap();
    let v = ValueFunction::zero();
    c.bench_function("optimal_exclusion/uniform", |b| {
        b.iter(|| std::hint::black_box(optimal_exclusion(&dist, &v)))
    });
    let exp = TypeDistribution::parse("exp(1)").unwrap();
    c.bench_function("optimal_exclusion/exp", |b| {
        b.iter(|| std::hint::black_box(optimal_exclusion(&exp, &v)))
    });
}

fn bench_ironing(c: &mut Criterion) {
    let dist = TypeDistribution::parse("power(0.5)").unwrap();
    c.bench_function("iron/power_0.5", |b| {
        b.iter(|| std::hint::black_box(iron(&dist, 0.0, 4096)))
    });
    c.bench_function("ironed_allocation/power_0.5", |b| {
        b.iter(|| std::hint::black_box(ironed_allocation(&dist, 0.0)))
    });
}

fn bench_feasibility(c: &mut Criterion) {
    let dist = TypeDistribution::parse("uniform(0,1)").unwrap();
    let alloc = StatusAllocation::full_separation(&dist, 0.3);
    c.bench_function("check_weak_majorization/full_separation", |b| {
        b.iter(|| std::hint::black_box(check_weak_majorization(&alloc, &dist, 1e-9)))
    });
}

fn bench_menu_search(c: &mut Criterion) {
    let dist = TypeDistribution::parse("uniform(0,1)").unwrap();
    let v = ValueFunction::zero();
    for k in [200usize, 500] {
        let econ = DiscreteEconomy::discretize(&dist, &v, k).unwrap();
        c.bench_function(&format!("best_menu_search/revenue_k{k}_m12"), |b| {
            b.iter_batched(
                || econ.clone(),
                |e| std::hint::black_box(best_menu_search(&e, Objective::Revenue, 12, true)),
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group!(
    benches,
    bench_optimal_exclusion,
    bench_ironing,
    bench_feasibility,
    bench_menu_search
);
criterion_main!(benches);
