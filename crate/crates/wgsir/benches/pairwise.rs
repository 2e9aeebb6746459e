use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use wgsir::measures::EmpiricalMeasure;
use wgsir::ot::{pairwise_matrix, pairwise_matrix_seq, Metric, SlicingSpec};
use wgsir::simgen::replication_rng;

fn univariate_measures(n: usize, m: usize) -> Vec<EmpiricalMeasure> {
    let mut rng = replication_rng(11, 0);
    (0..n)
        .map(|_| {
            let shift: f64 = rng.random::<f64>() * 3.0;
            let vals: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + shift).collect();
            EmpiricalMeasure::from_scalars(&vals).unwrap()
        })
        .collect()
}

fn bivariate_measures(n: usize, m: usize) -> Vec<EmpiricalMeasure> {
    let mut rng = replication_rng(13, 0);
    (0..n)
        .map(|_| {
            let shift: f64 = rng.random::<f64>() * 3.0;
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| vec![rng.random::<f64>() + shift, rng.random::<f64>() - shift])
                .collect();
            EmpiricalMeasure::from_samples(&rows).unwrap()
        })
        .collect()
}

fn bench_pairwise(c: &mut Criterion) {
    let uni = univariate_measures(60, 50);
    let mut g = c.benchmark_group("pairwise_w2");
    g.bench_function("parallel", |b| {
        b.iter(|| pairwise_matrix(&uni, Metric::W2, None).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| pairwise_matrix_seq(&uni, Metric::W2, None).unwrap())
    });
    g.finish();

    let biv = bivariate_measures(40, 30);
    let slicing = SlicingSpec::new(50, 3, 2).unwrap();
    let mut g = c.benchmark_group("pairwise_sw2");
    g.bench_function("parallel", |b| {
        b.iter(|| pairwise_matrix(&biv, Metric::Sw2, Some(&slicing)).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| pairwise_matrix_seq(&biv, Metric::Sw2, Some(&slicing)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_pairwise);
criterion_main!(benches);
