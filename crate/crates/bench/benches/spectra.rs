use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use locc_spectrum::locc::{apply_protocol, to_normal_form};
use locc_spectrum::random::{self, seeded};
use locc_spectrum::spectral::{check_general_split, eval_f_alpha};

fn f_alpha(c: &mut Criterion) {
    let mut rng = seeded(3);
    let mut group = c.benchmark_group("eval_f_alpha");
    for d in [2usize, 8, 32] {
        let s = random::state(&mut rng, &[d, d]);
        group.bench_with_input(BenchmarkId::from_parameter(d), &s, |b, s| {
            b.iter(|| eval_f_alpha(black_box(s), &[0], 0.5).unwrap())
        });
    }
    group.finish();

    let s = random::state(&mut rng, &[6, 6]);
    let (a, bm) = random::contraction_pair(&mut rng, 6);
    c.bench_function("check_general_split/6x6", |b| {
        b.iter(|| check_general_split(black_box(&s), 0, &a, &bm, 0.5).unwrap())
    });
}

fn protocols(c: &mut Criterion) {
    let mut rng = seeded(4);
    let labels = vec!["x".to_string()];
    let p = random::protocol(&mut rng, &[3, 3], &labels, 3, 3);
    let input = random::conditionally_pure(&mut rng, &[3, 3], &labels);
    let nf = to_normal_form(&p).unwrap();
    c.bench_function("to_normal_form/3 steps", |b| b.iter(|| to_normal_form(black_box(&p)).unwrap()));
    c.bench_function("apply_protocol/normal form", |b| {
        b.iter(|| apply_protocol(black_box(&input), &nf).unwrap())
    });
}

criterion_group!(benches, f_alpha, protocols);
criterion_main!(benches);
