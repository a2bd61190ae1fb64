use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pulsepair::channelizer::channelize;
use pulsepair::pipeline::FileProcessor;
use pulsepair::stats::binomial_tail;
use pulsepair::{cross_correlate, Channelizer};
use pulsepair_bench::DeskFixture;

fn bench_channelize(c: &mut Criterion) {
    let fx = DeskFixture::new(1);
    let mut ch = Channelizer::new(*fx.sim.band());
    c.bench_function("channelize desk frame", |b| b.iter(|| ch.channelize(black_box(&fx.frames[0].east)).unwrap()));
}

fn bench_simulate(c: &mut Criterion) {
    let fx = DeskFixture::new(0);
    c.bench_function("simulate desk tick", |b| b.iter(|| fx.sim.frames(60300.0, 1, 0).count()));
}

fn bench_detect(c: &mut Criterion) {
    let fx = DeskFixture::new(4);
    c.bench_function("first-level detect, 8 desk frame pairs", |b| {
        b.iter(|| {
            let mut p = FileProcessor::new(&fx.detector, &fx.scenario);
            for f in &fx.frames {
                p.push(f).unwrap();
            }
            p.finish().candidates.len()
        })
    });
}

fn bench_correlate(c: &mut Criterion) {
    let fx = DeskFixture::new(1);
    let band = *fx.sim.band();
    let e = channelize(&fx.frames[0].east, band).unwrap();
    let w = channelize(&fx.frames[0].west, band).unwrap();
    c.bench_function("cross-correlate desk spectra", |b| b.iter(|| cross_correlate(black_box(&e), black_box(&w)).unwrap()));
}

fn bench_binomial(c: &mut Criterion) {
    c.bench_function("binomial tail n=1e6", |b| b.iter(|| binomial_tail(black_box(1_000_000), 25_000, 0.024).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_channelize, bench_simulate, bench_detect, bench_correlate, bench_binomial
}
criterion_main!(benches);
