use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gemscope::lexicon::LexiconPack;
use gemscope::par::ExecMode;
use gemscope::pipeline::{analyze_batch, PipelineConfig};
use gemscope::rules::SegmentKind;
use gemscope::train::{train_from_features, Sample};

const FIXTURES: [&str; 4] = [
    include_str!("../tests/fixtures/biopsies.txt"),
    include_str!("../tests/fixtures/insulin.txt"),
    include_str!("../tests/fixtures/statins.txt"),
    include_str!("../tests/fixtures/headings.txt"),
];

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn batch(n: usize) -> Vec<(String, String)> {
    (0..n)
        .map(|i| (format!("doc{i}"), FIXTURES[i % FIXTURES.len()].repeat(1 + i % 3)))
        .collect()
}

// Cheap xorshift so the bench needs no RNG crate; the mix of features just has to be stable.
fn samples(n: usize) -> Vec<Sample> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    (0..n)
        .map(|_| {
            let r = next();
            let features: BTreeSet<String> = (0..24).filter(|b| r >> b & 1 == 1).map(|b| format!("f{b}")).take(6).collect();
            let label = match r >> 60 {
                0..=4 => Some(SegmentKind::Action),
                5..=8 => Some(SegmentKind::Condition),
                9..=10 => Some(SegmentKind::Explanation),
                _ => None,
            };
            Sample { features, label }
        })
        .collect()
}

fn bench_analyze(c: &mut Criterion) {
    let pack = LexiconPack::builtin();
    let config = PipelineConfig::default();
    let mut group = c.benchmark_group("analyze_batch");
    for n in [8usize, 64] {
        let inputs = batch(n);
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &inputs, |b, inputs| {
                b.iter(|| analyze_batch(inputs, &pack, &config, mode))
            });
        }
    }
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_from_features");
    group.sample_size(20);
    for n in [500usize, 4000] {
        let data = samples(n);
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &data, |b, data| {
                b.iter(|| train_from_features(data, 3.84, mode))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_analyze, bench_train);
criterion_main!(benches);
