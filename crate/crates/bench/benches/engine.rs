use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use thinkaloud_core::analyzer::count_words;
use thinkaloud_core::chunker::PAUSE_MS;
use thinkaloud_core::event::to_jsonl;
use thinkaloud_core::synth::{generate, SynthSpec};
use thinkaloud_core::{replay, replay_jsonl, Chunker, Lexicon, RuleOracle, TranscriptFragment};

const WORDS: [&str; 12] =
    ["the", "kitchen", "window", "glare", "okay", "now", "stairs", "and", "garden", "wall", "so", "light"];

fn fragments(n: usize) -> Vec<TranscriptFragment> {
    let mut t = 0;
    (0..n)
        .map(|i| {
            let text: Vec<&str> = (0..6).map(|j| WORDS[(i * 7 + j * 3) % WORDS.len()]).collect();
            let gap = if i % 9 == 8 { 9_000 } else { 400 };
            t += gap;
            let f = TranscriptFragment::final_text(text.join(" "), t, t + 1500);
            t += 1500;
            f
        })
        .collect()
}

fn chunker_ingest(c: &mut Criterion) {
    let oracle = RuleOracle::default();
    let frags = fragments(500);
    c.bench_function("chunker_ingest_500", |b| {
        b.iter_batched(
            || Chunker::new(Lexicon::default(), PAUSE_MS),
            |mut ch| {
                for f in &frags {
                    ch.tick(f.t_start);
                    black_box(ch.ingest_fragment(f.clone(), &oracle).unwrap());
                }
                ch.flush()
            },
            BatchSize::SmallInput,
        )
    });
}

fn replay_session(c: &mut Criterion) {
    let log = generate(&SynthSpec::think_aloud(21, 180_000));
    let text = to_jsonl(&log);
    let mut g = c.benchmark_group("replay");
    g.sample_size(20);
    g.bench_function("events_3min", |b| b.iter(|| replay(black_box(&log), Arc::new(RuleOracle::default())).unwrap()));
    g.bench_function("jsonl_3min", |b| {
        b.iter(|| replay_jsonl(black_box(&text), Arc::new(RuleOracle::default())).unwrap())
    });
    g.finish();
}

fn word_count(c: &mut Criterion) {
    let text = "I don't think the kitchen's window-light works, it's o'clock and we'll see. ".repeat(400);
    c.bench_function("count_words_30k_chars", |b| b.iter(|| count_words(black_box(&text))));
}

criterion_group!(benches, chunker_ingest, replay_session, word_count);
criterion_main!(benches);
