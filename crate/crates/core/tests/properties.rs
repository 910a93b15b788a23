mod common;

use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use thinkaloud_core::analyzer::{
    classify_engagement, count_words, final_transcript, session_stats, timeline, wpm, EngagementPattern,
    EngagementThresholds,
};
use thinkaloud_core::event::{parse_jsonl, to_jsonl, EventBody};
use thinkaloud_core::synth::{counts_log, generate, EventCounts, SynthSpec};
use thinkaloud_core::trace::RecordOutcome;
use thinkaloud_core::{replay, Mode, PointerSample, RuleOracle, TraceStore};

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.events.jsonl"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn shipped_fixtures_match_the_generator() {
    let cases = [
        ("think_aloud_15min", SynthSpec::think_aloud(8, 900_000)),
        ("think_aloud_3min", SynthSpec::think_aloud(21, 180_000)),
        ("baseline_2min", SynthSpec::baseline(5, 120_000)),
    ];
    for (name, spec) in cases {
        assert_eq!(to_jsonl(&generate(&spec)), fixture(name), "{name}");
    }
}

#[test]
fn p06_counts_fixture() {
    let log = parse_jsonl(&fixture("p06_counts")).unwrap();
    let s = session_stats(&log);
    assert_eq!(s.duration, 922_000);
    assert_eq!((s.notes_created, s.notes_merged, s.notes_checked, s.tips_shown, s.tip_responses), (55, 27, 4, 73, 24));
    assert_eq!(classify_engagement(&s, &EngagementThresholds::default()), EngagementPattern::HeavyIntegrator);
}

#[test]
fn timeline_is_sorted_and_complete() {
    let log = parse_jsonl(&fixture("think_aloud_3min")).unwrap();
    let rows = timeline(&log);
    assert!(rows.windows(2).all(|w| w[0].t <= w[1].t));
    let s = session_stats(&log);
    let count = |k: &str| rows.iter().filter(|r| r.kind == k).count();
    assert_eq!(count("note_created"), s.notes_created);
    assert_eq!(count("note_merged"), s.notes_merged);
    assert_eq!(count("tip_shown"), s.tips_shown);
    assert_eq!(count("reminder_shown"), s.reminders_shown);
}

#[test]
fn baseline_fixture_has_speech_and_no_notes() {
    let log = parse_jsonl(&fixture("baseline_2min")).unwrap();
    assert!(log.iter().all(|e| e.body.is_input()));
    let words = count_words(&final_transcript(&log));
    assert!(words > 50, "{words} words");
    let rate = wpm(&final_transcript(&log), session_stats(&log).duration_minutes()).unwrap();
    assert!(rate > 0.0);
}

#[test]
fn counts_log_round_trips_counts() {
    let c = EventCounts {
        duration: 600_000,
        created: 12,
        merged: 5,
        checked: 3,
        tips_shown: 9,
        tip_responses: 2,
        reminders: 4,
        filters: 1,
    };
    let s = session_stats(&counts_log(&c));
    assert_eq!(s.duration, 600_000);
    assert_eq!(
        (
            s.notes_created,
            s.notes_merged,
            s.notes_checked,
            s.tips_shown,
            s.tip_responses,
            s.reminders_shown,
            s.filter_applications
        ),
        (12, 5, 3, 9, 2, 4, 1)
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn word_count_ignores_whitespace_layout(words in prop::collection::vec("[a-zA-Z']{1,8}", 0..30),
                                            seps in prop::collection::vec(prop::sample::select(vec![" ", "  ", "\n", "\t "]), 30)) {
        let single = words.join(" ");
        let mixed: String = words.iter().zip(seps.iter()).map(|(w, s)| format!("{w}{s}")).collect();
        prop_assert_eq!(count_words(&single), count_words(&mixed));
    }

    #[test]
    fn trace_store_is_sorted_with_one_sample_per_bucket(ts in prop::collection::vec(0u64..5_000, 0..200)) {
        let mut store = TraceStore::default();
        let mut late = 0;
        for (i, t) in ts.iter().enumerate() {
            if store.record_sample(PointerSample::new_2d(i as f64, 0.0, *t)) == RecordOutcome::DroppedLate {
                late += 1;
            }
        }
        let s = store.samples();
        prop_assert!(s.windows(2).all(|w| w[0].t / 50 < w[1].t / 50));
        prop_assert_eq!(store.late_dropped(), late);
        if let (Some(first), Some(t0)) = (s.first(), ts.first()) {
            prop_assert_eq!(first.t / 50, t0 / 50);
        }
    }

    #[test]
    fn stats_survive_replay(seed in 0u64..1_000) {
        let log = generate(&SynthSpec::think_aloud(seed, 90_000));
        let replayed = replay(&log, Arc::new(RuleOracle::default())).unwrap();
        prop_assert_eq!(session_stats(replayed.log()), session_stats(&log));
        prop_assert_eq!(replayed.log(), &log[..]);
    }

    #[test]
    fn session_log_seq_and_config(script in prop::collection::vec(common::utter(), 0..20)) {
        let e = common::run_session(Mode::Full, &script);
        let log = e.log();
        prop_assert!(matches!(log[0].body, EventBody::Config(_)));
        prop_assert!(log.iter().enumerate().all(|(i, ev)| ev.seq == i as u64 + 1));
        let ends = log.iter().filter(|ev| ev.body.kind() == "session_end").count();
        prop_assert_eq!(ends, 1);
        prop_assert_eq!(parse_jsonl(&to_jsonl(log)).unwrap(), log.to_vec());
    }
}
