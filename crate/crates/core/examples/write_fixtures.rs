//! Regenerates the shipped test fixtures.
//!
//! cargo run -p thinkaloud-core --example write_fixtures

use std::fs;
use std::path::Path;

use thinkaloud_core::event::to_jsonl;
use thinkaloud_core::synth::{counts_log, generate, EventCounts, SynthSpec};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    fs::create_dir_all(&dir)?;
    let sessions = [
        ("think_aloud_15min", SynthSpec::think_aloud(8, 900_000)),
        ("think_aloud_3min", SynthSpec::think_aloud(21, 180_000)),
        ("baseline_2min", SynthSpec::baseline(5, 120_000)),
    ];
    for (name, spec) in sessions {
        let log = generate(&spec);
        fs::write(dir.join(format!("{name}.events.jsonl")), to_jsonl(&log))?;
        println!("{name}: {} events", log.len());
    }
    let p06 = EventCounts {
        duration: 922_000,
        created: 55,
        merged: 27,
        checked: 4,
        tips_shown: 73,
        tip_responses: 24,
        reminders: 0,
        filters: 0,
    };
    fs::write(dir.join("p06_counts.events.jsonl"), to_jsonl(&counts_log(&p06)))?;
    Ok(())
}
