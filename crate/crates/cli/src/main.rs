use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thinkaloud_core::analyzer::{
    self, classify_engagement, classify_recap, session_stats, EngagementThresholds, RecapBands, SessionStats,
};
use thinkaloud_core::event::{read_log_file, to_jsonl, SessionEvent};
use thinkaloud_core::oracle::{RuleConfig, RuleOracle};
use thinkaloud_core::synth::{self, SynthSpec};
use thinkaloud_core::Mode;

#[derive(Parser)]
#[command(name = "analyze", version, about = "Statistics and exports over session event logs")]
struct Cli {
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Event counts of a session.
    Stats { log: PathBuf },
    /// Words per minute of the final transcript.
    Wpm { log: PathBuf },
    /// Engagement or recap pattern of a session.
    Classify {
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = Activity::Thinkaloud)]
        activity: Activity,
    },
    /// Plot-relevant events as CSV.
    Timeline {
        log: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replays a log with the rule-based oracle and compares the bytes.
    Replay {
        log: PathBuf,
        /// Rule table overriding the shipped one.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Write the regenerated log here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Writes a seeded synthetic session log.
    Synth {
        #[arg(long, default_value_t = 8)]
        seed: u64,
        #[arg(long, default_value_t = 900_000)]
        duration_ms: u64,
        #[arg(long)]
        baseline: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Activity {
    Thinkaloud,
    Recap,
}

fn load(path: &Path) -> Result<Vec<SessionEvent>> {
    read_log_file(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn print_stats(s: &SessionStats) {
    let secs = s.duration / 1000;
    let rows = [
        ("duration", format!("{}:{:02}", secs / 60, secs % 60)),
        ("notes created", s.notes_created.to_string()),
        ("notes merged", s.notes_merged.to_string()),
        ("notes checked", s.notes_checked.to_string()),
        ("tips shown", s.tips_shown.to_string()),
        ("tip responses", s.tip_responses.to_string()),
        ("reminders shown", s.reminders_shown.to_string()),
        ("filters applied", s.filter_applications.to_string()),
    ];
    for (k, v) in rows {
        println!("{k:<16} {v:>8}");
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Stats { log } => {
            let stats = session_stats(&load(&log)?);
            if cli.json {
                print_json(&stats)?;
            } else {
                print_stats(&stats);
            }
        }
        Command::Wpm { log } => {
            let events = load(&log)?;
            let stats = session_stats(&events);
            let transcript = analyzer::final_transcript(&events);
            let words = analyzer::count_words(&transcript);
            let wpm = analyzer::wpm(&transcript, stats.duration_minutes())?;
            if cli.json {
                print_json(&serde_json::json!({ "words": words, "minutes": stats.duration_minutes(), "wpm": wpm }))?;
            } else {
                println!("{words} words over {:.2} min = {wpm:.1} wpm", stats.duration_minutes());
            }
        }
        Command::Classify { log, activity } => {
            let stats = session_stats(&load(&log)?);
            let label = match activity {
                Activity::Thinkaloud => {
                    serde_json::to_value(classify_engagement(&stats, &EngagementThresholds::default()))?
                }
                Activity::Recap => serde_json::to_value(classify_recap(&stats, &RecapBands::default()))?,
            };
            if cli.json {
                print_json(&serde_json::json!({ "pattern": label, "stats": stats }))?;
            } else {
                println!("{}", label.as_str().unwrap_or_default());
            }
        }
        Command::Timeline { log, output } => {
            let events = load(&log)?;
            match output {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    analyzer::write_timeline_csv(&events, file)?;
                }
                None => analyzer::write_timeline_csv(&events, io::stdout().lock())?,
            }
        }
        Command::Replay { log, rules, output } => {
            let original = fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            let config = match rules {
                Some(path) => RuleConfig::from_toml(&fs::read_to_string(&path)?)?,
                None => RuleConfig::default(),
            };
            let regenerated = thinkaloud_core::replay_jsonl(&original, Arc::new(RuleOracle::new(config)?))?;
            if let Some(path) = output {
                fs::write(&path, &regenerated)?;
            }
            let identical = regenerated == original;
            if cli.json {
                print_json(&serde_json::json!({ "identical": identical, "bytes": regenerated.len() }))?;
            } else if identical {
                println!("identical ({} bytes)", regenerated.len());
            }
            if !identical {
                let line = original.lines().zip(regenerated.lines()).position(|(a, b)| a != b);
                match line {
                    Some(i) => bail!("replay diverges at line {}", i + 1),
                    None => bail!("replay differs in length"),
                }
            }
        }
        Command::Synth { seed, duration_ms, baseline, output } => {
            let spec = if baseline {
                SynthSpec::baseline(seed, duration_ms)
            } else {
                SynthSpec::think_aloud(seed, duration_ms)
            };
            let events = synth::generate(&spec);
            let mut file = File::create(&output).with_context(|| format!("creating {}", output.display()))?;
            file.write_all(to_jsonl(&events).as_bytes())?;
            if !cli.json {
                let mode = if spec.mode == Mode::Baseline { "baseline" } else { "full" };
                println!("{} events ({mode}) -> {}", events.len(), output.display());
            }
        }
    }
    Ok(())
}
