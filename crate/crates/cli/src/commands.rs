//! Batch command implementations. Each returns the process exit code:
//! 0 success, 1 validation or tolerance failure (I/O and usage errors
//! surface as errors and are mapped by main).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use sweetspot_core::error::Error as CoreError;
use sweetspot_core::eventlog;
use sweetspot_core::figures::{figure_csv, figure_data, infer_figure_set, FigureSet};
use sweetspot_core::fixtures;
use sweetspot_core::group::Group;
use sweetspot_core::metrics::{aggregate_events, build_level_table};
use sweetspot_core::replay::{replay_fixture, FixtureId};
use sweetspot_core::report::{analyze_table, stats_csv, DEFAULT_SEGMENT_BOUNDARY};
use sweetspot_core::saturation::detect_saturation;
use sweetspot_core::series::ResponseSeries;
use sweetspot_core::simulate::simulate_population;

use crate::config::SimConfigFile;
use crate::OutputFormat;

/// `replay <fixture>`: recompute a bundled or on-disk fixture and compare
/// every derived cell against the published reference values.
pub fn replay(fixture: &Path, format: OutputFormat, out: Option<&Path>) -> Result<i32> {
    let name = fixture
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let id = match FixtureId::from_name(name) {
        Some(id) => id,
        None => bail!(
            "no reference expectations for {name:?}; known fixtures: \
             table1_g4.csv, table2_g5.csv, table3_groups.csv"
        ),
    };
    let text = if fixture.exists() {
        std::fs::read_to_string(fixture)?
    } else if let Some(bundled) = fixtures::bundled(name) {
        bundled.to_string()
    } else {
        bail!(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found", fixture.display()),
        ));
    };
    let report = replay_fixture(id, &text)?;
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        OutputFormat::Csv => {
            for line in report.summary_lines() {
                println!("{line}");
            }
        }
    }
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

/// `simulate --config c.json --out events.jsonl`: generate an event log
/// and a run-manifest sidecar.
pub fn simulate(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    fixed_clock: bool,
) -> Result<i32> {
    let mut file = SimConfigFile::load(config_path)?;
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let config = file.resolve(base_dir)?;

    let base_ts = if fixed_clock {
        0
    } else {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let events = simulate_population(&config, base_ts)?;
    let header = config.header();

    let mut buffer = Vec::new();
    eventlog::write_log(&mut buffer, Some(&header), &events)?;
    std::fs::write(out, &buffer).with_context(|| format!("writing {}", out.display()))?;

    let log_digest = Sha256::digest(&buffer);
    let manifest = serde_json::json!({
        "sim_config_digest": header.sim_config_digest,
        "seed": config.seed,
        "rng": header.rng,
        "n_users": config.n_users,
        "n_events": events.len(),
        "log_sha256": log_digest.iter().map(|b| format!("{b:02x}")).collect::<String>(),
    });
    let manifest_path = manifest_path_for(out);
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    eprintln!(
        "wrote {} events to {} (manifest {})",
        events.len(),
        out.display(),
        manifest_path.display()
    );
    Ok(0)
}

pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// `analyze <events.jsonl> --group G4 --out dir`: aggregate one group's
/// events into the statistics table and the series-analysis report.
pub fn analyze(
    events_path: &Path,
    group: Group,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<i32> {
    let (_, events) = eventlog::read_log_file(events_path)?;
    let by_group = aggregate_events(&events, None);
    std::fs::create_dir_all(out_dir)?;

    let counts = match by_group.get(&group) {
        Some(counts) => counts,
        None => {
            let available: Vec<String> = by_group.keys().map(|g| g.to_string()).collect();
            if events.is_empty() {
                // still produce an empty table for scripting convenience
                let stats_path = out_dir.join(format!("{group}_stats.csv"));
                std::fs::write(&stats_path, stats_csv(&[]))?;
                eprintln!("warning: {} contains no events", events_path.display());
            } else {
                eprintln!(
                    "error: no events for {group}; groups present: {}",
                    available.join(", ")
                );
            }
            return Ok(1);
        }
    };

    let table = build_level_table(counts)?;
    let report = analyze_table(
        group.as_str(),
        &table,
        sweetspot_core::saturation::DEFAULT_WINDOW,
        sweetspot_core::saturation::DEFAULT_EPSILON,
        DEFAULT_SEGMENT_BOUNDARY,
    )?;

    let stats_path = out_dir.join(format!("{group}_stats.csv"));
    std::fs::write(&stats_path, stats_csv(&table))?;
    let report_path = out_dir.join(format!("{group}_analysis.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;

    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        OutputFormat::Csv => {
            println!("wrote {}", stats_path.display());
            println!("wrote {}", report_path.display());
            if let Some(saturation) = &report.saturation {
                println!(
                    "saturation: level {} (fallback: {})",
                    saturation.detected_level, saturation.fallback
                );
            }
        }
    }
    Ok(0)
}

/// `detect <table.csv>`: saturation report for a counts table, JSON on
/// stdout. Exit 0 only for a non-fallback detection.
pub fn detect(table_path: &Path, window: usize, epsilon: f64) -> Result<i32> {
    let counts = fixtures::load_counts(table_path)?;
    let table = build_level_table(&counts)?;
    let rpf = ResponseSeries::new(
        "rpf",
        table
            .iter()
            .map(|r| r.rpf.unwrap_or(0.0))
            .collect::<Vec<_>>(),
    );
    let rnf = ResponseSeries::new(
        "rnf",
        table
            .iter()
            .map(|r| r.rnf.unwrap_or(0.0))
            .collect::<Vec<_>>(),
    );
    match detect_saturation(&rpf, &rnf, window, epsilon) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.fallback { 1 } else { 0 })
        }
        Err(e @ CoreError::TooShort { .. }) => {
            eprintln!("error: {e}");
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

/// `figures <table.csv> --out dir`: one `level,value` CSV per figure.
pub fn figures(table_path: &Path, out_dir: &Path, set: Option<FigureSet>) -> Result<i32> {
    let counts = fixtures::load_counts(table_path)?;
    let table = build_level_table(&counts)?;
    let set = set.unwrap_or_else(|| infer_figure_set(&table));
    let data = figure_data(&table, set)?;
    std::fs::create_dir_all(out_dir)?;
    for series in &data.figures {
        let path = out_dir.join(format!("{}.csv", series.name));
        std::fs::write(&path, figure_csv(&data.levels, series))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}
