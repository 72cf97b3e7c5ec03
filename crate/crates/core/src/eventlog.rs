//! JSONL event logs: one event per line, with an optional leading header
//! line carrying the simulation provenance.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ExposureEvent;

/// First line of a simulated log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub sim_config_digest: String,
    pub seed: u64,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LogLine {
    Event(ExposureEvent),
    Header(LogHeader),
}

/// Parses a JSONL log, returning the header (if any) and all events.
pub fn read_log<R: BufRead>(
    reader: R,
    path: &str,
) -> Result<(Option<LogHeader>, Vec<ExposureEvent>)> {
    let mut header = None;
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogLine>(&line) {
            Ok(LogLine::Event(ev)) => events.push(ev),
            Ok(LogLine::Header(h)) => {
                if idx == 0 {
                    header = Some(h);
                } else {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: idx + 1,
                        message: "header line after events".into(),
                    });
                }
            }
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: idx + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((header, events))
}

pub fn read_log_file(path: &Path) -> Result<(Option<LogHeader>, Vec<ExposureEvent>)> {
    let file = std::fs::File::open(path)?;
    read_log(std::io::BufReader::new(file), &path.display().to_string())
}

/// Writes a header (when given) followed by one event per line.
pub fn write_log<W: Write>(
    mut writer: W,
    header: Option<&LogHeader>,
    events: &[ExposureEvent],
) -> Result<()> {
    if let Some(h) = header {
        serde_json::to_writer(&mut writer, h)?;
        writer.write_all(b"\n")?;
    }
    for ev in events {
        serde_json::to_writer(&mut writer, ev)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
