use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use evbench_core::ingest::{
    parse_events, parse_trajectory, parse_velocities, read_events_binary, EventFormat,
};
use evbench_core::metrics::VelocitySample;
use evbench_core::{EventStream, Trajectory};
use serde::Serialize;

use crate::error::{require_file, CliError};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    require_file(path)?;
    let f = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(CliError::from)?;
    Ok(BufReader::new(f))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let r = open(path)?;
    parse_trajectory(r).map_err(|e| CliError::other(format!("{}: {e}", path.display())))
}

pub fn read_velocities(path: &Path) -> Result<Vec<VelocitySample>, CliError> {
    let r = open(path)?;
    parse_velocities(r).map_err(|e| CliError::other(format!("{}: {e}", path.display())))
}

/// `.csv` files need an explicit resolution; anything else is read as the
/// packed binary format.
pub fn read_events(
    path: &Path,
    camera_id: &str,
    resolution: Option<(u16, u16)>,
) -> Result<EventStream, CliError> {
    let r = open(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let result = if is_csv {
        let (w, h) = resolution.ok_or_else(|| {
            CliError::other(format!(
                "{}: CSV events need --width and --height",
                path.display()
            ))
        })?;
        parse_events(r, EventFormat::Csv, w, h, camera_id)
    } else {
        read_events_binary(r, camera_id)
    };
    result.map_err(|e| CliError::other(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(CliError::from)?;
    }
    let f = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::from)?;
    Ok(BufWriter::new(f))
}

/// Pretty JSON with a trailing newline to `path`, or stdout.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::other)?;
    text.push('\n');
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(CliError::other)
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::other),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(CliError::other)
}
