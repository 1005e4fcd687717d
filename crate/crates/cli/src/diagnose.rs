use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::PathBuf;

use clap::Args;
use evbench_core::diagnostics::{
    depth_bound_table, flow_difficulty, stereo_stream_ratio, time_map_parallel,
    windowed_event_counts, FlowInput,
};
use evbench_core::metrics::{linspace, DEFAULT_XI_POINTS};
use evbench_core::report::{DiagnosticsReport, StreamSummary};

use crate::error::{require_file, CliError};
use crate::io::{create, emit_json, read_events};

#[derive(Args, Debug, Clone)]
pub struct DepthArgs {
    /// Horizontal focal length in pixels; enables the depth-bound table.
    #[arg(long)]
    pub fx: Option<f64>,
    /// Stereo baseline in metres; repeatable.
    #[arg(long)]
    pub baseline: Vec<f64>,
    /// Acceptable relative depth error.
    #[arg(long, default_value_t = 0.15)]
    pub eps: f64,
    /// Disparity measurement error in pixels.
    #[arg(long, default_value_t = 0.5)]
    pub du: f64,
}

#[derive(Args, Debug, Clone)]
pub struct DiagnoseArgs {
    /// Event stream(s); two files are treated as a left/right stereo pair.
    #[arg(long, required = true, num_args = 1..=2)]
    pub events: Vec<PathBuf>,
    /// Sensor width, required for CSV input.
    #[arg(long)]
    pub width: Option<u16>,
    /// Sensor height, required for CSV input.
    #[arg(long)]
    pub height: Option<u16>,
    /// Window length for event counts, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub window: f64,
    /// Export a 16-bit PGM time map per stream into this directory.
    #[arg(long)]
    pub time_map_dir: Option<PathBuf>,
    /// Time-map window start, seconds; the first event by default.
    #[arg(long)]
    pub time_map_start: Option<f64>,
    /// Time-map window length, seconds.
    #[arg(long, default_value_t = 0.03)]
    pub time_map_length: f64,
    #[command(flatten)]
    pub depth: DepthArgs,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: DiagnoseArgs) -> Result<(), CliError> {
    for p in &a.events {
        require_file(p)?;
    }
    let resolution = a.width.zip(a.height);
    let ids: Vec<String> = if a.events.len() == 2 {
        vec!["left".into(), "right".into()]
    } else {
        vec![a.events[0]
            .file_stem()
            .map_or_else(|| "stream".into(), |s| s.to_string_lossy().into_owned())]
    };
    let streams = a
        .events
        .iter()
        .zip(&ids)
        .map(|(p, id)| read_events(p, id, resolution))
        .collect::<Result<Vec<_>, _>>()?;

    let mut config = BTreeMap::new();
    for (id, p) in ids.iter().zip(&a.events) {
        config.insert(format!("events.{id}"), p.display().to_string());
    }
    config.insert("window".into(), a.window.to_string());
    if let Some(d) = &a.time_map_dir {
        config.insert("time_map_dir".into(), d.display().to_string());
        config.insert("time_map_length".into(), a.time_map_length.to_string());
        if let Some(s) = a.time_map_start {
            config.insert("time_map_start".into(), s.to_string());
        }
    }
    let mut report = DiagnosticsReport::new(config);

    for s in &streams {
        let windowed = windowed_event_counts(s, a.window).map_err(CliError::other)?;
        if windowed.trailing_partial {
            report.warnings.push(format!(
                "{}: last count window extends past the final event",
                s.camera_id
            ));
        }
        let time_map = match &a.time_map_dir {
            Some(dir) => {
                let t0 = a
                    .time_map_start
                    .or_else(|| s.events().first().map(|e| e.t()))
                    .unwrap_or(0.0);
                let map = time_map_parallel(s, t0, t0 + a.time_map_length, 1 << 16);
                let path = dir.join(format!("{}_time_map.pgm", s.camera_id));
                let mut w = create(&path)?;
                map.write_pgm16(&mut w).map_err(CliError::other)?;
                Some(path.display().to_string())
            }
            None => None,
        };
        report.streams.push(StreamSummary {
            camera_id: s.camera_id.clone(),
            width: s.width,
            height: s.height,
            events: s.len(),
            windowed,
            time_map,
        });
    }
    if let [left, right] = streams.as_slice() {
        let stereo = stereo_stream_ratio(left, right).map_err(CliError::other)?;
        if stereo.inconsistent {
            report.warnings.push(format!(
                "stereo event counts differ by {:.2}%",
                stereo.ratio_percent
            ));
        }
        report.stereo = Some(stereo);
    }
    if let Some(fx) = a.depth.fx {
        report.depth_bounds = depth_bound_table(fx, &a.depth.baseline, a.depth.eps, a.depth.du)
            .map_err(CliError::other)?;
    }
    emit_json(&report, a.out.as_deref())
}

#[derive(Args, Debug, Clone)]
pub struct DepthBoundArgs {
    #[arg(long)]
    pub fx: f64,
    /// Stereo baseline in metres; repeatable.
    #[arg(long, required = true)]
    pub baseline: Vec<f64>,
    #[arg(long, default_value_t = 0.15)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub du: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_depth_bound(a: DepthBoundArgs) -> Result<(), CliError> {
    let table = depth_bound_table(a.fx, &a.baseline, a.eps, a.du).map_err(CliError::other)?;
    emit_json(&table, a.out.as_deref())
}

#[derive(Args, Debug, Clone)]
pub struct FlowArgs {
    /// Text file: one flow vector `u v` or one magnitude per line, `#` comments.
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    /// Upper end of the normalized-magnitude grid.
    #[arg(long, default_value_t = 1.0)]
    pub xi_max: f64,
    #[arg(long, default_value_t = DEFAULT_XI_POINTS)]
    pub xi_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_flow(r: impl BufRead) -> Result<FlowInput, String> {
    let mut vectors = Vec::new();
    let mut magnitudes = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| format!("line {}: invalid number {s:?}", i + 1)))
            .collect::<Result<_, _>>()?;
        match nums.as_slice() {
            [m] => magnitudes.push(*m),
            [u, v] => vectors.push([*u, *v]),
            _ => return Err(format!("line {}: expected 1 or 2 values", i + 1)),
        }
    }
    match (vectors.is_empty(), magnitudes.is_empty()) {
        (true, _) => Ok(FlowInput::Magnitudes(magnitudes)),
        (false, true) => Ok(FlowInput::Vectors(vectors)),
        (false, false) => Err("mixed vector and magnitude lines".into()),
    }
}

pub fn run_flow(a: FlowArgs) -> Result<(), CliError> {
    require_file(&a.flow)?;
    let file = std::fs::File::open(&a.flow).map_err(CliError::other)?;
    let input = parse_flow(std::io::BufReader::new(file))
        .map_err(|e| CliError::other(format!("{}: {e}", a.flow.display())))?;
    let grid = linspace(0.0, a.xi_max, a.xi_points);
    let result = flow_difficulty(&input, a.width, a.height, &grid).map_err(CliError::other)?;
    emit_json(&result, a.out.as_deref())
}
