//! One SVG line plot per window plus an `index.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tscrub_core::report::format_significant;
use tscrub_core::windows::{Window, WindowSet, WindowSummary};
use tscrub_core::{CleanResult, Instant};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 80.0;

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct FrameError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub window: usize,
    pub start: Instant,
    pub end: Instant,
    pub summary: WindowSummary,
}

pub fn frame_name(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(3);
    format!("frame_{index:0width$}.svg")
}

pub fn caption(w: &Window) -> String {
    let s = &w.summary;
    let stats = match &s.stats {
        Some(st) => format!(
            "min {} | median {} | mean {} | max {}",
            format_significant(st.min, 6),
            format_significant(st.median, 6),
            format_significant(st.mean, 6),
            format_significant(st.max, 6)
        ),
        None => "no values".into(),
    };
    format!(
        "missing imputed: {} | outliers: {} | missing timestamps: {} | duplicate timestamps: {} | {stats}",
        s.n_missing_imputed, s.n_outliers, s.n_missing_ts, s.n_duplicate_ts
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one window as a standalone SVG document.
pub fn render_svg(w: &Window, result: &CleanResult) -> String {
    let points = w.points(result);
    let present: Vec<f64> = points.iter().filter_map(|p| p.value).collect();
    let (lo, hi) = present
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (lo, hi) = if present.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = points.len().max(2) - 1;
    let x = |i: usize| MARGIN_LEFT + plot_w * i as f64 / n as f64;
    let y = |v: f64| MARGIN_TOP + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>
<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"##,
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 10.0,
        format_significant(hi, 6),
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + plot_h,
        format_significant(lo, 6)
    );

    // gaps left by reverted imputations break the line
    let mut segment = String::new();
    let flush = |segment: &mut String, svg: &mut String| {
        if !segment.is_empty() {
            let _ = writeln!(
                svg,
                r##"<polyline fill="none" stroke="#1f4e79" stroke-width="1.2" points="{}"/>"##,
                segment.trim_end()
            );
            segment.clear();
        }
    };
    for (i, p) in points.iter().enumerate() {
        match p.value {
            Some(v) => {
                let _ = write!(segment, "{:.2},{:.2} ", x(i), y(v));
            }
            None => flush(&mut segment, &mut svg),
        }
    }
    flush(&mut segment, &mut svg);

    for (i, p) in points.iter().enumerate() {
        let Some(v) = p.value else { continue };
        let (cx, cy) = (x(i), y(v));
        if p.is_outlier {
            let _ = writeln!(
                svg,
                r##"<rect class="outlier" x="{:.2}" y="{:.2}" width="7" height="7" fill="#c0392b"/>"##,
                cx - 3.5,
                cy - 3.5
            );
        } else if p.missing_type.is_some() {
            let _ = writeln!(
                svg,
                r##"<circle class="imputed" cx="{cx:.2}" cy="{cy:.2}" r="3" fill="none" stroke="#e67e22" stroke-width="1.5"/>"##
            );
        }
    }

    let _ = writeln!(
        svg,
        r##"<text x="{MARGIN_LEFT}" y="{}" font-size="12">window {}: {} to {} ({} points)</text>
<text x="{MARGIN_LEFT}" y="{}" font-size="12">{}</text>
<text x="{MARGIN_LEFT}" y="{}" font-size="11" fill="#555">circle: imputed, square: outlier</text>
</svg>"##,
        HEIGHT - MARGIN_BOTTOM + 24.0,
        w.index,
        w.start.to_display(),
        w.end.to_display(),
        w.len,
        HEIGHT - MARGIN_BOTTOM + 44.0,
        escape(&caption(w)),
        HEIGHT - MARGIN_BOTTOM + 64.0,
    );
    svg
}

/// Writes every window of `ws` to `out_dir` in parallel and returns the
/// index that is also written as `index.json`.
pub fn render_frames(ws: &WindowSet, result: &CleanResult, out_dir: &Path) -> Result<Vec<FrameEntry>, FrameError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| FrameError { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let total = ws.windows.len();
    let entries: Vec<FrameEntry> = ws
        .windows
        .par_iter()
        .map(|w| {
            let file = frame_name(w.index, total);
            let path = out_dir.join(&file);
            std::fs::write(&path, render_svg(w, result)).map_err(io(&path))?;
            Ok(FrameEntry {
                file,
                window: w.index,
                start: w.start,
                end: w.end,
                summary: w.summary.clone(),
            })
        })
        .collect::<Result<_, FrameError>>()?;
    let index = out_dir.join("index.json");
    let json = serde_json::to_string_pretty(&entries).expect("index serializes");
    std::fs::write(&index, json).map_err(io(&index))?;
    Ok(entries)
}
