//! Static SVG figures for a finished run.
//!
//! * `{pde}-{method}-heatmap.svg`: reference and prediction over the whole
//!   space-time domain, with vertical lines at the end of the training and
//!   validation windows. Complex fields are drawn as moduli.
//! * `{pde}-{method}-snapshot-{t}.svg`: reference (solid) and prediction
//!   (dashed) along `x` at time `t`.
//! * `{pde}-{method}-losses.svg`: `L_u` and `L_f` per epoch on a log scale,
//!   plus the pulling target for PINN-D2 runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dpm_core::diffnet::forward_flat;
use dpm_core::metrics::magnitudes;
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::sampling::{time_split, Segment};
use dpm_core::trainer::TrainingHistory;
use dpm_core::{NetworkParams, ReferenceSolution};

use crate::cache::ReferenceCache;
use crate::run::{load_checkpoint, load_record, CHECKPOINT_FILE, HISTORY_FILE};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64, dash: Option<&str>) {
        let dash = dash.map_or(String::new(), |d| format!(r#" stroke-dasharray="{d}""#));
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, dash: Option<&str>) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let dash = dash.map_or(String::new(), |d| format!(r#" stroke-dasharray="{d}""#));
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let s = s.replace('&', "&amp;").replace('<', "&lt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{s}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Linear map from data to pixels.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

fn frame(svg: &mut Svg, x: Axis, y: Axis, xlabel: &str, ylabel: &str, title: &str) {
    let (l, r, b, t) = (x.p0, x.p1, y.p0, y.p1);
    for (a, c) in [((l, b), (r, b)), ((l, b), (l, t))] {
        svg.line(a, c, "black", 1.0, None);
    }
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x.lo + f * (x.hi - x.lo);
        let yv = y.lo + f * (y.hi - y.lo);
        svg.text(x.map(xv), b + 16.0, 11.0, "middle", &tick(xv));
        svg.text(l - 6.0, y.map(yv) + 4.0, 11.0, "end", &tick(yv));
    }
    svg.text((l + r) / 2.0, b + 34.0, 12.0, "middle", xlabel);
    svg.text(l - 44.0, (b + t) / 2.0, 12.0, "middle", ylabel);
    svg.text((l + r) / 2.0, t - 10.0, 13.0, "middle", title);
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

/// Viridis-like colour ramp on `[0, 1]`.
fn colour(f: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let f = if f.is_finite() { f.clamp(0.0, 1.0) } else { 0.0 };
    let s = f * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let u = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + u * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Scalar field per grid point: the value, or the modulus for complex fields.
fn scalar(values: &[f64], channels: usize) -> Vec<f64> {
    if channels == 2 {
        magnitudes(values)
    } else {
        values.to_vec()
    }
}

struct Field {
    ts: Vec<f64>,
    xs: Vec<f64>,
    reference: Vec<f64>,
    prediction: Vec<f64>,
}

fn full_field(params: &NetworkParams, refs: &[ReferenceSolution], channels: usize) -> Result<Field> {
    let xs = refs[0].grid().xs.clone();
    let mut f = Field {
        ts: Vec::new(),
        xs,
        reference: Vec::new(),
        prediction: Vec::new(),
    };
    for r in refs {
        f.ts.extend_from_slice(&r.grid().ts);
        f.reference.extend(scalar(r.values(), channels));
        f.prediction.extend(scalar(&forward_flat(params, &r.grid().points())?, channels));
    }
    Ok(f)
}

fn heatmap(field: &Field, spec: &PdeSpec, title: &str) -> String {
    let panel_w = 420.0;
    let panel_h = 260.0;
    let mut svg = Svg::new(MARGIN * 2.0 + panel_w + 70.0, 2.0 * (panel_h + 80.0) + 20.0);
    let finite = field.reference.iter().chain(&field.prediction).filter(|v| v.is_finite());
    let lo = finite.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let split = time_split(spec.final_time);
    // Cap the number of drawn cells; neighbouring samples share a cell.
    let nt = field.ts.len();
    let nx = field.xs.len();
    let step_t = nt.div_ceil(160).max(1);
    let step_x = nx.div_ceil(128).max(1);
    for (k, (name, values)) in [("reference", &field.reference), ("prediction", &field.prediction)]
        .into_iter()
        .enumerate()
    {
        let top = 40.0 + k as f64 * (panel_h + 80.0);
        let x_axis = Axis::new(0.0, spec.final_time, MARGIN, MARGIN + panel_w);
        let y_axis = Axis::new(spec.x_min, spec.x_max, top + panel_h, top);
        let cw = panel_w / nt.div_ceil(step_t) as f64;
        let ch = panel_h / nx.div_ceil(step_x) as f64;
        for (ci, ti) in (0..nt).step_by(step_t).enumerate() {
            for (cj, xi) in (0..nx).step_by(step_x).enumerate() {
                let v = values[ti * nx + xi];
                svg.rect(
                    MARGIN + ci as f64 * cw,
                    top + panel_h - (cj + 1) as f64 * ch,
                    cw + 0.3,
                    ch + 0.3,
                    &colour((v - lo) / span),
                );
            }
        }
        for t in [split.train, split.val] {
            let px = x_axis.map(t);
            svg.line((px, top), (px, top + panel_h), if k == 0 { "black" } else { "white" }, 1.5, None);
        }
        frame(&mut svg, x_axis, y_axis, "t", "x", &format!("{title}: {name}"));
    }
    let bar_x = MARGIN + panel_w + 24.0;
    for i in 0..100 {
        let f = i as f64 / 99.0;
        svg.rect(bar_x, 40.0 + panel_h * (1.0 - f), 14.0, panel_h / 99.0 + 0.5, &colour(f));
    }
    svg.text(bar_x + 18.0, 44.0, 10.0, "start", &tick(hi));
    svg.text(bar_x + 18.0, 40.0 + panel_h, 10.0, "start", &tick(lo));
    svg.finish()
}

fn snapshot(xs: &[f64], reference: &[f64], prediction: &[f64], t: f64, title: &str) -> String {
    let mut svg = Svg::new(W, H);
    let all = reference.iter().chain(prediction).filter(|v| v.is_finite());
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-12);
    let x_axis = Axis::new(xs[0], xs[xs.len() - 1], MARGIN, W - 20.0);
    let y_axis = Axis::new(lo - pad, hi + pad, H - MARGIN, 40.0);
    let pts = |v: &[f64]| -> Vec<(f64, f64)> {
        xs.iter()
            .zip(v)
            .filter(|(_, u)| u.is_finite())
            .map(|(&x, &u)| (x_axis.map(x), y_axis.map(u)))
            .collect()
    };
    svg.polyline(&pts(reference), "#1f4e99", None);
    svg.polyline(&pts(prediction), "#c0392b", Some("6 4"));
    frame(&mut svg, x_axis, y_axis, "x", "u", &format!("{title} at t = {}", tick(t)));
    svg.line((W - 170.0, 52.0), (W - 140.0, 52.0), "#1f4e99", 1.5, None);
    svg.text(W - 134.0, 56.0, 11.0, "start", "reference");
    svg.line((W - 170.0, 68.0), (W - 140.0, 68.0), "#c0392b", 1.5, Some("6 4"));
    svg.text(W - 134.0, 72.0, 11.0, "start", "prediction");
    svg.finish()
}

fn losses(history: &TrainingHistory, title: &str) -> String {
    let with_delta = history.rows.iter().any(|r| r.delta.is_some());
    let panels = if with_delta { 2 } else { 1 };
    let mut svg = Svg::new(W, 60.0 + panels as f64 * (H - 60.0));
    let epochs = history.rows.len().max(2) as f64 - 1.0;
    let log = |v: f64| if v > 0.0 { v.log10() } else { f64::NAN };
    let series_range = |vals: &[f64]| {
        let f = vals.iter().filter(|v| v.is_finite());
        (
            f.clone().copied().fold(f64::INFINITY, f64::min).floor(),
            f.copied().fold(f64::NEG_INFINITY, f64::max).ceil(),
        )
    };
    let lu: Vec<f64> = history.rows.iter().map(|r| log(r.l_u)).collect();
    let lf: Vec<f64> = history.rows.iter().map(|r| log(r.l_f)).collect();
    let both: Vec<f64> = lu.iter().chain(&lf).copied().collect();
    let (lo, hi) = series_range(&both);
    let x_axis = Axis::new(0.0, epochs, MARGIN, W - 20.0);
    let y_axis = Axis::new(lo, hi, H - MARGIN, 40.0);
    let pts = |v: &[f64], y: Axis| -> Vec<(f64, f64)> {
        v.iter()
            .enumerate()
            .filter(|(_, u)| u.is_finite())
            .map(|(i, &u)| (x_axis.map(i as f64), y.map(u)))
            .collect()
    };
    svg.polyline(&pts(&lu, y_axis), "#1f4e99", None);
    svg.polyline(&pts(&lf, y_axis), "#c0392b", None);
    frame(&mut svg, x_axis, y_axis, "epoch", "log10 loss", &format!("{title}: training losses"));
    svg.line((W - 150.0, 52.0), (W - 120.0, 52.0), "#1f4e99", 1.5, None);
    svg.text(W - 114.0, 56.0, 11.0, "start", "L_u");
    svg.line((W - 150.0, 68.0), (W - 120.0, 68.0), "#c0392b", 1.5, None);
    svg.text(W - 114.0, 72.0, 11.0, "start", "L_f");
    if with_delta {
        let d: Vec<f64> = history.rows.iter().map(|r| r.delta.map_or(f64::NAN, log)).collect();
        let (lo, hi) = series_range(&d);
        let top = H - 20.0;
        let y_axis = Axis::new(lo, hi, top + H - 60.0 - MARGIN, top + 20.0);
        svg.polyline(&pts(&d, y_axis), "#2e8b57", None);
        frame(&mut svg, x_axis, y_axis, "epoch", "log10 delta", "pulling target");
    }
    svg.finish()
}

fn name_time(t: f64) -> String {
    let s = format!("{t:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Default snapshot times: grid times nearest to 83% and 98% of the horizon.
pub fn default_snapshot_times(pde: PdeId) -> Vec<f64> {
    let spec = PdeSpec::get(pde);
    let dt = spec.eval_time_step();
    [0.83, 0.98]
        .iter()
        .map(|f| (f * spec.final_time / dt).round() * dt)
        .collect()
}

/// Writes the heatmap, loss curves and one snapshot per requested time for the
/// run stored in `run_dir`. Returns the files written.
pub fn cmd_plot(run_dir: &Path, times: Option<&[f64]>, out_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    let record = load_record(run_dir)?;
    let cfg = &record.config;
    let spec = PdeSpec::get(cfg.pde);
    let params = load_checkpoint(&run_dir.join(record.file.checkpoint.as_deref().unwrap_or(CHECKPOINT_FILE)))?;
    let history_path = run_dir.join(record.file.history.as_deref().unwrap_or(HISTORY_FILE));
    let history = TrainingHistory::read_csv(
        std::fs::File::open(&history_path).with_context(|| format!("opening {}", history_path.display()))?,
    )?;
    let cache = ReferenceCache::new(&cfg.output_dir);
    let refs = Segment::ALL
        .iter()
        .map(|&s| cache.segment(cfg.pde, s).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    let out_dir = out_dir.map_or_else(|| run_dir.join("plots"), Path::to_path_buf);
    std::fs::create_dir_all(&out_dir)?;
    let stem = format!("{}-{}", cfg.pde, cfg.method);
    let title = format!("{} {}", cfg.pde, cfg.method.label());
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };

    let field = full_field(&params, &refs, spec.output_channels)?;
    emit(format!("{stem}-heatmap.svg"), heatmap(&field, &spec, &title))?;
    emit(format!("{stem}-losses.svg"), losses(&history, &title))?;

    let default_times = default_snapshot_times(cfg.pde);
    for &t in times.unwrap_or(&default_times) {
        if !(0.0..=spec.final_time + 1e-12).contains(&t) {
            bail!("snapshot time {t} lies outside [0, {}]", spec.final_time);
        }
        let ti = nearest(&field.ts, t);
        let nx = field.xs.len();
        let row = |v: &[f64]| v[ti * nx..(ti + 1) * nx].to_vec();
        emit(
            format!("{stem}-snapshot-{}.svg", name_time(t)),
            snapshot(&field.xs, &row(&field.reference), &row(&field.prediction), field.ts[ti], &title),
        )?;
    }
    Ok(written)
}

fn nearest(ts: &[f64], t: f64) -> usize {
    ts.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(i, _)| i)
}
