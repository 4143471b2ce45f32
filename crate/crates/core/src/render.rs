//! Result files: `metrics.csv`, `report.json` and SVG figures.
//!
//! All output is a pure function of the inputs; numbers are printed with
//! fixed precision so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::corpus::{label_vector, CorpusManifest, LabelKey};
use crate::embed::{class_ellipses, ClassEllipse};
use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, EmbeddingSet, METRICS_FILE, REPORT_FILE};

pub const METRICS_HEADER: &str = "block,edd,gdv_narrative,gdv_style,mean_distance";

/// Shaded band on the EDD plot: the range [0.847, 1.0] reported for BERT-base.
pub const EDD_REFERENCE_BAND: (f64, f64) = (0.847, 1.0);

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Stable color for a 1-based label id.
pub fn label_color(id: u32) -> &'static str {
    PALETTE[(id.max(1) as usize - 1) % PALETTE.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub label_keys: Vec<LabelKey>,
    /// 1-based blocks that get an ellipse figure; blocks past L are skipped.
    pub ellipse_blocks: Vec<usize>,
    /// Restrict ellipse figures to these class ids (all classes if `None`).
    pub ellipse_classes: Option<Vec<u32>>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            label_keys: LabelKey::ALL.to_vec(),
            ellipse_blocks: vec![1, 4, 12],
            ellipse_classes: None,
        }
    }
}

pub fn metrics_csv(report: &AnalysisReport) -> String {
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for m in &report.per_layer {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            m.block, m.edd.value, m.gdv_narrative.value, m.gdv_style.value, m.mean_distance
        )
        .unwrap();
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes every figure and table for `report` into `out_dir` and returns
/// the written paths. Scatter and ellipse figures need `embeddings`.
pub fn render(
    report: &AnalysisReport,
    embeddings: Option<&EmbeddingSet>,
    manifest: &CorpusManifest,
    out_dir: &Path,
    options: &RenderOptions,
) -> Result<Vec<PathBuf>> {
    if report.per_layer.len() != report.num_layers {
        return Err(Error::InvalidInput(format!(
            "report lists {} layers but declares {}",
            report.per_layer.len(),
            report.num_layers
        )));
    }
    if manifest.samples.len() != report.num_samples {
        return Err(Error::InvalidInput(format!(
            "manifest has {} samples, report {}",
            manifest.samples.len(),
            report.num_samples
        )));
    }
    if let Some(set) = embeddings {
        if set.layers.len() != report.num_layers {
            return Err(Error::InvalidInput(format!(
                "embeddings cover {} layers, report {}",
                set.layers.len(),
                report.num_layers
            )));
        }
        if let Some(bad) = set
            .layers
            .iter()
            .find(|l| l.coords.len() != report.num_samples)
        {
            return Err(Error::InvalidInput(format!(
                "block {} embedding has {} points, expected {}",
                bad.block,
                bad.coords.len(),
                report.num_samples
            )));
        }
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    written.push(write_file(
        &out_dir.join(METRICS_FILE),
        &metrics_csv(report),
    )?);
    report.save(&out_dir.join(REPORT_FILE))?;
    written.push(out_dir.join(REPORT_FILE));
    written.push(write_file(
        &out_dir.join("edd_curve.svg"),
        &edd_curve_svg(report),
    )?);
    written.push(write_file(
        &out_dir.join("gdv_curves.svg"),
        &gdv_curves_svg(report, &options.label_keys),
    )?);

    if let Some(set) = embeddings {
        for &key in &options.label_keys {
            let labels = label_vector(manifest, key);
            let path = out_dir.join(format!("scatter_by_{key}.svg"));
            written.push(write_file(
                &path,
                &scatter_grid_svg(set, &labels, manifest, key),
            )?);

            let mut blocks: Vec<usize> = options
                .ellipse_blocks
                .iter()
                .copied()
                .filter(|&b| b >= 1 && b <= report.num_layers)
                .collect();
            blocks.sort_unstable();
            blocks.dedup();
            for block in blocks {
                let layer = &set.layers[block - 1];
                let svg = ellipse_svg(
                    layer_coords(&layer.coords).view(),
                    &labels,
                    manifest,
                    key,
                    block,
                    options.ellipse_classes.as_deref(),
                )?;
                let path = out_dir.join(format!("ellipses_by_{key}_block{block}.svg"));
                written.push(write_file(&path, &svg)?);
            }
        }
    }
    Ok(written)
}

fn layer_coords(coords: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((coords.len(), 2), |(i, c)| coords[i][c])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Minimal SVG document builder.
struct Svg {
    buf: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
        )
        .unwrap();
        writeln!(
            buf,
            r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
        )
        .unwrap();
        Svg { buf }
    }

    fn raw(&mut self, s: &str) {
        self.buf.push_str(s);
        self.buf.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.0}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        )
        .unwrap();
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, opacity: f64) {
        writeln!(
            self.buf,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.1}" fill="{fill}" fill-opacity="{opacity:.2}"/>"#
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Maps a value range onto pixels.
#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        Scale {
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn padded(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.5 };
        Scale::new(lo - pad, hi + pad, px_lo, px_hi)
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![lo];
    }
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    while t <= hi + 1e-9 * step {
        ticks.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    ticks
}

struct Plot {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

fn axes(svg: &mut Svg, plot: &Plot, xs: &Scale, ys: &Scale, n_blocks: usize, y_label: &str) {
    svg.line(plot.left, plot.bottom, plot.right, plot.bottom, "black");
    svg.line(plot.left, plot.top, plot.left, plot.bottom, "black");
    for b in 1..=n_blocks {
        let x = xs.map(b as f64);
        svg.line(x, plot.bottom, x, plot.bottom + 4.0, "black");
        svg.text(x, plot.bottom + 16.0, 11.0, "middle", &b.to_string());
    }
    for t in nice_ticks(ys.lo, ys.hi, 5) {
        let y = ys.map(t);
        svg.line(plot.left - 4.0, y, plot.left, y, "black");
        svg.text(plot.left - 6.0, y + 4.0, 11.0, "end", &format!("{t:.3}"));
    }
    svg.text(
        (plot.left + plot.right) / 2.0,
        plot.bottom + 34.0,
        12.0,
        "middle",
        "transformer block",
    );
    svg.raw(&format!(
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (plot.top + plot.bottom) / 2.0,
        (plot.top + plot.bottom) / 2.0,
        escape(y_label)
    ));
}

fn series(svg: &mut Svg, xs: &Scale, ys: &Scale, values: &[f64], color: &str) {
    let pts: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.2},{:.2}", xs.map((i + 1) as f64), ys.map(*v)))
        .collect();
    svg.raw(&format!(
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
        pts.join(" ")
    ));
    for (i, v) in values.iter().enumerate() {
        svg.circle(xs.map((i + 1) as f64), ys.map(*v), 3.5, color, 1.0);
    }
}

const LINE_W: f64 = 640.0;
const LINE_H: f64 = 400.0;

fn line_plot_frame() -> Plot {
    Plot {
        left: 70.0,
        right: LINE_W - 150.0,
        top: 40.0,
        bottom: LINE_H - 50.0,
    }
}

pub fn edd_curve_svg(report: &AnalysisReport) -> String {
    let values: Vec<f64> = report.per_layer.iter().map(|m| m.edd.value).collect();
    let (band_lo, band_hi) = EDD_REFERENCE_BAND;
    let lo = values.iter().copied().fold(band_lo, f64::min);
    let hi = values.iter().copied().fold(band_hi, f64::max);
    let plot = line_plot_frame();
    let l = report.num_layers;
    let xs = Scale::new(0.5, l as f64 + 0.5, plot.left, plot.right);
    let ys = Scale::padded(lo, hi, plot.bottom, plot.top);

    let mut svg = Svg::new(LINE_W, LINE_H);
    svg.text(
        LINE_W / 2.0 - 40.0,
        22.0,
        14.0,
        "middle",
        "EDD per transformer block",
    );
    svg.raw(&format!(
        r##"<rect class="reference-band" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#999999" fill-opacity="0.2"/>"##,
        plot.left,
        ys.map(band_hi),
        plot.right - plot.left,
        ys.map(band_lo) - ys.map(band_hi)
    ));
    svg.text(
        plot.right + 8.0,
        ys.map(band_hi) + 12.0,
        11.0,
        "start",
        &format!("reported range [{band_lo}, {band_hi}]"),
    );
    axes(&mut svg, &plot, &xs, &ys, l, "EDD");
    series(&mut svg, &xs, &ys, &values, PALETTE[0]);
    svg.finish()
}

pub fn gdv_curves_svg(report: &AnalysisReport, keys: &[LabelKey]) -> String {
    let curves: Vec<(LabelKey, Vec<f64>)> =
        keys.iter().map(|&k| (k, report.gdv_curve(k))).collect();
    let all = curves.iter().flat_map(|(_, v)| v.iter().copied());
    let (lo, hi) = all.fold((0.0f64, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let hi = if hi.is_finite() { hi.max(0.0) } else { 0.0 };
    let plot = line_plot_frame();
    let l = report.num_layers;
    let xs = Scale::new(0.5, l as f64 + 0.5, plot.left, plot.right);
    let ys = Scale::padded(lo, hi, plot.bottom, plot.top);

    let mut svg = Svg::new(LINE_W, LINE_H);
    svg.text(
        LINE_W / 2.0 - 40.0,
        22.0,
        14.0,
        "middle",
        "GDV per transformer block",
    );
    axes(&mut svg, &plot, &xs, &ys, l, "GDV");
    for (i, (key, values)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        series(&mut svg, &xs, &ys, values, color);
        let best = report.argmin_gdv(*key);
        svg.raw(&format!(
            r#"<circle class="argmin" cx="{:.2}" cy="{:.2}" r="7" fill="none" stroke="{color}" stroke-width="2"/>"#,
            xs.map(best as f64),
            ys.map(values[best - 1])
        ));
        let ly = plot.top + 20.0 * i as f64;
        svg.line(plot.right + 10.0, ly, plot.right + 30.0, ly, color);
        svg.text(
            plot.right + 36.0,
            ly + 4.0,
            12.0,
            "start",
            &format!("by {key} (min: block {best})"),
        );
    }
    svg.finish()
}

fn class_ids(labels: &[u32]) -> Vec<u32> {
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn legend(svg: &mut Svg, x: f64, y: f64, ids: &[u32], manifest: &CorpusManifest, key: LabelKey) {
    for (i, &id) in ids.iter().enumerate() {
        let ly = y + 16.0 * i as f64;
        svg.circle(x, ly, 5.0, label_color(id), 1.0);
        let name = manifest.label_name(key, id).unwrap_or("");
        svg.text(x + 10.0, ly + 4.0, 11.0, "start", &format!("{id} {name}"));
    }
}

/// Uniform-aspect scale so distances look the same along both axes.
fn square_fit(xs: &[f64], ys: &[f64], x0: f64, y0: f64, w: f64, h: f64) -> (Scale, Scale) {
    let (xlo, xhi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let (ylo, yhi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = (xhi - xlo).max(yhi - ylo).max(1e-12) * 1.1;
    let (cx, cy) = ((xlo + xhi) / 2.0, (ylo + yhi) / 2.0);
    let px = w.min(h);
    let (pcx, pcy) = (x0 + w / 2.0, y0 + h / 2.0);
    (
        Scale::new(
            cx - span / 2.0,
            cx + span / 2.0,
            pcx - px / 2.0,
            pcx + px / 2.0,
        ),
        // SVG y grows downwards.
        Scale::new(
            cy - span / 2.0,
            cy + span / 2.0,
            pcy + px / 2.0,
            pcy - px / 2.0,
        ),
    )
}

const PANEL_W: f64 = 220.0;
const PANEL_H: f64 = 220.0;

/// Grid of per-block scatter panels, four per row.
pub fn scatter_grid_svg(
    set: &EmbeddingSet,
    labels: &[u32],
    manifest: &CorpusManifest,
    key: LabelKey,
) -> String {
    let l = set.layers.len();
    let cols = l.clamp(1, 4);
    let rows = l.div_ceil(cols);
    let ids = class_ids(labels);
    let legend_w = 240.0;
    let width = cols as f64 * PANEL_W + legend_w;
    let height = (rows as f64 * PANEL_H + 40.0).max(60.0 + 16.0 * ids.len() as f64);
    let mut svg = Svg::new(width, height);
    svg.text(
        cols as f64 * PANEL_W / 2.0,
        24.0,
        14.0,
        "middle",
        &format!("MDS projection per block, colored by {key}"),
    );
    for (idx, layer) in set.layers.iter().enumerate() {
        let (r, c) = (idx / cols, idx % cols);
        let (x0, y0) = (c as f64 * PANEL_W, 40.0 + r as f64 * PANEL_H);
        svg.raw(&format!(r#"<g class="panel" id="block{}">"#, layer.block));
        svg.raw(&format!(
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#cccccc"/>"##,
            x0 + 4.0,
            y0 + 4.0,
            PANEL_W - 8.0,
            PANEL_H - 8.0
        ));
        svg.text(
            x0 + PANEL_W / 2.0,
            y0 + 20.0,
            12.0,
            "middle",
            &format!("block {}", layer.block),
        );
        let xs: Vec<f64> = layer.coords.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = layer.coords.iter().map(|p| p[1]).collect();
        let (sx, sy) = square_fit(
            &xs,
            &ys,
            x0 + 12.0,
            y0 + 28.0,
            PANEL_W - 24.0,
            PANEL_H - 40.0,
        );
        for (p, &label) in layer.coords.iter().zip(labels) {
            svg.circle(sx.map(p[0]), sy.map(p[1]), 3.0, label_color(label), 0.85);
        }
        svg.raw("</g>");
    }
    legend(
        &mut svg,
        cols as f64 * PANEL_W + 20.0,
        50.0,
        &ids,
        manifest,
        key,
    );
    svg.finish()
}

fn ellipse_element(e: &ClassEllipse, sx: &Scale, sy: &Scale) -> String {
    let px_per_unit = (sx.px_hi - sx.px_lo) / (sx.hi - sx.lo);
    let (cx, cy) = (sx.map(e.center[0]), sy.map(e.center[1]));
    // Data y points up, SVG y points down: mirror the angle.
    let angle = -e.axes[0][1].atan2(e.axes[0][0]).to_degrees();
    format!(
        r#"<ellipse class="class-ellipse" cx="{cx:.2}" cy="{cy:.2}" rx="{:.2}" ry="{:.2}" transform="rotate({angle:.2} {cx:.2} {cy:.2})" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"/>"#,
        e.radii[0] * px_per_unit,
        e.radii[1] * px_per_unit,
        color = label_color(e.class_id)
    )
}

/// Class points with their center of mass and one-standard-deviation
/// principal-axis ellipse.
pub fn ellipse_svg(
    coords: ndarray::ArrayView2<'_, f64>,
    labels: &[u32],
    manifest: &CorpusManifest,
    key: LabelKey,
    block: usize,
    only: Option<&[u32]>,
) -> Result<String> {
    let keep: Vec<usize> = (0..labels.len())
        .filter(|&i| only.is_none_or(|ids| ids.contains(&labels[i])))
        .collect();
    let sub = coords.select(ndarray::Axis(0), &keep);
    let sub_labels: Vec<u32> = keep.iter().map(|&i| labels[i]).collect();
    let ellipses = class_ellipses(sub.view(), &sub_labels)?;

    let (w, h, legend_w) = (480.0, 480.0, 240.0);
    let mut svg = Svg::new(w + legend_w, h);
    svg.text(
        w / 2.0,
        24.0,
        14.0,
        "middle",
        &format!("block {block}, classes by {key}"),
    );
    let mut xs: Vec<f64> = sub.column(0).to_vec();
    let mut ys: Vec<f64> = sub.column(1).to_vec();
    for e in &ellipses {
        let r = e.radii[0];
        xs.extend([e.center[0] - r, e.center[0] + r]);
        ys.extend([e.center[1] - r, e.center[1] + r]);
    }
    let (sx, sy) = square_fit(&xs, &ys, 20.0, 40.0, w - 40.0, h - 60.0);
    for (i, &label) in sub_labels.iter().enumerate() {
        svg.circle(
            sx.map(sub[[i, 0]]),
            sy.map(sub[[i, 1]]),
            3.0,
            label_color(label),
            0.5,
        );
    }
    for e in &ellipses {
        svg.raw(&ellipse_element(e, &sx, &sy));
        svg.raw(&format!(
            r#"<circle class="center" cx="{:.2}" cy="{:.2}" r="5" fill="{}" stroke="black"/>"#,
            sx.map(e.center[0]),
            sy.map(e.center[1]),
            label_color(e.class_id)
        ));
    }
    let ids: Vec<u32> = ellipses.iter().map(|e| e.class_id).collect();
    legend(&mut svg, w + 20.0, 50.0, &ids, manifest, key);
    Ok(svg.finish())
}
