//! Artifact writers. Numbers use Rust's shortest round-trip formatting, so
//! repeated runs are byte-identical and values parse back exactly.

use anyhow::{Context, Result};
use hflow::mesh::EquivariantMesh;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.file(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.file(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let path = self.file(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Blue to red through white.
fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (40.0 + 215.0 * s, 80.0 + 175.0 * s, 200.0 + 55.0 * s)
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0, 255.0 - 190.0 * s, 255.0 - 205.0 * s)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 50.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{}" viewBox="0 0 {W} {}">"#, H + 40.0, H + 40.0);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scalar field per canonical vertex, drawn on the mesh chart with each
/// triangle filled by its corner mean.
pub fn mesh_heatmap(mesh: &EquivariantMesh, values: &[f64], title: &str) -> String {
    let (x0, x1) = range(mesh.triangles.iter().flat_map(|t| t.pos.iter().map(|p| p.re)));
    let (y0, y1) = range(mesh.triangles.iter().flat_map(|t| t.pos.iter().map(|p| p.im)));
    let (lo, hi) = range(values.iter().copied());
    let sx = (W - 2.0 * PAD - 60.0) / (x1 - x0);
    let sy = (H - 2.0 * PAD) / (y1 - y0);
    let sc = sx.min(sy);
    let px = |x: f64| PAD + (x - x0) * sc;
    let py = |y: f64| 40.0 + PAD + (y1 - y) * sc;
    let mut s = header(title);
    for t in &mesh.triangles {
        let v = t.corners.iter().map(|c| values[c.vertex]).sum::<f64>() / 3.0;
        let pts: Vec<String> = t.pos.iter().map(|p| format!("{:.2},{:.2}", px(p.re), py(p.im))).collect();
        let col = colour((v - lo) / (hi - lo));
        let _ = writeln!(s, r#"<polygon points="{}" fill="{col}" stroke="{col}" stroke-width="0.3"/>"#, pts.join(" "));
    }
    // colour bar
    let bx = W - PAD - 30.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let y = 40.0 + PAD + (1.0 - t) * (H - 2.0 * PAD - 8.0);
        let _ = writeln!(s, r#"<rect x="{bx}" y="{y:.2}" width="16" height="9" fill="{}"/>"#, colour(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{hi:.3e}</text>"#, bx - 10.0, 40.0 + PAD - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{lo:.3e}</text>"#, bx - 10.0, 40.0 + H - PAD + 14.0);
    s.push_str("</svg>\n");
    s
}

/// Scalar field on a regular grid (`values[j][i]` at row `j`).
pub fn grid_heatmap(values: &[Vec<f64>], extent: [f64; 4], title: &str) -> String {
    let ny = values.len();
    let nx = values.first().map_or(0, |r| r.len());
    let (lo, hi) = range(values.iter().flatten().copied());
    let cw = (W - 2.0 * PAD - 60.0) / nx.max(1) as f64;
    let ch = (H - 2.0 * PAD) / ny.max(1) as f64;
    let mut s = header(title);
    for (j, row) in values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let x = PAD + i as f64 * cw;
            let y = 40.0 + PAD + (ny - 1 - j) as f64 * ch;
            let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#, cw + 0.2, ch + 0.2, colour((v - lo) / (hi - lo)));
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">x in [{}, {}], y in [{}, {}]; range [{lo:.3e}, {hi:.3e}]</text>"#,
        H + 30.0,
        extent[0],
        extent[1],
        extent[2],
        extent[3]
    );
    s.push_str("</svg>\n");
    s
}

/// Line plot of named series sharing an x axis.
pub fn line_plot(series: &[(&str, Vec<(f64, f64)>)], title: &str, xlabel: &str, log_y: bool) -> String {
    let tf = |y: f64| if log_y { y.max(1e-300).log10() } else { y };
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| tf(p.1))));
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| 40.0 + PAD + (y1 - tf(y)) / (y1 - y0) * (H - 2.0 * PAD);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = header(title);
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, 40.0 + PAD, W - 2.0 * PAD, H - 2.0 * PAD);
    for (k, (name, pts)) in series.iter().enumerate() {
        let col = palette[k % palette.len()];
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"/>"#, path.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{col}">{}</text>"#, PAD + 8.0, 40.0 + PAD + 16.0 * (k + 1) as f64, escape(name));
    }
    let ylab = if log_y { "log10 y" } else { "y" };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{} in [{x0:.3e}, {x1:.3e}]; {ylab} in [{y0:.3e}, {y1:.3e}]</text>"#,
        W / 2.0,
        H + 30.0,
        escape(xlabel)
    );
    s.push_str("</svg>\n");
    s
}
