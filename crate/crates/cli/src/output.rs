//! Artifact emission: profile/trajectory CSVs with a fixed 12-significant-
//! digit format (byte-stable across runs), a small CSV reader for seeds and
//! comparisons, and a self-contained SVG line plot.

use contact_hj::model::PeriodicGrid;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::f64::consts::TAU;

pub fn write_profile_csv(path: &Path, xs: &[f64], us: &[f64]) -> Result<(), String> {
    let mut s = String::with_capacity(xs.len() * 36 + 4);
    s.push_str("x,u\n");
    for (x, u) in xs.iter().zip(us) {
        let _ = writeln!(s, "{x:.11e},{u:.11e}");
    }
    fs::write(path, s).map_err(|e| format!("write {}: {e}", path.display()))
}

pub fn write_flow_csv(path: &Path, rows: &[(f64, f64, f64, f64, f64)]) -> Result<(), String> {
    let mut s = String::with_capacity(rows.len() * 80 + 12);
    s.push_str("t,x,p,u,H\n");
    for (t, x, p, u, h) in rows {
        let _ = writeln!(s, "{t:.11e},{x:.11e},{p:.11e},{u:.11e},{h:.11e}");
    }
    fs::write(path, s).map_err(|e| format!("write {}: {e}", path.display()))
}

/// Reads a two-column `x,u` CSV (header optional).
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("read {}: {e}", path.display()))?;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| format!("{}:{}: expected two columns", path.display(), idx + 1))?;
        if idx == 0 && a.trim().parse::<f64>().is_err() {
            continue; // header
        }
        let x: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("{}:{}: bad x value {a:?}", path.display(), idx + 1))?;
        let u: f64 = b
            .trim()
            .parse()
            .map_err(|_| format!("{}:{}: bad u value {b:?}", path.display(), idx + 1))?;
        xs.push(x);
        us.push(u);
    }
    if xs.is_empty() {
        return Err(format!("{}: no data rows", path.display()));
    }
    Ok((xs, us))
}

/// Periodic linear resampling of arbitrary `(x, u)` samples onto the grid.
pub fn resample_periodic(xs: &[f64], us: &[f64], grid: &PeriodicGrid) -> Result<Vec<f64>, String> {
    let mut pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(us)
        .map(|(&x, &u)| (x.rem_euclid(TAU), u))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
    if pts.len() < 2 {
        return Err("seed file needs at least two distinct x positions".into());
    }
    let mut out = Vec::with_capacity(grid.n);
    let last = pts.len() - 1;
    for &x in &grid.xs {
        let idx = pts.partition_point(|p| p.0 <= x);
        // queries before the first or after the last sample fall on the wrap
        // segment joining the last sample to the first one period up
        let (xl, ul, xr, ur, xq) = if idx == 0 {
            (pts[last].0, pts[last].1, pts[0].0 + TAU, pts[0].1, x + TAU)
        } else if idx == pts.len() {
            (pts[last].0, pts[last].1, pts[0].0 + TAU, pts[0].1, x)
        } else {
            (pts[idx - 1].0, pts[idx - 1].1, pts[idx].0, pts[idx].1, x)
        };
        out.push(ul + (xq - xl) / (xr - xl) * (ur - ul));
    }
    Ok(out)
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub ys: &'a [f64],
}

/// Plain polyline plot; everything inline, no external references.
pub fn write_svg(path: &Path, title: &str, xs: &[f64], series: &[Series]) -> Result<(), String> {
    const W: f64 = 860.0;
    const H: f64 = 520.0;
    const ML: f64 = 64.0;
    const MR: f64 = 18.0;
    const MT: f64 = 42.0;
    const MB: f64 = 46.0;
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &v in s.ys {
            if v.is_finite() {
                ylo = ylo.min(v);
                yhi = yhi.max(v);
            }
        }
    }
    if !ylo.is_finite() || !yhi.is_finite() {
        ylo = -1.0;
        yhi = 1.0;
    }
    if yhi - ylo < 1e-12 {
        ylo -= 0.5;
        yhi += 0.5;
    }
    let pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    let (xlo, xhi) = (xs[0], xs[xs.len() - 1]);
    let px = |x: f64| ML + (x - xlo) / (xhi - xlo) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"monospace\" font-size=\"13\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{ML}\" y=\"24\" font-size=\"15\">{title}</text>");
    // frame and zero line
    let _ = writeln!(
        s,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        W - ML - MR,
        H - MT - MB
    );
    if ylo < 0.0 && yhi > 0.0 {
        let _ = writeln!(
            s,
            "<line x1=\"{ML}\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>",
            py(0.0),
            W - MR
        );
    }
    for k in 0..=4 {
        let xv = xlo + (xhi - xlo) * k as f64 / 4.0;
        let yv = ylo + (yhi - ylo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.2}</text>",
            px(xv),
            H - MB + 18.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.2}</text>",
            ML - 6.0,
            py(yv) + 4.0
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let mut pts = String::with_capacity(ser.ys.len() * 14);
        for (x, y) in xs.iter().zip(ser.ys) {
            if y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(*x), py(*y));
            }
        }
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>",
            pts.trim_end(),
            ser.color
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{}\">{}</text>",
            W - MR - 150.0,
            MT + 18.0 + 17.0 * i as f64,
            ser.color,
            ser.label
        );
    }
    let _ = writeln!(s, "</svg>");
    fs::write(path, s).map_err(|e| format!("write {}: {e}", path.display()))
}
