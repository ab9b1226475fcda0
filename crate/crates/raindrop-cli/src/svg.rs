//! Standalone SVG rendering of a traced profile curve.
//!
//! Byte-deterministic for identical inputs: fixed decimal formatting, no
//! timestamps, equal-aspect viewBox computed from the data alone. An
//! optional inset plots curvature against arc length.

use crate::output::TraceTable;

pub fn render(table: &TraceTable, with_inset: bool) -> Result<String, String> {
    let n = table.x.len();
    if n == 0 {
        return Err("empty trace".into());
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        min_x = min_x.min(table.x[i]);
        max_x = max_x.max(table.x[i]);
        min_y = min_y.min(table.y[i]);
        max_y = max_y.max(table.y[i]);
    }
    let pad = 0.05 * ((max_x - min_x).max(max_y - min_y)).max(1e-9);
    let (x0, y0) = (min_x - pad, min_y - pad);
    let (w, h) = (max_x - min_x + 2.0 * pad, max_y - min_y + 2.0 * pad);

    // map to a 1000-wide canvas, y flipped so the translation axis points up
    let scale = 1000.0 / w;
    let cw = 1000.0;
    let ch = h * scale;
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| ch - (y - y0) * scale;

    let mut path = String::with_capacity(n * 20);
    for i in 0..n {
        path.push_str(if i == 0 { "M" } else { " L" });
        path.push_str(&format!("{:.3} {:.3}", px(table.x[i]), py(table.y[i])));
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"{:.0}\" viewBox=\"0 0 {:.3} {:.3}\">\n",
        (640.0 * ch / cw).round(),
        cw,
        ch
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.3}\"/>\n",
        cw / 320.0
    ));

    if with_inset && !table.kappa.is_empty() {
        // curvature against arc length, lower-left corner, its own frame
        let iw = 0.32 * cw;
        let ih = 0.22 * ch;
        let ix = 0.04 * cw;
        let iy = ch - ih - 0.04 * ch;
        let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            kmin = kmin.min(table.kappa[i]);
            kmax = kmax.max(table.kappa[i]);
            smin = smin.min(table.s[i]);
            smax = smax.max(table.s[i]);
        }
        let kpad = 0.05 * (kmax - kmin).max(1e-9);
        kmin -= kpad;
        kmax += kpad;
        let mx = |s: f64| ix + (s - smin) / (smax - smin).max(1e-300) * iw;
        let my = |k: f64| iy + ih - (k - kmin) / (kmax - kmin).max(1e-300) * ih;
        let mut ipath = String::with_capacity(n * 18);
        // thin the inset to at most ~2000 points
        let stride = (n / 2000).max(1);
        let mut first = true;
        for i in (0..n).step_by(stride) {
            ipath.push_str(if first { "M" } else { " L" });
            first = false;
            ipath.push_str(&format!("{:.3} {:.3}", mx(table.s[i]), my(table.kappa[i])));
        }
        svg.push_str(&format!(
            "<g><rect x=\"{ix:.3}\" y=\"{iy:.3}\" width=\"{iw:.3}\" height=\"{ih:.3}\" fill=\"white\" stroke=\"black\" stroke-width=\"{:.3}\"/>\n",
            cw / 1000.0
        ));
        svg.push_str(&format!(
            "<path d=\"{ipath}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.3}\"/></g>\n",
            cw / 800.0
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
