//! Minimal static SVG plots: an error-versus-tolerance scatter with the
//! y = ε guide line, and a wall-time box plot per tolerance. Write-only
//! artifacts with log axes and decade ticks; no styling knobs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::experiment::RunRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    pix_lo: f64,
    pix_hi: f64,
}

impl LogAxis {
    /// Expand [lo, hi] to whole decades; degenerate ranges get one decade of
    /// padding so a single value still renders.
    fn new(lo: f64, hi: f64, pix_lo: f64, pix_hi: f64) -> Self {
        let lo10 = lo.log10().floor();
        let hi10 = hi.log10().ceil();
        let (lo10, hi10) = if lo10 == hi10 {
            (lo10 - 1.0, hi10 + 1.0)
        } else {
            (lo10, hi10)
        };
        Self {
            lo: 10f64.powf(lo10),
            hi: 10f64.powf(hi10),
            pix_lo,
            pix_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let t = (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln());
        self.pix_lo + t * (self.pix_hi - self.pix_lo)
    }

    fn decades(&self) -> Vec<f64> {
        let mut ticks = Vec::new();
        let mut e = self.lo.log10().round() as i32;
        let last = self.hi.log10().round() as i32;
        while e <= last {
            ticks.push(10f64.powi(e));
            e += 1;
        }
        ticks
    }
}

fn open_svg(title: &str) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="18" text-anchor="middle" font-size="14">{title}</text>
"#,
        WIDTH / 2.0
    )
}

fn axes(out: &mut String, x: &LogAxis, y: &LogAxis, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for t in x.decades() {
        let px = x.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/>
<text x="{px}" y="{}" text-anchor="middle">{t:e}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    for t in y.decades() {
        let py = y.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>
<text x="{}" y="{}" text-anchor="end">{t:e}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

/// |estimate − truth| against ε, log-log, with the y = ε guide. Runs without
/// a closed-form value contribute no points; exact hits (error 0) are drawn
/// as open markers pinned to the bottom axis.
pub fn error_scatter_svg(records: &[RunRecord]) -> String {
    let mut svg = open_svg("absolute error vs tolerance");
    let errors: Vec<f64> = records.iter().filter_map(|r| r.abs_error).collect();
    if errors.is_empty() {
        svg.push_str(r#"<text x="360" y="240" text-anchor="middle">no closed-form true value; no error data</text>"#);
        svg.push_str("</svg>\n");
        return svg;
    }
    let eps_lo = records
        .iter()
        .map(|r| r.epsilon)
        .fold(f64::INFINITY, f64::min);
    let eps_hi = records.iter().map(|r| r.epsilon).fold(0.0, f64::max);
    let err_pos_lo = errors
        .iter()
        .copied()
        .filter(|&e| e > 0.0)
        .fold(f64::INFINITY, f64::min);
    let err_hi = errors.iter().copied().fold(0.0, f64::max);
    // All-zero errors (constant integrand): nothing positive to scale by.
    let (err_lo, err_hi) = if err_pos_lo.is_finite() {
        (err_pos_lo, err_hi.max(eps_hi))
    } else {
        (eps_lo * 1e-3, eps_hi)
    };

    let x = LogAxis::new(eps_lo, eps_hi, MARGIN_L, WIDTH - MARGIN_R);
    let y = LogAxis::new(err_lo, err_hi, HEIGHT - MARGIN_B, MARGIN_T);
    axes(&mut svg, &x, &y, "tolerance ε", "absolute error");

    let gx0 = x.map(eps_lo);
    let gx1 = x.map(eps_hi);
    let gy0 = y.map(eps_lo.clamp(y.lo, y.hi));
    let gy1 = y.map(eps_hi.clamp(y.lo, y.hi));
    let _ = writeln!(
        svg,
        r#"<line x1="{gx0}" y1="{gy0}" x2="{gx1}" y2="{gy1}" stroke="firebrick" stroke-dasharray="6 3"/>
<text x="{gx1}" y="{}" text-anchor="end" fill="firebrick">error = ε</text>"#,
        gy1 - 6.0
    );

    for r in records {
        let Some(err) = r.abs_error else { continue };
        let px = x.map(r.epsilon);
        if err > 0.0 {
            let py = y.map(err.clamp(y.lo, y.hi));
            let _ = writeln!(
                svg,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="steelblue" fill-opacity="0.45"/>"#
            );
        } else {
            let _ = writeln!(
                svg,
                r#"<circle cx="{px:.2}" cy="{}" r="2.5" fill="none" stroke="steelblue"/>"#,
                HEIGHT - MARGIN_B - 3.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Wall time per run against ε: quartile boxes, median bar, min/max whiskers.
pub fn time_box_svg(records: &[RunRecord]) -> String {
    let mut svg = open_svg("wall time vs tolerance");
    if records.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    // Group by tolerance, keeping the sweep's own ordering semantics
    // (BTreeMap over bits is fine: tolerances are positive and distinct).
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.epsilon.to_bits())
            .or_insert((r.epsilon, Vec::new()))
            .1
            .push(r.wall_seconds);
    }
    let mut groups: Vec<(f64, Vec<f64>)> = groups.into_values().collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, times) in &mut groups {
        times.sort_by(f64::total_cmp);
    }

    let t_lo = groups
        .iter()
        .map(|(_, t)| t[0])
        .fold(f64::INFINITY, f64::min)
        .max(1e-7);
    let t_hi = groups
        .iter()
        .map(|(_, t)| *t.last().expect("nonempty group"))
        .fold(0.0, f64::max)
        .max(t_lo * 10.0);
    let y = LogAxis::new(t_lo, t_hi, HEIGHT - MARGIN_B, MARGIN_T);

    // Categorical x: one slot per tolerance.
    let slot = (WIDTH - MARGIN_L - MARGIN_R) / groups.len() as f64;
    let x0 = MARGIN_L;
    let y0 = HEIGHT - MARGIN_B;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_T}" stroke="black"/>"#,
        WIDTH - MARGIN_R
    );
    for t in y.decades() {
        let py = y.map(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>
<text x="{}" y="{}" text-anchor="end">{t:e}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">tolerance ε</text>
<text x="16" y="250" text-anchor="middle" transform="rotate(-90 16 250)">wall time (s)</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );

    let q = |s: &[f64], p: f64| -> f64 {
        let idx = ((s.len() as f64 - 1.0) * p).round() as usize;
        s[idx.min(s.len() - 1)]
    };
    for (i, (eps, times)) in groups.iter().enumerate() {
        let cx = x0 + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(40.0);
        let (lo, q1, med, q3, hi) = (
            y.map(times[0].clamp(y.lo, y.hi)),
            y.map(q(times, 0.25).clamp(y.lo, y.hi)),
            y.map(q(times, 0.50).clamp(y.lo, y.hi)),
            y.map(q(times, 0.75).clamp(y.lo, y.hi)),
            y.map(times.last().copied().expect("nonempty").clamp(y.lo, y.hi)),
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{cx}" y1="{lo}" x2="{cx}" y2="{hi}" stroke="black"/>
<rect x="{}" y="{q3}" width="{}" height="{}" fill="lightsteelblue" stroke="black"/>
<line x1="{}" y1="{med}" x2="{}" y2="{med}" stroke="black" stroke-width="2"/>
<text x="{cx}" y="{}" text-anchor="middle">{eps:e}</text>"#,
            cx - half,
            2.0 * half,
            (q1 - q3).max(1.0),
            cx - half,
            cx + half,
            y0 + 20.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
