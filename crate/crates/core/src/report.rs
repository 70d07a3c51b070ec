//! Outcome tables and the two summary plots: the sensitivity bar chart and
//! the button plot of clipped `(Q, relative error)` pairs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{Category, TrialOutcome};

pub const OUTCOME_HEADER: &str = "trial,seed,k,category,recovered,Q,residual_rel,iterations,wall_ms,rel_error";

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Outcome table as CSV. Wall times are written as zero unless `timing` is
/// set, so that repeated runs produce identical bytes.
pub fn outcomes_to_csv(outcomes: &[TrialOutcome], timing: bool) -> String {
    let mut out = String::from(OUTCOME_HEADER);
    out.push('\n');
    for o in outcomes {
        let k = o.k.map(|k| k.to_string()).unwrap_or_default();
        let wall = if timing { o.wall_ms } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            o.trial,
            o.seed,
            k,
            o.category.as_str(),
            o.recovered,
            num(o.q),
            num(o.residual_rel),
            o.iterations,
            num(wall),
            num(o.rel_error)
        );
    }
    out
}

pub fn outcomes_from_csv(text: &str) -> Result<Vec<TrialOutcome>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == OUTCOME_HEADER => {}
        _ => return Err(Error::Parse(format!("line 1: expected header `{OUTCOME_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let at = |what: &str| Error::Parse(format!("line {}: bad {what}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse(format!("line {}: expected 10 fields, got {}", i + 1, f.len())));
        }
        let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| at(what));
        out.push(TrialOutcome {
            trial: f[0].parse().map_err(|_| at("trial"))?,
            seed: f[1].parse().map_err(|_| at("seed"))?,
            k: if f[2].is_empty() { None } else { Some(f[2].parse().map_err(|_| at("k"))?) },
            category: Category::parse(f[3]).ok_or_else(|| at("category"))?,
            recovered: f[4].parse().map_err(|_| at("recovered"))?,
            q: float(f[5], "Q")?,
            residual_rel: float(f[6], "residual_rel")?,
            iterations: f[7].parse().map_err(|_| at("iterations"))?,
            wall_ms: float(f[8], "wall_ms")?,
            rel_error: float(f[9], "rel_error")?,
            note: None,
        });
    }
    Ok(out)
}

/// Canvas of the button plot: `x` linear on `[X_MIN, X_MAX]`, `y` log on
/// `[Y_MIN, 1]`, circle radius `sqrt(s / pi) * unit` in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub unit: f64,
}

pub const X_MIN: f64 = 0.9;
pub const X_MAX: f64 = 1.05;
pub const Y_MIN: f64 = 1e-16;

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            width: 640.0,
            height: 480.0,
            margin: 48.0,
            unit: 8.0,
        }
    }
}

impl Geometry {
    pub fn px(&self, x: f64) -> f64 {
        self.margin + (x - X_MIN) / (X_MAX - X_MIN) * (self.width - 2.0 * self.margin)
    }

    pub fn py(&self, y: f64) -> f64 {
        let t = y.log10() / Y_MIN.log10();
        self.margin + t * (self.height - 2.0 * self.margin)
    }

    pub fn radius(&self, s: f64) -> f64 {
        (s / std::f64::consts::PI).sqrt() * self.unit
    }

    pub fn overlap(&self, a: &Button, b: &Button) -> bool {
        let d = (self.px(a.x) - self.px(b.x)).hypot(self.py(a.y) - self.py(b.y));
        d < self.radius(a.s) + self.radius(b.s)
    }
}

/// A point of the button plot (`s` is its area), or a merged circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Button {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

impl Button {
    /// Clipped point of one outcome with unit area.
    pub fn from_outcome(o: &TrialOutcome) -> Self {
        let x = if o.q.is_nan() { X_MAX } else { o.q.clamp(X_MIN, X_MAX) };
        let y = if o.rel_error.is_nan() { 1.0 } else { o.rel_error.clamp(Y_MIN, 1.0) };
        Button { x, y, s: 1.0 }
    }

    fn merge(a: &Button, b: &Button) -> Button {
        let s = a.s + b.s;
        Button {
            x: (a.s * a.x + b.s * b.x) / s,
            y: ((a.s * a.y.ln() + b.s * b.y.ln()) / s).exp(),
            s,
        }
    }
}

/// Merge overlapping circles pairwise (lowest index pair first) until no two
/// overlap. Arithmetic mean in `x`, geometric mean in `y`, both weighted by area.
pub fn button_merge(points: &[Button], geometry: &Geometry) -> Vec<Button> {
    let mut circles = points.to_vec();
    'outer: loop {
        for i in 0..circles.len() {
            for j in i + 1..circles.len() {
                if geometry.overlap(&circles[i], &circles[j]) {
                    let merged = Button::merge(&circles[i], &circles[j]);
                    circles.remove(j);
                    circles[i] = merged;
                    continue 'outer;
                }
            }
        }
        return circles;
    }
}

fn svg_open(g: &Geometry) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
        g.width, g.height, g.width, g.height
    )
}

/// Button plot as SVG plus the CSV of merged circles.
pub fn emit_button(outcomes: &[TrialOutcome], geometry: &Geometry) -> (String, String) {
    let points: Vec<Button> = outcomes.iter().map(Button::from_outcome).collect();
    let circles = button_merge(&points, geometry);
    let g = geometry;
    let mut svg = svg_open(g);
    let (x0, x1) = (g.px(X_MIN), g.px(X_MAX));
    let (y0, y1) = (g.py(1.0), g.py(Y_MIN));
    let _ = writeln!(svg, "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    let one = g.px(1.0);
    let _ = writeln!(svg, "<line x1=\"{one:.2}\" y1=\"{y0:.2}\" x2=\"{one:.2}\" y2=\"{y1:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>");
    for e in (0..=16).step_by(4) {
        let y = g.py(10f64.powi(-e));
        let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">1e-{e}</text>", x0 - 4.0, y + 3.0);
    }
    for x in [0.9, 0.95, 1.0, 1.05] {
        let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{x:.2}</text>", g.px(x), y1 + 14.0);
    }
    let mut csv = String::from("x,y,s\n");
    for c in &circles {
        let (cx, cy, r) = (g.px(c.x), g.py(c.y), g.radius(c.s));
        let _ = writeln!(svg, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" fill=\"steelblue\" fill-opacity=\"0.4\" stroke=\"steelblue\"/>");
        let _ = writeln!(
            svg,
            "<path d=\"M{:.2} {cy:.2}H{:.2}M{cx:.2} {:.2}V{:.2}\" stroke=\"black\"/>",
            cx - 3.0,
            cx + 3.0,
            cy - 3.0,
            cy + 3.0
        );
        let _ = writeln!(csv, "{},{},{}", num(c.x), num(c.y), num(c.s));
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}

/// Counts per sensitivity level: `(k, successes, improvements)` for every
/// level up to the largest one seen, plus the number of fails.
pub fn bar_counts(outcomes: &[TrialOutcome]) -> (Vec<(usize, usize, usize)>, usize) {
    let top = outcomes.iter().filter_map(|o| o.k).max();
    let mut rows: Vec<(usize, usize, usize)> = top.map_or(Vec::new(), |t| (0..=t).map(|k| (k, 0, 0)).collect());
    let mut fails = 0;
    for o in outcomes {
        match (o.k, o.category) {
            (_, c) if c.is_fail() => fails += 1,
            (Some(k), Category::Improvement) => rows[k].2 += 1,
            (Some(k), _) => rows[k].1 += 1,
            (None, _) => fails += 1,
        }
    }
    (rows, fails)
}

/// Bar chart of sensitivity levels as SVG plus its CSV; improvements are
/// drawn below the axis.
pub fn emit_bar(outcomes: &[TrialOutcome]) -> (String, String) {
    let (rows, fails) = bar_counts(outcomes);
    let g = Geometry::default();
    let mut csv = String::from("k,successes,improvements\n");
    for (k, s, i) in &rows {
        let _ = writeln!(csv, "{k},{s},{i}");
    }
    let mut svg = svg_open(&g);
    if !outcomes.is_empty() {
        let _ = writeln!(csv, "fail,{fails},0");
        let bars = rows.len() + 1;
        let peak = rows.iter().map(|r| r.1.max(r.2)).chain([fails]).max().unwrap_or(0).max(1) as f64;
        let axis = g.height / 2.0;
        let scale = (axis - g.margin) / peak;
        let slot = (g.width - 2.0 * g.margin) / bars as f64;
        let _ = writeln!(svg, "<line x1=\"{:.2}\" y1=\"{axis:.2}\" x2=\"{:.2}\" y2=\"{axis:.2}\" stroke=\"black\"/>", g.margin, g.width - g.margin);
        let mut bar = |idx: usize, up: usize, down: usize, label: &str, color: &str| {
            let x = g.margin + idx as f64 * slot + 0.1 * slot;
            let w = 0.8 * slot;
            if up > 0 {
                let h = up as f64 * scale;
                let _ = writeln!(svg, "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>", axis - h);
            }
            if down > 0 {
                let h = down as f64 * scale;
                let _ = writeln!(svg, "<rect x=\"{x:.2}\" y=\"{axis:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"seagreen\"/>");
            }
            let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{label}</text>", x + w / 2.0, g.height - g.margin / 2.0);
        };
        for (idx, (k, s, i)) in rows.iter().enumerate() {
            bar(idx, *s, *i, &k.to_string(), "steelblue");
        }
        bar(rows.len(), fails, 0, "fail", "firebrick");
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}
