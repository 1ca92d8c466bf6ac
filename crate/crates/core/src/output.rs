//! Serialization of traces, verdicts, thresholds and region maps.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! round-trips exactly. CSV files start with a `# schema=1` comment line and
//! use LF line endings. JSON objects keep the key order in which they were
//! built.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::channel::{Probe, WitnessReport};
use crate::classifier::{RegionMap, ThresholdPoint, Verdict, WINDOW_LABEL};
use crate::{ComplexAmplitude, Params};

pub const SCHEMA_LINE: &str = "# schema=1";

/// `x` with 17 significant digits.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn object<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Object(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    fn write_into(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            // JSON has no representation for non-finite numbers.
            Json::Num(x) if !x.is_finite() => out.push_str("null"),
            Json::Num(x) => out.push_str(&number(*x)),
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04x}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Array(items) => {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    item.write_into(out);
                }
                out.push(']');
            }
            Json::Object(fields) => {
                out.push('{');
                for (k, (key, value)) in fields.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    Json::Str(key.clone()).write_into(out);
                    out.push(':');
                    value.write_into(out);
                }
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out);
        out.push('\n');
        out
    }
}

/// Rows of already-formatted cells under a fixed header.
#[derive(Debug, Clone)]
pub struct Csv {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: Vec<&'static str>) -> Self {
        Csv { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 2));
        out.push_str(SCHEMA_LINE);
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn params_fields(p: &Params) -> Vec<(&'static str, Json)> {
    vec![
        ("gamma", Json::Num(p.gamma)),
        ("td", Json::Num(p.t_delay)),
        ("phi", Json::Num(p.phi)),
        ("u", Json::Num(p.u())),
    ]
}

/// Columns of an amplitude table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeColumns {
    Analytic,
    Dde,
    Both,
}

/// One sample of an amplitude table: time, analytic value, integrator value.
pub type AmplitudeRow = (f64, Option<ComplexAmplitude>, Option<ComplexAmplitude>);

pub fn amplitude_csv(columns: AmplitudeColumns, rows: &[AmplitudeRow]) -> String {
    let header = match columns {
        AmplitudeColumns::Analytic => vec!["t", "re_a", "im_a", "abs_a"],
        AmplitudeColumns::Dde => vec!["t", "re_d", "im_d", "abs_d"],
        AmplitudeColumns::Both => vec!["t", "re_a", "im_a", "re_d", "im_d", "abs_a"],
    };
    let mut csv = Csv::new(header);
    for &(t, a, d) in rows {
        let row = match (columns, a, d) {
            (AmplitudeColumns::Analytic, Some(a), _) => {
                vec![number(t), number(a.re), number(a.im), number(a.norm())]
            }
            (AmplitudeColumns::Dde, _, Some(d)) => {
                vec![number(t), number(d.re), number(d.im), number(d.norm())]
            }
            (AmplitudeColumns::Both, Some(a), Some(d)) => vec![
                number(t),
                number(a.re),
                number(a.im),
                number(d.re),
                number(d.im),
                number(a.norm()),
            ],
            _ => panic!("amplitude row does not match the requested columns"),
        };
        csv.push(row);
    }
    csv.render()
}

pub fn amplitude_json(p: &Params, rows: &[AmplitudeRow]) -> String {
    let complex = |z: Option<ComplexAmplitude>| match z {
        Some(z) => Json::Array(vec![Json::Num(z.re), Json::Num(z.im)]),
        None => Json::Null,
    };
    let samples = rows
        .iter()
        .map(|&(t, a, d)| {
            Json::object([("t", Json::Num(t)), ("analytic", complex(a)), ("dde", complex(d))])
        })
        .collect();
    let mut fields = vec![("schema", Json::Int(1))];
    fields.extend(params_fields(p));
    fields.push(("samples", Json::Array(samples)));
    Json::object(fields).render()
}

fn verdict_fields(v: &Verdict) -> Vec<(&'static str, Json)> {
    vec![
        ("window", Json::str(WINDOW_LABEL)),
        ("markovian", Json::Bool(v.markovian)),
        ("condition", Json::str(v.condition.label())),
        ("witness_x", v.witness_x.map(Json::Num).unwrap_or(Json::Null)),
    ]
}

pub fn verdict_json(p: &Params, v: &Verdict) -> String {
    let mut fields = params_fields(p);
    fields.extend(verdict_fields(v));
    Json::object(fields).render()
}

pub fn verdict_csv(p: &Params, v: &Verdict) -> String {
    let mut csv = Csv::new(vec!["gamma", "td", "phi", "u", "window", "markovian", "condition", "witness_x"]);
    csv.push(vec![
        number(p.gamma),
        number(p.t_delay),
        number(p.phi),
        number(p.u()),
        WINDOW_LABEL.to_string(),
        v.markovian.to_string(),
        v.condition.label().to_string(),
        v.witness_x.map(number).unwrap_or_default(),
    ]);
    csv.render()
}

fn threshold_object(t: &ThresholdPoint) -> Json {
    Json::object([
        ("phi", Json::Num(t.phi)),
        ("u_star", Json::Num(t.u_star)),
        ("crossings", Json::Int(t.crossings as i64)),
        ("window", Json::str(WINDOW_LABEL)),
    ])
}

pub fn threshold_json(points: &[ThresholdPoint]) -> String {
    match points {
        [single] => threshold_object(single).render(),
        many => Json::Array(many.iter().map(threshold_object).collect()).render(),
    }
}

pub fn threshold_csv(points: &[ThresholdPoint]) -> String {
    let mut csv = Csv::new(vec!["phi", "u_star", "crossings"]);
    for t in points {
        csv.push(vec![number(t.phi), number(t.u_star), t.crossings.to_string()]);
    }
    csv.render()
}

pub fn map_csv(map: &RegionMap) -> String {
    let mut csv = Csv::new(vec!["phi", "u", "markovian", "condition"]);
    for (i, phi) in map.phi_axis.iter().enumerate() {
        for (j, u) in map.u_axis.iter().enumerate() {
            let v = map.cell(i, j);
            csv.push(vec![number(phi), number(u), v.markovian.to_string(), v.condition.label().to_string()]);
        }
    }
    csv.render()
}

pub fn map_json(map: &RegionMap) -> String {
    let axis = |g: &crate::TimeGrid| Json::Array(g.iter().map(Json::Num).collect());
    let rows = (0..map.phi_axis.len())
        .map(|i| {
            Json::Array(
                map.column(i)
                    .iter()
                    .map(|v| Json::str(v.condition.label()))
                    .collect(),
            )
        })
        .collect();
    Json::object([
        ("schema", Json::Int(1)),
        ("window", Json::str(WINDOW_LABEL)),
        ("phi", axis(&map.phi_axis)),
        ("u", axis(&map.u_axis)),
        ("cells", Json::Array(rows)),
    ])
    .render()
}

pub fn witness_json(p: &Params, probe: Probe, n_steps: usize, r: &WitnessReport) -> String {
    let mut fields = params_fields(p);
    fields.extend([
        ("window", Json::str(WINDOW_LABEL)),
        ("probe", Json::str(probe.label())),
        ("n_steps", Json::Int(n_steps as i64)),
        ("nm_measure", Json::Num(r.nm_measure)),
        ("markovian", Json::Bool(r.markovian)),
    ]);
    Json::object(fields).render()
}

pub fn witness_csv(p: &Params, probe: Probe, n_steps: usize, r: &WitnessReport) -> String {
    let mut csv = Csv::new(vec!["gamma", "td", "phi", "u", "window", "probe", "n_steps", "nm_measure", "markovian"]);
    csv.push(vec![
        number(p.gamma),
        number(p.t_delay),
        number(p.phi),
        number(p.u()),
        WINDOW_LABEL.to_string(),
        probe.label().to_string(),
        n_steps.to_string(),
        number(r.nm_measure),
        r.markovian.to_string(),
    ]);
    csv.render()
}

// Plot geometry, in SVG user units.
const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const MARKOVIAN_FILL: &str = "#cfe3f5";
const NM_FILL: &str = "#f6d3c4";
const THRESHOLD_STROKE: &str = "#1f3fbf";

struct Frame {
    u_max: f64,
}

impl Frame {
    fn x(&self, phi: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * phi / TAU
    }

    fn y(&self, u: f64) -> f64 {
        HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * u / self.u_max
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{title}</text>"#,
            WIDTH / 2.0
        );
        s
    }

    fn axes(&self, s: &mut String) {
        let (x0, x1) = (self.x(0.0), self.x(TAU));
        let (y0, y1) = (self.y(0.0), self.y(self.u_max));
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
            x1 - x0,
            y0 - y1
        );
        let labels = ["0", "π/2", "π", "3π/2", "2π"];
        for (k, label) in labels.iter().enumerate() {
            let x = self.x(k as f64 * PI / 2.0);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{label}</text>"#,
                y0 + 5.0,
                y0 + 20.0
            );
        }
        let ticks = (self.u_max / 0.5).floor() as usize;
        for k in 0..=ticks {
            let u = 0.5 * k as f64;
            let y = self.y(u);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="end">{u:.1}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">φ</text>"#,
            0.5 * (x0 + x1),
            HEIGHT - 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="22" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 22 {:.2})">Γ t_d</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1)
        );
    }

    fn polyline(&self, s: &mut String, curve: &[ThresholdPoint]) {
        let points: Vec<String> = curve
            .iter()
            .map(|t| format!("{:.2},{:.2}", self.x(t.phi), self.y(t.u_star.min(self.u_max))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{THRESHOLD_STROKE}" stroke-width="3" stroke-linejoin="round"/>"#,
            points.join(" ")
        );
    }
}

/// Region map as colored cells (runs of equal verdicts merged per column)
/// with the threshold curve on top.
pub fn map_svg(map: &RegionMap, curve: &[ThresholdPoint]) -> String {
    let u_max = map.u_axis.t_end();
    let frame = Frame { u_max };
    let mut s = frame.open("Markovian and non-Markovian regions, t ∈ [0, 2 t_d]");

    let n_phi = map.phi_axis.len();
    let dphi = map.phi_axis.step();
    let du = map.u_axis.step();
    s.push_str("<g shape-rendering=\"crispEdges\">\n");
    for i in 0..n_phi {
        let phi = map.phi_axis.point(i);
        let lo = (phi - 0.5 * dphi).max(0.0);
        let hi = (phi + 0.5 * dphi).min(TAU);
        let column = map.column(i);
        let mut j = 0;
        while j < column.len() {
            let state = column[j].markovian;
            let start = j;
            while j < column.len() && column[j].markovian == state {
                j += 1;
            }
            let u_lo = if start == 0 { 0.0 } else { map.u_axis.point(start) - 0.5 * du };
            let u_hi = if j == column.len() { u_max } else { map.u_axis.point(j - 1) + 0.5 * du };
            let (x, y) = (frame.x(lo), frame.y(u_hi));
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.x(hi) - x,
                frame.y(u_lo) - y,
                if state { MARKOVIAN_FILL } else { NM_FILL }
            );
        }
    }
    s.push_str("</g>\n");
    frame.polyline(&mut s, curve);
    frame.axes(&mut s);
    legend(&mut s, true);
    s.push_str("</svg>\n");
    s
}

/// Threshold curve alone.
pub fn threshold_svg(curve: &[ThresholdPoint], u_max: f64) -> String {
    let frame = Frame { u_max };
    let mut s = frame.open("Threshold Γ t_d versus φ, t ∈ [0, 2 t_d]");
    frame.polyline(&mut s, curve);
    frame.axes(&mut s);
    legend(&mut s, false);
    s.push_str("</svg>\n");
    s
}

fn legend(s: &mut String, regions: bool) {
    let x = WIDTH - RIGHT - 170.0;
    let mut entries: Vec<(Option<&str>, &str)> = Vec::new();
    if regions {
        entries.push((Some(MARKOVIAN_FILL), "Markovian"));
        entries.push((Some(NM_FILL), "non-Markovian"));
    }
    entries.push((None, "threshold"));
    for (k, (fill, text)) in entries.into_iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * k as f64;
        let swatch = match fill {
            Some(fill) => format!(
                r#"<rect x="{x:.2}" y="{:.2}" width="16" height="10" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
                y - 5.0
            ),
            None => format!(
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{THRESHOLD_STROKE}" stroke-width="3"/>"#,
                x + 16.0
            ),
        };
        let _ = writeln!(
            s,
            r#"{swatch}<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{text}</text>"#,
            x + 24.0,
            y + 4.0
        );
    }
}
