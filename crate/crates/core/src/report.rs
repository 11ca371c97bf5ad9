//! Alignment reports: deterministic JSON, flat CSV and an SVG bar chart.
//!
//! JSON layout:
//!
//! ```text
//! {
//!   "results": {rep: {strategy: {distance: {metric: {
//!       dataset: score, "__aggregate__": score,
//!       "__rows_evaluated__": n, "__rows_skipped__": n, ...}}}}},
//!   "diagnostics": {rep: {strategy: {distance: {...}}}},
//!   "warnings": [...]
//! }
//! ```
//!
//! Keys are sorted and floats carry 12 significant digits, so identical runs
//! serialize to identical bytes. Undefined scores are `null`.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::align::Metric;
use crate::distances::DistanceKind;
use crate::error::{Error, Result};

pub const AGGREGATE_KEY: &str = "__aggregate__";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetScore {
    pub dataset: String,
    pub score: Option<f64>,
    /// Rows (pairs for MAE) that produced a value.
    pub evaluated: usize,
    pub rows_skipped: usize,
    pub triplets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    /// Mean over every evaluated row of every dataset.
    pub aggregate: Option<f64>,
    pub evaluated: usize,
    pub rows_skipped: usize,
    pub triplets: usize,
    pub datasets: Vec<DatasetScore>,
}

/// Scores of one (representation, strategy, distance) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub representation: String,
    pub strategy: String,
    pub distance: DistanceKind,
    pub metrics: Vec<MetricSummary>,
    pub pairs_skipped: usize,
    pub predicted_ties: usize,
    pub degenerate_blocks: Vec<String>,
}

impl SliceReport {
    pub fn new(representation: &str, strategy: &str, distance: DistanceKind) -> Self {
        SliceReport {
            representation: representation.to_string(),
            strategy: strategy.to_string(),
            distance,
            metrics: Vec::new(),
            pairs_skipped: 0,
            predicted_ties: 0,
            degenerate_blocks: Vec::new(),
        }
    }

    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentReport {
    pub slices: Vec<SliceReport>,
    pub warnings: Vec<String>,
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn number(x: Option<f64>) -> Value {
    match x.map(round12) {
        Some(v) if v.is_finite() => json!(v),
        _ => Value::Null,
    }
}

fn nested<'a>(root: &'a mut Map<String, Value>, keys: &[&str]) -> &'a mut Map<String, Value> {
    keys.iter().fold(root, |node, key| {
        node.entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("report nodes are objects")
    })
}

impl AlignmentReport {
    pub fn slice(
        &self,
        representation: &str,
        strategy: &str,
        distance: DistanceKind,
    ) -> Option<&SliceReport> {
        self.slices.iter().find(|s| {
            s.representation == representation && s.strategy == strategy && s.distance == distance
        })
    }

    pub fn representations(&self) -> Vec<&str> {
        let mut reps: Vec<&str> = Vec::new();
        for s in &self.slices {
            if !reps.contains(&s.representation.as_str()) {
                reps.push(&s.representation);
            }
        }
        reps
    }

    /// Number of (strategy, distance, metric) scores reported for a
    /// representation.
    pub fn score_count(&self, representation: &str) -> usize {
        self.slices
            .iter()
            .filter(|s| s.representation == representation)
            .map(|s| s.metrics.len())
            .sum()
    }

    pub fn to_json_value(&self) -> Value {
        let mut results = Map::new();
        let mut diagnostics = Map::new();
        for s in &self.slices {
            let path = [
                s.representation.as_str(),
                s.strategy.as_str(),
                s.distance.name(),
            ];
            let node = nested(&mut results, &path);
            for m in &s.metrics {
                let mut leaf = Map::new();
                for d in &m.datasets {
                    leaf.insert(d.dataset.clone(), number(d.score));
                }
                leaf.insert(AGGREGATE_KEY.into(), number(m.aggregate));
                let evaluated_key = if m.metric == Metric::Mae {
                    "__pairs_evaluated__"
                } else {
                    "__rows_evaluated__"
                };
                leaf.insert(evaluated_key.into(), json!(m.evaluated));
                leaf.insert("__rows_skipped__".into(), json!(m.rows_skipped));
                if m.metric == Metric::Triplet {
                    leaf.insert("__triplets_evaluated__".into(), json!(m.triplets));
                }
                node.insert(m.metric.name().into(), Value::Object(leaf));
            }

            let diag = nested(&mut diagnostics, &path);
            diag.insert("pairs_skipped".into(), json!(s.pairs_skipped));
            diag.insert("predicted_ties".into(), json!(s.predicted_ties));
            diag.insert("degenerate_blocks".into(), json!(s.degenerate_blocks));
            for m in &s.metrics {
                let per_dataset: Map<String, Value> = m
                    .datasets
                    .iter()
                    .map(|d| {
                        let mut v =
                            json!({"evaluated": d.evaluated, "rows_skipped": d.rows_skipped});
                        if m.metric == Metric::Triplet {
                            v["triplets"] = json!(d.triplets);
                        }
                        (d.dataset.clone(), v)
                    })
                    .collect();
                diag.insert(m.metric.name().into(), Value::Object(per_dataset));
            }
        }
        json!({
            "results": results,
            "diagnostics": diagnostics,
            "warnings": self.warnings,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per leaf: `representation,strategy,distance,metric,dataset,value`.
    /// The corpus aggregate appears with dataset `__aggregate__`.
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for s in &self.slices {
            for m in &s.metrics {
                let leaves = m
                    .datasets
                    .iter()
                    .map(|d| (d.dataset.as_str(), d.score))
                    .chain(std::iter::once((AGGREGATE_KEY, m.aggregate)));
                for (dataset, score) in leaves {
                    let value = score
                        .map(round12)
                        .map(|v| v.to_string())
                        .unwrap_or_default();
                    rows.push([
                        s.representation.clone(),
                        s.strategy.clone(),
                        s.distance.name().to_string(),
                        m.metric.name().to_string(),
                        dataset.to_string(),
                        value,
                    ]);
                }
            }
        }
        rows.sort();
        let mut out = String::from("representation,strategy,distance,metric,dataset,value\n");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Grouped bar chart of corpus aggregates from a report's JSON: one panel per
/// metric, one group per representation, one bar per (strategy, distance).
pub fn render_svg(report: &Value) -> Result<String> {
    let results = report
        .get("results")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Config("report has no 'results' object".into()))?;

    // (metric, representation, config label, value)
    let mut bars: Vec<(String, String, String, Option<f64>)> = Vec::new();
    for (rep, strategies) in results {
        for (strategy, distances) in strategies.as_object().into_iter().flatten() {
            for (distance, metrics) in distances.as_object().into_iter().flatten() {
                for (metric, leaf) in metrics.as_object().into_iter().flatten() {
                    let value = leaf.get(AGGREGATE_KEY).and_then(Value::as_f64);
                    bars.push((
                        metric.clone(),
                        rep.clone(),
                        format!("{strategy}/{distance}"),
                        value,
                    ));
                }
            }
        }
    }

    let mut metrics: Vec<&str> = bars.iter().map(|b| b.0.as_str()).collect();
    metrics.sort_by_key(|m| {
        Metric::ALL
            .iter()
            .position(|k| k.name() == *m)
            .unwrap_or(usize::MAX)
    });
    metrics.dedup();
    let mut reps: Vec<&str> = bars.iter().map(|b| b.1.as_str()).collect();
    reps.dedup();
    let mut configs: Vec<&str> = bars.iter().map(|b| b.2.as_str()).collect();
    configs.sort();
    configs.dedup();

    let (panel_w, panel_h, margin_l, margin_t) = (
        (reps.len() * (configs.len() * 14 + 24)).max(240) as f64,
        220.0,
        60.0,
        40.0,
    );
    let legend_h = 20.0 * configs.len() as f64 + 20.0;
    let width = margin_l + panel_w + 40.0;
    let height = metrics.len() as f64 * (panel_h + 110.0) + legend_h + margin_t;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (pi, metric) in metrics.iter().enumerate() {
        let top = margin_t + pi as f64 * (panel_h + 110.0);
        let values: Vec<f64> = bars
            .iter()
            .filter(|b| b.0 == *metric)
            .filter_map(|b| b.3)
            .collect();
        let lo = values.iter().copied().fold(0.0, f64::min).min(0.0);
        let hi = values.iter().copied().fold(1.0, f64::max);
        let y = |v: f64| top + panel_h * (hi - v) / (hi - lo);

        let direction = match metric.parse::<Metric>() {
            Ok(m) if !m.higher_is_better() => " (lower is better)",
            _ => "",
        };
        let _ = writeln!(
            svg,
            r#"<text x="{margin_l}" y="{}" font-size="13" font-weight="bold">{}{direction}</text>"#,
            top - 12.0,
            escape_xml(metric)
        );
        for tick in 0..=4 {
            let v = lo + (hi - lo) * tick as f64 / 4.0;
            let _ = writeln!(
                svg,
                r##"<line x1="{margin_l}" x2="{}" y1="{y0:.2}" y2="{y0:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
                margin_l + panel_w,
                margin_l - 6.0,
                y(v) + 4.0,
                y0 = y(v)
            );
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{margin_l}" x2="{}" y1="{y0:.2}" y2="{y0:.2}" stroke="#333"/>"##,
            margin_l + panel_w,
            y0 = y(0.0)
        );

        let group_w = panel_w / reps.len().max(1) as f64;
        let bar_w = (group_w - 24.0) / configs.len().max(1) as f64;
        for (gi, rep) in reps.iter().enumerate() {
            let gx = margin_l + gi as f64 * group_w + 12.0;
            for (ci, config) in configs.iter().enumerate() {
                let Some(v) = bars
                    .iter()
                    .find(|b| b.0 == *metric && b.1 == *rep && b.2 == *config)
                    .and_then(|b| b.3)
                else {
                    continue;
                };
                let (y0, y1) = (y(0.0), y(v));
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {} {:.4}</title></rect>"#,
                    gx + ci as f64 * bar_w,
                    y0.min(y1),
                    bar_w,
                    (y1 - y0).abs(),
                    PALETTE[ci % PALETTE.len()],
                    escape_xml(rep),
                    escape_xml(config),
                    v
                );
            }
            let lx = gx + (group_w - 24.0) / 2.0;
            let ly = top + panel_h + 14.0;
            let _ = writeln!(
                svg,
                r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-35 {lx:.2} {ly:.2})">{}</text>"#,
                escape_xml(rep)
            );
        }
    }

    let legend_top = margin_t + metrics.len() as f64 * (panel_h + 110.0);
    for (ci, config) in configs.iter().enumerate() {
        let ly = legend_top + ci as f64 * 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{margin_l}" y="{ly}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            PALETTE[ci % PALETTE.len()],
            margin_l + 18.0,
            ly + 10.0,
            escape_xml(config)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
