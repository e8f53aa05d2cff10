//! Self-contained SVG bar charts with a CSV twin.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    /// One value per category.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl BarChart {
    pub fn new(title: impl Into<String>, y_label: impl Into<String>, categories: Vec<String>) -> BarChart {
        BarChart { title: title.into(), y_label: y_label.into(), categories, series: Vec::new() }
    }

    pub fn push_series(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.categories.len(), "one value per category");
        self.series.push(Series { name: name.into(), values });
    }

    fn value(&self, series: usize, category: usize) -> f64 {
        let v = self.series[series].values[category];
        if v.is_finite() {
            v.max(0.0)
        } else {
            0.0
        }
    }

    fn frame(&self, out: &mut String, y_max: f64) {
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&self.title)).unwrap();
        let plot_h = HEIGHT - TOP - BOTTOM;
        for i in 0..=4 {
            let v = y_max * i as f64 / 4.0;
            let y = TOP + plot_h * (1.0 - i as f64 / 4.0);
            writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, WIDTH - RIGHT).unwrap();
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, LEFT - 6.0, y + 4.0).unwrap();
        }
        writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        for (i, s) in self.series.iter().enumerate() {
            let y = TOP + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 14.0;
            writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#, PALETTE[i % PALETTE.len()]).unwrap();
            writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 18.0, y + 10.0, escape(&s.name)).unwrap();
        }
    }

    fn category_labels(&self, out: &mut String) {
        let slot = (WIDTH - LEFT - RIGHT) / self.categories.len().max(1) as f64;
        for (c, name) in self.categories.iter().enumerate() {
            let x = LEFT + slot * (c as f64 + 0.5);
            writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, HEIGHT - BOTTOM + 18.0, escape(name)).unwrap();
        }
    }

    /// Side-by-side bars per category, one per series.
    pub fn grouped_svg(&self) -> String {
        let max = (0..self.series.len())
            .flat_map(|s| (0..self.categories.len()).map(move |c| (s, c)))
            .map(|(s, c)| self.value(s, c))
            .fold(0.0, f64::max);
        let y_max = if max <= 1.0 { 1.0 } else { max };
        let mut out = String::new();
        self.frame(&mut out, y_max);
        let plot_h = HEIGHT - TOP - BOTTOM;
        let slot = (WIDTH - LEFT - RIGHT) / self.categories.len().max(1) as f64;
        let bar = slot * 0.8 / self.series.len().max(1) as f64;
        for c in 0..self.categories.len() {
            for s in 0..self.series.len() {
                let h = plot_h * self.value(s, c) / y_max;
                let x = LEFT + slot * c as f64 + slot * 0.1 + bar * s as f64;
                writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{:.2}" width="{bar:.2}" height="{h:.2}" fill="{}"/>"#,
                    TOP + plot_h - h,
                    PALETTE[s % PALETTE.len()]
                )
                .unwrap();
            }
        }
        self.category_labels(&mut out);
        out.push_str("</svg>\n");
        out
    }

    /// One bar per category with the series stacked bottom-up.
    pub fn stacked_svg(&self) -> String {
        let max = (0..self.categories.len())
            .map(|c| (0..self.series.len()).map(|s| self.value(s, c)).sum::<f64>())
            .fold(0.0, f64::max);
        let y_max = if max <= 1.0 { 1.0 } else { max };
        let mut out = String::new();
        self.frame(&mut out, y_max);
        let plot_h = HEIGHT - TOP - BOTTOM;
        let slot = (WIDTH - LEFT - RIGHT) / self.categories.len().max(1) as f64;
        for c in 0..self.categories.len() {
            let mut base = 0.0;
            for s in 0..self.series.len() {
                let h = plot_h * self.value(s, c) / y_max;
                writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                    LEFT + slot * c as f64 + slot * 0.2,
                    TOP + plot_h - base - h,
                    slot * 0.6,
                    PALETTE[s % PALETTE.len()]
                )
                .unwrap();
                base += h;
            }
        }
        self.category_labels(&mut out);
        out.push_str("</svg>\n");
        out
    }

    /// Long-form table: one row per (category, series).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["category", "series", "value"]).expect("in-memory write");
        for (c, cat) in self.categories.iter().enumerate() {
            for s in &self.series {
                w.write_record([cat.as_str(), s.name.as_str(), &s.values[c].to_string()]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
