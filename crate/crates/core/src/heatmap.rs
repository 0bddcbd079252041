//! Window × group importance heatmaps as CSV data or standalone SVG.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::AttributionFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorScale {
    /// `a = max |φ|` over all frames.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Csv,
    Svg,
}

#[derive(Debug, Clone)]
pub struct HeatmapSpec<'a> {
    pub frames: &'a [AttributionFrame],
    pub group_names: &'a [String],
    pub threshold: f64,
    pub scale: ColorScale,
    pub cell_size: u32,
    pub kind: OutputKind,
}

impl<'a> HeatmapSpec<'a> {
    pub fn new(frames: &'a [AttributionFrame], group_names: &'a [String], kind: OutputKind) -> Self {
        Self {
            frames,
            group_names,
            threshold: 0.5,
            scale: ColorScale::Auto,
            cell_size: 16,
            kind,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::EmptyFrames);
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidHeatmap(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if let ColorScale::Fixed(a) = self.scale {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidHeatmap(format!("color scale {a} must be positive")));
            }
        }
        if self.cell_size == 0 {
            return Err(Error::InvalidHeatmap("cell size must be positive".into()));
        }
        for f in self.frames {
            if f.attributions.len() != self.group_names.len() {
                return Err(Error::InvalidHeatmap(format!(
                    "frame at origin {} has {} attributions for {} groups",
                    f.origin,
                    f.attributions.len(),
                    self.group_names.len()
                )));
            }
        }
        Ok(())
    }

    /// The scale half-width. An all-zero auto scale falls back to 1.
    pub fn scale_extent(&self) -> f64 {
        match self.scale {
            ColorScale::Fixed(a) => a,
            ColorScale::Auto => {
                let a = self
                    .frames
                    .iter()
                    .flat_map(|f| f.attributions.iter())
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                if a > 0.0 && a.is_finite() {
                    a
                } else {
                    1.0
                }
            }
        }
    }
}

pub fn render(spec: &HeatmapSpec<'_>) -> Result<String> {
    spec.validate()?;
    Ok(match spec.kind {
        OutputKind::Csv => render_csv(spec),
        OutputKind::Svg => render_svg(spec),
    })
}

const WHITE: [f64; 3] = [255.0, 255.0, 255.0];
const DEEP_RED: [f64; 3] = [178.0, 24.0, 43.0];
const DEEP_BLUE: [f64; 3] = [33.0, 102.0, 172.0];

/// Diverging color for `value` on `[-a, a]`, or `None` for near-zero cells.
pub fn cell_color(value: f64, a: f64) -> Option<[u8; 3]> {
    if value.is_nan() || value.abs() < 0.005 * a {
        return None;
    }
    let t = (value.abs() / a).min(1.0);
    let end = if value > 0.0 { DEEP_RED } else { DEEP_BLUE };
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        rgb[c] = (WHITE[c] + (end[c] - WHITE[c]) * t).round() as u8;
    }
    Some(rgb)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(spec: &HeatmapSpec<'_>) -> String {
    let mut out = String::from("group");
    for f in spec.frames {
        write!(out, ",{}", f.origin).unwrap();
    }
    out.push('\n');
    for (g, name) in spec.group_names.iter().enumerate() {
        out.push_str(&csv_field(name));
        for f in spec.frames {
            write!(out, ",{:.16e}", f.attributions[g]).unwrap();
        }
        out.push('\n');
    }
    out.push_str("prediction");
    for f in spec.frames {
        write!(out, ",{:.16e}", f.prediction).unwrap();
    }
    out.push('\n');
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn render_svg(spec: &HeatmapSpec<'_>) -> String {
    let a = spec.scale_extent();
    let cell = spec.cell_size as f64;
    let windows = spec.frames.len();
    let groups = spec.group_names.len();
    let longest = spec.group_names.iter().map(|n| n.chars().count()).max().unwrap_or(0);
    let left = 12.0 + 7.0 * longest as f64;
    let top = 12.0;
    let right = 56.0;
    let bottom = 36.0;
    let plot_w = cell * windows as f64;
    let plot_h = cell * groups.max(1) as f64;
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;

    // Right axis covers [0, 1] and stretches for outputs outside it.
    let (lo, hi) = spec.frames.iter().fold((0.0f64, 1.0f64), |(lo, hi), f| {
        if f.prediction.is_finite() {
            (lo.min(f.prediction), hi.max(f.prediction))
        } else {
            (lo, hi)
        }
    });
    let y_of = |p: f64| top + plot_h * (1.0 - (p.clamp(lo, hi) - lo) / (hi - lo));

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    for (g, name) in spec.group_names.iter().enumerate() {
        let y = top + cell * g as f64;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            left - 4.0,
            y + cell / 2.0,
            xml_escape(name)
        )
        .unwrap();
        for (i, f) in spec.frames.iter().enumerate() {
            let x = left + cell * i as f64;
            match cell_color(f.attributions[g], a) {
                Some([r, gr, b]) => writeln!(
                    out,
                    r#"<rect class="cell" x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" style="fill:rgb({r},{gr},{b});stroke:none"/>"#
                ),
                None => writeln!(
                    out,
                    r#"<rect class="cell empty" x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" style="fill:none;stroke:none"/>"#
                ),
            }
            .unwrap();
        }
    }
    let points: Vec<String> = spec
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| format!("{:.1},{:.1}", left + cell * (i as f64 + 0.5), y_of(f.prediction)))
        .collect();
    writeln!(
        out,
        r#"<polyline class="prediction" points="{}" style="fill:none;stroke:black;stroke-width:1.5"/>"#,
        points.join(" ")
    )
    .unwrap();
    let ty = y_of(spec.threshold);
    writeln!(
        out,
        r#"<line class="threshold" x1="{left:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" style="stroke:black;stroke-width:1;stroke-dasharray:4,3"/>"#,
        left + plot_w
    )
    .unwrap();
    for (label, p) in [(lo, lo), (hi, hi), (spec.threshold, spec.threshold)] {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" dominant-baseline="middle">{}</text>"#,
            left + plot_w + 4.0,
            y_of(p),
            label
        )
        .unwrap();
    }
    let step = (windows / 10).max(1);
    for (i, f) in spec.frames.iter().enumerate().step_by(step) {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + cell * (i as f64 + 0.5),
            top + plot_h + 14.0,
            f.origin
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(origin: usize, prediction: f64, attributions: Vec<f64>) -> AttributionFrame {
        AttributionFrame { origin, prediction, baseline: 0.0, attributions }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn scale_endpoints() {
        assert_eq!(cell_color(2.0, 2.0), Some([178, 24, 43]));
        assert_eq!(cell_color(-2.0, 2.0), Some([33, 102, 172]));
        assert_eq!(cell_color(0.0, 2.0), None);
        assert_eq!(cell_color(0.009, 2.0), None);
        assert!(cell_color(0.01, 2.0).is_some());
        let frames = [frame(7, 0.9, vec![1.5, 0.0, -1.5])];
        let n = names(3);
        let svg = render(&HeatmapSpec::new(&frames, &n, OutputKind::Svg)).unwrap();
        assert!(svg.contains("fill:rgb(178,24,43)"));
        assert!(svg.contains("fill:rgb(33,102,172)"));
        assert_eq!(svg.matches("class=\"cell empty\"").count(), 1);
    }

    #[test]
    fn red_saturation_is_monotone() {
        let mut last = 0i32;
        for k in 1..=100 {
            let [r, g, b] = cell_color(k as f64 / 100.0, 1.0).unwrap();
            let saturation = r as i32 - (g as i32).min(b as i32);
            assert!(saturation >= last);
            last = saturation;
        }
    }

    #[test]
    fn svg_counts() {
        let frames: Vec<_> = (0..4).map(|i| frame(i, 0.2 + 0.2 * i as f64, vec![0.1, -0.2, 0.0])).collect();
        let n = names(3);
        let svg = render(&HeatmapSpec::new(&frames, &n, OutputKind::Svg)).unwrap();
        assert_eq!(svg.matches("<rect").count(), 12);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("class=\"threshold\"").count(), 1);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn polyline_crosses_threshold() {
        let frames = [frame(0, 0.2, vec![0.0]), frame(1, 0.8, vec![0.0])];
        let n = names(1);
        let mut spec = HeatmapSpec::new(&frames, &n, OutputKind::Svg);
        spec.cell_size = 20;
        let svg = render(&spec).unwrap();
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        let ty: f64 = svg.split("y1=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
        assert!(ys[0] > ty && ys[1] < ty);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let values = [0.1 + 0.2, -1.0 / 3.0, 1e-300, f64::MAX, -0.0, 123456.789];
        let frames: Vec<_> = (0..2).map(|i| frame(10 + i, 1.0 / 7.0, values[i * 3..i * 3 + 3].to_vec())).collect();
        let n = vec!["a,b".to_string(), "c\"d".into(), "e".into()];
        let text = render(&HeatmapSpec::new(&frames, &n, OutputKind::Csv)).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["group", "10", "11"]);
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 4);
        for (g, row) in rows[..3].iter().enumerate() {
            assert_eq!(&row[0], n[g]);
            for (i, f) in frames.iter().enumerate() {
                let v: f64 = row[i + 1].parse().unwrap();
                assert_eq!(v.to_bits(), f.attributions[g].to_bits());
            }
        }
        assert_eq!(&rows[3][0], "prediction");
    }

    #[test]
    fn rejects_bad_specs() {
        let n = names(1);
        assert!(matches!(render(&HeatmapSpec::new(&[], &n, OutputKind::Csv)), Err(Error::EmptyFrames)));
        let frames = [frame(0, 0.5, vec![1.0])];
        let mut spec = HeatmapSpec::new(&frames, &n, OutputKind::Svg);
        spec.threshold = 1.5;
        assert!(matches!(render(&spec), Err(Error::InvalidHeatmap(_))));
        spec.threshold = 0.5;
        spec.scale = ColorScale::Fixed(0.0);
        assert!(matches!(render(&spec), Err(Error::InvalidHeatmap(_))));
        let two = names(2);
        let spec = HeatmapSpec::new(&frames, &two, OutputKind::Csv);
        assert!(matches!(render(&spec), Err(Error::InvalidHeatmap(_))));
    }
}
