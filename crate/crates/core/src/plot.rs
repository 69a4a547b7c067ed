//! Self-contained SVG step plots with optional confidence bands.
//!
//! Output contains no timestamps or external references, so identical
//! inputs render byte-identical files.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

/// A step function to render: `(x, y)` vertices holding each `y` until the
/// next `x`. An optional band gives `(x, low, high)` envelopes on the same
/// step grid.
pub struct StepPlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
    pub band: Option<&'a [(f64, f64, f64)]>,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let formatted = format!("{v:.4}");
    let trimmed = formatted.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() || trimmed == "-" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        if self.hi == self.lo {
            return (self.pixel_lo + self.pixel_hi) / 2.0;
        }
        self.pixel_lo + (v - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }
}

fn step_vertices(points: &[(f64, f64)], x: &Scale, y: &Scale) -> Vec<(f64, f64)> {
    let mut vertices = Vec::with_capacity(2 * points.len());
    for (i, &(px, py)) in points.iter().enumerate() {
        if i > 0 {
            let previous = points[i - 1].1;
            vertices.push((x.map(px), y.map(previous)));
        }
        vertices.push((x.map(px), y.map(py)));
    }
    vertices
}

fn polyline(vertices: &[(f64, f64)]) -> String {
    vertices
        .iter()
        .map(|(a, b)| format!("{},{}", fmt(*a), fmt(*b)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the plot to an SVG document string.
pub fn render(plot: &StepPlot<'_>) -> String {
    let mut xs: Vec<f64> = plot.points.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = plot.points.iter().map(|p| p.1).collect();
    if let Some(band) = plot.band {
        xs.extend(band.iter().map(|b| b.0));
        ys.extend(band.iter().flat_map(|b| [b.1, b.2]));
    }
    let x_lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_pad = if y_hi > y_lo { 0.05 * (y_hi - y_lo) } else { 0.5 };

    let x = Scale {
        lo: x_lo,
        hi: x_hi,
        pixel_lo: MARGIN_LEFT,
        pixel_hi: WIDTH - MARGIN_RIGHT,
    };
    let y = Scale {
        lo: y_lo - y_pad,
        hi: y_hi + y_pad,
        pixel_lo: HEIGHT - MARGIN_BOTTOM,
        pixel_hi: MARGIN_TOP,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Grid and tick labels.
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let vx = x.lo + frac * (x.hi - x.lo);
        let vy = y.lo + frac * (y.hi - y.lo);
        let px = x.map(vx);
        let py = y.map(vy);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(px),
            fmt(MARGIN_TOP),
            fmt(px),
            fmt(HEIGHT - MARGIN_BOTTOM)
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(py),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(py)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            fmt(px),
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            tick_label(vx)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_LEFT - 6.0),
            fmt(py + 4.0),
            tick_label(vy)
        ));
    }

    // Confidence band as a translucent step polygon.
    if let Some(band) = plot.band {
        if band.len() > 1 {
            let upper: Vec<(f64, f64)> = band.iter().map(|b| (b.0, b.2)).collect();
            let lower: Vec<(f64, f64)> = band.iter().map(|b| (b.0, b.1)).collect();
            let mut vertices = step_vertices(&upper, &x, &y);
            let mut back = step_vertices(&lower, &x, &y);
            back.reverse();
            vertices.extend(back);
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"#1f6fb4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                polyline(&vertices)
            ));
        }
    }

    // The step curve itself.
    if plot.points.len() > 1 {
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"2\"/>\n",
            polyline(&step_vertices(plot.points, &x, &y))
        ));
    }

    // Axes on top of the grid.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM),
        fmt(WIDTH - MARGIN_RIGHT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    ));

    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        fmt(MARGIN_TOP - 16.0),
        escape(plot.title)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        fmt((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        fmt(HEIGHT - 12.0),
        escape(plot.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
        fmt(20.0),
        fmt(HEIGHT / 2.0),
        fmt(20.0),
        fmt(HEIGHT / 2.0),
        escape(plot.y_label)
    ));
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic_and_self_contained() {
        let points = [(0.0, 1.0), (0.4, 0.8), (0.9, 0.5)];
        let band = [(0.0, 1.0, 1.0), (0.4, 0.7, 0.9), (0.9, 0.3, 0.7)];
        let plot = StepPlot {
            title: "curve",
            x_label: "score",
            y_label: "estimate",
            points: &points,
            band: Some(&band),
        };
        let a = render(&plot);
        let b = render(&plot);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("polygon"));
        assert!(!a.contains("http://") || a.contains("http://www.w3.org/2000/svg"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let points = [(0.0, 1.0), (1.0, 1.0)];
        let plot = StepPlot {
            title: "flat",
            x_label: "x",
            y_label: "y",
            points: &points,
            band: None,
        };
        let svg = render(&plot);
        assert!(svg.contains("polyline"));
        assert!(!svg.contains("NaN"));
    }
}
