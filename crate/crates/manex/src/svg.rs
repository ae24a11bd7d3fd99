//! Minimal standalone SVG bar charts for the analysis reports.
//!
//! Rendering is a pure function of the chart data, so plots never embed any
//! computation of their own.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

/// Renders one bar chart: one bar per label.
pub fn bar_chart(title: &str, labels: &[String], values: &[u64]) -> String {
    assert_eq!(labels.len(), values.len());
    let max = values.iter().copied().max().unwrap_or(0).max(1) as f64;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = labels.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.72;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    svg.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_RIGHT
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN_TOP}\" stroke=\"black\"/>\n"
    ));

    for (i, (label, &value)) in labels.iter().zip(values).enumerate() {
        let h = plot_h * value as f64 / max;
        let x = MARGIN_LEFT + i as f64 * slot + (slot - bar_w) / 2.0;
        let y = y0 - h;
        let cx = x + bar_w / 2.0;
        svg.push_str(&format!(
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"#4878a8\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{value}</text>\n",
            y - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\" \
             transform=\"rotate(-35 {cx:.2} {:.2})\">{}</text>\n",
            y0 + 14.0,
            y0 + 14.0,
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(raw: &str) -> String {
    raw.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
