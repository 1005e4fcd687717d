use std::fmt::Write as _;
use std::path::Path;

use evbench_core::metrics::WeightScheme;
use evbench_core::report::MetricReport;

use crate::error::CliError;
use crate::io::write_text;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }

    fn polyline(&self, xs: &[f64], ys: &[f64], color: &str) -> String {
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(ys) {
            let _ = write!(pts, "{:.2},{:.2} ", self.px(*x), self.py(*y));
        }
        format!(
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        )
    }

    /// Frame with the axis extents as tick labels.
    fn frame(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        format!(
            concat!(
                r#"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
                r#"<text x="{cx}" y="25" text-anchor="middle" font-size="14">{title}</text>"#,
                r#"<text x="{cx}" y="{xl}" text-anchor="middle" font-size="12">{x_label}</text>"#,
                r#"<text x="15" y="{cy}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {cy})">{y_label}</text>"#,
                r#"<text x="{l}" y="{bt}" text-anchor="middle" font-size="10">{x0}</text>"#,
                r#"<text x="{r}" y="{bt}" text-anchor="middle" font-size="10">{x1}</text>"#,
                r#"<text x="{lt}" y="{b}" text-anchor="end" font-size="10">{y0}</text>"#,
                r#"<text x="{lt}" y="{t}" text-anchor="end" font-size="10">{y1}</text>"#,
            ),
            l = l,
            t = t,
            r = r,
            b = b,
            w = r - l,
            h = b - t,
            cx = W / 2.0,
            cy = H / 2.0,
            xl = H - 12.0,
            bt = b + 14.0,
            lt = l - 4.0,
            title = escape(title),
            x_label = x_label,
            y_label = y_label,
            x0 = self.x0,
            x1 = self.x1,
            y0 = self.y0,
            y1 = self.y1,
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}\n</svg>\n"
    )
}

fn color(scheme: WeightScheme) -> &'static str {
    match scheme {
        WeightScheme::Uniform => "#1f77b4",
        WeightScheme::Velocity => "#d62728",
        WeightScheme::Combined => "#2ca02c",
    }
}

fn scheme_name(scheme: WeightScheme) -> &'static str {
    match scheme {
        WeightScheme::Uniform => "uniform",
        WeightScheme::Velocity => "velocity",
        WeightScheme::Combined => "combined",
    }
}

/// Precision curves for every weighting, one per scheme present in the
/// report. Legend values are the report's AUCs.
pub fn precision_svg(report: &MetricReport) -> Option<String> {
    let v = report.velocity.as_ref()?;
    if v.curves.is_empty() {
        return None;
    }
    let axes = Axes {
        x0: 0.0,
        x1: report.config.xi_max,
        y0: 0.0,
        y1: 1.0,
    };
    let mut body = axes.frame(
        &format!("{} precision curves", report.config.sequence),
        "RVE threshold xi",
        "S(xi)",
    );
    for (k, c) in v.curves.iter().enumerate() {
        body.push('\n');
        body.push_str(&axes.polyline(&c.xi, &c.s, color(c.weighting)));
        let _ = write!(
            body,
            "\n<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{} AUC {}</text>",
            W - MARGIN - 150.0,
            H - MARGIN - 15.0 - 15.0 * k as f64,
            color(c.weighting),
            scheme_name(c.weighting),
            c.auc
        );
    }
    Some(document(&body))
}

/// Translation ATE against time.
pub fn ate_svg(report: &MetricReport) -> Option<String> {
    let s = &report.series;
    let (&t0, &t1) = (s.t.first()?, s.t.last()?);
    let max = report.ate.translation_only.stats.max;
    let axes = Axes {
        x0: t0,
        x1: if t1 > t0 { t1 } else { t0 + 1.0 },
        y0: 0.0,
        y1: if max > 0.0 { max } else { 1.0 },
    };
    let mut body = axes.frame(
        &format!("{} translation ATE", report.config.sequence),
        "t (s)",
        "ATE (m)",
    );
    body.push('\n');
    body.push_str(&axes.polyline(&s.t, &s.ate_translation, "#1f77b4"));
    Some(document(&body))
}

pub fn write_report_plots(dir: &Path, report: &MetricReport) -> Result<(), CliError> {
    let stem: String = report
        .config
        .sequence
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if let Some(svg) = precision_svg(report) {
        write_text(&dir.join(format!("{stem}_precision.svg")), &svg)?;
    }
    if let Some(svg) = ate_svg(report) {
        write_text(&dir.join(format!("{stem}_ate.svg")), &svg)?;
    }
    Ok(())
}
