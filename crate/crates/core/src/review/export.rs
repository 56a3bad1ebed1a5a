//! Self-contained HTML export with inline SVG charts.

use std::fmt::Write as _;

use crate::charts::ChartSpec;
use crate::draft::MoveTag;

use super::ApprovedNote;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 160.0;
const PAD: f64 = 24.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn badge_hex(color: &str) -> &'static str {
    match color {
        "red" => "#c62828",
        "amber" => "#f9a825",
        _ => "#2e7d32",
    }
}

fn chart_svg(chart: &ChartSpec) -> String {
    let ys = chart
        .points
        .iter()
        .map(|p| p.y)
        .chain(chart.threshold_lines.iter().map(|l| l.y));
    let (mut lo, mut hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
        (lo.min(y), hi.max(y))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let x_max = chart.x_max.max(1.0);
    let sx = |x: f64| PAD + x / x_max * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - lo) / (hi - lo) * (HEIGHT - 2.0 * PAD);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" role=\"img\" aria-label=\"{}\">",
        escape(&chart.caption)
    );
    let _ = write!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#fafafa\" stroke=\"#ddd\"/>"
    );
    for line in &chart.threshold_lines {
        let y = sy(line.y);
        let _ = write!(
            svg,
            "<line x1=\"{PAD}\" x2=\"{:.1}\" y1=\"{y:.1}\" y2=\"{y:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"><title>{} {}</title></line>",
            WIDTH - PAD,
            escape(&line.label),
            line.y
        );
    }
    if !chart.points.is_empty() {
        let pts: Vec<String> = chart
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", sx(p.x), sy(p.y)))
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
    }
    for a in &chart.annotations {
        let y = chart
            .points
            .iter()
            .find(|p| p.x == a.x)
            .map_or(HEIGHT - PAD, |p| sy(p.y));
        let _ = write!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"#c62828\"><title>{}</title></circle>",
            sx(a.x),
            escape(&a.text)
        );
    }
    svg.push_str("</svg>");
    svg
}

pub fn render_note_html(note: &ApprovedNote, charts: &[ChartSpec]) -> String {
    let color = note.urgency.badge_color();
    let mut h = String::new();
    let _ = writeln!(h, "<!DOCTYPE html>");
    let _ = writeln!(h, "<html lang=\"en\"><head><meta charset=\"utf-8\">");
    let _ = writeln!(h, "<title>Adherence report {}</title>", escape(note.case_id.as_str()));
    let _ = writeln!(
        h,
        "<style>body{{font-family:sans-serif;max-width:52rem;margin:2rem auto}}.badge{{color:#fff;padding:.1rem .5rem;border-radius:.3rem}}figure{{margin:.5rem 0}}.gap{{font-style:italic}}</style>"
    );
    let _ = writeln!(h, "</head><body>");
    let _ = writeln!(h, "<header>");
    let _ = writeln!(
        h,
        "<h1>Adherence report <span>{}</span> <span class=\"badge\" data-urgency=\"{}\" style=\"background:{}\">{}</span></h1>",
        escape(note.case_id.as_str()),
        note.urgency,
        badge_hex(color),
        note.urgency
    );
    let _ = writeln!(
        h,
        "<p>Approved by {} at {}. Follow-up: {}. Medications confirmed.</p>",
        escape(note.physician_id.as_str()),
        note.approved_at,
        note.follow_up_interval.label()
    );
    let _ = writeln!(h, "<nav><ul>");
    for s in &note.sections {
        let _ = writeln!(
            h,
            "<li><a href=\"#{}\">{}</a></li>",
            escape(&s.section_id),
            s.topic.title()
        );
    }
    let _ = writeln!(h, "</ul></nav></header>");

    for s in &note.sections {
        let _ = writeln!(h, "<section id=\"{}\">", escape(&s.section_id));
        let _ = writeln!(h, "<h2>{}</h2>", s.topic.title());
        for tag in MoveTag::ORDER {
            let _ = writeln!(
                h,
                "<p data-move=\"{tag}\"><strong>{}:</strong> {}</p>",
                tag.heading(),
                escape(s.moves.get(tag))
            );
        }
        for chart in s.chart_refs.iter().filter_map(|id| charts.iter().find(|c| &c.chart_id == id)) {
            let _ = writeln!(
                h,
                "<figure id=\"chart-{}\">{}<figcaption>{}</figcaption></figure>",
                escape(&chart.chart_id),
                chart_svg(chart),
                escape(&chart.caption)
            );
        }
        let _ = writeln!(h, "</section>");
    }
    let _ = writeln!(h, "</body></html>");
    h
}
