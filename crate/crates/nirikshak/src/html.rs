//! Static single-file HTML rendering of an analysis report.

use std::fmt::Write;

use nirikshak_core::analysis::{ClusterReport, HierarchyNode, RatioSummary};
use nirikshak_core::AnalysisReport;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:system-ui,sans-serif;margin:2rem;color:#222;max-width:70rem}\
h2{margin-top:2rem;border-bottom:1px solid #ddd}\
.row{display:flex;align-items:center;gap:.5rem;margin:2px 0}\
.label{width:22rem;overflow:hidden;text-overflow:ellipsis;white-space:nowrap;font-size:.9rem}\
.bar{background:#c0392b;height:.9rem}\
table{border-collapse:collapse;font-size:.9rem}td,th{border:1px solid #ccc;padding:3px 8px;text-align:left}\
code{font-size:.85rem}.muted{color:#777}";

fn donut(out: &mut String, ratio: &RatioSummary) {
    let r = 60.0;
    let circumference = 2.0 * std::f64::consts::PI * r;
    let failed = circumference * ratio.fail_ratio;
    let _ = write!(
        out,
        "<svg width=\"180\" height=\"180\" viewBox=\"0 0 180 180\" role=\"img\" aria-label=\"pass/fail ratio\">\
<circle cx=\"90\" cy=\"90\" r=\"{r}\" fill=\"none\" stroke=\"#27ae60\" stroke-width=\"28\"/>\
<circle cx=\"90\" cy=\"90\" r=\"{r}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"28\" \
stroke-dasharray=\"{failed:.3} {circumference:.3}\" transform=\"rotate(-90 90 90)\"/>\
<text x=\"90\" y=\"96\" text-anchor=\"middle\" font-size=\"18\">{:.1}%</text></svg>",
        ratio.fail_ratio * 100.0
    );
    let _ = write!(
        out,
        "<p>{} tests: <b>{}</b> passed, <b>{}</b> failed (fail ratio {:.4}).</p>",
        ratio.total, ratio.passed, ratio.failed, ratio.fail_ratio
    );
}

fn bars(out: &mut String, node: &HierarchyNode, total: usize, depth: usize) {
    let width = if total == 0 { 0.0 } else { 30.0 * node.count as f64 / total as f64 };
    let _ = write!(
        out,
        "<div class=\"row\"><span class=\"label\" style=\"padding-left:{}rem\" title=\"{attr}\">{attr}: <b>{val}</b></span>\
<span class=\"bar\" style=\"width:{width:.2}rem\"></span><span>{}</span></div>",
        depth as f64 * 1.2,
        node.count,
        attr = esc(&node.attribute),
        val = esc(&node.value),
    );
    for child in &node.children {
        bars(out, child, total, depth + 1);
    }
}

fn clusters(out: &mut String, report: &ClusterReport) {
    let _ = write!(
        out,
        "<p>eps {}, minPts {}; {} clusters, {} noise records.</p>\
<table><tr><th>cluster</th><th>size</th><th>resource</th><th>method</th><th>case</th><th>url</th><th>error</th></tr>",
        report.params.eps,
        report.params.min_pts,
        report.cluster_count(),
        report.noise
    );
    for c in &report.summary {
        let r = &c.representative;
        let _ = write!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{} #{}</td><td>{}</td><td><code>{}</code></td><td><code>{}</code></td></tr>",
            c.label,
            c.size,
            esc(&r.resource),
            r.method,
            r.method_index,
            r.outcome_case,
            esc(&r.url_template),
            esc(&r.error_message)
        );
    }
    out.push_str("</table>");
}

pub fn render(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html><html lang=\"en\"><head><meta charset=\"utf-8\"><title>Test report</title><style>{STYLE}</style></head><body><h1>Test report</h1>"
    );
    match &report.ratio {
        None => out.push_str("<p class=\"muted\">No tests in the log; nothing to analyse.</p>"),
        Some(ratio) => {
            out.push_str("<h2>Pass / fail</h2>");
            donut(&mut out, ratio);
        }
    }
    if let Some(h) = &report.hierarchy {
        out.push_str("<h2>Failures by attribute</h2>");
        bars(&mut out, h, h.count, 0);
    }
    match &report.clusters {
        Some(c) => {
            out.push_str("<h2>Failure clusters</h2>");
            clusters(&mut out, c);
        }
        None if report.hierarchy.is_some() => {
            let _ = write!(
                out,
                "<p class=\"muted\">Clustering runs above {} failures.</p>",
                report.params.cluster_gate
            );
        }
        None => {}
    }
    out.push_str("</body></html>\n");
    out
}
