//! Human- and machine-readable evaluation output.

use std::fmt::Write as _;

use penn_core::eval::{EvalReport, Heatmap, Kind, Tally};

fn pct(t: &Tally) -> String {
    match t.accuracy() {
        Some(a) => format!("{:6.2}", 100.0 * a),
        None => "   n/a".to_string(),
    }
}

fn line(out: &mut String, name: &str, t: &Tally) {
    let _ = writeln!(
        out,
        "{name:<28} {} %  {:>6}/{:<6} skipped {}",
        pct(t),
        t.correct,
        t.attempted,
        t.skipped
    );
}

/// One row per category, then the SEMANTIC, SYNTACTIC and TOTAL rollups.
pub fn render(report: &EvalReport) -> String {
    let mut out = String::new();
    for c in &report.categories {
        line(&mut out, &c.name, &c.tally);
    }
    line(&mut out, "SEMANTIC", &report.semantic());
    line(&mut out, "SYNTACTIC", &report.syntactic());
    line(&mut out, "TOTAL", &report.total());
    out
}

pub fn to_csv(report: &EvalReport) -> String {
    let mut out = String::from("category,kind,correct,attempted,skipped,accuracy\n");
    let mut row = |name: &str, kind: &str, t: &Tally| {
        let acc = t.accuracy().map(|a| format!("{a:.6}")).unwrap_or_default();
        let _ = writeln!(out, "{name},{kind},{},{},{},{acc}", t.correct, t.attempted, t.skipped);
    };
    for c in &report.categories {
        let kind = match c.kind {
            Kind::Semantic => "semantic",
            Kind::Syntactic => "syntactic",
        };
        row(&c.name, kind, &c.tally);
    }
    row("SEMANTIC", "rollup", &report.semantic());
    row("SYNTACTIC", "rollup", &report.syntactic());
    row("TOTAL", "rollup", &report.total());
    out
}

/// Header of partition offsets, one row of accuracies per category.
pub fn heatmap_csv(h: &Heatmap) -> String {
    let mut out = String::from("category");
    for j in &h.offsets {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for (r, (name, _)) in h.rows.iter().enumerate() {
        out.push_str(name);
        for a in &h.accuracy[r] {
            match a {
                Some(a) => {
                    let _ = write!(out, ",{a:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Heatmap as text, marking the best columns (ties within one point) with `*`.
pub fn render_heatmap(h: &Heatmap) -> String {
    let mut out = format!("{:<28}", "category");
    for j in &h.offsets {
        let _ = write!(out, " {j:>8}");
    }
    out.push('\n');
    for (r, (name, _)) in h.rows.iter().enumerate() {
        let best = h.best_columns(r);
        let _ = write!(out, "{name:<28}");
        for (c, a) in h.accuracy[r].iter().enumerate() {
            let mark = if best.contains(&c) { '*' } else { ' ' };
            match a {
                Some(a) => {
                    let _ = write!(out, " {:>7.2}{mark}", 100.0 * a);
                }
                None => {
                    let _ = write!(out, " {:>8}", "n/a");
                }
            }
        }
        out.push('\n');
    }
    out
}
