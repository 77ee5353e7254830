//! Minimal SVG plots. Presentational only; the CSV files carry the data.

use std::fmt::Write;

use crate::metrics::{ForcePolytope, InertiaTensorResult, SweepTable};

const SIZE: f64 = 400.0;
const COLORS: [&str; 3] = ["#444444", "#1f77b4", "#d62728"];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    )
}

fn legend(out: &mut String, labels: &[String]) {
    for (k, l) in labels.iter().enumerate() {
        let y = 40.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            "<text x=\"10\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{l}</text>",
            COLORS[k % COLORS.len()]
        );
    }
}

/// Ellipses `{x : x' T_sym^-1 x = 1}` of the symmetric tensor parts, i.e.
/// axes along the eigenvectors with half-lengths sqrt(eigenvalue).
pub fn git_svg(results: &[InertiaTensorResult]) -> String {
    let mut out = header("generalized inertia");
    let axes: Vec<_> = results
        .iter()
        .map(|r| r.symmetric_part.clone().symmetric_eigen())
        .collect();
    let max = axes
        .iter()
        .flat_map(|e| e.eigenvalues.iter().map(|v| v.max(0.0).sqrt()))
        .fold(1e-12, f64::max);
    let scale = 0.4 * SIZE / max;
    for (k, e) in axes.iter().enumerate() {
        if e.eigenvalues.len() != 2 {
            continue;
        }
        let (rx, ry) = (
            e.eigenvalues[0].max(0.0).sqrt() * scale,
            e.eigenvalues[1].max(0.0).sqrt() * scale,
        );
        let angle = (-e.eigenvectors[(1, 0)]).atan2(e.eigenvectors[(0, 0)]).to_degrees();
        let _ = writeln!(
            out,
            "<ellipse cx=\"{c}\" cy=\"{c}\" rx=\"{rx:.3}\" ry=\"{ry:.3}\" transform=\"rotate({angle:.3} {c} {c})\" fill=\"none\" stroke=\"{}\"/>",
            COLORS[k % COLORS.len()],
            c = SIZE / 2.0
        );
    }
    legend(&mut out, &results.iter().map(|r| r.variant.to_string()).collect::<Vec<_>>());
    out + "</svg>\n"
}

pub fn fc_svg(polytopes: &[ForcePolytope]) -> String {
    let mut out = header("force capability");
    let max = polytopes
        .iter()
        .flat_map(|p| p.vertices.iter().map(|v| v.amax()))
        .fold(1e-12, f64::max);
    let scale = 0.4 * SIZE / max;
    for (k, p) in polytopes.iter().enumerate() {
        if p.dim != 2 {
            continue;
        }
        let pts: Vec<String> = p
            .vertices
            .iter()
            .map(|v| format!("{:.3},{:.3}", SIZE / 2.0 + v[0] * scale, SIZE / 2.0 - v[1] * scale))
            .collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\"/>",
            pts.join(" "),
            COLORS[k % COLORS.len()]
        );
    }
    legend(&mut out, &polytopes.iter().map(|p| p.variant.to_string()).collect::<Vec<_>>());
    out + "</svg>\n"
}

/// Normalized capabilities and IMF against `eta_f`; infinite values are clipped.
pub fn sweep_svg(table: &SweepTable) -> String {
    let mut out = header("efficiency sweep");
    let clip = 5.0;
    let rows = &table.rows;
    if rows.len() < 2 {
        return out + "</svg>\n";
    }
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.eta_f), b.max(r.eta_f)));
    let x = |e: f64| 40.0 + (e - lo) / (hi - lo).max(1e-12) * (SIZE - 60.0);
    let y = |v: f64| SIZE - 30.0 - v.min(clip) / clip * (SIZE - 90.0);
    let series: [(&str, fn(&crate::metrics::SweepRow) -> f64); 3] = [
        ("fc_fwd_norm", |r| r.fc_fwd_norm),
        ("fc_bwd_norm", |r| r.fc_bwd_norm),
        ("imf", |r| r.imf),
    ];
    for (k, (_, get)) in series.iter().enumerate() {
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| get(r).is_finite())
            .map(|r| format!("{:.3},{:.3}", x(r.eta_f), y(get(r))))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>",
            pts.join(" "),
            COLORS[k % COLORS.len()]
        );
    }
    legend(&mut out, &series.iter().map(|s| s.0.to_string()).collect::<Vec<_>>());
    out + "</svg>\n"
}
