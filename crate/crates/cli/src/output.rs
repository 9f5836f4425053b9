//! CSV, JSON and SVG writers. Floats are written with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use dvflow_core::diagnostics::{balance_residual, BalanceKind};
use dvflow_core::{ConstitutiveLaw, DiagnosticsRecord, FluidState, Grid};

pub const TIMESERIES_COLUMNS: [&str; 21] = [
    "t",
    "mass",
    "energy",
    "entropy",
    "min_rho",
    "max_rho",
    "max_w",
    "min_w",
    "l2_w",
    "dissipation_energy",
    "dissipation_entropy",
    "power_in_energy",
    "power_in_entropy",
    "h1_rho",
    "h2_rho",
    "h1_u",
    "density_floor_bound",
    "residual_mass",
    "residual_energy",
    "residual_entropy",
    "residual_w_l2",
];

pub const SNAPSHOT_COLUMNS: [&str; 5] = ["x", "rho", "u", "w", "X"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Time series with residuals between consecutive records; the first row's
/// residual fields are empty.
pub fn write_timeseries<W: Write>(out: W, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TIMESERIES_COLUMNS).map_err(csv_err)?;
    for (i, r) in records.iter().enumerate() {
        let residual = |kind| {
            (i > 0)
                .then(|| balance_residual(&records[i - 1], r, kind).ok())
                .flatten()
        };
        let row = [
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.energy),
            fmt_f64(r.entropy),
            fmt_f64(r.min_rho),
            fmt_f64(r.max_rho),
            fmt_f64(r.max_w),
            fmt_f64(r.min_w),
            fmt_f64(r.l2_w),
            fmt_f64(r.dissipation_energy),
            fmt_f64(r.dissipation_entropy),
            fmt_f64(r.power_in_energy),
            fmt_f64(r.power_in_entropy),
            fmt_f64(r.hk_rho[0]),
            fmt_f64(r.hk_rho[1]),
            fmt_f64(r.hk_u[0]),
            opt(r.density_floor_bound),
            opt(residual(BalanceKind::Mass)),
            opt(residual(BalanceKind::Energy)),
            opt(residual(BalanceKind::Entropy)),
            opt(residual(BalanceKind::WL2)),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_snapshot<W: Write>(
    out: W,
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> std::io::Result<()> {
    let d = dvflow_core::dynamics::derived_fields(state, law, grid)
        .map_err(std::io::Error::other)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SNAPSHOT_COLUMNS).map_err(csv_err)?;
    for j in 0..grid.n() {
        w.write_record([
            fmt_f64(grid.points()[j]),
            fmt_f64(state.rho[j]),
            fmt_f64(state.u[j]),
            fmt_f64(d.w[j]),
            fmt_f64(d.x[j]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Static line chart of one series against time.
pub fn svg_line_chart(title: &str, xs: &[f64], ys: &[f64]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 56.0;
    let finite: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&mut finite.iter().map(|p| p.0));
    let (y0, y1) = range(&mut finite.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let points: Vec<String> = finite
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let esc = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n",
            "<rect x=\"{p}\" y=\"{p}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n",
            "<text x=\"{p}\" y=\"{by}\" font-family=\"sans-serif\" font-size=\"11\">{x0:.4}</text>\n",
            "<text x=\"{rx}\" y=\"{by}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">t = {x1:.4}</text>\n",
            "<text x=\"4\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\">{y1:.6e}</text>\n",
            "<text x=\"4\" y=\"{bly}\" font-family=\"sans-serif\" font-size=\"11\">{y0:.6e}</text>\n",
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = W,
        h = H,
        cx = W / 2.0,
        title = esc,
        p = PAD,
        pw = W - 2.0 * PAD,
        ph = H - 2.0 * PAD,
        by = H - PAD + 16.0,
        rx = W - PAD,
        ty = PAD - 4.0,
        bly = H - PAD + 30.0,
        x0 = x0,
        x1 = x1,
        y0 = y0,
        y1 = y1,
        pts = points.join(" "),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn empty_records_give_header_only() {
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), TIMESERIES_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn svg_is_well_formed_for_flat_series() {
        let s = svg_line_chart("a < b", &[0.0, 1.0], &[2.0, 2.0]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
    }
}
