//! Deterministic SVG line charts of sweep results.
//!
//! One polyline per setting, each point the mean total cost over seeds at an
//! axis value. The output is plain SVG 1.1 built from sorted data with fixed
//! formatting, so identical rows always produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::algorithm::Setting;
use crate::error::{Error, Result};
use crate::experiments::{series_means, SweepAxis, SweepRow};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

/// Fixed series palette, assigned by position in the requested series list.
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a line chart of mean total cost against the chosen axis, one
/// series per setting in `series` order. Fails with a missing-series error
/// when a requested setting has no finite rows.
pub fn render_svg_linechart(
    rows: &[SweepRow],
    axis: SweepAxis,
    series: &[Setting],
    title: &str,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Parameter("chart needs at least one series".into()));
    }
    let mut data: Vec<(Setting, Vec<(f64, f64)>)> = Vec::new();
    for &setting in series {
        let means = series_means(rows, setting, axis);
        if means.is_empty() {
            return Err(Error::MissingSeries(format!(
                "no finite rows for setting `{}` on the {} axis",
                setting.name(),
                axis.name()
            )));
        }
        data.push((setting, means));
    }

    let xs: Vec<f64> = data.iter().flat_map(|(_, m)| m.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = data.iter().flat_map(|(_, m)| m.iter().map(|p| p.1)).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / x_span * plot_w,
            MARGIN_TOP + (1.0 - y / y_top) * plot_h,
        )
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" \
         text-anchor=\"middle\">{}</text>",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        xml_escape(title)
    );

    // Axes.
    let (x0px, y0px) = to_px(x_min, 0.0);
    let (x1px, _) = to_px(x_max, 0.0);
    let (_, y1px) = to_px(x_min, y_top);
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt_coord(x0px),
        fmt_coord(y0px),
        fmt_coord(x1px),
        fmt_coord(y0px)
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt_coord(x0px),
        fmt_coord(y0px),
        fmt_coord(x0px),
        fmt_coord(y1px)
    );

    // Ticks and labels.
    for i in 0..=TICKS {
        let fx = x_min + (x_max - x_min) * i as f64 / TICKS as f64;
        let (px, _) = to_px(fx, 0.0);
        let _ = writeln!(
            svg,
            "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>",
            fmt_coord(px),
            fmt_coord(y0px),
            fmt_coord(y0px + 5.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>",
            fmt_coord(px),
            fmt_coord(y0px + 20.0),
            fmt_tick(fx)
        );
        let fy = y_top * i as f64 / TICKS as f64;
        let (_, py) = to_px(x_min, fy);
        let _ = writeln!(
            svg,
            "  <line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>",
            fmt_coord(py),
            fmt_coord(x0px - 5.0),
            fmt_coord(x0px)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>",
            fmt_coord(x0px - 9.0),
            fmt_coord(py + 4.0),
            fmt_tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        fmt_coord(HEIGHT - 12.0),
        axis.name()
    );
    let _ = writeln!(
        svg,
        "  <text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">mean total cost</text>",
        fmt_coord(MARGIN_TOP + plot_h / 2.0)
    );

    // Series: polyline plus point markers.
    for (idx, (setting, means)) in data.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let points: Vec<String> = means
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", fmt_coord(px), fmt_coord(py))
            })
            .collect();
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            color,
            points.join(" ")
        );
        for &(x, y) in means {
            let (px, py) = to_px(x, y);
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>",
                fmt_coord(px),
                fmt_coord(py),
                color
            );
        }
        // Legend entry.
        let ly = MARGIN_TOP + 18.0 * idx as f64;
        let lx = WIDTH - MARGIN_RIGHT + 18.0;
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>",
            fmt_coord(lx),
            fmt_coord(ly),
            fmt_coord(lx + 24.0),
            fmt_coord(ly),
            color
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
            fmt_coord(lx + 30.0),
            fmt_coord(ly + 4.0),
            setting.name()
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the chart to `path`.
pub fn emit_svg_linechart(
    rows: &[SweepRow],
    axis: SweepAxis,
    series: &[Setting],
    title: &str,
    path: &Path,
) -> Result<()> {
    let svg = render_svg_linechart(rows, axis, series, title)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(setting: Setting, m: f64, l: f64, seed: u64, cost: f64) -> SweepRow {
        SweepRow {
            setting,
            m,
            l,
            g: 0.0,
            alpha: 0.0,
            seed,
            t: 10,
            total_cost: cost,
            opt_cost: cost / 2.0,
            opt_error_bound: 0.1,
            ratio: 2.0,
            ratio_lo: 1.9,
            theorem_bound: 9.0,
            checks_passed: true,
        }
    }

    #[test]
    fn chart_contains_axes_series_and_legend() {
        let rows = vec![
            row(Setting::Fresh, 2.0, 1.6, 0, 10.0),
            row(Setting::Fresh, 2.0, 1.6, 1, 12.0),
            row(Setting::Fresh, 10.0, 8.0, 0, 30.0),
            row(Setting::Fresh, 10.0, 8.0, 1, 34.0),
            row(Setting::Stale, 2.0, 1.6, 0, 14.0),
            row(Setting::Stale, 10.0, 8.0, 0, 40.0),
        ];
        let svg = render_svg_linechart(
            &rows,
            SweepAxis::M,
            &[Setting::Fresh, Setting::Stale],
            "cost vs M",
        )
        .unwrap();
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">fresh</text>"));
        assert!(svg.contains(">stale</text>"));
        assert!(svg.contains(">cost vs M</text>"));
        // Two markers per series (one per axis value).
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let rows = vec![
            row(Setting::Fresh, 2.0, 1.6, 0, 10.0),
            row(Setting::Fresh, 10.0, 8.0, 0, 30.0),
        ];
        let a = render_svg_linechart(&rows, SweepAxis::M, &[Setting::Fresh], "t").unwrap();
        let b = render_svg_linechart(&rows, SweepAxis::M, &[Setting::Fresh], "t").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_series_is_an_error() {
        let rows = vec![row(Setting::Fresh, 2.0, 1.6, 0, 10.0)];
        let err = render_svg_linechart(
            &rows,
            SweepAxis::M,
            &[Setting::Fresh, Setting::NoisyFresh],
            "t",
        )
        .unwrap_err();
        assert!(err.to_string().contains("noisy-fresh"), "got: {err}");
        // Rows whose cost is NaN (failed cells) do not count as data.
        let nan_rows = vec![row(Setting::Stale, 2.0, 1.6, 0, f64::NAN)];
        assert!(render_svg_linechart(&nan_rows, SweepAxis::L, &[Setting::Stale], "t").is_err());
    }

    #[test]
    fn single_point_series_renders() {
        let rows = vec![row(Setting::Fresh, 10.0, 8.0, 0, 30.0)];
        let svg = render_svg_linechart(&rows, SweepAxis::M, &[Setting::Fresh], "t").unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn mean_over_seeds_feeds_the_polyline() {
        // Means 11 and 32 at x = 2 and 10: the two circle y-coordinates must
        // differ and the higher mean must sit higher on the chart (smaller y).
        let rows = vec![
            row(Setting::Fresh, 2.0, 1.6, 0, 10.0),
            row(Setting::Fresh, 2.0, 1.6, 1, 12.0),
            row(Setting::Fresh, 10.0, 8.0, 0, 30.0),
            row(Setting::Fresh, 10.0, 8.0, 1, 34.0),
        ];
        let svg = render_svg_linechart(&rows, SweepAxis::M, &[Setting::Fresh], "t").unwrap();
        let cys: Vec<f64> = svg
            .lines()
            .filter(|l| l.contains("<circle"))
            .map(|l| {
                let tail = l.split("cy=\"").nth(1).unwrap();
                tail.split('"').next().unwrap().parse::<f64>().unwrap()
            })
            .collect();
        assert_eq!(cys.len(), 2);
        assert!(cys[1] < cys[0], "larger mean plots nearer the top: {cys:?}");
    }
}
