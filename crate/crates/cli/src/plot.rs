//! SVG charts: alignment traces (row-norm and adaptive side by side) and
//! final alignment against the flip ratio.

use plotters::coord::Shift;
use plotters::prelude::*;

use kaczmarz_pref::simulator::{ExperimentMetrics, NoisePoint};
use kaczmarz_pref::MethodKind;

fn color(kind: MethodKind) -> RGBColor {
    match kind {
        MethodKind::Tk => RGBColor(31, 119, 180),
        MethodKind::BlockTk => RGBColor(255, 127, 14),
        MethodKind::BlockNk => RGBColor(214, 39, 40),
        MethodKind::Nk => RGBColor(44, 160, 44),
        MethodKind::KNoNorm => RGBColor(148, 103, 189),
        MethodKind::Ogd => RGBColor(140, 86, 75),
    }
}

type PlotResult = Result<(), Box<dyn std::error::Error>>;

/// Means over consecutive windows of `width` swipes, placed at the last
/// swipe of each window. Plotting per-session means hides the
/// within-session pattern that display ordering produces.
fn binned(trace: &[f64], width: usize) -> Vec<(f64, f64)> {
    let width = width.max(1);
    trace
        .chunks(width)
        .enumerate()
        .map(|(i, c)| ((i * width + c.len()) as f64, c.iter().sum::<f64>() / c.len() as f64))
        .collect()
}

fn trace_panel(
    area: &DrawingArea<SVGBackend<'_>, Shift>,
    title: &str,
    metrics: &[ExperimentMetrics],
    session: usize,
) -> PlotResult {
    let swipes = metrics.iter().map(|m| m.alignment_trace.len()).max().unwrap_or(1).max(1);
    let curves: Vec<Vec<(f64, f64)>> = metrics
        .iter()
        .map(|m| binned(&m.alignment_trace.iter().map(|p| p.mean).collect::<Vec<_>>(), session))
        .collect();
    let (lo, hi) = curves
        .iter()
        .flatten()
        .map(|p| p.1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let (lo, hi) = if lo.is_finite() { (lo - 0.02, hi + 0.02) } else { (0.0, 1.0) };
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(52)
        .build_cartesian_2d(1f64..swipes as f64, lo..hi)?;
    chart
        .configure_mesh()
        .x_desc("swipe (session means)")
        .y_desc("mean cos(v, g)")
        .x_label_formatter(&|x| format!("{x:.0}"))
        .draw()?;
    for (m, curve) in metrics.iter().zip(curves) {
        let c = color(m.method.kind);
        chart
            .draw_series(LineSeries::new(curve, c.stroke_width(2)))?
            .label(m.method.kind.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()?;
    Ok(())
}

/// Two panels: row-norm sampling on the left, adaptive on the right. Each
/// panel is given as its metrics and session length.
pub fn alignment_figure(
    row_norm: (&[ExperimentMetrics], usize),
    adaptive: (&[ExperimentMetrics], usize),
) -> Result<String, String> {
    let mut svg = String::new();
    let drawn: PlotResult = (|| {
        let root = SVGBackend::with_string(&mut svg, (1400, 560)).into_drawing_area();
        root.fill(&WHITE)?;
        let panels = root.split_evenly((1, 2));
        trace_panel(&panels[0], "Row-norm sampling", row_norm.0, row_norm.1)?;
        trace_panel(&panels[1], "Adaptive cosine subsampling", adaptive.0, adaptive.1)?;
        root.present()?;
        Ok(())
    })();
    drawn.map_err(|e| e.to_string())?;
    Ok(svg)
}

/// One line per method with a shaded band of one standard deviation.
pub fn noise_figure(points: &[NoisePoint]) -> Result<String, String> {
    let mut svg = String::new();
    let drawn: PlotResult = (|| {
        let root = SVGBackend::with_string(&mut svg, (900, 600)).into_drawing_area();
        root.fill(&WHITE)?;
        let finals = || points.iter().filter_map(|p| p.final_alignment);
        let lo = finals().map(|f| f.mean - f.std).fold(f64::INFINITY, f64::min);
        let hi = finals().map(|f| f.mean + f.std).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo - 0.02, hi + 0.02) } else { (0.0, 1.0) };
        let pmin = points.iter().map(|p| p.p_flip).fold(f64::INFINITY, f64::min);
        let pmax = points.iter().map(|p| p.p_flip).fold(f64::NEG_INFINITY, f64::max);
        let (pmin, pmax) = if pmax > pmin { (pmin, pmax) } else { (pmin - 0.05, pmin + 0.05) };
        let mut chart = ChartBuilder::on(&root)
            .caption("Final alignment vs label flip ratio", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d(pmin..pmax, lo..hi)?;
        chart
            .configure_mesh()
            .x_desc("p_flip")
            .y_desc("final cos(v, g)")
            .draw()?;
        let mut kinds: Vec<MethodKind> = Vec::new();
        for p in points {
            if !kinds.contains(&p.method.kind) {
                kinds.push(p.method.kind);
            }
        }
        for kind in kinds {
            let c = color(kind);
            let series: Vec<(f64, f64, f64)> = points
                .iter()
                .filter(|p| p.method.kind == kind)
                .filter_map(|p| p.final_alignment.map(|f| (p.p_flip, f.mean, f.std)))
                .collect();
            let mut band: Vec<(f64, f64)> = series.iter().map(|&(x, m, s)| (x, m + s)).collect();
            band.extend(series.iter().rev().map(|&(x, m, s)| (x, m - s)));
            chart.draw_series(std::iter::once(Polygon::new(band, c.mix(0.12).filled())))?;
            chart
                .draw_series(LineSeries::new(series.iter().map(|&(x, m, _)| (x, m)), c.stroke_width(2)))?
                .label(kind.name())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
            chart.draw_series(series.iter().map(|&(x, m, _)| Circle::new((x, m), 3, c.filled())))?;
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::UpperRight)
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    })();
    drawn.map_err(|e| e.to_string())?;
    Ok(svg)
}
