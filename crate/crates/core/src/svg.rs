//! Minimal deterministic SVG rendering of a sampled curve: a fixed-viewport
//! polyline of `f1` with axis ticks at the node abscissas. A verification
//! aid, not a plotting product; no timestamps or styling options.

use crate::evaluator::EvaluationGrid;
use crate::model::ExtendedDataset;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 48.0;

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders the first component of the grid solution. Abscissas are written
/// in raw data coordinates.
pub fn render_curve(grid: &EvaluationGrid, ds: &ExtendedDataset) -> String {
    let x_lo = ds.to_raw_x(0.0);
    let x_hi = ds.to_raw_x(1.0);
    let mut y_lo = grid.f1.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_hi = grid.f1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
        let py = HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    let (ax0, ay0) = to_px(x_lo, y_lo);
    let (ax1, _) = to_px(x_hi, y_lo);
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        fmt(ax0),
        fmt(ay0),
        fmt(ax1),
        fmt(ay0)
    ));

    // node ticks with labels
    for i in 0..ds.node_count() {
        let x = ds.raw_x(i);
        let (px, py) = to_px(x, y_lo);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            fmt(px),
            fmt(py),
            fmt(py + 6.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            fmt(px),
            fmt(py + 18.0),
            fmt(x)
        ));
        // node marker on the curve
        let (cx, cy) = to_px(x, grid.interp_f1(ds.unit_x(i)));
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"crimson\"/>\n",
            fmt(cx),
            fmt(cy)
        ));
    }

    // curve polyline
    svg.push_str("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"");
    for (j, (&u, &v)) in grid.xs.iter().zip(&grid.f1).enumerate() {
        let (px, py) = to_px(ds.to_raw_x(u), v);
        if j > 0 {
            svg.push(' ');
        }
        svg.push_str(&format!("{},{}", fmt(px), fmt(py)));
    }
    svg.push_str("\"/>\n</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{solve_fixed_point, SolverOptions};

    #[test]
    fn render_is_deterministic_and_marks_nodes() {
        let raw = vec![
            (0.0, 0.0, 0.0),
            (0.25, 1.0, 0.5),
            (0.5, 0.0, -0.5),
            (0.75, 1.0, 0.5),
            (1.0, 0.0, 0.0),
        ];
        let ds = crate::model::validate_dataset(&raw).unwrap();
        let spec = crate::model::PartitionSpec {
            domains: vec![(0, 2), (2, 4)],
            domain_for_region: vec![0, 1, 0, 1],
            orientation: vec![crate::model::Orientation::Increasing; 4],
        };
        let partition = crate::model::validate_partition(&ds, &spec).unwrap();
        let quads = (0..4)
            .map(|r| {
                let iv = ds.region_interval(r);
                let mk = |v| {
                    crate::model::FactorFunction::new(
                        crate::model::FactorFamily::Constant { value: v },
                        iv,
                    )
                    .unwrap()
                };
                crate::model::FactorQuad {
                    s: mk(0.3),
                    s_prime: mk(0.3),
                    s_tilde: mk(0.3),
                    s_tilde_prime: mk(0.3),
                }
            })
            .collect();
        let factors = crate::model::FactorSet::new(quads).unwrap();
        let model = crate::construction::assemble(&ds, &partition, &factors).unwrap();
        let grid = solve_fixed_point(
            &model,
            &SolverOptions {
                resolution: 257,
                tolerance: 1e-10,
                max_iters: 200,
            },
        )
        .unwrap();
        let a = render_curve(&grid, &model.dataset);
        let b = render_curve(&grid, &model.dataset);
        assert_eq!(a, b);
        assert!(a.contains("<polyline"));
        assert_eq!(a.matches("<circle").count(), 5);
        assert!(!a.to_lowercase().contains("date"));
    }
}
