//! Plot-ready series and static SVG figures.

use std::fmt::Write as _;
use std::path::Path;

use elastica::flow::Trajectory;
use elastica::ClosedCurve;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Writes `t, energy, grad_norm, cum_length` per record.
pub fn write_series(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))?;
    w.write_record(["t", "energy", "grad_norm", "cum_length"])
        .map_err(|e| CliError::output(path, e))?;
    for r in &traj.records {
        w.serialize((r.t, r.energy, r.grad_norm, r.cum_length))
            .map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

/// Affine map of a bounding box into the drawing area, aspect preserved
/// when `equal` is set.
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn new(xs: (f64, f64), ys: (f64, f64), equal: bool) -> Self {
        let span = |(a, b): (f64, f64)| if b > a { b - a } else { 1.0 };
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let (mut sx, mut sy) = (w / span(xs), h / span(ys));
        if equal {
            sx = sx.min(sy);
            sy = sx;
        }
        Self {
            x0: xs.0,
            y0: ys.0,
            sx,
            sy,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.x0) * self.sx,
            HEIGHT - MARGIN - (y - self.y0) * self.sy,
        )
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn svg_open(title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{MARGIN}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    )
}

fn polyline(frame: &Frame, pts: &[(f64, f64)], closed: bool, stroke: &str, width: f64) -> String {
    let mut d = String::new();
    for &(x, y) in pts {
        let (px, py) = frame.map(x, y);
        let _ = write!(d, "{px:.2},{py:.2} ");
    }
    let tag = if closed { "polygon" } else { "polyline" };
    format!(
        "<{tag} points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n",
        d.trim_end()
    )
}

/// Overlays the first two coordinates of each curve, oldest lightest.
pub fn snapshots_svg(curves: &[(f64, ClosedCurve)]) -> String {
    let xs = bounds(
        curves
            .iter()
            .flat_map(|(_, c)| c.points().column(0).iter().copied().collect::<Vec<_>>()),
    );
    let ys = bounds(
        curves
            .iter()
            .flat_map(|(_, c)| c.points().column(1).iter().copied().collect::<Vec<_>>()),
    );
    let frame = Frame::new(xs, ys, true);
    let mut out = svg_open("curve snapshots");
    let count = curves.len().max(2) - 1;
    for (i, (_, c)) in curves.iter().enumerate() {
        let shade = (200.0 * (1.0 - i as f64 / count as f64)) as u8;
        let pts: Vec<(f64, f64)> = (0..c.n_samples())
            .map(|j| (c.points()[(j, 0)], c.points()[(j, 1)]))
            .collect();
        let stroke = format!("rgb({shade},{shade},255)");
        out += &polyline(&frame, &pts, true, &stroke, 1.2);
    }
    out += "</svg>\n";
    out
}

/// Semilog plot of `E - E_final` and `||grad||` against time.
pub fn energy_svg(traj: &Trajectory, label: &str) -> String {
    let e_inf = traj.records.last().map_or(0.0, |r| r.energy);
    let floor = 1e-16 * e_inf.abs().max(1.0);
    let gap: Vec<(f64, f64)> = traj
        .records
        .iter()
        .map(|r| (r.t, (r.energy - e_inf).max(floor).log10()))
        .collect();
    let grad: Vec<(f64, f64)> = traj
        .records
        .iter()
        .map(|r| (r.t, r.grad_norm.max(floor).log10()))
        .collect();
    let xs = bounds(gap.iter().map(|p| p.0));
    let ys = bounds(gap.iter().chain(&grad).map(|p| p.1));
    let frame = Frame::new(xs, ys, false);
    let mut out = svg_open(&format!(
        "log10(E - E_final) (black), log10 ||grad|| (red) against t {label}"
    ));
    out += &polyline(&frame, &gap, false, "black", 1.5);
    out += &polyline(&frame, &grad, false, "red", 1.5);
    out += "</svg>\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use elastica::{make_curve, Shape};

    #[test]
    fn snapshot_svg_has_one_polygon_per_curve() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 32, 2).unwrap();
        let svg = snapshots_svg(&[(0.0, c.clone()), (1.0, c.scale(0.5))]);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 2);
    }
}
