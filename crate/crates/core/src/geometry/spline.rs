//! Closed interpolation through landing points: a periodic cubic spline in
//! cumulative chord length, one spline per coordinate.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Boundary, BoundarySource, Point2};

pub const DEFAULT_SPLINE_SAMPLES: usize = 360;

const DEGENERACY_TOL: f64 = 1e-9;

/// Periodic cubic spline through `landing`, sampled at
/// [`DEFAULT_SPLINE_SAMPLES`] points.
pub fn spline_close<T: Scalar>(landing: &[Point2<T>]) -> Result<Boundary<T>> {
    spline_close_with(landing, DEFAULT_SPLINE_SAMPLES, BoundarySource::Predicted)
}

/// Samples are allotted to each span in proportion to its chord length and
/// every span starts at its knot, so the output contains each input point
/// verbatim.
pub fn spline_close_with<T: Scalar>(
    landing: &[Point2<T>],
    n_out: usize,
    source: BoundarySource,
) -> Result<Boundary<T>> {
    let n = landing.len();
    if n < 4 {
        return Err(Error::DegenerateInput(format!("need at least 4 points, got {n}")));
    }
    if n_out < n {
        return Err(Error::InvalidArgument(format!("{n_out} samples cannot hold {n} knots")));
    }
    let tol = T::lit(DEGENERACY_TOL);
    let chords: Vec<T> = (0..n).map(|i| landing[i].distance(landing[(i + 1) % n])).collect();
    if chords.iter().any(|&h| !(h > tol)) {
        return Err(Error::DegenerateInput("duplicated consecutive points".into()));
    }
    if collinear(landing, tol) {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }

    let xs: Vec<T> = landing.iter().map(|p| p.x).collect();
    let ys: Vec<T> = landing.iter().map(|p| p.y).collect();
    let mx = periodic_second_derivatives(&xs, &chords);
    let my = periodic_second_derivatives(&ys, &chords);

    let counts = allot_samples(&chords, n_out);
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n {
        let j = (i + 1) % n;
        let h = chords[i];
        for k in 0..counts[i] {
            if k == 0 {
                out.push(landing[i]);
                continue;
            }
            let u = h * T::from_usize_lossy(k) / T::from_usize_lossy(counts[i]);
            out.push(Point2::new(
                eval_span(xs[i], xs[j], mx[i], mx[j], h, u),
                eval_span(ys[i], ys[j], my[i], my[j], h, u),
            ));
        }
    }
    Boundary::new(out, source)
}

fn collinear<T: Scalar>(pts: &[Point2<T>], tol: T) -> bool {
    let o = pts[0];
    let far = pts.iter().copied().max_by(|a, b| a.distance(o).partial_cmp(&b.distance(o)).unwrap()).unwrap();
    let dir = (far - o).normalized();
    pts.iter().all(|&p| (p - o).cross(dir).abs() <= tol)
}

#[inline]
fn eval_span<T: Scalar>(y0: T, y1: T, m0: T, m1: T, h: T, u: T) -> T {
    let six = T::lit(6.0);
    let v = h - u;
    m0 * v * v * v / (six * h) + m1 * u * u * u / (six * h) + (y0 / h - m0 * h / six) * v + (y1 / h - m1 * h / six) * u
}

/// Second derivatives at the knots of the periodic interpolating cubic.
fn periodic_second_derivatives<T: Scalar>(y: &[T], h: &[T]) -> Vec<T> {
    let n = y.len();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    // Row i couples M[i-1], M[i], M[i+1] (cyclic).
    let mut lower = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    for i in 0..n {
        let im = (i + n - 1) % n;
        let ip = (i + 1) % n;
        lower[i] = h[im];
        diag[i] = two * (h[im] + h[i]);
        upper[i] = h[i];
        rhs[i] = six * ((y[ip] - y[i]) / h[i] - (y[i] - y[im]) / h[im]);
    }
    solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs)
}

/// Sherman–Morrison reduction of a cyclic tridiagonal system to two
/// ordinary tridiagonal solves. `lower[0]` and `upper[n-1]` are the corner
/// entries.
fn solve_cyclic_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] = diag[0] - gamma;
    d[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(lower, &d, upper, rhs);
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(lower, &d, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut x = vec![T::zero(); n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i + 1] * x[i + 1];
    }
    x
}

/// Largest-remainder split of `total` samples over spans, at least one each.
fn allot_samples<T: Scalar>(chords: &[T], total: usize) -> Vec<usize> {
    let n = chords.len();
    let spare = total - n;
    let length: T = chords.iter().copied().sum();
    let shares: Vec<f64> = chords.iter().map(|&h| (h / length).as_f64() * spare as f64).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| 1 + s.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_ring_distance;
    use proptest::prelude::*;

    fn ring(n: usize, r: f64) -> Vec<Point2<f64>> {
        (0..n).map(|i| Point2::from_angle(std::f64::consts::TAU * i as f64 / n as f64) * r).collect()
    }

    #[test]
    fn circle_reconstruction_radial_error() {
        let pts = ring(16, 70.0);
        let b = spline_close(&pts).unwrap();
        assert_eq!(b.len(), 360);
        let worst = b.points().iter().map(|p| (p.norm() - 70.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.15, "{worst}");
    }

    #[test]
    fn passes_through_knots() {
        let mut pts = ring(16, 70.0);
        for (i, p) in pts.iter_mut().enumerate() {
            *p = *p * (1.0 + 0.08 * ((i * 7 % 5) as f64 - 2.0) / 2.0);
        }
        let b = spline_close(&pts).unwrap();
        for p in &pts {
            assert!(point_ring_distance(*p, b.points()) <= 1e-9);
        }
    }

    #[test]
    fn square_corners_give_rounded_curve() {
        let pts = vec![
            Point2::new(50.0, 50.0),
            Point2::new(-50.0, 50.0),
            Point2::new(-50.0, -50.0),
            Point2::new(50.0, -50.0),
        ];
        let b = spline_close(&pts).unwrap();
        let area = b.area();
        // A closed curve through all four corners contains the square; it
        // stays inside the circumscribed circle.
        assert!(area > 10_000.0 && area < std::f64::consts::PI * 5_000.0, "{area}");
    }

    #[test]
    fn continuity_across_wraparound() {
        let pts = ring(16, 70.0)
            .into_iter()
            .enumerate()
            .map(|(i, p)| p * (1.0 + 0.05 * (i as f64).sin()))
            .collect::<Vec<_>>();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let n = pts.len();
        let h: Vec<f64> = (0..n).map(|i| pts[i].distance(pts[(i + 1) % n])).collect();
        let m = periodic_second_derivatives(&xs, &h);
        // First derivative from the left and right of each knot must agree.
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let right = (xs[ip] - xs[i]) / h[i] - h[i] * (2.0 * m[i] + m[ip]) / 6.0;
            let left = (xs[i] - xs[im]) / h[im] + h[im] * (m[im] + 2.0 * m[i]) / 6.0;
            assert!((right - left).abs() < 1e-10, "knot {i}: {left} vs {right}");
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let line: Vec<Point2<f64>> = (0..6).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(spline_close(&line), Err(Error::DegenerateInput(_))));
        let mut dup = ring(8, 50.0);
        dup[3] = dup[2];
        assert!(matches!(spline_close(&dup), Err(Error::DegenerateInput(_))));
        assert!(matches!(spline_close(&ring(3, 50.0)), Err(Error::DegenerateInput(_))));
    }

    proptest! {
        #[test]
        fn rotation_equivariant(theta in 0.0..std::f64::consts::TAU, seed in 0u64..1000) {
            let pts: Vec<Point2<f64>> = ring(16, 70.0)
                .into_iter()
                .enumerate()
                .map(|(i, p)| p * (1.0 + 0.1 * ((seed as f64 + i as f64 * 1.7).sin())))
                .collect();
            let a = spline_close(&pts).unwrap();
            let rotated: Vec<_> = pts.iter().map(|p| p.rotated(theta)).collect();
            let b = spline_close(&rotated).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (p, q) in a.points().iter().zip(b.points()) {
                prop_assert!(p.rotated(theta).distance(*q) < 1e-9);
            }
        }
    }
}
