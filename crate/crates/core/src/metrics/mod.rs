//! Shape comparison: Hu-moment dissimilarity on rasterized shapes, area and
//! curve-length change, and max deviation after rigid alignment.

mod hu;

pub use hu::{
    hu_dissimilarity, hu_distance, hu_from_raster, hu_moments, rasterize, HuDissimilarity, HuVector, Raster,
    RasterConfig, Run, HU_SKIP_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::geometry::{point_ring_distance, Boundary, Point2};
use crate::scalar::Scalar;

/// Samples used by the alignment objective.
pub const ALIGN_SAMPLES: usize = 360;

/// Coarse rotation scan step before the golden-section refinement.
pub const ALIGN_COARSE_STEP_DEG: f64 = 5.0;

/// Samples of the moving ring used during the coarse angle scan.
pub const ALIGN_COARSE_SAMPLES: usize = 72;

/// Width of the final golden-section bracket, degrees.
pub const ALIGN_TOLERANCE_DEG: f64 = 1e-4;

/// `100 |area(a) - area(b)| / area(a)`; `a` is the reference.
pub fn area_change<T: Scalar>(a: &Boundary<T>, b: &Boundary<T>) -> T {
    let (va, vb) = (a.area(), b.area());
    T::lit(100.0) * (va - vb).abs() / va
}

/// `100 |len(a) - len(b)| / len(a)`; `a` is the reference.
pub fn length_change<T: Scalar>(a: &Boundary<T>, b: &Boundary<T>) -> T {
    let (va, vb) = (a.perimeter(), b.perimeter());
    T::lit(100.0) * (va - vb).abs() / va
}

/// `n` points spaced evenly by arc length along the closed ring.
pub fn resample_ring<T: Scalar>(ring: &[Point2<T>], n: usize) -> Vec<Point2<T>> {
    let m = ring.len();
    let seg: Vec<T> = (0..m).map(|i| ring[i].distance(ring[(i + 1) % m])).collect();
    let total: T = seg.iter().copied().sum();
    let mut out = Vec::with_capacity(n);
    let (mut i, mut acc) = (0, T::zero());
    for k in 0..n {
        let s = total * T::from_usize_lossy(k) / T::from_usize_lossy(n);
        while i < m - 1 && acc + seg[i] < s {
            acc = acc + seg[i];
            i += 1;
        }
        let t = if seg[i] > T::zero() { ((s - acc) / seg[i]).min(T::one()) } else { T::zero() };
        let (p, q) = (ring[i], ring[(i + 1) % m]);
        out.push(p + (q - p) * t);
    }
    out
}

fn mean_distance<T: Scalar>(pts: &[Point2<T>], ring: &[Point2<T>]) -> T {
    pts.iter().map(|&p| point_ring_distance(p, ring)).sum::<T>() / T::from_usize_lossy(pts.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    /// Rotation of `b` relative to `a` about its centroid, degrees in [0, 360).
    pub rotation_deg: T,
    /// Centroid of `a` minus centroid of `b`.
    pub translation: Point2<T>,
    /// `b` moved onto `a`.
    pub aligned: Boundary<T>,
    /// Mean nearest-point distance of the aligned samples to `a`, mm.
    pub residual_mm: T,
}

/// Rigid (rotation + translation) fit of `b` onto `a`. Centroids are matched
/// first; the rotation minimizes the mean nearest-point distance, found by
/// a coarse scan followed by golden-section search around the best angle.
pub fn rigid_align<T: Scalar>(a: &Boundary<T>, b: &Boundary<T>) -> Alignment<T> {
    let (ca, cb) = (a.centroid(), b.centroid());
    let ring_a: Vec<Point2<T>> = resample_ring(a.points(), ALIGN_SAMPLES).into_iter().map(|p| p - ca).collect();
    let samples_b: Vec<Point2<T>> = resample_ring(b.points(), ALIGN_SAMPLES).into_iter().map(|p| p - cb).collect();
    // The scan only has to land in the right basin, so it uses a sparser sampling.
    let coarse_b: Vec<Point2<T>> = samples_b.iter().step_by(ALIGN_SAMPLES / ALIGN_COARSE_SAMPLES).copied().collect();
    let cost_on = |pts: &[Point2<T>], deg: f64| {
        let rad = T::lit(-deg.to_radians());
        let rotated: Vec<Point2<T>> = pts.iter().map(|p| p.rotated(rad)).collect();
        mean_distance(&rotated, &ring_a).as_f64()
    };
    let cost = |deg: f64| cost_on(&samples_b, deg);
    let steps = (360.0 / ALIGN_COARSE_STEP_DEG).round() as usize;
    let mut best = (0.0, cost_on(&coarse_b, 0.0));
    for k in 1..steps {
        let deg = k as f64 * ALIGN_COARSE_STEP_DEG;
        let c = cost_on(&coarse_b, deg);
        if c < best.1 {
            best = (deg, c);
        }
    }
    let (mut lo, mut hi) = (best.0 - ALIGN_COARSE_STEP_DEG, best.0 + ALIGN_COARSE_STEP_DEG);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while hi - lo > ALIGN_TOLERANCE_DEG {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = cost(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let deg = if cost(mid) <= cost(best.0) { mid } else { best.0 };
    let rad = T::lit(-deg.to_radians());
    let moved: Vec<Point2<T>> = b.points().iter().map(|&p| (p - cb).rotated(rad) + ca).collect();
    let aligned = Boundary::new(moved, b.source()).unwrap_or_else(|_| b.translated(ca - cb));
    let residual_mm = mean_distance(&resample_ring(aligned.points(), ALIGN_SAMPLES), a.points());
    Alignment { rotation_deg: T::lit(deg.rem_euclid(360.0)), translation: ca - cb, aligned, residual_mm }
}

/// Symmetric Hausdorff distance between the two polylines, measured from
/// each ring's vertices to the other ring.
pub fn max_deviation<T: Scalar>(a: &Boundary<T>, b: &Boundary<T>) -> T {
    let directed =
        |p: &[Point2<T>], q: &[Point2<T>]| p.iter().map(|&x| point_ring_distance(x, q)).fold(T::zero(), T::max);
    directed(a.points(), b.points()).max(directed(b.points(), a.points()))
}

/// All shape metrics of one prediction against its reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub hu: HuDissimilarity,
    pub area_change_pct: f64,
    pub length_change_pct: f64,
    pub max_deviation_mm: f64,
}

pub fn shape_report<T: Scalar>(
    truth: &Boundary<T>,
    other: &Boundary<T>,
    cfg: &RasterConfig,
) -> crate::Result<ShapeReport> {
    let hu = hu_dissimilarity(truth, other, cfg)?;
    let aligned = rigid_align(truth, other).aligned;
    Ok(ShapeReport {
        hu,
        area_change_pct: area_change(truth, other).as_f64(),
        length_change_pct: length_change(truth, other).as_f64(),
        max_deviation_mm: max_deviation(truth, &aligned).as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cast_normals, landing_points, spline_close, AntennaArray, BoundarySource, RigidTransform};
    use proptest::prelude::*;

    fn circle(r: f64) -> Boundary<f64> {
        Boundary::circle(r, Point2::zero(), 360).unwrap()
    }

    #[test]
    fn area_and_length_of_scaled_circles() {
        let (a, b) = (circle(70.0), circle(77.0));
        assert!((area_change(&a, &b) - 21.0).abs() < 1e-9);
        assert!((length_change(&a, &b) - 10.0).abs() < 1e-9);
        assert_eq!(area_change(&a, &a), 0.0);
        assert_eq!(length_change(&a, &a), 0.0);
    }

    #[test]
    fn unit_square_area() {
        let sq = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
        assert_eq!(Boundary::shoelace(&sq), 1.0);
    }

    #[test]
    fn recovers_rotation() {
        let a = Boundary::<f64>::ellipse(60.0, 40.0, Point2::zero(), 0.0, 720).unwrap();
        let b = a.transformed(&RigidTransform::new(25.0, 7.0, -3.0));
        let al = rigid_align(&a, &b);
        assert!((al.rotation_deg - 25.0).abs() < 0.1, "{}", al.rotation_deg);
        assert!(al.residual_mm < 1e-3, "{}", al.residual_mm);
        assert!((al.translation.x + 7.0).abs() < 1e-9 && (al.translation.y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn self_alignment_is_identity() {
        let a = Boundary::<f64>::ellipse(60.0, 40.0, Point2::new(2.0, 1.0), 10.0, 360).unwrap();
        let al = rigid_align(&a, &a);
        assert!(al.rotation_deg.min(360.0 - al.rotation_deg) < 1e-3);
        assert!(al.residual_mm < 1e-6);
    }

    #[test]
    fn circles_align_with_flat_residual() {
        let a = circle(50.0);
        let b = a.transformed(&RigidTransform::new(33.0, 4.0, 4.0));
        assert!(rigid_align(&a, &b).residual_mm < 1e-3);
    }

    #[test]
    fn concentric_circles_deviation() {
        let d = max_deviation(&circle(70.0), &circle(71.0));
        assert!((d - 1.0).abs() < 1e-3, "{d}");
        assert_eq!(max_deviation(&circle(70.0), &circle(70.0)), 0.0);
    }

    #[test]
    fn spline_reconstruction_deviation_is_consistent() {
        let array = AntennaArray::circular(115.0);
        let truth = Boundary::ellipse(106.0, 100.0, Point2::zero(), 0.0, 720).unwrap();
        let landing = landing_points(&array, &cast_normals(&array, &truth).unwrap());
        let rec = spline_close(&landing).unwrap();
        let worst_radial = rec.points().iter().map(|&p| point_ring_distance(p, truth.points())).fold(0.0, f64::max);
        let d = max_deviation(&truth, &rec);
        assert!(d >= worst_radial - 1e-12);
        assert!(d < 1.0, "{d}");
        assert_eq!(rec.source(), BoundarySource::Predicted);
    }

    #[test]
    fn resample_spacing() {
        let pts = resample_ring(circle(10.0).points(), 90);
        let gaps: Vec<f64> = (0..90).map(|i| pts[i].distance(pts[(i + 1) % 90])).collect();
        let (lo, hi) = gaps.iter().fold((f64::MAX, 0.0_f64), |(a, b), &g| (a.min(g), b.max(g)));
        assert!(hi - lo < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn changes_are_rigid_invariant(rot in 0.0..360.0_f64, dx in -30.0..30.0_f64, dy in -30.0..30.0_f64) {
            let a = Boundary::ellipse(60.0, 40.0, Point2::zero(), 0.0, 360).unwrap();
            let b = Boundary::ellipse(63.0, 38.0, Point2::zero(), 5.0, 360).unwrap();
            let tf = RigidTransform::new(rot, dx, dy);
            let bt = b.transformed(&tf);
            prop_assert!((area_change(&a, &b) - area_change(&a, &bt)).abs() < 1e-9);
            prop_assert!((length_change(&a, &b) - length_change(&a, &bt)).abs() < 1e-9);
        }
    }
}
