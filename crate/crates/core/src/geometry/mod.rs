//! Antenna array layout, boundary curves, ray-cast normal lengths and
//! reconstruction of a closed boundary from per-antenna landing points.

mod io;
mod point;
mod spline;

pub use io::{boundary_to_csv, boundary_to_svg, parse_array_layout, write_array_layout, SvgLayer};
pub use point::{point_ring_distance, point_segment_distance, Point2, RigidTransform};
pub use spline::{spline_close, spline_close_with, DEFAULT_SPLINE_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of antennas in the array.
pub const ANTENNA_COUNT: usize = 16;

/// Default sanity bound on a normal length, mm.
pub const DEFAULT_MAX_NORMAL_MM: f64 = 60.0;

/// Tolerance on the ray parameter when intersecting with polygon edges.
const RAY_TOL: f64 = 1e-12;

fn unit_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// Aperture positions and inward wave-travel directions of the 16 antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray<T> {
    apertures: Vec<Point2<T>>,
    inward_normals: Vec<Point2<T>>,
    array_id: String,
}

impl<T: Scalar> AntennaArray<T> {
    pub fn new(apertures: Vec<Point2<T>>, inward_normals: Vec<Point2<T>>, array_id: impl Into<String>) -> Result<Self> {
        if apertures.len() != ANTENNA_COUNT || inward_normals.len() != ANTENNA_COUNT {
            return Err(Error::InvalidGeometry(format!(
                "array needs {ANTENNA_COUNT} apertures and normals, got {} and {}",
                apertures.len(),
                inward_normals.len()
            )));
        }
        let tol = unit_tolerance::<T>();
        for (i, n) in inward_normals.iter().enumerate() {
            if !n.is_finite() || (n.norm() - T::one()).abs() > tol {
                return Err(Error::InvalidGeometry(format!("normal {i} is not a unit vector")));
            }
        }
        if apertures.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite aperture".into()));
        }
        if !is_simple_ring(&apertures) {
            return Err(Error::InvalidGeometry("apertures do not form a simple ring".into()));
        }
        Ok(Self { apertures, inward_normals, array_id: array_id.into() })
    }

    /// Apertures evenly spaced on a circle of `radius` mm, normals pointing at
    /// the centre. Antenna 0 sits on the +x axis; indices increase
    /// counter-clockwise.
    pub fn circular(radius: T) -> Self {
        let n = ANTENNA_COUNT;
        let mut apertures = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let angle = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let dir = Point2::from_angle(angle);
            apertures.push(dir * radius);
            normals.push(-dir);
        }
        Self { apertures, inward_normals: normals, array_id: format!("circular-r{}", radius.as_f64()) }
    }

    pub fn apertures(&self) -> &[Point2<T>] {
        &self.apertures
    }

    pub fn inward_normals(&self) -> &[Point2<T>] {
        &self.inward_normals
    }

    pub fn array_id(&self) -> &str {
        &self.array_id
    }

    pub fn transformed(&self, tf: &RigidTransform<T>) -> Self {
        Self {
            apertures: self.apertures.iter().map(|&p| tf.apply(p)).collect(),
            inward_normals: self.inward_normals.iter().map(|&n| tf.apply_vector(n)).collect(),
            array_id: self.array_id.clone(),
        }
    }
}

/// Where a boundary curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySource {
    GroundTruth,
    Predicted,
    Baseline,
}

impl BoundarySource {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundarySource::GroundTruth => "ground_truth",
            BoundarySource::Predicted => "predicted",
            BoundarySource::Baseline => "baseline",
        }
    }
}

/// Closed, simple, counter-clockwise planar curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary<T> {
    points: Vec<Point2<T>>,
    source: BoundarySource,
}

impl<T: Scalar> Boundary<T> {
    /// Validates the ring and normalizes its orientation to counter-clockwise.
    pub fn new(mut points: Vec<Point2<T>>, source: BoundarySource) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGeometry(format!("boundary needs at least 3 points, got {}", points.len())));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite boundary point".into()));
        }
        let area = signed_area(&points);
        if area == T::zero() {
            return Err(Error::InvalidGeometry("boundary encloses zero area".into()));
        }
        if !is_simple_ring(&points) {
            return Err(Error::InvalidGeometry("boundary self-intersects".into()));
        }
        if area < T::zero() {
            points.reverse();
        }
        Ok(Self { points, source })
    }

    /// Polygonal ellipse with semi-axes `a` (x) and `b` (y), rotated by
    /// `rotation_deg` about `center`, sampled at `n` equal parameter steps.
    pub fn ellipse(a: T, b: T, center: Point2<T>, rotation_deg: T, n: usize) -> Result<Self> {
        Self::superellipse(a, b, T::lit(2.0), center, rotation_deg, n)
    }

    pub fn circle(radius: T, center: Point2<T>, n: usize) -> Result<Self> {
        Self::ellipse(radius, radius, center, T::zero(), n)
    }

    /// Superellipse |x/a|^e + |y/b|^e = 1.
    pub fn superellipse(a: T, b: T, exponent: T, center: Point2<T>, rotation_deg: T, n: usize) -> Result<Self> {
        let tf = RigidTransform { rotation_deg, translation: center };
        let two_over = T::lit(2.0) / exponent;
        let points = (0..n)
            .map(|i| {
                let t = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                let (s, c) = t.sin_cos();
                let x = a * c.signum() * c.abs().powf(two_over);
                let y = b * s.signum() * s.abs().powf(two_over);
                tf.apply(Point2::new(x, y))
            })
            .collect();
        Self::new(points, BoundarySource::GroundTruth)
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn source(&self) -> BoundarySource {
        self.source
    }

    pub fn with_source(mut self, source: BoundarySource) -> Self {
        self.source = source;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shoelace area, mm²; positive by construction.
    pub fn area(&self) -> T {
        signed_area(&self.points)
    }

    /// Closed polyline length, mm.
    pub fn perimeter(&self) -> T {
        let n = self.points.len();
        (0..n).map(|i| self.points[i].distance(self.points[(i + 1) % n])).sum()
    }

    /// Area centroid of the enclosed region.
    pub fn centroid(&self) -> Point2<T> {
        let n = self.points.len();
        let mut cx = T::zero();
        let mut cy = T::zero();
        let mut a2 = T::zero();
        // Shift to the first vertex to limit cancellation.
        let o = self.points[0];
        for i in 0..n {
            let p = self.points[i] - o;
            let q = self.points[(i + 1) % n] - o;
            let w = p.cross(q);
            a2 = a2 + w;
            cx = cx + (p.x + q.x) * w;
            cy = cy + (p.y + q.y) * w;
        }
        let k = T::lit(3.0) * a2;
        o + Point2::new(cx / k, cy / k)
    }

    /// Rigid transforms preserve simplicity and orientation; no revalidation.
    pub fn transformed(&self, tf: &RigidTransform<T>) -> Self {
        Self { points: self.points.iter().map(|&p| tf.apply(p)).collect(), source: self.source }
    }

    pub fn translated(&self, by: Point2<T>) -> Self {
        Self { points: self.points.iter().map(|&p| p + by).collect(), source: self.source }
    }

    /// Signed area of the ring; shared by the metric code.
    pub fn shoelace(points: &[Point2<T>]) -> T {
        signed_area(points)
    }
}

fn signed_area<T: Scalar>(points: &[Point2<T>]) -> T {
    let n = points.len();
    let o = points[0];
    let mut s = T::zero();
    for i in 0..n {
        s = s + (points[i] - o).cross(points[(i + 1) % n] - o);
    }
    s / T::lit(2.0)
}

fn segments_intersect<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>, d: Point2<T>) -> bool {
    if a.x.max(b.x) < c.x.min(d.x)
        || c.x.max(d.x) < a.x.min(b.x)
        || a.y.max(b.y) < c.y.min(d.y)
        || c.y.max(d.y) < a.y.min(b.y)
    {
        return false;
    }
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    let on = |p: Point2<T>, q: Point2<T>, r: Point2<T>, o: T| {
        o == z && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// True when the closed ring through `points` has no crossing edges.
pub fn is_simple_ring<T: Scalar>(points: &[Point2<T>]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if points[i] == points[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, points[j], points[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Per-antenna distance along the inward normal to the boundary, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalLengths<T> {
    values: Vec<T>,
}

impl<T: Scalar> NormalLengths<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        Self::with_bound(values, T::lit(DEFAULT_MAX_NORMAL_MM))
    }

    pub fn with_bound(values: Vec<T>, max_mm: T) -> Result<Self> {
        if values.len() != ANTENNA_COUNT {
            return Err(Error::DimensionMismatch { expected: ANTENNA_COUNT, got: values.len() });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < T::zero() || *v > max_mm {
                return Err(Error::InvalidGeometry(format!("normal length {i} = {v} outside [0, {max_mm}] mm")));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Distance along `dir` from `origin` to the first crossing of the closed
/// polyline, if any.
pub fn ray_ring_distance<T: Scalar>(origin: Point2<T>, dir: Point2<T>, ring: &[Point2<T>]) -> Option<T> {
    let tol = T::lit(RAY_TOL);
    let n = ring.len();
    let mut best: Option<T> = None;
    for i in 0..n {
        let a = ring[i];
        let e = ring[(i + 1) % n] - a;
        let denom = dir.cross(e);
        if denom == T::zero() {
            continue;
        }
        let w = a - origin;
        let t = w.cross(e) / denom;
        let s = w.cross(dir) / denom;
        if s < -tol || s > T::one() + tol || t <= tol {
            continue;
        }
        best = Some(match best {
            Some(b) if b <= t => b,
            _ => t,
        });
    }
    best.map(|t| t * dir.norm())
}

/// Ground-truth labels: distance from each aperture along its inward normal
/// to the nearest crossing with the boundary.
pub fn cast_normals<T: Scalar>(array: &AntennaArray<T>, boundary: &Boundary<T>) -> Result<NormalLengths<T>> {
    let values = array
        .apertures()
        .iter()
        .zip(array.inward_normals())
        .enumerate()
        .map(|(i, (&p, &n))| ray_ring_distance(p, n, boundary.points()).ok_or(Error::NoIntersection(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalLengths { values })
}

/// `aperture_i + length_i * normal_i`, index-aligned with the array.
pub fn landing_points<T: Scalar>(array: &AntennaArray<T>, normals: &NormalLengths<T>) -> Vec<Point2<T>> {
    array
        .apertures()
        .iter()
        .zip(array.inward_normals())
        .zip(normals.values())
        .map(|((&p, &n), &len)| p + n * len)
        .collect()
}
