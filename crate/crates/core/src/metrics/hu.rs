use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Boundary;
use crate::scalar::Scalar;

/// Invariants with magnitude at or below this are left out of the
/// dissimilarity sum.
pub const HU_SKIP_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig {
    /// Pixel pitch, mm.
    pub resolution_mm: f64,
    /// Empty border around the shape, mm.
    pub margin_mm: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self { resolution_mm: 0.25, margin_mm: 10.0 }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_mm > 0.0 && self.resolution_mm.is_finite()) || !(self.margin_mm >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad raster config {self:?}")));
        }
        Ok(())
    }
}

/// Horizontal pixel run `[x_start, x_end)` in pixel columns on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub y: i64,
    pub x_start: i64,
    pub x_end: i64,
}

/// Filled rasterization: a pixel is inside when its centre is, using the
/// even-odd rule with half-open edge crossings. Pixel `(i, j)` has its
/// centre at `(origin.0 + (i + 0.5) r, origin.1 + (j + 0.5) r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub resolution_mm: f64,
    pub origin: (f64, f64),
    pub runs: Vec<Run>,
}

impl Raster {
    pub fn pixel_count(&self) -> u64 {
        self.runs.iter().map(|r| (r.x_end - r.x_start) as u64).sum()
    }

    fn centre(&self, i: i64, j: i64) -> (f64, f64) {
        let r = self.resolution_mm;
        (self.origin.0 + (i as f64 + 0.5) * r, self.origin.1 + (j as f64 + 0.5) * r)
    }
}

pub fn rasterize<T: Scalar>(boundary: &Boundary<T>, cfg: &RasterConfig) -> Result<Raster> {
    cfg.validate()?;
    let pts: Vec<(f64, f64)> = boundary.points().iter().map(|p| (p.x.as_f64(), p.y.as_f64())).collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let r = cfg.resolution_mm;
    // Canvas snapped to the pixel lattice so the result does not depend on
    // where the margin lands.
    let origin = (((xmin - cfg.margin_mm) / r).floor() * r, ((ymin - cfg.margin_mm) / r).floor() * r);
    let rows = ((ymax + cfg.margin_mm - origin.1) / r).ceil() as i64;
    let n = pts.len();
    let mut runs = Vec::new();
    let mut xs = Vec::new();
    for j in 0..rows {
        let yc = origin.1 + (j as f64 + 0.5) * r;
        xs.clear();
        for k in 0..n {
            let (a, b) = (pts[k], pts[(k + 1) % n]);
            if (a.1 <= yc) != (b.1 <= yc) {
                xs.push(a.0 + (yc - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Columns whose centre lies in [x0, x1).
            let start = ((pair[0] - origin.0) / r - 0.5).ceil() as i64;
            let end = ((pair[1] - origin.0) / r - 0.5).ceil() as i64;
            if end > start {
                runs.push(Run { y: j, x_start: start, x_end: end });
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::EmptyRaster);
    }
    Ok(Raster { resolution_mm: r, origin, runs })
}

/// The seven Hu invariants, `h[0]` first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuVector {
    pub h: [f64; 7],
}

/// Hu invariants of the filled raster, from central moments about the
/// pixel-centre centroid, each pixel weighted by its area.
pub fn hu_from_raster(raster: &Raster) -> Result<HuVector> {
    let count = raster.pixel_count();
    if count == 0 {
        return Err(Error::EmptyRaster);
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for run in &raster.runs {
        for i in run.x_start..run.x_end {
            let (x, y) = raster.centre(i, run.y);
            sx += x;
            sy += y;
        }
    }
    let (cx, cy) = (sx / count as f64, sy / count as f64);
    // mu[p][q] for p + q <= 3.
    let mut mu = [[0.0_f64; 4]; 4];
    for run in &raster.runs {
        for i in run.x_start..run.x_end {
            let (x, y) = raster.centre(i, run.y);
            let (dx, dy) = (x - cx, y - cy);
            let xp = [1.0, dx, dx * dx, dx * dx * dx];
            let yp = [1.0, dy, dy * dy, dy * dy * dy];
            for p in 0..4 {
                for q in 0..4 - p {
                    mu[p][q] += xp[p] * yp[q];
                }
            }
        }
    }
    let area = raster.resolution_mm * raster.resolution_mm;
    mu.iter_mut().flatten().for_each(|m| *m *= area);
    let m00 = mu[0][0];
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    let (a, b) = (n30 + n12, n21 + n03);
    let h = [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2),
        a * a + b * b,
        (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b),
    ];
    Ok(HuVector { h })
}

pub fn hu_moments<T: Scalar>(boundary: &Boundary<T>, cfg: &RasterConfig) -> Result<HuVector> {
    hu_from_raster(&rasterize(boundary, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuDissimilarity {
    pub raw: f64,
    /// `raw * 100`, the scale tables report.
    pub scaled: f64,
    /// Terms left out because an invariant was too small to take a log of.
    pub skipped: usize,
}

/// `sum_i |1/m_i^A - 1/m_i^B|` with `m = sign(h) log10|h|`.
pub fn hu_distance(a: &HuVector, b: &HuVector) -> HuDissimilarity {
    let m = |h: f64| h.signum() * h.abs().log10();
    let mut raw = 0.0;
    let mut skipped = 0;
    for (&ha, &hb) in a.h.iter().zip(&b.h) {
        if ha.abs() <= HU_SKIP_THRESHOLD || hb.abs() <= HU_SKIP_THRESHOLD {
            skipped += 1;
            continue;
        }
        raw += (1.0 / m(ha) - 1.0 / m(hb)).abs();
    }
    HuDissimilarity { raw, scaled: raw * 100.0, skipped }
}

pub fn hu_dissimilarity<T: Scalar>(a: &Boundary<T>, b: &Boundary<T>, cfg: &RasterConfig) -> Result<HuDissimilarity> {
    Ok(hu_distance(&hu_moments(a, cfg)?, &hu_moments(b, cfg)?))
}
