//! Geometry and shape metrics used together.

use embound::geometry::{
    cast_normals, landing_points, parse_array_layout, spline_close, write_array_layout, AntennaArray, Boundary, Point2,
    RigidTransform,
};
use embound::metrics::{rigid_align, shape_report, RasterConfig};

#[test]
fn layout_round_trip() {
    let a = AntennaArray::<f64>::circular(115.0);
    let b: AntennaArray<f64> = parse_array_layout(&write_array_layout(&a), "copy").unwrap();
    for (p, q) in a.apertures().iter().zip(b.apertures()) {
        assert!(p.distance(*q) < 1e-9);
    }
}

#[test]
fn perfect_labels_reconstruct_the_phantom() {
    let array = AntennaArray::<f64>::circular(115.0);
    let truth = Boundary::ellipse(100.0, 92.0, Point2::new(2.0, -3.0), 25.0, 720).unwrap();
    let normals = cast_normals(&array, &truth).unwrap();
    let recon = spline_close(&landing_points(&array, &normals)).unwrap();
    let r = shape_report(&truth, &recon, &RasterConfig::default()).unwrap();
    assert!(r.area_change_pct.abs() < 0.5, "{r:?}");
    assert!(r.length_change_pct.abs() < 0.5, "{r:?}");
    assert!(r.max_deviation_mm < 1.0, "{r:?}");
    assert!(r.hu.raw < 5e-3, "{r:?}");
}

#[test]
fn report_of_moved_copy_is_near_zero() {
    let a = Boundary::<f64>::superellipse(90.0, 80.0, 2.6, Point2::zero(), 0.0, 720).unwrap();
    let moved = a.transformed(&RigidTransform::new(37.0, 6.0, -4.0));
    let al = rigid_align(&a, &moved);
    // The shape has a half-turn symmetry, so 37 and 217 degrees are equally right.
    let off = (al.rotation_deg - 37.0).rem_euclid(180.0);
    assert!(off.min(180.0 - off) < 0.05, "{}", al.rotation_deg);
    let r = shape_report(&a, &moved, &RasterConfig::default()).unwrap();
    assert!(r.area_change_pct.abs() < 1e-9 && r.length_change_pct.abs() < 1e-9);
    assert!(r.max_deviation_mm < 0.05, "{r:?}");
    assert!(r.hu.raw < 5e-3);
}
