use msbie::bie::*;
use msbie::geometry::{Curve, Vec2};
use msbie::Error;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

fn circle_grid(radius: f64, center: Vec2, n: usize) -> Arc<BoundaryGrid> {
    Arc::new(BoundaryGrid::new(&Curve::circle(center, radius).unwrap(), 0, n).unwrap())
}

fn solve_plane_wave(grid: &Arc<BoundaryGrid>, k: f64, alpha: Vec2) -> DensityField {
    let sys = assemble(grid, k).unwrap();
    let mut rhs = incident_trace(grid, alpha, k);
    rhs.values.iter_mut().for_each(|v| *v *= 2.0);
    sys.solve(&rhs).unwrap()
}

#[test]
fn nystrom_matches_mie_off_axis() {
    let alpha = Vec2::from_angle(0.7);
    let grid = circle_grid(0.5, Vec2::ZERO, 256);
    let eta = solve_plane_wave(&grid, 20.0, alpha);
    let exact = mie_total_field(0.5, 20.0, alpha, &grid.params).unwrap();
    let err = eta.values.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-11, "{err}");
}

#[test]
fn exterior_field_matches_mie() {
    let (k, alpha, center) = (15.0, Vec2::new(1.0, 0.0), Vec2::new(0.3, -0.2));
    let grid = circle_grid(0.5, center, 256);
    // the incident phase is measured from the origin, the Mie series from the centre
    let shift = Complex64::from_polar(1.0, k * alpha.dot(center));
    let eta = solve_plane_wave(&grid, k, alpha);
    let pts: Vec<Vec2> = (0..8).map(|i| center + Vec2::from_angle(0.8 * i as f64) * (1.0 + 0.3 * i as f64)).collect();
    let dlp = eval_dlp(&eta, k, &pts).unwrap();
    let mie = mie_scattered_field(0.5, k, alpha, center, &pts).unwrap();
    for (a, b) in dlp.iter().zip(&mie) {
        assert!((a - b * shift).norm() < 1e-10, "{a} vs {}", b * shift);
    }
}

#[test]
fn scattered_field_is_outgoing() {
    // r^{1/2} (du/dr - ik u) decays like r^{-1}
    let (k, alpha) = (10.0, Vec2::new(1.0, 0.0));
    let grid = circle_grid(0.5, Vec2::ZERO, 160);
    let eta = solve_plane_wave(&grid, k, alpha);
    let dir = Vec2::from_angle(2.0);
    let defect = |r: f64| {
        let h = 1e-4;
        let u = eval_dlp(&eta, k, &[dir * (r - h), dir * r, dir * (r + h)]).unwrap();
        let du = (u[2] - u[0]) / (2.0 * h);
        (r.sqrt() * (du - Complex64::new(0.0, k) * u[1])).norm()
    };
    let (d1, d2) = (defect(20.0), defect(80.0));
    let ratio = d1 / d2;
    assert!(ratio > 3.0 && ratio < 5.0, "{d1} {d2}");
}

#[test]
fn interior_resonance_is_reported() {
    // first zero of J_0 over the radius 0.5
    let grid = circle_grid(0.5, Vec2::ZERO, 64);
    match assemble_with(&grid, 4.809651115391546, 0.0) {
        Err(Error::NearResonance { cond }) => assert!(cond > RESONANCE_COND),
        other => panic!("expected a resonance error, got {other:?}"),
    }
    let ok = assemble_with(&grid, 4.3, 0.0).unwrap();
    assert!(ok.condition_estimate() < 1e4);
}

#[test]
fn coarse_grids_and_near_targets_are_refused() {
    let grid = circle_grid(0.5, Vec2::ZERO, 64);
    assert!(matches!(assemble(&grid, 200.0), Err(Error::Resolution { n: 64, .. })));
    let eta = solve_plane_wave(&grid, 5.0, Vec2::new(1.0, 0.0));
    assert!(matches!(eval_dlp(&eta, 5.0, &[Vec2::new(0.51, 0.0)]), Err(Error::NearBoundary { .. })));
    assert!(eval_dlp(&eta, 5.0, &[Vec2::new(0.61, 0.0)]).is_ok());
    assert!((d_min(1000.0) - 10.0 * PI / 1000.0).abs() < 1e-15);
    assert_eq!(d_min(1.0), 0.1);
}

#[test]
fn solve_is_linear_in_the_data() {
    let grid = circle_grid(0.5, Vec2::ZERO, 128);
    let sys = assemble(&grid, 12.0).unwrap();
    let a = incident_trace(&grid, Vec2::new(1.0, 0.0), 12.0);
    let b = incident_trace(&grid, Vec2::from_angle(1.0), 12.0);
    let c = Complex64::new(0.3, -1.7);
    let combo =
        a.with_values(a.values.iter().zip(&b.values).map(|(x, y)| x + c * y).collect(), Content::Trace).unwrap();
    let (sa, sb, sc) = (sys.solve(&a).unwrap(), sys.solve(&b).unwrap(), sys.solve(&combo).unwrap());
    for i in 0..grid.len() {
        assert!((sc.values[i] - sa.values[i] - c * sb.values[i]).norm() < 1e-12);
    }
}

#[test]
fn mie_limits() {
    assert!(matches!(mie_total_field(0.5, 2000.0, Vec2::new(1.0, 0.0), &[0.0]), Err(Error::OutOfRange(_))));
    assert!(matches!(mie_total_field(-0.5, 20.0, Vec2::new(1.0, 0.0), &[0.0]), Err(Error::Domain(_))));
    assert!(mie_scattered_field(0.5, 20.0, Vec2::new(1.0, 0.0), Vec2::ZERO, &[Vec2::new(0.2, 0.0)]).is_err());
}
