use msbie::bie::{assemble, mie_scattered_field, mie_total_field, Content, DensityField, FieldMeta};
use msbie::geometry::{two_obstacle_scene, Curve, Scene, Vec2};
use msbie::multiscatter::*;
use msbie::rays::{classify, uniform_params};
use msbie::Error;
use num_complex::Complex64;
use std::f64::consts::PI;

fn small_two_obstacle_scene() -> Scene {
    two_obstacle_scene().with_k(40.0).unwrap()
}

fn circle_scene(k: f64) -> Scene {
    Scene::new(vec![Curve::circle(Vec2::ZERO, 0.5).unwrap()], Vec2::new(1.0, 0.0), k, vec![0]).unwrap()
}

#[test]
fn first_step_is_the_mie_solution() {
    let s = circle_scene(30.0);
    let recs = iterate(&s, 0, default_grids(&s, 10.0, 0).unwrap()).unwrap();
    let exact = mie_total_field(0.5, 30.0, s.alpha, &recs[0].eta.grid.params).unwrap();
    for (a, b) in recs[0].eta.values.iter().zip(&exact) {
        assert!((a - b).norm() < 1e-10);
    }
    // envelope times the phase factor restores the density
    let r = &recs[0];
    for i in 0..r.eta.values.len() {
        let back = r.eta_slow.values[i] * Complex64::from_polar(1.0, 30.0 * r.phi.values[i].re);
        assert!((back - r.eta.values[i]).norm() < 1e-13);
    }
}

#[test]
fn second_step_uses_the_scattered_field_of_the_first() {
    let s = small_two_obstacle_scene();
    let grids = default_grids(&s, 10.0, 0).unwrap();
    let recs = iterate(&s, 1, grids.clone()).unwrap();
    // the circle sits at the origin, so its scattered field is the Mie series
    let ellipse = &grids[1];
    let data = mie_scattered_field(0.5, 40.0, s.alpha, Vec2::ZERO, &ellipse.points).unwrap();
    let rhs = DensityField::new(
        ellipse.clone(),
        data.iter().map(|v| v * 2.0).collect(),
        FieldMeta { m: 1, obstacle: 1, k: 40.0, content: Content::Trace },
    )
    .unwrap();
    let eta1 = assemble(ellipse, 40.0).unwrap().solve(&rhs).unwrap();
    let scale = eta1.max_abs();
    for (a, b) in recs[1].eta.values.iter().zip(&eta1.values) {
        assert!((a - b).norm() < 1e-8 * scale);
    }
}

#[test]
fn resume_reproduces_a_continuous_run() {
    let s = small_two_obstacle_scene();
    let grids = default_grids(&s, 10.0, 0).unwrap();
    let full = iterate(&s, 3, grids.clone()).unwrap();
    let mut d = Driver::new(s, grids).unwrap().resume_from(2, full[1].eta.clone()).unwrap();
    assert_eq!(d.next_m(), 2);
    for m in 2..=3 {
        let r = d.step().unwrap();
        assert_eq!(r.m, m);
        assert_eq!(r.eta.values, full[m].eta.values);
    }
}

#[test]
fn resume_rejects_mismatched_density() {
    let s = small_two_obstacle_scene();
    let grids = default_grids(&s, 10.0, 0).unwrap();
    let first = iterate(&s, 0, grids.clone()).unwrap().remove(0);
    let d = Driver::new(s.clone(), grids.clone()).unwrap();
    assert!(matches!(d.resume_from(2, first.eta.clone()), Err(Error::Domain(_))));
    let d = Driver::new(s, grids).unwrap();
    assert!(matches!(d.resume_from(0, first.eta), Err(Error::Domain(_))));
}

#[test]
fn amplitude_scales_every_step() {
    let s = small_two_obstacle_scene();
    let grids = default_grids(&s, 10.0, 0).unwrap();
    let c = Complex64::new(-0.4, 2.1);
    let mut plain = Driver::new(s.clone(), grids.clone()).unwrap();
    let mut scaled = Driver::new(s, grids).unwrap().with_amplitude(c);
    for _ in 0..3 {
        let (a, b) = (plain.step().unwrap(), scaled.step().unwrap());
        let scale = a.eta.max_abs();
        for (x, y) in a.eta.values.iter().zip(&b.eta.values) {
            assert!((x * c - y).norm() < 1e-10 * scale * c.norm());
        }
    }
}

#[test]
fn single_obstacle_stops_after_first_step() {
    let s = circle_scene(20.0);
    let mut d = Driver::new(s.clone(), default_grids(&s, 10.0, 0).unwrap()).unwrap();
    d.step().unwrap();
    assert!(matches!(d.step(), Err(Error::Precondition(_))));
}

#[test]
fn spectral_derivative_of_analytic_function() {
    let n = 96;
    let t = uniform_params(n);
    let f: Vec<Complex64> = t.iter().map(|&t| Complex64::new(t.sin().exp(), (2.0 * t).cos())).collect();
    let d1 = spectral_derivative_values(&f, 1).unwrap();
    let d2 = spectral_derivative_values(&f, 2).unwrap();
    for (i, &t) in t.iter().enumerate() {
        let e = t.sin().exp();
        let want1 = Complex64::new(t.cos() * e, -2.0 * (2.0 * t).sin());
        let want2 = Complex64::new((t.cos().powi(2) - t.sin()) * e, -4.0 * (2.0 * t).cos());
        assert!((d1[i] - want1).norm() < 1e-12, "{i}");
        assert!((d2[i] - want2).norm() < 1e-10, "{i}");
    }
    assert!(spectral_derivative_values(&f[..95], 1).is_err());
}

#[test]
fn weight_on_the_circle() {
    let s = circle_scene(1000.0);
    let part = classify(&s, 0, &uniform_params(64)).unwrap();
    let floor = 0.1;
    assert!((weight_w(&part, 1000.0, part.t1) - floor).abs() < 1e-9);
    assert!((weight_w(&part, 1000.0, PI) - (floor + PI * PI / 4.0)).abs() < 1e-9);
    assert!(weight_w(&part, 1000.0, 0.0) >= floor);
}

#[test]
fn sigma_rho_split() {
    let s = circle_scene(20.0);
    let recs = iterate(&s, 0, default_grids(&s, 10.0, 0).unwrap()).unwrap();
    let split = sigma_rho(&recs[0], 0).unwrap();
    assert!(split.sigma_slow.is_none());
    assert_eq!(split.rho_slow.values, recs[0].eta_slow.values);
    assert!(matches!(sigma_rho(&recs[0], 1), Err(Error::NotImplemented(_))));
}

#[test]
fn nearest_node_wraps() {
    let p = uniform_params(8);
    assert_eq!(nearest_node(&p, 2.0 * PI - 0.01), 0);
    assert_eq!(nearest_node(&p, PI), 4);
}

#[test]
fn grids_follow_the_density_rule() {
    let s = two_obstacle_scene();
    let g: Vec<usize> = default_grids(&s, 10.0, 0).unwrap().iter().map(|g| g.len()).collect();
    assert_eq!(g[0], 4000);
    let n1 = msbie::bie::required_nodes(&s.obstacles[1], 800.0, 10.0);
    assert_eq!(g[1], n1);
    let small = default_grids(&circle_scene(1.0), 10.0, 100).unwrap();
    assert_eq!(small[0].len(), 100);
}
