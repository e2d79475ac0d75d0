//! Stationary-phase expansion of a Gaussian integral and the leading
//! geometrical-optics amplitude against the computed field.

use msbie::asymptotics::{sp_leading, sp_sum, AmplitudeFn, PhaseFn, StationaryPhaseProblem};
use msbie::cli::commands::{default_go_point, go_comparison};
use msbie::geometry::two_obstacle_scene;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> msbie::Result<()> {
    let psi: PhaseFn = Arc::new(|t, n| [0.5 * t * t, t, 1.0].get(n).copied().unwrap_or(0.0));
    let f: AmplitudeFn = Arc::new(|t, n| {
        let g = (-0.5 * t * t).exp();
        Complex64::new([g, -t * g, (t * t - 1.0) * g].get(n).copied().unwrap_or(0.0), 0.0)
    });
    let p = StationaryPhaseProblem::new(-12.0, 12.0, 0.1, psi, f)?;
    for k in [100.0, 200.0, 400.0, 800.0] {
        let exact = (Complex64::new(2.0 * PI, 0.0) / Complex64::new(1.0, -k)).sqrt();
        let (one, two) = (sp_leading(&p, k)?, sp_sum(&p, k, 2)?);
        println!("k = {k:4}: one term {:.3e}, two terms {:.3e}", (one - exact).norm(), (two - exact).norm());
    }

    let scene = two_obstacle_scene();
    let x = default_go_point(&scene, 0)?;
    for row in go_comparison(&scene, 0, &[x], &[100.0, 200.0, 400.0], 10.0)? {
        println!(
            "k = {:4}: A00 = {:.5}, u0_slow = {:.5}, |diff| = {:.3e}",
            row.k,
            row.amplitude,
            row.u_slow,
            (row.u_slow - row.amplitude).norm()
        );
    }
    Ok(())
}
