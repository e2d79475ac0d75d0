//! Broken rays, phases and shadow boundaries on the two-obstacle scene.

use msbie::geometry::two_obstacle_scene;
use msbie::rays::{classify, phase_derivatives, rays_on_grid, uniform_params};

fn main() -> msbie::Result<()> {
    let scene = two_obstacle_scene();
    let params = uniform_params(512);
    for m in 0..=4 {
        let rays = rays_on_grid(&scene, m, &params)?;
        let part = classify(&scene, m, &params)?;
        let worst = rays.iter().flat_map(|r| r.reflection_residuals(&scene)).fold(0.0, f64::max);
        let centre = rays.iter().min_by(|a, b| {
            let d = |t: f64| (t - part.lit_center()).abs();
            d(a.target_param).total_cmp(&d(b.target_param))
        });
        let (d1, d2) = centre.map(|r| phase_derivatives(&scene, r)).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "m = {m}: obstacle {}, shadow boundaries t1 = {:.6}, t2 = {:.6}, lit arc {:.4}, \
             residual {worst:.1e}, phi' = {d1:.4}, phi'' = {d2:.4} at the lit centre",
            scene.obstacle_index(m),
            part.t1,
            part.t2,
            part.lit_len
        );
    }
    Ok(())
}
