//! Iterate the two-obstacle scene and watch the envelope stay bounded.

use msbie::geometry::two_obstacle_scene;
use msbie::multiscatter::{default_grids, Driver, LIT_CORE};

fn main() -> msbie::Result<()> {
    let scene = two_obstacle_scene().with_k(200.0)?;
    let grids = default_grids(&scene, 10.0, 0)?;
    let mut driver = Driver::new(scene, grids)?;
    for _ in 0..=8 {
        let rec = driver.step()?;
        let p = &rec.partition;
        let (mut lit, mut deep) = (Vec::new(), Vec::new());
        for (t, v) in rec.eta_slow.grid.params.iter().zip(&rec.eta_slow.values) {
            if p.is_lit(*t) {
                lit.push(v.norm());
            } else if p.in_shadow_core(*t, LIT_CORE) {
                deep.push(v.norm());
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "m = {:2} (obstacle {}, N = {}): sup|eta_slow| = {:.4}, deep shadow / lit mean = {:.2e}",
            rec.m,
            rec.obstacle,
            rec.eta.values.len(),
            rec.eta_slow.max_abs(),
            mean(&deep) / mean(&lit)
        );
    }
    Ok(())
}
