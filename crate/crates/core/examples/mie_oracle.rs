//! Nystrom solution on a circle against the Mie series.

use msbie::bie::{assemble, incident_trace, mie_total_field, BoundaryGrid};
use msbie::geometry::{Curve, Vec2};
use std::sync::Arc;

fn main() -> msbie::Result<()> {
    let (radius, k) = (0.5, 50.0);
    let alpha = Vec2::new(1.0, 0.0);
    let curve = Curve::circle(Vec2::ZERO, radius)?;
    for n in [256, 384, 512] {
        let grid = Arc::new(BoundaryGrid::new(&curve, 0, n)?);
        let sys = assemble(&grid, k)?;
        let mut rhs = incident_trace(&grid, alpha, k);
        rhs.values.iter_mut().for_each(|v| *v *= 2.0);
        let eta = sys.solve(&rhs)?;
        let exact = mie_total_field(radius, k, alpha, &grid.params)?;
        let err = eta.values.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("N = {n:4}  cond ~ {:.2e}  max|eta - mie| = {err:.3e}", sys.condition_estimate());
    }
    Ok(())
}
