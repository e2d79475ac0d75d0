//! Frequency scaling of the envelope on a single circle.

use msbie::geometry::{Curve, Scene, Vec2};
use msbie::multiscatter::scaling_report;

fn main() -> msbie::Result<()> {
    let scene = Scene::new(vec![Curve::circle(Vec2::ZERO, 0.5)?], Vec2::new(1.0, 0.0), 100.0, vec![0])?;
    let rep = scaling_report(&scene, 0, &[100.0, 200.0, 400.0], 10.0)?;
    println!("k                      {:?}", rep.ks);
    let sci = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    println!("|eta_slow - 2| at lit centre {}", sci(&rep.lit_center_deviation));
    println!("|eta| deepest shadow   {}", sci(&rep.shadow_magnitude));
    println!("sup|D eta_slow| growth {:.3?}", rep.lit_slow_ratio[1]);
    println!("sup|D eta| growth      {:.3?}", rep.lit_raw_ratio[1]);
    println!("weighted sup, n = 1    {:.2?}", rep.weighted_sup[1]);
    Ok(())
}
