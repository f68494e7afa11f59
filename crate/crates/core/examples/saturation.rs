//! Hill-type actuation modulates the loop gain by its slope. The slope is
//! bounded over the region and treated as an extra vertex coordinate; a steep
//! map needs the region split into strips along z1.

use aif_dominance::dominance::{margin_fallback, solve_dominance_lmi, DominanceOptions};
use aif_dominance::models::{closed_loop, ControllerParams, FirstOrderProduction, FopPlantParams, HillParams};
use aif_dominance::ode::{classify_trajectory, integrate, IntegratorSettings};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let controller = ControllerParams::new(2.0, 10.0)?;
    let maps = [("mild", HillParams::new(1.0, 0.2, 1)?, 0), ("steep", HillParams::new(0.1, 1.0, 2)?, 4)];
    for (name, hill, strips) in maps {
        let (at, peak) = hill.max_slope();
        println!("{name} map: ceiling {:.3}, peak slope {peak:.4} at u = {at:.4}", hill.ceiling());
        for (theta2, k) in [(4.0, 1.0), (1.0, 4.0)] {
            let plant = FopPlantParams::new(1.0, theta2, k, 1.0)?;
            let model = closed_loop(controller, FirstOrderProduction::hill(plant, hill)?, theta2)?;
            let traj = integrate(&model, &[1.0; 4], 300.0, &IntegratorSettings::default())?;
            let kind = classify_trajectory(&traj, 0.5)?.kind;
            let margin = default_margin(&[&traj], [0, 1], 0.25, 0.5)?;
            let res = margin_fallback(margin, 3, |m| {
                let region = hull_of_trajectories(&[&traj], [0, 1], m, &HullOptions::default())?.with_slope_strips(strips);
                solve_dominance_lmi(&model, &region, 1.0, &DominanceOptions::default())
            });
            match res {
                Ok(f) => println!("  theta2 = {theta2}, k = {k}: {kind:?}, p = {} at margin {:.4}", f.value.p, f.margin),
                Err(f) => println!("  theta2 = {theta2}, k = {k}: {kind:?}, no certificate ({})", f.error),
            }
        }
    }
    Ok(())
}
