//! A single certificate valid for every sequestration rate in [7, 13]. The
//! region wraps the attractors simulated at the two ends and the nominal rate.

use aif_dominance::dominance::{margin_fallback, solve_robust_dominance, DominanceOptions};
use aif_dominance::models::{closed_loop, ControllerParams, FirstOrderProduction, FopPlantParams, HillParams};
use aif_dominance::ode::{integrate, IntegratorSettings, Trajectory};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions};
use aif_dominance::Interval;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eta_box = Interval::new(7.0, 13.0).unwrap();
    let hill = HillParams::new(1.0, 0.2, 1)?;
    for (theta2, k) in [(4.0, 1.0), (1.0, 4.0)] {
        let plant = FopPlantParams::new(1.0, theta2, k, 1.0)?;
        let build = |eta: f64| -> Result<_, Box<dyn std::error::Error>> {
            Ok(closed_loop(ControllerParams::new(2.0, eta)?, FirstOrderProduction::hill(plant, hill)?, theta2)?)
        };
        let trajs: Vec<Trajectory> = [7.0, 10.0, 13.0]
            .iter()
            .map(|&eta| Ok(integrate(&build(eta)?, &[1.0; 4], 300.0, &IntegratorSettings::default())?))
            .collect::<Result<_, Box<dyn std::error::Error>>>()?;
        let refs: Vec<&Trajectory> = trajs.iter().collect();
        let model = build(10.0)?;
        let margin = default_margin(&refs, [0, 1], 0.25, 0.5)?;
        let found = margin_fallback(margin, 3, |m| {
            let region = hull_of_trajectories(&refs, [0, 1], m, &HullOptions::default())?.with_eta(eta_box);
            solve_robust_dominance(&model, &region, 1.0, &DominanceOptions::default())
        })
        .map_err(|f| f.error)?;
        println!(
            "theta2 = {theta2}, k = {k}: p = {} over eta in [{}, {}], {} vertices checked, epsilon {:.4e}",
            found.value.p, eta_box.lo, eta_box.hi, found.value.checked_points, found.value.epsilon
        );
    }
    Ok(())
}
