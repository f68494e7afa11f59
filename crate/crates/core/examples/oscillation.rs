//! A stronger loop oscillates. The region around the cycle is 2-dominant at
//! rate 1 and its only fixed point is unstable, so the attractor is a limit cycle.

use aif_dominance::dominance::{classify, margin_fallback, solve_dominance_lmi, DominanceOptions};
use aif_dominance::models::{closed_loop, fop_equilibrium, ControllerParams, FirstOrderProduction, FopPlantParams, SystemModel};
use aif_dominance::ode::{classify_trajectory, integrate, IntegratorSettings};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions};
use aif_dominance::spectral::eigenvalues;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let controller = ControllerParams::new(2.0, 10.0)?;
    for (theta2, k) in [(4.0, 1.0), (1.0, 4.0)] {
        let plant = FopPlantParams::new(1.0, theta2, k, 1.0)?;
        let model = closed_loop(controller, FirstOrderProduction::linear(plant)?, theta2)?;
        let traj = integrate(&model, &[1.0; 4], 300.0, &IntegratorSettings::default())?;
        let report = classify_trajectory(&traj, 0.5)?;
        println!("theta2 = {theta2}, k = {k}: {:?}, period {:.4?}", report.kind, report.period());

        let eq = fop_equilibrium(&controller, &plant)?;
        let eigs = eigenvalues(&model.jacobian(&eq));
        println!("  fixed point {:.3?}, rightmost eigenvalue {:.4}", &eq[..2], eigs[0]);

        let margin = default_margin(&[&traj], [0, 1], 0.25, 0.5)?;
        let opts = DominanceOptions { expected_p: Some(2), ..DominanceOptions::default() };
        let found = margin_fallback(margin, 3, |m| {
            let region = hull_of_trajectories(&[&traj], [0, 1], m, &HullOptions::default())?;
            solve_dominance_lmi(&model, &region, 1.0, &opts)
        })
        .map_err(|f| f.error)?;
        let cert = found.value;
        println!("  p = {}, epsilon = {:.4e}, region margin {:.4}", cert.p, cert.epsilon, found.margin);
        println!("  {:?}", classify(&cert, &[(eq.to_vec(), eigs)])?.class);
    }
    Ok(())
}
