//! Set-point regulation with a weak loop: the trajectory settles at the fixed
//! point, and a 0-dominance certificate over a region around it rules out any
//! other attractor there.

use aif_dominance::dominance::{classify, margin_fallback, solve_dominance_lmi, DominanceOptions};
use aif_dominance::models::{closed_loop, fop_equilibrium, ControllerParams, FirstOrderProduction, FopPlantParams, SystemModel};
use aif_dominance::ode::{classify_trajectory, integrate, IntegratorSettings};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions};
use aif_dominance::spectral::eigenvalues;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let controller = ControllerParams::new(2.0, 10.0)?;
    let plant = FopPlantParams::new(1.0, 1.0, 1.0, 1.0)?;
    let model = closed_loop(controller, FirstOrderProduction::linear(plant)?, plant.theta2)?;

    let traj = integrate(&model, &[1.0; 4], 100.0, &IntegratorSettings::default())?;
    let last = traj.last_state().unwrap();
    println!("state at t = 100: {last:.6?}");
    println!("sensed output theta2 * y = {:.6} (set point {})", model.sensed_input(last), controller.mu);
    println!("attractor: {:?}", classify_trajectory(&traj, 0.5)?.kind);

    let eq = fop_equilibrium(&controller, &plant)?;
    println!("analytic fixed point {eq:?}");

    let opts = HullOptions { transient_fraction: 0.0, ..HullOptions::default() };
    let margin = default_margin(&[&traj], [0, 1], 0.25, 0.0)?;
    let found = margin_fallback(margin, 3, |m| {
        let region = hull_of_trajectories(&[&traj], [0, 1], m, &opts)?;
        solve_dominance_lmi(&model, &region, 0.0, &DominanceOptions::default())
    })
    .map_err(|f| f.error)?;
    let cert = found.value;
    println!("p = {}, epsilon = {:.4e}, margin {:.4} after {} attempt(s)", cert.p, cert.epsilon, found.margin, found.attempts.len());

    let eigs = eigenvalues(&model.jacobian(&eq));
    println!("{:?}", classify(&cert, &[(eq.to_vec(), eigs)])?.class);
    Ok(())
}
