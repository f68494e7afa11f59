//! A sequestration switch with positive feedback on the actuator. Two fixed
//! points: a saddle and a stable high state. A 1-dominance certificate over a
//! box around both means every bounded solution there converges to a fixed point.

use aif_dominance::dominance::{classify, solve_dominance_lmi, DominanceOptions};
use aif_dominance::geometry::Polygon;
use aif_dominance::models::{BistableParams, BistableSwitch, SystemModel};
use aif_dominance::ode::{integrate, refine_equilibrium, IntegratorSettings};
use aif_dominance::regions::Region;
use aif_dominance::spectral::eigenvalues;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = BistableParams::new(0.5, 1.0, 4.0, 1.0, 0.2)?;
    let model = BistableSwitch::new(params)?;

    let mut equilibria = Vec::new();
    for guess in [[0.3, 3.0], [3.0, 0.3]] {
        let eq = refine_equilibrium(&model, &guess)?;
        let eigs = eigenvalues(&model.jacobian(&eq));
        println!("fixed point {eq:.4?}, eigenvalues {eigs:.4?}");
        equilibria.push((eq, eigs));
    }
    for x0 in [[0.2, 4.0], [0.5, 1.0]] {
        let traj = integrate(&model, &x0, 200.0, &IntegratorSettings::default())?;
        println!("from {x0:?}: {:.4?}", traj.last_state().unwrap());
    }

    let corners: Vec<[f64; 2]> = equilibria.iter().map(|(e, _)| [e[0], e[1]]).collect();
    let polygon = Polygon::hull(&corners).unwrap().inflate(0.02).clip_nonnegative().unwrap();
    let region = Region::from_polygon(polygon, 2)?;
    let cert = solve_dominance_lmi(&model, &region, 0.2, &DominanceOptions::default())?;
    println!("p = {} at rate 0.2: {:?}", cert.p, classify(&cert, &equilibria)?.class);
    Ok(())
}
