//! A plant whose species are also sequestered. Its Jacobian depends on the
//! plant state, so the region bounds the plant coordinates too.

use aif_dominance::dominance::{margin_fallback, solve_dominance_lmi, DominanceOptions};
use aif_dominance::models::{closed_loop, AllSeqPlantParams, AllSequestration, ControllerParams};
use aif_dominance::ode::{classify_trajectory, integrate, IntegratorSettings};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plant = AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0)?)?;
    let model = closed_loop(ControllerParams::new(2.0, 10.0)?, plant, 4.0)?;
    let traj = integrate(&model, &[1.0; 4], 300.0, &IntegratorSettings::default())?;
    let report = classify_trajectory(&traj, 0.5)?;
    println!("{:?}, period {:.4?}", report.kind, report.period());

    let margin = default_margin(&[&traj], [0, 1], 0.25, 0.5)?;
    let found = margin_fallback(margin, 3, |m| {
        let region = hull_of_trajectories(&[&traj], [0, 1], m, &HullOptions::default())?.with_box_from(&traj, m, 0.5)?;
        solve_dominance_lmi(&model, &region, 1.0, &DominanceOptions::default())
    })
    .map_err(|f| f.error)?;
    let cert = found.value;
    let region = cert.region.as_ref().unwrap();
    println!("p = {}, {} points checked, epsilon {:.4e}", cert.p, cert.checked_points, cert.epsilon);
    for (c, b) in region.x_box.iter().enumerate().skip(2) {
        if let Some(b) = b {
            println!("  x{} in [{:.3}, {:.3}]", c - 1, b.lo, b.hi);
        }
    }
    Ok(())
}
