//! The bundled tabulated matrices: inertia, and the residual at each regime's fixed point.

use aif_dominance::dominance::{inertia, lmi_residual, max_eigenvalue, table1, verify_certificate};
use aif_dominance::models::{closed_loop, fop_equilibrium, ControllerParams, FirstOrderProduction, FopPlantParams, SystemModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let controller = ControllerParams::new(2.0, 10.0)?;
    let regimes = [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0)];
    for (cert, (theta2, k)) in table1::all().iter().zip(regimes) {
        let plant = FopPlantParams::new(1.0, theta2, k, 1.0)?;
        let model = closed_loop(controller, FirstOrderProduction::linear(plant)?, theta2)?;
        let eq = fop_equilibrium(&controller, &plant)?;
        let worst = max_eigenvalue(&lmi_residual(&model.jacobian(&eq), &cert.matrix, cert.lambda));
        let i = inertia(&cert.matrix);
        println!(
            "theta2 = {theta2}, k = {k}: inertia ({}, {}, {}), lambda = {}, residual max eigenvalue {worst:.4}",
            i.negative, i.zero, i.positive, cert.lambda
        );
        if let Some(region) = &cert.region {
            let report = verify_certificate(&model, region, &cert.matrix, cert.lambda, cert.p, 4, None)?;
            println!("  verification passed: {}", report.passed);
        }
    }
    Ok(())
}
