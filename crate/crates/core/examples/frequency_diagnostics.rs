//! Necessary conditions from the frozen loop: Nyquist encirclements of -1/gain
//! on the shifted axis and the root locus over the loop gain.

use aif_dominance::spectral::{aif_asymptotes, nyquist_locus, root_locus, FrozenLoop, NyquistOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (eta, gamma) = (10.0, 1.0);
    let z = [2.0, 0.1];
    let lp = FrozenLoop::aif_unit(z, eta, gamma);

    for (lambda, gain) in [(0.0, 1.0), (0.0, 4.0), (1.0, 4.0)] {
        let locus = nyquist_locus(&lp, lambda, gain, &NyquistOptions::default())?;
        println!(
            "lambda = {lambda}, gain = {gain}: N = {}, q = {}, closed-loop right = {:?}, indented {}",
            locus.encirclements,
            locus.q_xi,
            locus.closed_loop_right,
            locus.indented_poles.len()
        );
    }

    let gains: Vec<f64> = (0..=40).map(|i| 10f64.powf(-1.0 + i as f64 / 20.0)).collect();
    let rl = root_locus(&lp, &gains, 0.0)?;
    let crossing = rl.gains.iter().zip(&rl.splits).find(|(_, s)| s.0 > 0);
    println!("open-loop poles {:.3?}", rl.open_loop_poles);
    match crossing {
        Some((g, s)) => println!("first grid gain with poles right of the axis: {g:.3} ({} right)", s.0),
        None => println!("no crossing on the grid"),
    }
    let (centroid, angles) = aif_asymptotes(z, eta, gamma);
    println!("asymptote centroid {centroid:.3}, angles {angles:.3?}");
    Ok(())
}
