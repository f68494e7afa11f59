#![allow(dead_code)]

use aif_dominance::dominance::{margin_fallback, solve_dominance_lmi, DominanceCertificate, DominanceOptions};
use aif_dominance::models::{
    closed_loop, ClosedLoop, ControllerParams, FirstOrderProduction, FopPlantParams, HillParams,
};
use aif_dominance::ode::{integrate, IntegratorSettings, Trajectory};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions, Region};

pub const MU: f64 = 2.0;
pub const ETA: f64 = 10.0;

pub fn controller() -> ControllerParams {
    ControllerParams::new(MU, ETA).unwrap()
}

pub fn plant(theta2: f64, k: f64) -> FopPlantParams {
    FopPlantParams::new(1.0, theta2, k, 1.0).unwrap()
}

pub fn fop_loop(theta2: f64, k: f64) -> ClosedLoop<FirstOrderProduction> {
    closed_loop(controller(), FirstOrderProduction::linear(plant(theta2, k)).unwrap(), theta2).unwrap()
}

pub fn hill_loop(theta2: f64, k: f64, hill: HillParams, eta: f64) -> ClosedLoop<FirstOrderProduction> {
    closed_loop(
        controller().with_eta(eta),
        FirstOrderProduction::hill(plant(theta2, k), hill).unwrap(),
        theta2,
    )
    .unwrap()
}

pub fn hill_a() -> HillParams {
    HillParams::new(1.0, 0.2, 1).unwrap()
}

pub fn hill_b() -> HillParams {
    HillParams::new(0.1, 1.0, 2).unwrap()
}

pub fn simulate<M: aif_dominance::models::SystemModel>(model: &M, t_end: f64) -> Trajectory {
    integrate(model, &[1.0; 4], t_end, &IntegratorSettings::default()).unwrap()
}

/// Transient fraction used for each regime's region: the fixed point is reached
/// early, so the whole approach is wrapped; cycles drop the first half.
pub fn transient_for(theta2: f64, k: f64) -> f64 {
    if theta2 * k <= 1.0 {
        0.0
    } else {
        0.5
    }
}

/// Proxy region and certificate at the largest margin (25% of the attractor's
/// diagonal, halved up to three times) that certifies.
pub fn certified_proxy<M: aif_dominance::models::SystemModel>(
    model: &M,
    trajs: &[&Trajectory],
    transient: f64,
    lambda: f64,
    p: usize,
) -> (Region, DominanceCertificate) {
    let opts = HullOptions {
        transient_fraction: transient,
        ..HullOptions::default()
    };
    let margin = default_margin(trajs, [0, 1], 0.25, transient).unwrap();
    let dopts = DominanceOptions {
        expected_p: Some(p),
        ..DominanceOptions::default()
    };
    let found = margin_fallback(margin, 3, |m| {
        let region = hull_of_trajectories(trajs, [0, 1], m, &opts)?;
        solve_dominance_lmi(model, &region, lambda, &dopts).map(|c| (region, c))
    })
    .unwrap_or_else(|f| panic!("no certificate: {:?}", f.attempts));
    found.value
}

/// R0 proxy for the weak loop and R2 proxies for the two oscillatory regimes.
pub fn proxy(theta2: f64, k: f64) -> (ClosedLoop<FirstOrderProduction>, Trajectory, Region, DominanceCertificate) {
    let model = fop_loop(theta2, k);
    let oscillating = theta2 * k > 1.0;
    let traj = simulate(&model, if oscillating { 300.0 } else { 100.0 });
    let (lambda, p) = if oscillating { (1.0, 2) } else { (0.0, 0) };
    let (region, cert) = certified_proxy(&model, &[&traj], transient_for(theta2, k), lambda, p);
    (model, traj, region, cert)
}

/// Hill-(a) loop certified over `eta` in [7, 13]; the region wraps the
/// attractors at both ends of the interval and at the nominal rate.
pub fn robust_proxy(theta2: f64, k: f64) -> Result<DominanceCertificate, String> {
    use aif_dominance::dominance::solve_robust_dominance;
    use aif_dominance::Interval;
    let eta_box = Interval::new(7.0, 13.0).unwrap();
    let trajs: Vec<Trajectory> = [7.0, ETA, 13.0]
        .iter()
        .map(|&eta| simulate(&hill_loop(theta2, k, hill_a(), eta), 300.0))
        .collect();
    let refs: Vec<&Trajectory> = trajs.iter().collect();
    let model = hill_loop(theta2, k, hill_a(), ETA);
    let margin = default_margin(&refs, [0, 1], 0.25, 0.5).map_err(|e| e.to_string())?;
    let dopts = DominanceOptions {
        expected_p: Some(2),
        ..DominanceOptions::default()
    };
    margin_fallback(margin, 3, |m| {
        let region = hull_of_trajectories(&refs, [0, 1], m, &HullOptions::default())?.with_eta(eta_box);
        solve_robust_dominance(&model, &region, 1.0, &dopts)
    })
    .map(|f| f.value)
    .map_err(|f| format!("{:?}", f.attempts))
}
