//! End-to-end acceptance criteria. Each prints one PASS/FAIL line with its
//! runtime; the test fails if any criterion fails or overruns its budget.

mod common;

use std::time::{Duration, Instant};

use aif_dominance::dominance::{
    inertia, lmi_residual, margin_fallback, max_eigenvalue, maximize_margin, solve_dominance_lmi, table1,
    verify_certificate, DominanceCertificate, DominanceOptions, SdpOptions,
};
use aif_dominance::models::{
    closed_loop, finite_difference_jacobian, fop_equilibrium, AllSeqPlantParams, AllSequestration, BistableParams,
    BistableSwitch, SystemModel,
};
use aif_dominance::ode::{classify_trajectory, integrate, refine_equilibrium, AttractorKind, IntegratorSettings};
use aif_dominance::regions::{default_margin, hull_of_trajectories, HullOptions, Region};
use aif_dominance::spectral::{eigenvalues, nyquist_locus, split_count, FrozenLoop, NyquistOptions};
use aif_dominance::SpectralError;
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn table1_inertia() -> Outcome {
    let expected = [(0, 0, 4), (2, 0, 2), (2, 0, 2)];
    for (cert, want) in table1::all().iter().zip(expected) {
        let i = inertia(&cert.matrix);
        ensure((i.negative, i.zero, i.positive) == want, || format!("inertia {i:?}, expected {want:?}"))?;
        let norm = cert.matrix.norm();
        let smallest = cert.matrix.symmetric_eigenvalues().iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        ensure(smallest > 1e-6 * norm, || format!("eigenvalue {smallest:e} near zero"))?;
    }
    Ok("(0,0,4) (2,0,2) (2,0,2)".into())
}

fn equilibrium_regulation() -> Outcome {
    let model = fop_loop(1.0, 1.0);
    let traj = integrate(&model, &[1.0; 4], 100.0, &IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let last = traj.last_state().unwrap();
    let target = [2.0, 0.1, 2.0, 2.0];
    let err = last.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err < 1e-3, || format!("final state {last:?}, error {err:e}"))?;
    let sensed = model.sensed_input(last);
    ensure((sensed - MU).abs() < 1e-3, || format!("theta2 y = {sensed}"))?;
    Ok(format!("|xi(100) - xi_e| = {err:.2e}, theta2 y = {sensed:.6}"))
}

fn oscillatory_regimes() -> Outcome {
    let mut notes = Vec::new();
    for (theta2, k) in [(4.0, 1.0), (1.0, 4.0)] {
        let model = fop_loop(theta2, k);
        let traj = simulate(&model, 300.0);
        let report = classify_trajectory(&traj, 0.5).map_err(|e| e.to_string())?;
        ensure(report.kind == AttractorKind::LimitCycle, || format!("({theta2}, {k}) classified {:?}", report.kind))?;
        let guess = fop_equilibrium(&controller(), &plant(theta2, k)).map_err(|e| e.to_string())?;
        let eq = refine_equilibrium(&model, &guess).map_err(|e| e.to_string())?;
        if theta2 == 4.0 {
            ensure((eq[0] - 0.5).abs() < 1e-9 && (eq[1] - 0.4).abs() < 1e-9, || format!("equilibrium {eq:?}"))?;
        }
        let eigs = eigenvalues(&model.jacobian(&eq));
        let pair = eigs.iter().filter(|e| e.re > 0.0 && e.im.abs() > 0.0).count();
        ensure(pair == 2, || format!("({theta2}, {k}) eigenvalues {eigs:?}"))?;
        notes.push(format!("period {:.4}", report.period().unwrap_or(f64::NAN)));
    }
    Ok(notes.join(", "))
}

fn dominance_certification() -> Outcome {
    let mut notes = Vec::new();
    for (theta2, k, lambda, p) in [(1.0, 1.0, 0.0, 0), (4.0, 1.0, 1.0, 2), (1.0, 4.0, 1.0, 2)] {
        let start = Instant::now();
        let (model, _, region, cert) = proxy(theta2, k);
        ensure(cert.p == p && cert.lambda == lambda, || format!("got p = {} at lambda {}", cert.p, cert.lambda))?;
        let report = verify_certificate(&model, &region, &cert.matrix, lambda, p, 20, None).map_err(|e| e.to_string())?;
        ensure(report.passed && report.residual_margin <= -1e-8, || {
            format!("re-verification: {:?}, margin {:e}", report.reasons, report.residual_margin)
        })?;
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(10), || format!("({theta2}, {k}) took {elapsed:?}"))?;
        notes.push(format!("p={p} margin {:.3e}", report.residual_margin));
    }
    Ok(notes.join(", "))
}

fn table1_at_equilibria() -> Outcome {
    let mut notes = Vec::new();
    for (cert, (theta2, k, lambda)) in table1::all().iter().zip([(1.0, 1.0, 0.0), (4.0, 1.0, 1.0), (1.0, 4.0, 1.0)]) {
        let eq = fop_equilibrium(&controller(), &plant(theta2, k)).map_err(|e| e.to_string())?;
        let a = fop_loop(theta2, k).jacobian(&eq);
        let top = max_eigenvalue(&lmi_residual(&a, &cert.matrix, lambda));
        ensure(top < 0.0, || format!("({theta2}, {k}) residual eigenvalue {top}"))?;
        notes.push(format!("{top:.3}"));
    }
    Ok(format!("max residual eigenvalues {}", notes.join(", ")))
}

fn nyquist_counts() -> Outcome {
    let (model, _, region, _) = proxy(1.0, 1.0);
    let vertices = region.vertices(&model).map_err(|e| e.to_string())?;
    let opts = NyquistOptions::default();
    for v in &vertices {
        let lp = FrozenLoop::aif_unit([v.xi[0], v.xi[1]], ETA, 1.0);
        let weak = nyquist_locus(&lp, 0.0, 1.0, &opts).map_err(|e| e.to_string())?;
        ensure(weak.encirclements == 0, || format!("gain 1 at {:?}: N = {}", v.xi, weak.encirclements))?;
        let strong = nyquist_locus(&lp, 0.0, 4.0, &opts).map_err(|e| e.to_string())?;
        ensure(strong.encirclements == 2, || format!("gain 4 at {:?}: N = {}", v.xi, strong.encirclements))?;
    }
    Ok(format!("{} vertices: N = 0 at gain 1, N = 2 at gain 4", vertices.len()))
}

fn hill_slopes() -> Outcome {
    let (at_a, peak_a) = hill_a().max_slope();
    ensure((peak_a - 1.0).abs() < 1e-9, || format!("mild peak {peak_a} at {at_a}"))?;
    let (at_b, peak_b) = hill_b().max_slope();
    ensure((peak_b - 2.054).abs() < 1e-3, || format!("steep peak {peak_b}"))?;
    ensure((at_b - 0.1826).abs() < 1e-3, || format!("steep peak at u = {at_b}"))?;
    Ok(format!("peaks {peak_a:.9} and {peak_b:.4} at u = {at_b:.4}"))
}

fn robustness() -> Outcome {
    let mut notes = Vec::new();
    for (theta2, k) in [(4.0, 1.0), (1.0, 4.0)] {
        let cert = robust_proxy(theta2, k)?;
        ensure(cert.p == 2 && cert.lambda == 1.0, || format!("({theta2}, {k}) p = {}", cert.p))?;
        notes.push(format!("{} vertices", cert.checked_points));
    }
    Ok(format!("p=2 over eta in [7,13]: {}", notes.join(", ")))
}

fn all_sequestration() -> Outcome {
    let plant = AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let model = closed_loop(controller(), plant, 4.0).map_err(|e| e.to_string())?;
    let traj = simulate(&model, 300.0);
    let report = classify_trajectory(&traj, 0.5).map_err(|e| e.to_string())?;
    ensure(report.kind == AttractorKind::LimitCycle, || format!("classified {:?}", report.kind))?;
    let margin = default_margin(&[&traj], [0, 1], 0.25, 0.5).map_err(|e| e.to_string())?;
    let dopts = DominanceOptions {
        expected_p: Some(2),
        ..DominanceOptions::default()
    };
    let found = margin_fallback(margin, 3, |m| {
        let region: Region =
            hull_of_trajectories(&[&traj], [0, 1], m, &HullOptions::default())?.with_box_from(&traj, m, 0.5)?;
        solve_dominance_lmi(&model, &region, 1.0, &dopts)
    })
    .map_err(|f| format!("{:?}", f.attempts))?;
    let cert: DominanceCertificate = found.value;
    let region = cert.region.as_ref().unwrap();
    ensure(region.x_box.iter().skip(2).all(Option::is_some), || "plant coordinates unbounded".into())?;
    Ok(format!("period {:.4}, p = {} on {} points", report.period().unwrap_or(f64::NAN), cert.p, cert.checked_points))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn jacobian_agreement(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let bistable = BistableSwitch::new(BistableParams::new(0.5, 1.0, 4.0, 1.0, 0.2).unwrap()).unwrap();
    let all_seq = closed_loop(
        controller(),
        AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap(),
        4.0,
    )
    .unwrap();
    let models: Vec<Box<dyn SystemModel>> = vec![
        Box::new(fop_loop(1.0, 1.0)),
        Box::new(fop_loop(4.0, 1.0)),
        Box::new(hill_loop(1.0, 4.0, hill_a(), ETA)),
        Box::new(hill_loop(1.0, 1.0, hill_b(), ETA)),
        Box::new(all_seq),
        Box::new(bistable),
    ];
    let mut checked = 0;
    for model in &models {
        for _ in 0..1000 {
            let xi: Vec<f64> = (0..model.dim()).map(|_| uniform(rng, 0.01, 5.0)).collect();
            let exact = model.jacobian(&xi);
            let fd = finite_difference_jacobian(model.as_ref(), &xi, 1e-5).map_err(|e| e.to_string())?;
            let err = (&exact - &fd).abs().max();
            let scale = exact.abs().max().max(1.0);
            ensure(err <= 1e-6 * scale, || format!("{} at {xi:?}: error {err:e}", model.tag()))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn solver_equivalence(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut done = 0;
    while done < 200 {
        let a = DMatrix::from_fn(4, 4, |_, _| uniform(rng, -2.0, 2.0));
        let lambda = uniform(rng, 0.0, 2.0);
        let Ok((right, _)) = split_count(&eigenvalues(&a), lambda, 0.1) else {
            continue;
        };
        let sol = maximize_margin(std::slice::from_ref(&a), lambda, 1e-9, &SdpOptions::default())
            .map_err(|e| format!("{a:?} at {lambda}: {e}"))?;
        ensure(sol.feasible, || format!("{a:?} at {lambda}: infeasible"))?;
        let top = max_eigenvalue(&lmi_residual(&a, &sol.p, lambda));
        ensure(top < 0.0, || format!("{a:?} at {lambda}: residual {top}"))?;
        let i = inertia(&sol.p);
        ensure(i.negative == right && i.zero == 0 && i.positive == 4 - right, || {
            format!("{a:?} at {lambda}: inertia {i:?}, {right} eigenvalues right of the line")
        })?;
        done += 1;
    }
    Ok(done)
}

fn winding_consistency(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut done = 0;
    while done < 100 {
        let a = DMatrix::from_fn(4, 4, |_, _| uniform(rng, -2.0, 2.0));
        let b = DVector::from_fn(4, |_, _| uniform(rng, -1.0, 1.0));
        let c = DVector::from_fn(4, |_, _| uniform(rng, -1.0, 1.0));
        let lambda = uniform(rng, 0.0, 1.0);
        let gain = uniform(rng, 0.2, 5.0);
        let lp = FrozenLoop::new(a, b, c).unwrap();
        let locus = match nyquist_locus(&lp, lambda, gain, &NyquistOptions::default()) {
            Ok(l) => l,
            Err(SpectralError::MarginalWinding { .. } | SpectralError::BoundarySplit { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let Ok((right, _)) = split_count(&eigenvalues(&lp.closed_loop(gain)), lambda, 1e-6) else {
            continue;
        };
        ensure(locus.encirclements == right as i64 - locus.q_xi as i64, || {
            format!("N = {}, p = {right}, q = {}", locus.encirclements, locus.q_xi)
        })?;
        done += 1;
    }
    Ok(done)
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let jac = jacobian_agreement(&mut rng)?;
    let sdp = solver_equivalence(&mut rng)?;
    let wind = winding_consistency(&mut rng)?;
    Ok(format!("{jac} Jacobians, {sdp} SDP systems, {wind} loops"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("tabulated matrices have the claimed inertia", table1_inertia, 1),
        ("regulation to the set point", equilibrium_regulation, 1),
        ("oscillatory regimes", oscillatory_regimes, 5),
        ("dominance certification on the proxies", dominance_certification, 30),
        ("tabulated matrices at the regime equilibria", table1_at_equilibria, 1),
        ("Nyquist encirclement counts", nyquist_counts, 5),
        ("saturation slopes", hill_slopes, 1),
        ("robust certification over the eta interval", robustness, 30),
        ("all-sequestration plant", all_sequestration, 60),
        ("property suites", property_suites, 600),
    ];
    let mut failed = Vec::new();
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|note| {
            if elapsed <= Duration::from_secs(budget) {
                Ok(note)
            } else {
                Err(format!("took {elapsed:.2?}, budget {budget} s"))
            }
        });
        match outcome {
            Ok(note) => println!("PASS  {name} ({elapsed:.2?}): {note}"),
            Err(why) => {
                println!("FAIL  {name} ({elapsed:.2?}): {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
