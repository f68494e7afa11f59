mod common;

use std::sync::OnceLock;

use aif_dominance::dominance::{solve_dominance_lmi, verify_certificate, DominanceCertificate, DominanceOptions};
use aif_dominance::geometry::Polygon;
use aif_dominance::models::{
    aif_jacobian, closed_loop, finite_difference_jacobian, fop_equilibrium, AllSeqPlantParams, AllSequestration,
    BistableParams, BistableSwitch, ClosedLoop, ControllerParams, FopPlantParams, LinearModel, SystemModel,
};
use aif_dominance::ode::{integrate, IntegratorSettings, Trajectory};
use aif_dominance::regions::{hull_of_trajectory, Region};
use aif_dominance::spectral::{nyquist_locus, root_locus, spectrum, FrozenLoop, NyquistOptions};
use common::*;
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

fn models() -> Vec<Box<dyn SystemModel>> {
    let all_seq = AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    vec![
        Box::new(fop_loop(1.0, 1.0)),
        Box::new(fop_loop(4.0, 1.0)),
        Box::new(hill_loop(1.0, 4.0, hill_a(), ETA)),
        Box::new(hill_loop(1.0, 1.0, hill_b(), ETA)),
        Box::new(closed_loop(controller(), all_seq, 4.0).unwrap()),
        Box::new(BistableSwitch::new(BistableParams::new(0.5, 1.0, 4.0, 1.0, 0.2).unwrap()).unwrap()),
    ]
}

fn state(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, dim)
}

fn r0_certificate() -> &'static (ClosedLoop<aif_dominance::models::FirstOrderProduction>, Region, DominanceCertificate) {
    static CELL: OnceLock<(ClosedLoop<aif_dominance::models::FirstOrderProduction>, Region, DominanceCertificate)> =
        OnceLock::new();
    CELL.get_or_init(|| {
        let (model, _, region, cert) = proxy(1.0, 1.0);
        (model, region, cert)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jacobians_match_finite_differences(xi in state(4), which in 0usize..6) {
        let model = &models()[which];
        let xi = &xi[..model.dim()];
        let exact = model.jacobian(xi);
        let fd = finite_difference_jacobian(model.as_ref(), xi, 1e-5).unwrap();
        let scale = exact.abs().max().max(1.0);
        prop_assert!((&exact - &fd).abs().max() <= 1e-6 * scale, "{}: {exact} vs {fd}", model.tag());
    }

    #[test]
    fn flow_points_inward_on_the_boundary(xi in state(4), which in 0usize..6, zero in 0usize..4) {
        let model = &models()[which];
        let mut xi = xi[..model.dim()].to_vec();
        let zero = zero % xi.len();
        xi[zero] = 0.0;
        let f = model.vector_field(&xi).unwrap();
        prop_assert!(f[zero] >= 0.0, "{}: component {zero} of {f} at {xi:?}", model.tag());
    }

    #[test]
    fn controller_is_a_virtual_integrator(xi in state(4), which in 0usize..3) {
        let model = &models()[[0, 2, 4][which]];
        let f = model.vector_field(&xi).unwrap();
        let u_c = match which {
            0 => fop_loop(1.0, 1.0).sensed_input(&xi),
            1 => hill_loop(1.0, 4.0, hill_a(), ETA).sensed_input(&xi),
            _ => 4.0 * xi[3],
        };
        prop_assert!(((f[0] - f[1]) - (MU - u_c)).abs() <= 1e-12 * (1.0 + u_c.abs()));
    }

    #[test]
    fn equilibrium_output_meets_the_set_point(
        mu in 0.1f64..5.0, eta in 0.5f64..20.0, theta1 in 0.2f64..5.0, theta2 in 0.2f64..5.0,
        k in 0.2f64..5.0, gamma in 0.2f64..3.0,
    ) {
        let cp = ControllerParams::new(mu, eta).unwrap();
        let pp = FopPlantParams::new(theta1, theta2, k, gamma).unwrap();
        let eq = fop_equilibrium(&cp, &pp).unwrap();
        prop_assert!((theta2 * eq[3] - mu).abs() <= 1e-12 * mu);
    }

    #[test]
    fn controller_jacobian_has_rank_one(z1 in 0.0f64..10.0, z2 in 0.0f64..10.0, eta in 0.1f64..50.0) {
        let j = aif_jacobian([z1, z2], &ControllerParams::new(MU, eta).unwrap());
        prop_assert!(j.determinant().abs() <= 1e-12 * j.norm_squared().max(1.0));
    }

    #[test]
    fn saturation_is_nondecreasing(u in 0.0f64..100.0) {
        prop_assert!(hill_a().slope(u) >= 0.0);
        prop_assert!(hill_b().slope(u) >= 0.0);
        prop_assert!(hill_b().value(u * 1.01 + 1e-9) >= hill_b().value(u));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_integration_matches_the_exponential(
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        x0 in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let a = DMatrix::from_row_slice(4, 4, &entries);
        let model = LinearModel::new(a.clone());
        let settings = IntegratorSettings::default();
        let traj = integrate(&model, &x0, 1.0, &settings).unwrap();
        let exact = (a).exp() * DVector::from_vec(x0);
        let got = DVector::from_row_slice(traj.last_state().unwrap());
        prop_assert!((&got - &exact).norm() <= 1e2 * settings.rel_tol * exact.norm().max(1.0), "{got} vs {exact}");
    }

    #[test]
    fn hulls_contain_their_samples_and_grow_with_margin(
        pts in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 3..40),
        m in 0.0f64..1.0,
        extra in 0.0f64..1.0,
        probe in (0.0f64..6.0, 0.0f64..6.0),
    ) {
        let times: Vec<f64> = (0..pts.len()).map(|i| i as f64).collect();
        let states: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        let traj = Trajectory::from_samples(times, states).unwrap();
        let Ok(small) = hull_of_trajectory(&traj, [0, 1], m) else { return Ok(()) };
        let big = hull_of_trajectory(&traj, [0, 1], m + extra).unwrap();
        for x in &traj.states[traj.transient_cut(0.5)..] {
            prop_assert!(small.contains(x, &Default::default()));
        }
        for v in small.polygon.vertices() {
            prop_assert!(small.contains(v, &Default::default()));
        }
        let probe = [probe.0, probe.1];
        if small.polygon.contains(probe, 0.0) {
            prop_assert!(big.polygon.contains(probe, 1e-12));
        }
    }

    #[test]
    fn nyquist_locus_is_conjugate_symmetric(z1 in 0.05f64..3.0, z2 in 0.01f64..3.0, gain in 0.2f64..4.0) {
        let lp = FrozenLoop::aif_unit([z1, z2], ETA, 1.0);
        let Ok(locus) = nyquist_locus(&lp, 0.0, gain, &NyquistOptions::default()) else { return Ok(()) };
        let n = locus.omega.len();
        for i in 0..n {
            let j = n - 1 - i;
            prop_assert!((locus.omega[i] + locus.omega[j]).abs() <= 1e-12 * locus.omega[i].abs().max(1.0));
            prop_assert!((locus.values[i] - locus.values[j].conj()).norm() <= 1e-12 * locus.values[i].norm().max(1.0));
        }
    }

    #[test]
    fn root_locus_starts_at_the_open_loop_poles(z1 in 0.05f64..3.0, z2 in 0.01f64..3.0) {
        let lp = FrozenLoop::aif_unit([z1, z2], ETA, 1.0);
        let rl = root_locus(&lp, &[1e-9, 1e-3, 1.0], 0.0).unwrap();
        for trace in &rl.traces {
            let start = trace[0];
            let nearest = rl.open_loop_poles.iter().map(|p| (p - start).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-3, "{start} far from {:?}", rl.open_loop_poles);
        }
    }

    #[test]
    fn spectrum_solves_the_characteristic_polynomial(xi in state(4), which in 0usize..5) {
        let model = &models()[which];
        let s = spectrum(model.as_ref(), &xi, 0.3).unwrap();
        let a = model.jacobian(&xi).map(|v| Complex::new(v, 0.0));
        let scale = a.norm() + 1.0;
        for e in &s.eigenvalues {
            let shifted = &a - DMatrix::identity(4, 4) * *e;
            let det = shifted.determinant().norm();
            prop_assert!(det <= 1e-9 * (scale + e.norm()).powi(4), "det {det:e} at {e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn subregions_stay_certified(weights in prop::collection::vec(0.05f64..1.0, 8), alpha in 0.1f64..10.0) {
        let (model, region, cert) = r0_certificate();
        let outer = region.polygon.vertices();
        let centroid = outer.iter().fold([0.0, 0.0], |c, v| [c[0] + v[0], c[1] + v[1]]);
        let centroid = [centroid[0] / outer.len() as f64, centroid[1] / outer.len() as f64];
        let pts: Vec<[f64; 2]> = outer
            .iter()
            .zip(weights.iter().cycle())
            .map(|(v, w)| [centroid[0] + w * (v[0] - centroid[0]), centroid[1] + w * (v[1] - centroid[1])])
            .collect();
        let Some(poly) = Polygon::hull(&pts) else { return Ok(()) };
        let sub = Region { polygon: poly, ..region.clone() };

        let report = verify_certificate(model, &sub, &cert.matrix, 0.0, 0, 10, None).unwrap();
        prop_assert!(report.passed, "{:?}", report.reasons);

        let solved = solve_dominance_lmi(model, &sub, 0.0, &DominanceOptions::default()).unwrap();
        let check = verify_certificate(model, &sub, &solved.matrix, 0.0, solved.p, 10, None).unwrap();
        prop_assert!(check.passed, "{:?}", check.reasons);

        let scaled = verify_certificate(model, &sub, &(&cert.matrix * alpha), 0.0, 0, 10, None).unwrap();
        prop_assert!(scaled.passed);
        let (e0, e1) = (report.epsilon.unwrap(), scaled.epsilon.unwrap());
        prop_assert!((e1 - alpha * e0).abs() <= 1e-9 * alpha * e0, "{e1} vs {alpha} * {e0}");
    }
}
