use proptest::prelude::*;
use rayon::ThreadPoolBuilder;
use taxis_core::diagnostics::{boundedness_monitor, check_mass_conservation, MASS_TOL};
use taxis_core::grid::{integrate, GridSpec, ScalarField};
use taxis_core::model::{InitialData, ModelConfig, ResupplySpec};
use taxis_core::presets::{standard_beta2, standard_beta3};
use taxis_core::stepper::{run, SnapshotSchedule, Trajectory};

fn bits(traj: &Trajectory) -> Vec<u64> {
    let s = &traj.final_state;
    s.u.values().iter().chain(s.v.values()).chain(s.w.values()).map(|x| x.to_bits()).collect()
}

#[test]
fn thread_count_does_not_change_results() {
    let sc = standard_beta2(40, 0.2, 0.05).unwrap();
    let data = sc.initial_data();
    let go = |threads: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&sc.cfg, &sc.resupply, &data, SnapshotSchedule::FinalOnly).unwrap())
    };
    let (one, four) = (go(1), go(4));
    assert_eq!(bits(&one), bits(&four));
    let rows = |t: &Trajectory| t.diagnostics.iter().flat_map(|r| r.to_array()).map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(rows(&one), rows(&four));
}

#[test]
fn short_standard_run_pipeline() {
    let sc = standard_beta3(24, 2.0).unwrap();
    let traj = run(&sc.cfg, &sc.resupply, &sc.initial_data(), SnapshotSchedule::Interval(0.5)).unwrap();
    assert!(traj.completed());
    assert_eq!(traj.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert!(check_mass_conservation(&traj.diagnostics, MASS_TOL).unwrap().pass);
    let monitor = boundedness_monitor(&traj.diagnostics).unwrap();
    assert_eq!(monitor.entries.len(), 8);
    // perturbations relax: gradients of w shrink over the run
    let d = &traj.diagnostics;
    assert!(d.last().unwrap().grad_w_sq < d[0].grad_w_sq);
}

fn field(grid: GridSpec, vals: &[f64]) -> ScalarField {
    ScalarField::new(grid, vals.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_positive_data_stays_nonnegative_and_conserves_u(
        u in prop::collection::vec(0.01f64..3.0, 64),
        v in prop::collection::vec(0.0f64..2.0, 64),
        w in prop::collection::vec(0.01f64..3.0, 64),
        beta in 2.0f64..4.0,
        r0 in 0.0f64..1.0,
    ) {
        let g = GridSpec::unit_square(8).unwrap();
        // snap the low end onto the regularized logistic case
        let (beta, epsilon) = if beta < 2.05 { (2.0, 0.1) } else { (beta, 0.0) };
        let cfg = ModelConfig { t_final: 0.2, ..ModelConfig::new(beta, epsilon) };
        let data = InitialData { u0: field(g, &u), v0: field(g, &v), w0: field(g, &w) };
        let traj = run(&cfg, &ResupplySpec::constant(r0).unwrap(), &data, SnapshotSchedule::FinalOnly).unwrap();
        prop_assert!(traj.completed(), "{:?}", traj.abort);
        let s = &traj.final_state;
        prop_assert!(s.u.min() >= 0.0 && s.v.min() >= 0.0 && s.w.min() >= 0.0);
        let m0 = integrate(&data.u0);
        prop_assert!((integrate(&s.u) - m0).abs() <= 1e-10 * m0);
        // nutrient never exceeds its initial sup plus the resupply
        prop_assert!(s.w.max() <= data.w0.max() + r0 + 1e-8);
    }
}
