use edgehinf_core::design::{
    lambda_max_x1, pareto_sweep, solve, trivial_optimum, ClarabelBackend, LogGrid, ParetoGrid, PenaltyMode,
};
use edgehinf_core::{analysis, decompose, fixtures, CoreError, DesignProblem, TreeSelector};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn degenerate_boxes_force_the_point() {
    let net = fixtures::net10();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let w: Vec<f64> = (0..15).map(|l| 10.0 + 3.0 * l as f64).collect();
    let eps: Vec<f64> = (0..10).map(|i| 0.2 + 0.3 * i as f64).collect();
    let p = DesignProblem {
        alpha: 1e-2,
        beta: 1e-2,
        gamma: None,
        w_bounds: w.iter().map(|&x| [x, x]).collect(),
        eps_bounds: eps.iter().map(|&x| [x, x]).collect(),
        mode: PenaltyMode::Regularizer,
        mu: None,
        nu: None,
    };
    let s = solve(&net, &dec, &p, &ClarabelBackend::default()).unwrap();
    for (a, b) in s.w_star.iter().zip(&w).chain(s.eps_star.iter().zip(&eps)) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
    let lam = lambda_max_x1(&net.with_parameters(&eps, &w).unwrap(), &dec).unwrap();
    assert!(rel(s.zeta_star, lam) < 1e-6, "zeta {} vs {lam}", s.zeta_star);
}

#[test]
fn binding_mu_pins_time_scales() {
    let net = fixtures::triangle();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let mut p = DesignProblem::homogeneous(3, 3, [4.0, 12.0], [0.1, 0.8]);
    p.alpha = 0.0;
    p.beta = 0.0;
    p.mode = PenaltyMode::Constraint;
    p.mu = Some(3.0 / 0.8);
    p.nu = Some(3.0 / 12f64.sqrt());
    let s = solve(&net, &dec, &p, &ClarabelBackend::default()).unwrap();
    for e in &s.eps_star {
        assert!(rel(*e, 0.8) < 1e-5, "{e}");
    }
    p.mu = Some(3.0 / 0.8 * 0.99);
    assert!(matches!(solve(&net, &dec, &p, &ClarabelBackend::default()), Err(CoreError::Infeasible(_))));
}

#[test]
fn uncapped_problem_is_bounded_by_boxes() {
    let net = fixtures::net10();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let mut p = fixtures::net10_design();
    p.gamma = None;
    let s = solve(&net, &dec, &p, &ClarabelBackend::default()).unwrap();
    assert!(s.box_violation(&p) < 1e-7);
    assert!(s.zeta_star.is_finite() && s.objective_value.is_finite());
}

#[test]
fn corner_relation_between_norms() {
    let net = fixtures::triangle();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let p = DesignProblem::homogeneous(3, 3, [4.0, 12.0], [0.1, 0.8]);
    let s = trivial_optimum(&net, &dec, &p).unwrap();
    assert_eq!(s.w_star, vec![12.0; 3]);
    assert_eq!(s.eps_star, vec![0.1; 3]);
    assert!(rel(s.achieved_norm, s.achieved_pi / 12f64.sqrt()) < 1e-12);
    let tuned = net.with_parameters(&s.eps_star, &s.w_star).unwrap();
    assert!(rel(s.achieved_pi, analysis::hinf_pi(&tuned, &dec).unwrap().norm) < 1e-12);

    let mut uneven = p.clone();
    uneven.w_bounds[1] = [4.0, 13.0];
    assert!(matches!(trivial_optimum(&net, &dec, &uneven), Err(CoreError::InvalidDesign(_))));
}

#[test]
fn single_point_sweep_is_one_solve() {
    let net = fixtures::net10();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let template = fixtures::net10_design();
    let grid = ParetoGrid {
        alpha: LogGrid::single(template.alpha).unwrap(),
        beta: LogGrid::single(template.beta).unwrap(),
        gamma: LogGrid::single(template.gamma.unwrap()).unwrap(),
    };
    let backend = ClarabelBackend::default();
    let recs = pareto_sweep(&net, &dec, &template, &grid, &backend);
    let s = solve(&net, &dec, &template, &backend).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].is_ok());
    assert_eq!(recs[0].zeta, s.zeta_star);
    assert_eq!(recs[0].hinf, s.achieved_norm);
}

#[test]
fn failures_stay_in_row() {
    let net = fixtures::net10();
    let dec = decompose(&net, &TreeSelector::Default).unwrap();
    let template = fixtures::net10_design();
    // gamma = 1 forces equal weights, but not every box allows it
    let mut narrow = template.clone();
    narrow.w_bounds[0] = [10.0, 11.0];
    narrow.w_bounds[1] = [120.0, 130.0];
    let grid = ParetoGrid {
        alpha: LogGrid::single(1e-2).unwrap(),
        beta: LogGrid::single(1e-2).unwrap(),
        gamma: LogGrid::new(1.0, 100.0, 2).unwrap(),
    };
    let recs = pareto_sweep(&net, &dec, &narrow, &grid, &ClarabelBackend::default());
    assert_eq!(recs.len(), 2);
    assert!(!recs[0].is_ok() && recs[0].zeta.is_nan());
    assert!(recs[1].is_ok(), "{}", recs[1].status);
}
