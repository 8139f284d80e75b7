mod common;

use common::*;
use thermoflat::linearizer::{decision_rule, mean_field_iterate, solve_flat, solve_game};
use thermoflat::oracle::{bkl_pressure, direct_pressure};
use thermoflat::{Error, SolverConfig};

fn config() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn curie_weiss_phases() {
    for beta in [0.5, 0.9] {
        let s = solve_flat(&curie_weiss(beta), &config()).unwrap();
        assert_eq!(s.m_flat.len(), 1, "beta {beta}");
        assert!(s.m_flat[0].0[0].abs() < 1e-6);
        assert!(s.p_flat.abs() < 1e-12);
    }
    for beta in [1.5, 2.0] {
        let s = solve_flat(&curie_weiss(beta), &config()).unwrap();
        let root = cw_root(beta);
        assert_eq!(s.m_flat.len(), 2, "beta {beta}");
        let (a, b) = (s.m_flat[0].0[0], s.m_flat[1].0[0]);
        assert!((a + root).abs() < 1e-6 && (b - root).abs() < 1e-6, "{a} {b} vs ±{root}");
        assert_eq!(s.equilibria.len(), 2);
        for eq in &s.equilibria {
            assert!(eq.residual_plus < 1e-6 && eq.residual_minus < 1e-6);
            assert!((eq.tau_plus[0].abs() - root.tanh()).abs() < 1e-6);
        }
    }
}

#[test]
fn external_field_selects_one_phase() {
    let (beta, b) = (1.5, 0.1);
    let s = solve_flat(&curie_weiss_field(beta, b), &config()).unwrap();
    // Positive root of y = β tanh y + b.
    let (mut lo, mut hi) = (b, beta + b + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - beta * mid.tanh() - b < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert_eq!(s.m_flat.len(), 1);
    assert!((s.m_flat[0].0[0] - lo).abs() < 1e-6);
}

#[test]
fn oracles_agree_with_the_game() {
    for model in regression_suite() {
        let s = solve_flat(&model, &config()).unwrap();
        let direct = direct_pressure(&model, 41).unwrap();
        assert!((direct.value - s.p_flat).abs() < 1e-5, "{}: {} vs {}", model.label, direct.value, s.p_flat);
        let bkl = bkl_pressure(&model, 21).unwrap();
        assert!((bkl.value - s.p_flat).abs() < 1e-4, "{}: {} vs {}", model.label, bkl.value, s.p_flat);
        // P♭ is attained by the admitted equilibria.
        for eq in &s.equilibria {
            assert!((eq.p_value - s.p_flat).abs() < 1e-6, "{}", model.label);
        }
    }
}

#[test]
fn weak_duality_and_decoupling() {
    for model in regression_suite() {
        let s = solve_game(&model, &config()).unwrap();
        assert!(s.gap.unwrap() >= -1e-8, "{}: gap {:?}", model.label, s.gap);
    }
    let s = solve_game(&decoupled(2.0), &config()).unwrap();
    assert!(s.gap.unwrap().abs() < 1e-8, "gap {:?}", s.gap);
}

#[test]
fn repulsion_has_a_duality_gap() {
    // The minimizing player cannot see the sign of the magnetization: the
    // symmetric mixture of both phases has τ₋ = 0, so P♯ is the pressure
    // with the repulsion switched off.
    let s = solve_game(&repulsion(2.0, 0.5), &config()).unwrap();
    let effective = direct_pressure(&curie_weiss(1.5), 81).unwrap().value;
    let free = direct_pressure(&curie_weiss(2.0), 81).unwrap().value;
    assert!((s.p_flat - effective).abs() < 1e-6);
    assert!((s.p_sharp.unwrap() - free).abs() < 1e-6);
}

#[test]
fn mean_field_converges_to_the_phase() {
    let model = curie_weiss(2.0);
    let report = mean_field_iterate(&model, &[0.5], 1.0, 500).unwrap();
    assert!(report.converged);
    assert!((report.fixed_point.unwrap()[0] - cw_root(2.0)).abs() < 1e-8);
    // Kinked g: no gradient map.
    let kinked = thermoflat::ModelSpec::new(
        "kink",
        thermoflat::AprioriAlphabet::uniform(2).unwrap(),
        vec![spin()],
        Some(thermoflat::ConvexSpec::abs_sum(1).unwrap()),
        vec![],
        None,
    )
    .unwrap();
    assert!(matches!(mean_field_iterate(&kinked, &[0.0], 0.5, 10), Err(Error::NotDifferentiable)));
}

#[test]
fn decision_rule_solves_the_inner_fixed_point() {
    let (beta, alpha) = (2.0, 0.5);
    let model = repulsion(beta, alpha);
    let s = solve_flat(&model, &config()).unwrap();
    let rule = decision_rule(&model, &config(), &s, 5).unwrap();
    for (yp, xm) in &rule.samples {
        // x₋ = α tanh(y₊ − x₋).
        let y = yp.0[0];
        let (mut lo, mut hi) = (-alpha, alpha);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - alpha * (y - mid).tanh() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((xm.0[0] - lo).abs() < 1e-6, "y+ {y}: {} vs {lo}", xm.0[0]);
    }
    assert!(rule.max_slope <= alpha + 1e-6);
}

#[test]
fn solving_is_deterministic() {
    let model = blume_capel(3.0, 1.0);
    let a = serde_json::to_string(&solve_game(&model, &config()).unwrap()).unwrap();
    let b = serde_json::to_string(&solve_game(&model, &config()).unwrap()).unwrap();
    assert_eq!(a, b);
}
