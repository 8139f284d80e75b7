mod common;

use common::*;
use thermoflat::linearizer::{nonlinear_pressure_of, solve_flat};
use thermoflat::measures::MixtureMeasure;
use thermoflat::transport::*;
use thermoflat::{ConvexSpec, Error, MarkovMeasure, SolverConfig};

fn product(p: f64) -> MarkovMeasure {
    MarkovMeasure::product(vec![p, 1.0 - p]).unwrap()
}

#[test]
fn kantorovich_identity_on_repulsion() {
    let model = repulsion(2.0, 0.5);
    let config = SolverConfig::default();
    let s = solve_flat(&model, &config).unwrap();
    assert_eq!(s.equilibria.len(), 2);
    let (yp, ym) = order_parameter_distribution(&model, &s.equilibria, &[0.5, 0.5]).unwrap();
    assert_eq!((yp.len(), ym.len()), (2, 2));
    let plan = kantorovich_primal(&model, &yp, &ym).unwrap();
    assert!((plan.value - s.p_flat).abs() < 1e-8, "{} vs {}", plan.value, s.p_flat);
    let simplex = transport_simplex(&plan.cost, &yp.weights, &ym.weights).unwrap();
    assert!((simplex.value - plan.value).abs() < 1e-12);
    let (pp, pm) = canonical_pair(&model, &config, &yp, &ym).unwrap();
    let dual = kantorovich_dual_check(&model, &yp, &ym, &pp, &pm).unwrap();
    assert!(dual.feasible && dual.weak_duality_holds);
    assert!((dual.dual_value - plan.value).abs() < 1e-8);
}

#[test]
fn one_point_supports_echo_the_payoff() {
    let model = repulsion(2.0, 0.5);
    let yp = DiscreteDualMeasure::dirac(vec![0.7]);
    let ym = DiscreteDualMeasure::dirac(vec![0.2]);
    let plan = kantorovich_primal(&model, &yp, &ym).unwrap();
    let direct = thermoflat::linearizer::p_nl(&model, &[0.7], &[0.2]).unwrap().to_f64();
    assert_eq!(plan.value, direct);
}

#[test]
fn jensen_and_affine_decomposition() {
    let model = curie_weiss(2.0);
    let g = model.g_plus.clone().unwrap();
    let s = solve_flat(&model, &SolverConfig::default()).unwrap();
    let parts: Vec<(f64, MarkovMeasure)> =
        s.equilibria.iter().zip([0.3, 0.7]).map(|(e, w)| (w, e.measure.clone())).collect();
    let mix = MixtureMeasure::ergodic(parts.clone()).unwrap();
    // Jensen: Δ^g(μ) ≥ g(τ(μ)) for the mixture barycenter.
    let delta = delta_functional(&g, &model.plus, &mix).unwrap();
    let bary = thermoflat::measures::mixture_expectation(&mix, &spin()).unwrap();
    assert!(delta >= g.value(&[bary]).unwrap().to_f64() - 1e-15);
    // 𝔉♭ is affine and equals P♭ on every mixture of equilibria.
    let hand: f64 = parts.iter().map(|(w, m)| w * nonlinear_pressure_of(&model, m).unwrap().to_f64()).sum();
    let flat = affine_pressure_flat(&model, &mix).unwrap();
    assert!((flat - hand).abs() < 1e-12);
    assert!((flat - s.p_flat).abs() < 1e-8);
    // Without g₋ both affine pressures coincide.
    assert!((affine_pressure_sharp(&model, &mix).unwrap() - flat).abs() < 1e-15);
}

#[test]
fn delta_on_ergodic_measure_is_direct() {
    let g = ConvexSpec::quadratic(2.0, 1).unwrap();
    let mu = product(0.8);
    let single = MixtureMeasure::single(mu).unwrap();
    let z: f64 = 0.6;
    assert!((delta_functional(&g, &[spin()], &single).unwrap() - z * z).abs() < 1e-15);
}

#[test]
fn birkhoff_delta_is_monotone_for_iid() {
    let g = ConvexSpec::quadratic(2.0, 1).unwrap();
    let mix = MixtureMeasure::single(product(0.5)).unwrap();
    let values: Vec<f64> = (1..=12).map(|n| delta_via_birkhoff(&g, &[spin()], &mix, n).unwrap()).collect();
    assert!((values[1] - 0.5).abs() < 1e-15 && (values[3] - 0.25).abs() < 1e-15);
    for (n, w) in values.windows(2).enumerate() {
        assert!(w[1] <= w[0] + 1e-15, "n = {}", n + 1);
        // Exactly 1/n for the uniform spin.
        assert!((w[0] - 1.0 / (n + 1) as f64).abs() < 1e-14);
    }
    let limit = delta_functional(&g, &[spin()], &mix).unwrap();
    assert!(values.iter().all(|&v| v >= limit));
}

#[test]
fn birkhoff_delta_halves_along_doublings_for_markov() {
    // For stationary sequences the average over 2n is the mean of two
    // averages over n, so convexity gives a doubling inequality.
    let q = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
    let mu = MarkovMeasure::from_transitions(2, 1, q).unwrap();
    let mix = MixtureMeasure::single(mu).unwrap();
    let g = ConvexSpec::quadratic(2.0, 1).unwrap();
    let mut prev = f64::INFINITY;
    for n in [1, 2, 4, 8, 16] {
        let v = delta_via_birkhoff(&g, &[spin()], &mix, n).unwrap();
        assert!(v <= prev + 1e-15);
        prev = v;
    }
    assert!(prev >= delta_functional(&g, &[spin()], &mix).unwrap());
}

#[test]
fn sampling_concentrates_and_ignores_thread_count() {
    let model = curie_weiss(2.0);
    let s = solve_flat(&model, &SolverConfig::default()).unwrap();
    let eq = s.equilibria.iter().find(|e| e.x_plus.0[0] > 0.0).unwrap();
    let root = cw_root(2.0);
    let run = |threads: usize, n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| birkhoff_sampling(&model, &eq.measure, n, 1000, 7).unwrap())
    };
    let one = run(1, 200);
    let four = run(4, 200);
    assert_eq!(one, four);
    let (mean, var) = BirkhoffSamples::moments(&one.plus, 0);
    assert!((mean - root).abs() < 4.0 * (var / 1000.0).sqrt());
    let mut prev = f64::INFINITY;
    for n in [50, 100, 200, 400] {
        let (_, v) = BirkhoffSamples::moments(&run(2, n).plus, 0);
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn kinks_and_non_ergodic_inputs_are_rejected() {
    let model = curie_weiss(2.0);
    let s = solve_flat(&model, &SolverConfig::default()).unwrap();
    assert!(order_parameter_distribution(&model, &s.equilibria, &[1.0]).is_err());
    let periodic = MarkovMeasure::with_stationary(2, 1, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap();
    let reducible = MarkovMeasure::with_stationary(2, 1, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
    assert!(birkhoff_sampling(&model, &periodic, 10, 10, 0).is_ok());
    assert!(matches!(birkhoff_sampling(&model, &reducible, 10, 10, 0), Err(Error::NonErgodic)));
}
