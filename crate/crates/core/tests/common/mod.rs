#![allow(dead_code)]

use thermoflat::{AprioriAlphabet, ConvexSpec, CylinderPotential, ModelSpec};

pub fn spin() -> CylinderPotential {
    CylinderPotential::new(2, 1, vec![1.0, -1.0]).unwrap().with_name("spin")
}

pub fn bond() -> CylinderPotential {
    CylinderPotential::new(2, 2, vec![1.0, -1.0, -1.0, 1.0]).unwrap().with_name("bond")
}

fn binary() -> AprioriAlphabet {
    AprioriAlphabet::uniform(2).unwrap()
}

/// `sup h(μ) + β μ(σ)²/2`.
pub fn curie_weiss(beta: f64) -> ModelSpec {
    ModelSpec::new(
        format!("cw-{beta}"),
        binary(),
        vec![spin()],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![],
        None,
    )
    .unwrap()
}

/// Curie–Weiss with an external field `b`: `g₊(z) = βz²/2 + bz`.
pub fn curie_weiss_field(beta: f64, b: f64) -> ModelSpec {
    let g = ConvexSpec::linear_shift(vec![b], ConvexSpec::quadratic(beta, 1).unwrap()).unwrap();
    ModelSpec::new("cw-field", binary(), vec![spin()], Some(g), vec![], None).unwrap()
}

/// Attraction `βz²/2` against repulsion `αz²/2` on the same spin.
pub fn repulsion(beta: f64, alpha: f64) -> ModelSpec {
    ModelSpec::new(
        "repulsion",
        binary(),
        vec![spin()],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![spin()],
        Some(ConvexSpec::quadratic(alpha, 1).unwrap()),
    )
    .unwrap()
}

/// Three-state spins `{+1, 0, −1}`: magnetic attraction and a quadratic
/// penalty on the density of non-zero spins.
pub fn blume_capel(beta: f64, gamma: f64) -> ModelSpec {
    let s = CylinderPotential::new(3, 1, vec![1.0, 0.0, -1.0]).unwrap().with_name("spin");
    let d = CylinderPotential::new(3, 1, vec![1.0, 0.0, 1.0]).unwrap().with_name("density");
    ModelSpec::new(
        "blume-capel",
        AprioriAlphabet::uniform(3).unwrap(),
        vec![s],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![d],
        Some(ConvexSpec::quadratic(gamma, 1).unwrap()),
    )
    .unwrap()
}

/// Mean-field magnetization plus a nearest-neighbor coupling `J`:
/// `g₊(z, w) = β(z² + w²)/2 + Jw` on (spin, bond).
pub fn ising_chain(beta: f64, j: f64) -> ModelSpec {
    let g = ConvexSpec::linear_shift(vec![0.0, j], ConvexSpec::quadratic(beta, 2).unwrap()).unwrap();
    ModelSpec::new("ising-chain", binary(), vec![spin(), bond()], Some(g), vec![], None).unwrap()
}

/// Supercritical Curie–Weiss with a minimizing player that sees only the
/// zero potential.
pub fn decoupled(beta: f64) -> ModelSpec {
    ModelSpec::new(
        "decoupled",
        binary(),
        vec![spin()],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![CylinderPotential::zero(2).with_name("zero")],
        Some(ConvexSpec::quadratic(1.0, 1).unwrap()),
    )
    .unwrap()
}

/// Positive root of `y = β tanh y` by bisection (zero when `β ≤ 1`).
pub fn cw_root(beta: f64) -> f64 {
    if beta <= 1.0 {
        return 0.0;
    }
    let (mut a, mut b) = (1e-9f64, beta + 1.0);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c - beta * c.tanh() < 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

pub fn regression_suite() -> Vec<ModelSpec> {
    vec![
        curie_weiss(0.5),
        curie_weiss(0.9),
        curie_weiss(1.5),
        curie_weiss(2.0),
        curie_weiss_field(1.5, 0.1),
        repulsion(2.0, 0.5),
        blume_capel(3.0, 1.0),
        ising_chain(0.8, 0.5),
    ]
}
