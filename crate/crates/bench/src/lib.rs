//! Shared fixtures for the solver benchmarks.

use thermoflat::{AprioriAlphabet, ConvexSpec, CylinderPotential, ModelSpec};

fn spin() -> CylinderPotential {
    CylinderPotential::new(2, 1, vec![1.0, -1.0]).unwrap()
}

/// A deterministic, non-symmetric potential on `k` symbols with the given memory.
pub fn scrambled_potential(k: usize, memory: usize) -> CylinderPotential {
    CylinderPotential::from_fn(k, memory, |w| {
        w.iter().enumerate().map(|(i, &a)| ((a * 7 + i * 3 + 1) as f64).sin()).sum()
    })
    .unwrap()
}

pub fn curie_weiss(beta: f64) -> ModelSpec {
    ModelSpec::new(
        "cw",
        AprioriAlphabet::uniform(2).unwrap(),
        vec![spin()],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![],
        None,
    )
    .unwrap()
}

pub fn repulsion(beta: f64, alpha: f64) -> ModelSpec {
    ModelSpec::new(
        "repulsion",
        AprioriAlphabet::uniform(2).unwrap(),
        vec![spin()],
        Some(ConvexSpec::quadratic(beta, 1).unwrap()),
        vec![spin()],
        Some(ConvexSpec::quadratic(alpha, 1).unwrap()),
    )
    .unwrap()
}

/// Mean-field magnetization plus a nearest-neighbor coupling.
pub fn ising_chain(beta: f64, j: f64) -> ModelSpec {
    let bond = CylinderPotential::new(2, 2, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
    let g = ConvexSpec::linear_shift(vec![0.0, j], ConvexSpec::quadratic(beta, 2).unwrap()).unwrap();
    ModelSpec::new("ising-chain", AprioriAlphabet::uniform(2).unwrap(), vec![spin(), bond], Some(g), vec![], None)
        .unwrap()
}
