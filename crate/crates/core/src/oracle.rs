//! Brute-force reference values for the nonlinear pressure.
//!
//! Nothing here calls into the linearizer: the direct route scans measures,
//! the entropy-function route goes through linear pressures only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexSpec;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::linearizer::ModelSpec;
use crate::measures::{AprioriAlphabet, CylinderPotential, MarkovMeasure};
use nalgebra::{DMatrix, DVector};

use crate::optim::{coordinate_descent, minimize_convex_box};
use crate::ruelle::linear_pressure;

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 11;

const REFINE_ROUNDS: usize = 3;
const REFINE_WINDOW: usize = 3;
const REFINE_FACTOR: usize = 10;

/// Result of [`direct_pressure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectPressure {
    pub value: f64,
    pub argmax: MarkovMeasure,
    /// Free coordinates of the maximizer.
    pub params: Vec<f64>,
    pub tau_plus: Vec<f64>,
    pub tau_minus: Vec<f64>,
    pub evaluations: usize,
}

/// Candidate measure in the scanned family, with its cylinder masses on
/// words of length two (memory 2) or one (memory 1).
struct Candidate {
    entropy: f64,
    /// `word_mass[w]` for words of length `memory`.
    word_mass: Vec<f64>,
}

fn xlogx_rel(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).ln()
    } else {
        0.0
    }
}

/// Maps free coordinates to a measure; `None` off the simplex.
fn product_candidate(x: &[f64], m: &[f64]) -> Option<Candidate> {
    let last = 1.0 - x.iter().sum::<f64>();
    if last < -1e-12 || x.iter().any(|&v| v < 0.0) {
        return None;
    }
    let mut p = x.to_vec();
    p.push(last.max(0.0));
    let entropy = -p.iter().zip(m).map(|(&a, &b)| xlogx_rel(a, b)).sum::<f64>();
    Some(Candidate { entropy, word_mass: p })
}

/// Two-symbol stationary order-1 chain by its pair masses
/// `μ[00] = x₀`, `μ[01] = μ[10] = x₁`, `μ[11] = 1 − x₀ − 2x₁`.
fn markov_candidate(x: &[f64], m: &[f64]) -> Option<Candidate> {
    let (p, q) = (x[0], x[1]);
    let r = 1.0 - p - 2.0 * q;
    if p < 0.0 || q < 0.0 || r < -1e-12 {
        return None;
    }
    let word_mass = vec![p, q, q, r.max(0.0)];
    let pi = [p + q, q + r.max(0.0)];
    let mut entropy = 0.0;
    for u in 0..2 {
        for b in 0..2 {
            if pi[u] > 0.0 {
                entropy -= xlogx_rel(word_mass[u * 2 + b], pi[u] * m[b]);
            }
        }
    }
    Some(Candidate { entropy, word_mass })
}

/// The chain with pair masses `w`; rows of unvisited states are set to `m`.
fn chain_from_masses(w: &[f64], m: &[f64]) -> Result<MarkovMeasure> {
    let pi = vec![w[0] + w[1], w[2] + w[3]];
    let q: Vec<Vec<f64>> =
        (0..2).map(|u| if pi[u] > 0.0 { vec![w[2 * u] / pi[u], w[2 * u + 1] / pi[u]] } else { m.to_vec() }).collect();
    MarkovMeasure::with_stationary(2, 1, q, pi)
}

fn side_value(g: &Option<ConvexSpec>, tau: &[f64]) -> Result<ExtReal> {
    match g {
        Some(g) => g.value(tau),
        None => Ok(ExtReal::Finite(0.0)),
    }
}

/// `h + g₊(τ₊) − g₋(τ₋)`; `−∞` where `g₋ = +∞`.
fn objective(model: &ModelSpec, plus: &[CylinderPotential], minus: &[CylinderPotential], c: &Candidate) -> f64 {
    let tau = |pots: &[CylinderPotential]| -> Vec<f64> {
        pots.iter().map(|p| p.table().iter().zip(&c.word_mass).map(|(f, w)| f * w).sum()).collect()
    };
    let (Ok(gp), Ok(gm)) = (side_value(&model.g_plus, &tau(plus)), side_value(&model.g_minus, &tau(minus))) else {
        return f64::NEG_INFINITY;
    };
    match (gp, gm) {
        (_, ExtReal::PosInf) => f64::NEG_INFINITY,
        (ExtReal::PosInf, _) => f64::INFINITY,
        (ExtReal::Finite(a), ExtReal::Finite(b)) => c.entropy + a - b,
        _ => f64::NEG_INFINITY,
    }
}

/// Maximizes `obj` over a grid on `[0,1]^d` plus `extra` points, then
/// refines `rounds` times on a window of `window` cells around the incumbent
/// with `factor`-fold density. Ties go to the lowest index.
pub(crate) fn grid_maximize<F: Fn(&[f64]) -> f64 + Sync>(
    obj: F,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    extra: Vec<Vec<f64>>,
    (rounds, window, factor): (usize, usize, usize),
) -> (Vec<f64>, f64, usize) {
    let mut points = crate::optim::tensor_grid(lo, hi, resolution);
    points.extend(extra);
    let mut evaluations = points.len();
    let (mut best, mut best_val) = best_of(&obj, &points);
    let mut spacing: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / (resolution - 1) as f64).collect();
    for _ in 0..rounds {
        let axes: Vec<Vec<f64>> = (0..lo.len())
            .map(|d| {
                let fine = spacing[d] / factor as f64;
                let n = 2 * window * factor + 1;
                (0..n)
                    .map(|i| best[d] + (i as f64 - (window * factor) as f64) * fine)
                    .filter(|&v| v >= lo[d] - 1e-15 && v <= hi[d] + 1e-15)
                    .map(|v| v.clamp(lo[d], hi[d]))
                    .collect()
            })
            .collect();
        let pts = crate::optim::tensor_product(&axes);
        evaluations += pts.len();
        let (b, v) = best_of(&obj, &pts);
        if v > best_val {
            best = b;
            best_val = v;
        }
        spacing.iter_mut().for_each(|s| *s /= factor as f64);
    }
    (best, best_val, evaluations)
}

fn best_of<F: Fn(&[f64]) -> f64 + Sync>(obj: &F, points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let vals: Vec<f64> = points.par_iter().map(|p| obj(p)).collect();
    let mut idx = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[idx] || (vals[idx].is_nan() && !v.is_nan()) {
            idx = i;
        }
    }
    (points[idx].clone(), vals[idx])
}

/// Maximizes `h(μ) + g₊(τ₊(μ)) − g₋(τ₋(μ))` by scanning product measures
/// (memory 1) or stationary two-symbol order-1 Markov chains (memory 2).
pub fn direct_pressure(model: &ModelSpec, resolution: usize) -> Result<DirectPressure> {
    model.validate()?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::ResolutionTooCoarse(resolution));
    }
    let k = model.k();
    let memory = model.memory();
    let m = model.alphabet.weights().to_vec();
    let pad =
        |pots: &[CylinderPotential]| -> Result<Vec<CylinderPotential>> { pots.iter().map(|p| p.pad(memory)).collect() };
    let (plus, minus) = (pad(&model.plus)?, pad(&model.minus)?);

    let (dim, extra): (usize, Vec<Vec<f64>>) = match memory {
        1 => {
            if k > 4 {
                return Err(Error::InvalidModel(format!("direct oracle supports k ≤ 4, got {k}")));
            }
            let bary = vec![1.0 / k as f64; k - 1];
            let apriori = m[..k - 1].to_vec();
            (k - 1, vec![bary, apriori])
        }
        2 => {
            if k != 2 {
                return Err(Error::InvalidModel(format!("memory-2 direct oracle supports k = 2, got {k}")));
            }
            (2, vec![vec![m[0] * m[0], m[0] * m[1]], vec![0.25, 0.25]])
        }
        _ => return Err(Error::InvalidModel(format!("direct oracle supports memory ≤ 2, got {memory}"))),
    };
    let candidate = |x: &[f64]| if memory == 1 { product_candidate(x, &m) } else { markov_candidate(x, &m) };
    let obj = |x: &[f64]| candidate(x).map_or(f64::NEG_INFINITY, |c| objective(model, &plus, &minus, &c));
    let (lo, hi) = (vec![0.0; dim], vec![1.0; dim]);
    let (x, value, evaluations) =
        grid_maximize(obj, &lo, &hi, resolution, extra, (REFINE_ROUNDS, REFINE_WINDOW, REFINE_FACTOR));
    if !value.is_finite() {
        return Err(Error::NoConvergence(format!("direct oracle value {value}")));
    }

    let c = candidate(&x).expect("incumbent is feasible");
    let argmax =
        if memory == 1 { MarkovMeasure::product(c.word_mass.clone())? } else { chain_from_masses(&c.word_mass, &m)? };
    let tau = |pots: &[CylinderPotential]| -> Vec<f64> {
        pots.iter().map(|p| p.table().iter().zip(&c.word_mass).map(|(f, w)| f * w).sum()).collect()
    };
    Ok(DirectPressure { value, argmax, params: x, tau_plus: tau(&plus), tau_minus: tau(&minus), evaluations })
}

/// Result of [`bkl_entropy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BklEntropy {
    pub value: f64,
    pub y: Vec<f64>,
    /// The minimizer escaped into the outer half of the search box: `z`
    /// is at (or numerically at) the edge of the reachable set.
    pub at_boundary: bool,
}

/// Constrained entropy `h(z) = inf_y {P_L(Σ yᵢφᵢ) − y·z}` over `[−R, R]^N`.
///
/// A drop of more than `1e−3` from the box minimizer `y` to `2y` means the
/// infimum diverges, i.e. `z` is not reachable.
pub fn bkl_entropy(
    pots: &[CylinderPotential],
    alphabet: &AprioriAlphabet,
    z: &[f64],
    radius: f64,
) -> Result<BklEntropy> {
    if pots.len() != z.len() || pots.is_empty() {
        return Err(Error::DimensionMismatch { expected: pots.len(), got: z.len() });
    }
    let k = alphabet.k();
    let f = |y: &[f64]| -> f64 {
        let refs: Vec<&CylinderPotential> = pots.iter().collect();
        let dot: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
        CylinderPotential::linear_combination(k, y, &refs)
            .and_then(|phi| linear_pressure(&phi, alphabet))
            .map_or(f64::INFINITY, |p| p - dot)
    };
    let lo = vec![-radius; z.len()];
    let hi = vec![radius; z.len()];
    let (y, value) = if z.len() == 1 { minimize_convex_box(f, &lo, &hi, 1e-10) } else { newton_box(&f, &lo, &hi) };
    // Convexity: if the infimum diverges, it keeps dropping along the ray
    // through the box minimizer.
    let far: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    if f(&far) < value - 1e-3 {
        return Err(Error::InfeasibleZ(z.to_vec()));
    }
    let at_boundary = y.iter().any(|v| v.abs() > 0.5 * radius);
    Ok(BklEntropy { value, y, at_boundary })
}

/// Damped Newton with finite-difference derivatives for a smooth convex
/// `f` on a box, finished by coordinate descent if it ends on a face.
fn newton_box<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let n = lo.len();
    let mut x = vec![0.0; n];
    let mut fx = f(&x);
    let shifted = |x: &[f64], moves: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in moves {
            y[i] += d;
        }
        f(&y)
    };
    for _ in 0..200 {
        let (hg, hh) = (1e-5, 1e-4);
        let g = DVector::from_fn(n, |i, _| (shifted(&x, &[(i, hg)]) - shifted(&x, &[(i, -hg)])) / (2.0 * hg));
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            hess[(i, i)] = (shifted(&x, &[(i, hh)]) - 2.0 * fx + shifted(&x, &[(i, -hh)])) / (hh * hh);
            for j in 0..i {
                let v = (shifted(&x, &[(i, hh), (j, hh)])
                    - shifted(&x, &[(i, hh), (j, -hh)])
                    - shifted(&x, &[(i, -hh), (j, hh)])
                    + shifted(&x, &[(i, -hh), (j, -hh)]))
                    / (4.0 * hh * hh);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let mut damping = 1e-12 * (1.0 + hess.trace().abs());
        let step = loop {
            let reg = &hess + DMatrix::identity(n, n) * damping;
            if let Some(ch) = reg.cholesky() {
                break -ch.solve(&g);
            }
            damping *= 10.0;
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let trial: Vec<f64> = (0..n).map(|i| (x[i] + t * step[i]).clamp(lo[i], hi[i])).collect();
            let ft = f(&trial);
            if ft < fx {
                let size = trial.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x = trial;
                fx = ft;
                moved = size > 1e-12;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let on_face = (0..n).any(|i| x[i] <= lo[i] + 1e-9 || x[i] >= hi[i] - 1e-9);
    if on_face {
        let (y, v) = coordinate_descent(f, lo, hi, x.clone(), 1e-10, 2000);
        if v < fx {
            return (y, v);
        }
    }
    (x, fx)
}

/// Result of [`bkl_pressure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BklPressure {
    pub value: f64,
    /// Maximizing expectations of the distinct potentials.
    pub z: Vec<f64>,
    pub potentials: usize,
    pub evaluations: usize,
}

/// Default box radius of the entropy minimizations.
pub const BKL_RADIUS: f64 = 40.0;

/// Maximizes `g₊(z₊) − g₋(z₋) + h(z)` over a grid of expectations of the
/// distinct potentials (at most two), with `h` from [`bkl_entropy`].
pub fn bkl_pressure(model: &ModelSpec, z_grid: usize) -> Result<BklPressure> {
    model.validate()?;
    if z_grid < MIN_RESOLUTION {
        return Err(Error::ResolutionTooCoarse(z_grid));
    }
    let mut distinct: Vec<CylinderPotential> = Vec::new();
    let mut index = |p: &CylinderPotential| -> usize {
        match distinct.iter().position(|q| q.memory() == p.memory() && q.table() == p.table()) {
            Some(i) => i,
            None => {
                distinct.push(p.clone());
                distinct.len() - 1
            }
        }
    };
    let ip: Vec<usize> = model.plus.iter().map(&mut index).collect();
    let im: Vec<usize> = model.minus.iter().map(&mut index).collect();
    let d = distinct.len();
    if d > 2 {
        return Err(Error::InvalidModel(format!("entropy-function oracle supports two potentials, got {d}")));
    }
    let lo: Vec<f64> = distinct.iter().map(|p| p.table().iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = distinct.iter().map(|p| p.table().iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let obj = |z: &[f64]| -> f64 {
        let h = match bkl_entropy(&distinct, &model.alphabet, z, BKL_RADIUS) {
            Ok(h) => h.value,
            Err(_) => return f64::NEG_INFINITY,
        };
        let zp: Vec<f64> = ip.iter().map(|&i| z[i]).collect();
        let zm: Vec<f64> = im.iter().map(|&i| z[i]).collect();
        match (side_value(&model.g_plus, &zp), side_value(&model.g_minus, &zm)) {
            (Ok(ExtReal::Finite(a)), Ok(ExtReal::Finite(b))) => h + a - b,
            _ => f64::NEG_INFINITY,
        }
    };
    // Degenerate axes (constant potentials) collapse to a point.
    let hi_eff: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| if b > a { b } else { a }).collect();
    let refine = if d == 1 { (4, REFINE_WINDOW, REFINE_FACTOR) } else { (6, 2, 5) };
    let (z, value, evaluations) = grid_maximize(obj, &lo, &hi_eff, z_grid, Vec::new(), refine);
    if !value.is_finite() {
        return Err(Error::NoConvergence(format!("entropy-function oracle value {value}")));
    }
    Ok(BklPressure { value, z, potentials: d, evaluations })
}
