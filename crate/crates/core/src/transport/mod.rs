//! Δ-functionals, affine pressures, order-parameter distributions and the
//! Monge–Kantorovich form of the nonlinear pressure.
//!
//! Mixtures are always explicit: the weights of a [`MixtureMeasure`] with
//! ergodic components are taken as its ergodic decomposition.

mod kantorovich;

pub use kantorovich::{
    canonical_pair, kantorovich_dual_check, kantorovich_primal, payoff_costs, transport_by_enumeration,
    transport_simplex, Coupling, DualReport, TransportPlan,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{ConvexSpec, DualPoint};
use crate::error::{Error, Result};
use crate::linearizer::{tau, Equilibrium, ModelSpec};
use crate::measures::{
    decode_word, mixture_entropy, mixture_expectation, word_count, CylinderPotential, MarkovMeasure, MixtureMeasure,
};
use crate::tolerances;

/// A probability measure with finite support in a dual space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDualMeasure {
    pub support: Vec<DualPoint>,
    pub weights: Vec<f64>,
}

impl DiscreteDualMeasure {
    pub fn new(support: Vec<DualPoint>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::InvalidMeasure("support and weights must be non-empty and equally long".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidMeasure("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tolerances::PROBABILITY_SUM {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { support, weights })
    }

    /// Merges atoms closer than `radius` (sup norm) into the first one.
    pub fn from_atoms(atoms: Vec<(Vec<f64>, f64)>, radius: f64) -> Result<Self> {
        let mut support: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (x, w) in atoms {
            match support.iter().position(|s| s.iter().zip(&x).all(|(a, b)| (a - b).abs() <= radius)) {
                Some(i) => weights[i] += w,
                None => {
                    support.push(x);
                    weights.push(w);
                }
            }
        }
        Self::new(support.into_iter().map(DualPoint).collect(), weights)
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        Self { support: vec![DualPoint(point)], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        let dim = self.support[0].dim();
        (0..dim).map(|d| self.support.iter().zip(&self.weights).map(|(p, w)| w * p.0[d]).sum()).collect()
    }
}

fn require_ergodic(mix: &MixtureMeasure) -> Result<()> {
    if !mix.all_ergodic() {
        return Err(Error::NonErgodicComponent);
    }
    Ok(())
}

/// `Δ^{g∘τ}(μ) = Σ λᵢ g(τ(νᵢ))` over the ergodic components `νᵢ`.
pub fn delta_functional(g: &ConvexSpec, pots: &[CylinderPotential], mix: &MixtureMeasure) -> Result<f64> {
    require_ergodic(mix)?;
    let mut total = 0.0;
    for c in mix.components() {
        total += c.weight * g.value(&tau(pots, &c.measure)?)?.to_f64();
    }
    Ok(total)
}

/// `μ(g∘θ(𝔼ₙ))`: the expectation of `g` at the empirical averages of `n`
/// consecutive windows, by exact enumeration of words.
///
/// Each word has length `n + M − 1` (`M` the largest memory), so every
/// average has exactly `n` terms and needs no periodic closure.
pub fn delta_via_birkhoff(g: &ConvexSpec, pots: &[CylinderPotential], mix: &MixtureMeasure, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::WordTooShort { len: 0, memory: 1 });
    }
    if pots.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: pots.len() });
    }
    let k = mix.k();
    let memory = pots.iter().map(CylinderPotential::memory).max().unwrap_or(1);
    let len = n + memory - 1;
    let count = (k as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if count > tolerances::MAX_ENUMERATION {
        return Err(Error::EnumerationCap(count));
    }
    let probs = mix.word_probs(len);
    let total = (0..word_count(k, len).expect("below cap"))
        .into_par_iter()
        .map(|w| {
            let p = probs[w];
            if p == 0.0 {
                return Ok(0.0);
            }
            let word = decode_word(w, k, len);
            let avg = birkhoff_vector(pots, &word, n)?;
            Ok(p * g.value(&avg)?.to_f64())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(total)
}

/// Averages of each potential over the first `n` windows of `word`.
pub fn birkhoff_vector(pots: &[CylinderPotential], word: &[usize], n: usize) -> Result<Vec<f64>> {
    pots.iter()
        .map(|p| {
            if word.len() < n + p.memory() - 1 {
                return Err(Error::WordTooShort { len: word.len(), memory: n + p.memory() - 1 });
            }
            let mut s = 0.0;
            for j in 0..n {
                s += p.eval(&word[j..])?;
            }
            Ok(s / n as f64)
        })
        .collect()
}

fn side_delta(g: &Option<ConvexSpec>, pots: &[CylinderPotential], mix: &MixtureMeasure) -> Result<f64> {
    g.as_ref().map_or(Ok(0.0), |g| delta_functional(g, pots, mix))
}

/// `𝔉♭(μ) = Δ^{g₊∘τ₊}(μ) − Δ^{g₋∘τ₋}(μ) + h(μ)`.
pub fn affine_pressure_flat(model: &ModelSpec, mix: &MixtureMeasure) -> Result<f64> {
    require_ergodic(mix)?;
    Ok(side_delta(&model.g_plus, &model.plus, mix)? - side_delta(&model.g_minus, &model.minus, mix)?
        + mixture_entropy(mix, &model.alphabet)?)
}

/// `𝔉♯(μ) = Δ^{g₊∘τ₊}(μ) − g₋(τ₋(μ)) + h(μ)`.
pub fn affine_pressure_sharp(model: &ModelSpec, mix: &MixtureMeasure) -> Result<f64> {
    require_ergodic(mix)?;
    let minus = match &model.g_minus {
        Some(g) => {
            let t: Vec<f64> = model.minus.iter().map(|p| mixture_expectation(mix, p)).collect::<Result<_>>()?;
            g.value(&t)?.to_f64()
        }
        None => 0.0,
    };
    Ok(side_delta(&model.g_plus, &model.plus, mix)? - minus + mixture_entropy(mix, &model.alphabet)?)
}

const SUPPORT_RADIUS: f64 = 1e-9;

fn gradient_or_empty(g: &Option<ConvexSpec>, t: &[f64]) -> Result<Vec<f64>> {
    match g {
        Some(g) => g.gradient(t),
        None => Ok(Vec::new()),
    }
}

/// Pushforward of mixture weights over equilibria through `μ ↦ ∇g±(τ±(μ))`.
pub fn order_parameter_distribution(
    model: &ModelSpec,
    equilibria: &[Equilibrium],
    weights: &[f64],
) -> Result<(DiscreteDualMeasure, DiscreteDualMeasure)> {
    if equilibria.len() != weights.len() || equilibria.is_empty() {
        return Err(Error::DimensionMismatch { expected: equilibria.len(), got: weights.len() });
    }
    for g in [&model.g_plus, &model.g_minus].into_iter().flatten() {
        if !g.is_differentiable() {
            return Err(Error::NotDifferentiable);
        }
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (eq, &w) in equilibria.iter().zip(weights) {
        plus.push((gradient_or_empty(&model.g_plus, &eq.tau_plus)?, w));
        minus.push((gradient_or_empty(&model.g_minus, &eq.tau_minus)?, w));
    }
    Ok((
        DiscreteDualMeasure::from_atoms(plus, SUPPORT_RADIUS)?,
        DiscreteDualMeasure::from_atoms(minus, SUPPORT_RADIUS)?,
    ))
}

/// Per-path order parameters `∇g±(θ±(𝔼ₙσ))` from sampled paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSamples {
    pub n: usize,
    pub seed: u64,
    pub plus: Vec<Vec<f64>>,
    pub minus: Vec<Vec<f64>>,
}

/// Paths per independently seeded chunk.
const CHUNK: usize = 256;

fn empirical(values: &[Vec<f64>]) -> Result<DiscreteDualMeasure> {
    let w = 1.0 / values.len() as f64;
    let mut sorted: Vec<Vec<f64>> = values.to_vec();
    sorted.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut support: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for v in sorted {
        if support.last() == Some(&v) {
            *weights.last_mut().expect("non-empty") += w;
        } else {
            support.push(v);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|x| *x /= total);
    DiscreteDualMeasure::new(support.into_iter().map(DualPoint).collect(), weights)
}

impl BirkhoffSamples {
    /// Sample mean and (unbiased) variance of one coordinate.
    pub fn moments(values: &[Vec<f64>], coord: usize) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().map(|v| v[coord]).sum::<f64>() / n;
        let var = values.iter().map(|v| (v[coord] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, var)
    }

    pub fn empirical_plus(&self) -> Result<DiscreteDualMeasure> {
        empirical(&self.plus)
    }

    pub fn empirical_minus(&self) -> Result<DiscreteDualMeasure> {
        empirical(&self.minus)
    }
}

/// Samples `num_samples` paths of `μ` and evaluates the order parameters of
/// their length-`n` empirical averages.
///
/// Chunk `c` of [`CHUNK`] paths uses a ChaCha8 generator seeded with `seed`
/// on stream `c`, so the result does not depend on the worker count.
pub fn birkhoff_sampling(
    model: &ModelSpec,
    mu: &MarkovMeasure,
    n: usize,
    num_samples: usize,
    seed: u64,
) -> Result<BirkhoffSamples> {
    if mu.k() != model.k() {
        return Err(Error::AlphabetMismatch(model.k(), mu.k()));
    }
    if !mu.is_ergodic() {
        return Err(Error::NonErgodic);
    }
    for g in [&model.g_plus, &model.g_minus].into_iter().flatten() {
        if !g.is_differentiable() {
            return Err(Error::NotDifferentiable);
        }
    }
    if n == 0 || num_samples == 0 {
        return Err(Error::InvalidMeasure("need n ≥ 1 and at least one sample".into()));
    }
    let len = n + model.memory() - 1;
    let chunks = num_samples.div_ceil(CHUNK);
    let results: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(num_samples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let path = mu.sample_path(&mut rng, len);
                    let p = gradient_or_empty(&model.g_plus, &birkhoff_vector(&model.plus, &path, n)?)?;
                    let m = gradient_or_empty(&model.g_minus, &birkhoff_vector(&model.minus, &path, n)?)?;
                    Ok((p, m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (plus, minus) = results.into_iter().flatten().unzip();
    Ok(BirkhoffSamples { n, seed, plus, minus })
}

/// Histogram of scalar values: `(bin center, count)` over `bins` equal bins
/// spanning the data range.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![(lo, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + (i as f64 + 0.5) * width, c)).collect()
}
