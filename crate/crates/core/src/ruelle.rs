//! Transfer (Ruelle) operators of locally constant potentials.
//!
//! For a potential `f` of memory `m` the operator
//! `(𝓛ψ)(σ) = Σ_a m_a e^{f(aσ)} ψ(aσ)` preserves functions of the first
//! `m − 1` symbols, so it acts as a `k^{m−1} × k^{m−1}` matrix with
//! `B[s][s'] = m_a e^{f(a⌢s)}`, where `s' = prefix_{m−1}(a⌢s)`.
//! Memory-1 potentials give the scalar `Σ_a m_a e^{f(a)}`.
//!
//! The Perron root is bracketed by Collatz–Wielandt bounds and sharpened by
//! inverse iteration shifted to the upper bound, which converges even when
//! the spectral gap is tiny (strong couplings).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{expectation, word_count, AprioriAlphabet, CylinderPotential, MarkovMeasure};
use crate::tolerances;

/// The transfer matrix in log domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub k: usize,
    pub memory: usize,
    /// `log B`, row-major over states; `−∞` marks structural zeros.
    pub log_entries: Vec<Vec<f64>>,
}

impl TransferMatrix {
    pub fn states(&self) -> usize {
        self.log_entries.len()
    }

    /// `B[s][s']` (may overflow for extreme potentials; prefer `log_entries`).
    pub fn entry(&self, s: usize, t: usize) -> f64 {
        self.log_entries[s][t].exp()
    }
}

/// Perron data of a transfer matrix and the associated Gibbs measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpfData {
    pub log_lambda: f64,
    /// Right eigenvector, `max h = 1`.
    pub h: Vec<f64>,
    /// Left eigenvector, a probability vector.
    pub nu: Vec<f64>,
    pub gibbs: MarkovMeasure,
    /// `f̄ = f + ln h∘prefix − ln h∘suffix − ln λ`.
    pub normalized_potential: CylinderPotential,
    /// `‖Bh − λh‖∞ / λ` and `‖νB − λν‖∞ / λ` after scaling.
    pub right_residual: f64,
    pub left_residual: f64,
}

/// Builds `B` for `phi` under the a priori weights of `alphabet`.
pub fn build_transfer(phi: &CylinderPotential, alphabet: &AprioriAlphabet) -> Result<TransferMatrix> {
    let k = alphabet.k();
    if phi.k() != k {
        return Err(Error::AlphabetMismatch(k, phi.k()));
    }
    let m = phi.memory();
    let log_m: Vec<f64> = alphabet.weights().iter().map(|w| w.ln()).collect();
    if m == 1 {
        let log_sum = log_sum_exp(phi.table().iter().zip(&log_m).map(|(f, lm)| f + lm));
        return Ok(TransferMatrix { k, memory: 1, log_entries: vec![vec![log_sum]] });
    }
    let n = word_count(k, m - 1).expect("memory within cap");
    let mut log_entries = vec![vec![f64::NEG_INFINITY; n]; n];
    for (s, row) in log_entries.iter_mut().enumerate() {
        for (a, lm) in log_m.iter().enumerate() {
            let word = a * n + s;
            row[word / k] = lm + phi.table()[word];
        }
    }
    Ok(TransferMatrix { k, memory: m, log_entries })
}

pub(crate) fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Collatz–Wielandt bracket `[min (Ax)ᵢ/xᵢ, max (Ax)ᵢ/xᵢ]`.
fn collatz(a: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let ax = a * x;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..x.len() {
        let r = ax[i] / x[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn normalize_positive(x: &mut DVector<f64>) -> bool {
    let sign = if x.sum() < 0.0 { -1.0 } else { 1.0 };
    x.iter_mut().for_each(|v| *v *= sign);
    let max = x.max();
    if !(max > 0.0) || !max.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= max);
    x.iter().all(|&v| v > 0.0)
}

/// Perron root and positive eigenvector of a non-negative primitive matrix.
fn perron(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0);
    // Power iteration first: it makes x strictly positive and brackets ρ.
    let mut bracket = (0.0, f64::INFINITY);
    for _ in 0..64 {
        let mut y = a * &x;
        if !normalize_positive(&mut y) {
            y = (a * &x).map(|v| v.max(1e-300));
            normalize_positive(&mut y);
        }
        x = y;
        if x.iter().all(|&v| v > 0.0) {
            bracket = collatz(a, &x);
            if bracket.1 - bracket.0 <= tolerances::PERRON * bracket.1 {
                return Ok((0.5 * (bracket.0 + bracket.1), x));
            }
        }
    }
    if !x.iter().all(|&v| v > 0.0) {
        return Err(Error::NoConvergence("transfer matrix is not primitive".into()));
    }
    let identity = DMatrix::<f64>::identity(n, n);
    for _ in 0..tolerances::PERRON_MAX_ITERS {
        let shift = bracket.1 * (1.0 + 1e-9);
        let lu = (&identity * shift - a).lu();
        let Some(mut y) = lu.solve(&x) else {
            return Err(Error::NoConvergence("singular shifted system".into()));
        };
        if !normalize_positive(&mut y) {
            // Round-off can leave tiny negative components; one power step
            // restores positivity.
            y = a * y.map(|v| v.abs());
            if !normalize_positive(&mut y) {
                return Err(Error::NoConvergence("lost positivity in inverse iteration".into()));
            }
        }
        let next = collatz(a, &y);
        x = y;
        let improved = next.1 - next.0 < bracket.1 - bracket.0;
        bracket = (next.0.max(bracket.0), next.1.min(bracket.1));
        if bracket.1 - bracket.0 <= tolerances::PERRON * bracket.1 || !improved {
            return Ok((0.5 * (bracket.0 + bracket.1), x));
        }
    }
    Err(Error::NoConvergence("Perron iteration cap reached".into()))
}

/// Perron data and the Gibbs measure of the potential behind `t`.
pub fn rpf_solve(t: &TransferMatrix, phi: &CylinderPotential, alphabet: &AprioriAlphabet) -> Result<RpfData> {
    let k = t.k;
    if t.memory == 1 {
        let log_lambda = t.log_entries[0][0];
        let p: Vec<f64> =
            phi.table().iter().zip(alphabet.weights()).map(|(f, w)| (w.ln() + f - log_lambda).exp()).collect();
        let total: f64 = p.iter().sum();
        let gibbs = MarkovMeasure::product(p.iter().map(|x| x / total).collect())?;
        let normalized = CylinderPotential::new(k, 1, phi.table().iter().map(|f| f - log_lambda).collect())?;
        return Ok(RpfData {
            log_lambda,
            h: vec![1.0],
            nu: vec![1.0],
            gibbs,
            normalized_potential: normalized,
            right_residual: 0.0,
            left_residual: 0.0,
        });
    }

    let n = t.states();
    let scale = t.log_entries.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let a = DMatrix::from_fn(n, n, |i, j| (t.log_entries[i][j] - scale).exp());
    let (rho, h) = perron(&a)?;
    let (rho_left, nu_raw) = perron(&a.transpose())?;
    let rho = 0.5 * (rho + rho_left);
    let log_lambda = rho.ln() + scale;

    let right_residual = (&a * &h - &h * rho).amax() / rho;
    let left_residual = (a.transpose() * &nu_raw - &nu_raw * rho).amax() / rho / nu_raw.max();
    let nu_sum = nu_raw.sum();
    let nu: Vec<f64> = nu_raw.iter().map(|v| v / nu_sum).collect();
    let h: Vec<f64> = h.iter().copied().collect();

    // Reverse-time kernel R[s][s'] = B[s][s'] h(s') / (λ h(s)); its
    // stationary vector is π ∝ h·ν, and the forward chain is its reversal.
    let mut pi: Vec<f64> = h.iter().zip(&nu).map(|(x, y)| x * y).collect();
    let pi_sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= pi_sum);
    let reverse = |s: usize, sp: usize| (t.log_entries[s][sp] - scale).exp() / rho * h[sp] / h[s];
    let mut q = vec![vec![0.0; n]; n];
    for (u, row) in q.iter_mut().enumerate() {
        for b in 0..k {
            let v = (u * k + b) % n;
            row[v] = if pi[u] > 0.0 { pi[v] * reverse(v, u) / pi[u] } else { 0.0 };
        }
        let total: f64 = row.iter().sum();
        if total > 0.0 && total.is_finite() {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            for b in 0..k {
                row[(u * k + b) % n] = 1.0 / k as f64;
            }
        }
    }
    let gibbs = MarkovMeasure::with_stationary(k, t.memory - 1, q, pi)?;

    let ln_h: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let table: Vec<f64> =
        phi.table().iter().enumerate().map(|(w, f)| f + ln_h[w / k] - ln_h[w % n] - log_lambda).collect();
    let normalized_potential = CylinderPotential::new(k, t.memory, table)?;

    Ok(RpfData { log_lambda, h, nu, gibbs, normalized_potential, right_residual, left_residual })
}

/// Builds the transfer matrix of `phi` and solves it.
pub fn rpf(phi: &CylinderPotential, alphabet: &AprioriAlphabet) -> Result<RpfData> {
    rpf_solve(&build_transfer(phi, alphabet)?, phi, alphabet)
}

/// Linear pressure `P_L(φ) = log λ_φ`.
pub fn linear_pressure(phi: &CylinderPotential, alphabet: &AprioriAlphabet) -> Result<f64> {
    let t = build_transfer(phi, alphabet)?;
    if t.memory == 1 {
        return Ok(t.log_entries[0][0]);
    }
    let n = t.states();
    let scale = t.log_entries.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let a = DMatrix::from_fn(n, n, |i, j| (t.log_entries[i][j] - scale).exp());
    let (rho, _) = perron(&a)?;
    Ok(rho.ln() + scale)
}

/// Entropy of the Gibbs measure through the variational identity
/// `h(μ_φ) = log λ − ∫φ dμ_φ`.
pub fn entropy_of_gibbs(rpf: &RpfData, phi: &CylinderPotential) -> Result<f64> {
    Ok(rpf.log_lambda - expectation(&rpf.gibbs, phi)?)
}

/// `max_s |𝓛_f̄ 1 (s) − 1|`.
pub fn normalization_residual(rpf: &RpfData, alphabet: &AprioriAlphabet) -> f64 {
    let f = &rpf.normalized_potential;
    let k = f.k();
    let states = word_count(k, f.memory() - 1).expect("memory within cap");
    (0..states)
        .map(|s| {
            let total: f64 = (0..k).map(|a| alphabet.weights()[a] * f.table()[a * states + s].exp()).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
