//! Bogoliubov linearization and the thermodynamic game.
//!
//! A [`ModelSpec`] fixes potentials `φ±` and convex `g±`. For dual points
//! `y±` the approximating potential is `Θ = y₊·φ₊ − y₋·φ₋` and the payoff is
//! `P_NL(y₊, y₋) = P_L(Θ) + g₋*(y₋) − g₊*(y₊)`. The maximizing player picks
//! `y₊`, the minimizing player `y₋`; [`solve_flat`] computes the max-min
//! value `P♭` (the nonlinear pressure) with its optimizers and equilibrium
//! measures, [`solve_sharp`] the min-max value `P♯`.
//!
//! An absent `g±` removes that player entirely.

mod game;
mod mean_field;

pub use game::{
    cluster_maxima, multistart_max, solve_flat, solve_game, solve_sharp, GameContext, InnerMin, Multistart,
};
pub use mean_field::{decision_rule, mean_field_iterate, DecisionRule, MeanFieldReport};

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexSpec, DualPoint};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::measures::{entropy_rate, expectation, AprioriAlphabet, CylinderPotential, MarkovMeasure};
use crate::ruelle::linear_pressure;

/// A nonlinear model: `sup_μ { h(μ) − g₋(τ₋(μ)) + g₊(τ₊(μ)) }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub alphabet: AprioriAlphabet,
    pub plus: Vec<CylinderPotential>,
    pub minus: Vec<CylinderPotential>,
    pub g_plus: Option<ConvexSpec>,
    pub g_minus: Option<ConvexSpec>,
}

impl ModelSpec {
    pub fn new(
        label: impl Into<String>,
        alphabet: AprioriAlphabet,
        plus: Vec<CylinderPotential>,
        g_plus: Option<ConvexSpec>,
        minus: Vec<CylinderPotential>,
        g_minus: Option<ConvexSpec>,
    ) -> Result<Self> {
        let model = Self { label: label.into(), alphabet, plus, minus, g_plus, g_minus };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_plus.is_none() && self.g_minus.is_none() {
            return Err(Error::InvalidModel("at least one of g+ and g- is required".into()));
        }
        for (side, pots, g) in [("plus", &self.plus, &self.g_plus), ("minus", &self.minus, &self.g_minus)] {
            match g {
                Some(g) => {
                    if pots.is_empty() {
                        return Err(Error::InvalidModel(format!("g_{side} needs at least one potential")));
                    }
                    if g.dim() != pots.len() {
                        return Err(Error::InvalidModel(format!(
                            "g_{side} has dimension {} but {} potentials are listed",
                            g.dim(),
                            pots.len()
                        )));
                    }
                }
                None => {
                    if !pots.is_empty() {
                        return Err(Error::InvalidModel(format!("{side} potentials given without g_{side}")));
                    }
                }
            }
            for p in pots.iter() {
                if p.k() != self.alphabet.k() {
                    return Err(Error::AlphabetMismatch(self.alphabet.k(), p.k()));
                }
            }
        }
        Ok(())
    }

    pub fn n_plus(&self) -> usize {
        self.plus.len()
    }

    pub fn n_minus(&self) -> usize {
        self.minus.len()
    }

    pub fn k(&self) -> usize {
        self.alphabet.k()
    }

    /// Largest memory among all potentials.
    pub fn memory(&self) -> usize {
        self.plus.iter().chain(&self.minus).map(CylinderPotential::memory).max().unwrap_or(1)
    }

    /// Bound `λ± ≥ sup_μ ‖τ±(μ)‖` from the potentials' sup norms.
    pub fn lambda_plus(&self) -> f64 {
        norm_of_sup_norms(&self.plus)
    }

    pub fn lambda_minus(&self) -> f64 {
        norm_of_sup_norms(&self.minus)
    }

    pub fn conj_plus(&self, y: &[f64]) -> Result<ExtReal> {
        self.g_plus.as_ref().map_or(Ok(ExtReal::ZERO), |g| g.conjugate(y))
    }

    pub fn conj_minus(&self, y: &[f64]) -> Result<ExtReal> {
        self.g_minus.as_ref().map_or(Ok(ExtReal::ZERO), |g| g.conjugate(y))
    }
}

fn norm_of_sup_norms(pots: &[CylinderPotential]) -> f64 {
    pots.iter().map(|p| p.sup_norm().powi(2)).sum::<f64>().sqrt()
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Location tolerance of line searches and simplex refinements.
    pub tol: f64,
    /// Admission threshold of self-consistency residuals.
    pub sc_tol: f64,
    /// Optimizers closer than this (sup norm) are merged.
    pub cluster_radius: f64,
    /// Optimizers whose value is within this of the best are retained.
    pub value_window: f64,
    /// Grid points per axis of the outer multistart scan.
    pub grid: usize,
    /// Cap on the total number of scan points.
    pub multistart: usize,
    pub seed: u64,
    pub radius_plus: Option<f64>,
    pub radius_minus: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            sc_tol: 1e-6,
            cluster_radius: 1e-4,
            value_window: 1e-8,
            grid: 17,
            multistart: 289,
            seed: 0,
            radius_plus: None,
            radius_minus: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol, self.sc_tol, self.cluster_radius, self.value_window];
        if positive.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidModel("tolerances must be positive".into()));
        }
        if self.grid < 5 {
            return Err(Error::InvalidModel(format!("grid must be at least 5, got {}", self.grid)));
        }
        if self.multistart == 0 {
            return Err(Error::InvalidModel("multistart cap must be positive".into()));
        }
        for r in [self.radius_plus, self.radius_minus].into_iter().flatten() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidModel(format!("radius override {r} must be positive")));
            }
        }
        Ok(())
    }
}

/// One evaluation of the game payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxPressureEval {
    pub y_plus: DualPoint,
    pub y_minus: DualPoint,
    pub theta: CylinderPotential,
    pub p_l: f64,
    pub p_nl: ExtReal,
}

/// A self-consistent equilibrium attached to `(x₊, x₋)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_plus: DualPoint,
    pub x_minus: DualPoint,
    pub measure: MarkovMeasure,
    pub tau_plus: Vec<f64>,
    pub tau_minus: Vec<f64>,
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// Direct nonlinear pressure of `measure`.
    pub p_value: f64,
}

/// Inner optimizer set attached to one outer point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSet {
    pub at: DualPoint,
    pub value: f64,
    pub optimizers: Vec<DualPoint>,
}

/// Output of the game solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub p_flat: f64,
    pub m_flat: Vec<DualPoint>,
    /// `M♭(x₊)` for every `x₊ ∈ M♭`.
    pub m_flat_of: Vec<OptimizerSet>,
    pub p_sharp: Option<f64>,
    pub m_sharp: Vec<DualPoint>,
    /// `M♯(x₋)` for every `x₋ ∈ M♯`.
    pub m_sharp_of: Vec<OptimizerSet>,
    pub gap: Option<f64>,
    pub equilibria: Vec<Equilibrium>,
    pub growth_radii: (f64, f64),
    /// `(y₊, P♭(y₊))` on the outer scan grid.
    pub scan: Vec<(Vec<f64>, f64)>,
    pub diagnostics: Vec<String>,
}

/// `Θ = Σ y₊ᵢ φ₊ᵢ − Σ y₋ⱼ φ₋ⱼ`, padded to the common memory.
pub fn approximating_potential(model: &ModelSpec, y_plus: &[f64], y_minus: &[f64]) -> Result<CylinderPotential> {
    if y_plus.len() != model.n_plus() {
        return Err(Error::DimensionMismatch { expected: model.n_plus(), got: y_plus.len() });
    }
    if y_minus.len() != model.n_minus() {
        return Err(Error::DimensionMismatch { expected: model.n_minus(), got: y_minus.len() });
    }
    let mut theta = CylinderPotential::zero(model.k());
    for (y, p) in y_plus.iter().zip(&model.plus) {
        theta = theta.add_scaled(p, *y)?;
    }
    for (y, p) in y_minus.iter().zip(&model.minus) {
        theta = theta.add_scaled(p, -*y)?;
    }
    theta.pad(model.memory())
}

/// Full payoff evaluation.
pub fn evaluate(model: &ModelSpec, y_plus: &[f64], y_minus: &[f64]) -> Result<ApproxPressureEval> {
    let theta = approximating_potential(model, y_plus, y_minus)?;
    let p_l = linear_pressure(&theta, &model.alphabet)?;
    let p_nl = combine(p_l, model.conj_plus(y_plus)?, model.conj_minus(y_minus)?);
    Ok(ApproxPressureEval {
        y_plus: DualPoint(y_plus.to_vec()),
        y_minus: DualPoint(y_minus.to_vec()),
        theta,
        p_l,
        p_nl,
    })
}

/// `p_l + g₋* − g₊*`. An infinite `g₊*` dominates: the maximizer never
/// picks points outside `dom g₊*`.
fn combine(p_l: f64, conj_plus: ExtReal, conj_minus: ExtReal) -> ExtReal {
    match (conj_plus, conj_minus) {
        (ExtReal::PosInf, _) => ExtReal::NegInf,
        (_, ExtReal::PosInf) => ExtReal::PosInf,
        (cp, cm) => ExtReal::Finite(p_l) + cm - cp,
    }
}

/// `P_NL(y₊, y₋)`.
pub fn p_nl(model: &ModelSpec, y_plus: &[f64], y_minus: &[f64]) -> Result<ExtReal> {
    let cp = model.conj_plus(y_plus)?;
    if cp == ExtReal::PosInf {
        return Ok(ExtReal::NegInf);
    }
    let cm = model.conj_minus(y_minus)?;
    if cm == ExtReal::PosInf {
        return Ok(ExtReal::PosInf);
    }
    let theta = approximating_potential(model, y_plus, y_minus)?;
    Ok(combine(linear_pressure(&theta, &model.alphabet)?, cp, cm))
}

/// `τ(μ) = (∫φᵢ dμ)ᵢ`.
pub fn tau(pots: &[CylinderPotential], mu: &MarkovMeasure) -> Result<Vec<f64>> {
    pots.iter().map(|p| expectation(mu, p)).collect()
}

/// Direct nonlinear pressure `h(μ) − g₋(τ₋(μ)) + g₊(τ₊(μ))`.
pub fn nonlinear_pressure_of(model: &ModelSpec, mu: &MarkovMeasure) -> Result<ExtReal> {
    let h = entropy_rate(mu, &model.alphabet)?;
    let plus = match &model.g_plus {
        Some(g) => g.value(&tau(&model.plus, mu)?)?,
        None => ExtReal::ZERO,
    };
    let minus = match &model.g_minus {
        Some(g) => g.value(&tau(&model.minus, mu)?)?,
        None => ExtReal::ZERO,
    };
    // g₊ = +∞ only happens for grid functions outside their hull; the
    // measure is then outside the model's domain.
    Ok(match (plus, minus) {
        (ExtReal::PosInf, _) => ExtReal::PosInf,
        (_, ExtReal::PosInf) => ExtReal::NegInf,
        (p, m) => ExtReal::Finite(h) + p - m,
    })
}
