use serde::{Deserialize, Serialize};

use super::game::GameContext;
use super::{approximating_potential, tau, GameSolution, ModelSpec, SolverConfig};
use crate::convex::DualPoint;
use crate::error::{Error, Result};
use crate::ruelle::rpf;

/// Trace of a damped mean-field iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldReport {
    /// Iterates `(y₊, y₋)`, starting point first.
    pub trace: Vec<Vec<f64>>,
    pub converged: bool,
    pub fixed_point: Option<Vec<f64>>,
    /// Period of a detected cycle (2 to 8).
    pub cycle_period: Option<usize>,
    pub iterations: usize,
}

/// Iterates `y ← (1−α)y + α(∇g₊(τ₊(μ_y)), ∇g₋(τ₋(μ_y)))` where `μ_y` is
/// the Gibbs measure of `Θ(y)`. Fixed points satisfy the self-consistency
/// equations.
pub fn mean_field_iterate(model: &ModelSpec, y0: &[f64], damping: f64, max_iters: usize) -> Result<MeanFieldReport> {
    let (np, nm) = (model.n_plus(), model.n_minus());
    if y0.len() != np + nm {
        return Err(Error::DimensionMismatch { expected: np + nm, got: y0.len() });
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidModel(format!("damping {damping} outside (0, 1]")));
    }
    for g in [&model.g_plus, &model.g_minus].into_iter().flatten() {
        if !g.is_differentiable() {
            return Err(Error::NotDifferentiable);
        }
    }
    let map = |y: &[f64]| -> Result<Vec<f64>> {
        let theta = approximating_potential(model, &y[..np], &y[np..])?;
        let mu = rpf(&theta, &model.alphabet)?.gibbs;
        let mut out = Vec::with_capacity(np + nm);
        if let Some(g) = &model.g_plus {
            out.extend(g.gradient(&tau(&model.plus, &mu)?)?);
        }
        if let Some(g) = &model.g_minus {
            out.extend(g.gradient(&tau(&model.minus, &mu)?)?);
        }
        Ok(out)
    };

    let mut trace = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    for it in 1..=max_iters {
        let target = map(&y)?;
        let next: Vec<f64> = y.iter().zip(&target).map(|(a, b)| (1.0 - damping) * a + damping * b).collect();
        let step = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trace.push(next.clone());
        y = next;
        if step < 1e-10 {
            return Ok(MeanFieldReport {
                trace,
                converged: true,
                fixed_point: Some(y),
                cycle_period: None,
                iterations: it,
            });
        }
        for p in 2..=8 {
            if trace.len() > p {
                let past = &trace[trace.len() - 1 - p];
                if past.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9) {
                    return Ok(MeanFieldReport {
                        trace,
                        converged: false,
                        fixed_point: None,
                        cycle_period: Some(p),
                        iterations: it,
                    });
                }
            }
        }
    }
    Ok(MeanFieldReport { trace, converged: false, fixed_point: None, cycle_period: None, iterations: max_iters })
}

/// Tabulated inner decision rule `x₊ ↦ x₋(x₊)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// `(y₊, x₋(y₊))` pairs: every point of `M♭` and short axis-aligned
    /// lines through it.
    pub samples: Vec<(DualPoint, DualPoint)>,
    pub spacing: f64,
    /// Largest `‖Δx₋‖ / ‖Δy₊‖` between neighboring samples.
    pub max_slope: f64,
}

/// Tabulates the decision rule around every point of `M♭`.
///
/// Requires a strictly convex `g₋*`, which makes `M♭(y₊)` a singleton; a
/// multivalued inner set is reported as an error.
pub fn decision_rule(
    model: &ModelSpec,
    config: &SolverConfig,
    solution: &GameSolution,
    samples: usize,
) -> Result<DecisionRule> {
    if let Some(g) = &model.g_minus {
        if !g.has_strictly_convex_conjugate() {
            return Err(Error::NotDifferentiable);
        }
    }
    let ctx = GameContext::new(model, config)?;
    let samples = samples.max(3) | 1;
    let half_width = 0.05;
    let spacing = 2.0 * half_width / (samples - 1) as f64;
    let pick = |y: &[f64]| -> Result<Vec<f64>> {
        let inner = ctx.inner_min(y)?;
        if inner.minimizers.len() > 1 {
            return Err(Error::MultivaluedDecision(y.to_vec()));
        }
        Ok(inner.minimizers[0].clone())
    };

    let mut table = Vec::new();
    let mut max_slope: f64 = 0.0;
    for x_plus in &solution.m_flat {
        let center = x_plus.as_slice();
        table.push((x_plus.clone(), DualPoint(pick(center)?)));
        for axis in 0..center.len() {
            let mut prev: Option<Vec<f64>> = None;
            for j in 0..samples {
                let mut y = center.to_vec();
                y[axis] += -half_width + spacing * j as f64;
                let x = pick(&y)?;
                if let Some(p) = &prev {
                    let dx = p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    max_slope = max_slope.max(dx / spacing);
                }
                prev = Some(x.clone());
                table.push((DualPoint(y), DualPoint(x)));
            }
        }
    }
    Ok(DecisionRule { samples: table, spacing, max_slope })
}
