use rayon::prelude::*;

use super::{
    approximating_potential, mean_field_iterate, nonlinear_pressure_of, p_nl, tau, Equilibrium, GameSolution,
    ModelSpec, OptimizerSet, SolverConfig,
};
use crate::convex::{growth_radius_margin, sphere_directions, ConvexSpec, DualPoint};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::optim::{golden_section, linspace, minimize_convex_box, nelder_mead, tensor_grid};
use crate::ruelle::rpf;

/// Most refinements launched from one multistart scan.
const MAX_STARTS: usize = 16;

/// `sup_y {λ‖y‖ − g*(y)}` and `g*(0)`, or zeros for an absent `g`.
fn growth_sup(g: Option<&ConvexSpec>, lambda: f64) -> Result<(f64, f64)> {
    let Some(g) = g else {
        return Ok((0.0, 0.0));
    };
    let conj0 = g.conjugate(&vec![0.0; g.dim()])?.finite().ok_or(Error::NoLinearGrowth(lambda))?;
    let cert = growth_radius_margin(g, lambda, 1.0)?;
    let dirs = sphere_directions(g.dim());
    let mut best = -conj0;
    for r in linspace(0.0, 2.0 * cert.safe_radius, 401) {
        for u in &dirs {
            let y: Vec<f64> = u.iter().map(|c| c * r).collect();
            if let Some(v) = g.conjugate(&y)?.finite() {
                best = best.max(lambda * r - v);
            }
        }
    }
    Ok((best, conj0))
}

fn side_box(g: Option<&ConvexSpec>, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let Some(g) = g else {
        return (Vec::new(), Vec::new());
    };
    g.conjugate_domain().into_iter().map(|(a, b)| (a.max(-radius), b.min(radius))).unzip()
}

/// Search boxes and evaluation helpers shared by the solvers.
#[derive(Debug, Clone)]
pub struct GameContext<'a> {
    pub model: &'a ModelSpec,
    pub config: &'a SolverConfig,
    pub r_plus: f64,
    pub r_minus: f64,
    pub lo_plus: Vec<f64>,
    pub hi_plus: Vec<f64>,
    pub lo_minus: Vec<f64>,
    pub hi_minus: Vec<f64>,
}

/// Inner minimization result: `P♭(y₊)` and `M♭(y₊)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerMin {
    pub value: f64,
    pub minimizers: Vec<Vec<f64>>,
}

impl<'a> GameContext<'a> {
    /// Certifies search radii. Outside `B(0, R₊)` the outer objective stays
    /// below `P♭(0)`, and outside `B(0, R₋)` the inner objective stays above
    /// its value at `y₋ = 0`, so no optimizer is lost by the box restriction.
    pub fn new(model: &'a ModelSpec, config: &'a SolverConfig) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        let (lp, lm) = (model.lambda_plus(), model.lambda_minus());
        let (sup_plus, conj0_plus) = growth_sup(model.g_plus.as_ref(), lp)?;
        let (sup_minus, conj0_minus) = growth_sup(model.g_minus.as_ref(), lm)?;
        let margin_plus = 1.0 + (sup_minus + conj0_minus).max(0.0);
        let margin_minus = 1.0 + (sup_plus + conj0_plus).max(0.0);
        let radius = |g: Option<&ConvexSpec>, over: Option<f64>, lambda: f64, margin: f64| -> Result<f64> {
            match (g, over) {
                (None, _) => Ok(0.0),
                (Some(_), Some(r)) => Ok(r),
                (Some(g), None) => Ok(growth_radius_margin(g, lambda, margin)?.safe_radius),
            }
        };
        let r_plus = radius(model.g_plus.as_ref(), config.radius_plus, lp, margin_plus)?;
        let r_minus = radius(model.g_minus.as_ref(), config.radius_minus, lm, margin_minus)?;
        let (lo_plus, hi_plus) = side_box(model.g_plus.as_ref(), r_plus);
        let (lo_minus, hi_minus) = side_box(model.g_minus.as_ref(), r_minus);
        Ok(Self { model, config, r_plus, r_minus, lo_plus, hi_plus, lo_minus, hi_minus })
    }

    /// `P_NL` as a plain float (`±∞` kept, failures as NaN).
    pub fn payoff(&self, y_plus: &[f64], y_minus: &[f64]) -> f64 {
        p_nl(self.model, y_plus, y_minus).map_or(f64::NAN, ExtReal::to_f64)
    }

    /// `P♭(y₊) = inf_{y₋} P_NL(y₊, y₋)` with its minimizer set.
    pub fn inner_min(&self, y_plus: &[f64]) -> Result<InnerMin> {
        let cfg = self.config;
        if self.model.n_minus() == 0 {
            let value = self.payoff(y_plus, &[]);
            return check_value(InnerMin { value, minimizers: vec![Vec::new()] });
        }
        let f = |y: &[f64]| self.payoff(y_plus, y);
        let (x, v) = minimize_convex_box(f, &self.lo_minus, &self.hi_minus, cfg.tol);
        let mut minimizers = vec![x.clone()];
        if x.len() == 1 && v.is_finite() {
            // A convex function has an interval of minimizers. Sublevel
            // sets of a strictly convex function shrink like √ε, those of a
            // flat piece do not.
            let (a, b) = sublevel_edges(&f, x[0], self.lo_minus[0], self.hi_minus[0], v + cfg.value_window);
            let (c, d) = sublevel_edges(&f, x[0], self.lo_minus[0], self.hi_minus[0], v + 1e-2 * cfg.value_window);
            if b - a > cfg.cluster_radius && (d - c) > 0.5 * (b - a) {
                minimizers = vec![vec![c], vec![d]];
            }
        }
        check_value(InnerMin { value: v, minimizers })
    }

    pub fn p_flat_of(&self, y_plus: &[f64]) -> f64 {
        self.inner_min(y_plus).map_or(f64::NAN, |m| m.value)
    }
}

fn check_value(m: InnerMin) -> Result<InnerMin> {
    if m.value.is_nan() {
        return Err(Error::NoConvergence("payoff evaluation failed".into()));
    }
    Ok(m)
}

/// Edges of `{f ≤ level}` around `x` (a convex sublevel interval).
fn sublevel_edges<F: Fn(&[f64]) -> f64>(f: &F, x: f64, lo: f64, hi: f64, level: f64) -> (f64, f64) {
    let edge = |bound: f64| {
        if f(&[bound]) <= level {
            return bound;
        }
        let (mut inside, mut outside) = (x, bound);
        for _ in 0..80 {
            let mid = 0.5 * (inside + outside);
            if f(&[mid]) <= level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    (edge(lo), edge(hi))
}

/// Candidates from a multistart maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Multistart {
    /// Refined local maxima, in start order.
    pub candidates: Vec<(Vec<f64>, f64)>,
    /// Every scan point with its value.
    pub scan: Vec<(Vec<f64>, f64)>,
}

/// Maximizes `f` over a box: tensor-grid scan, discrete local maxima as
/// starts, then golden-section (1-D) or Nelder–Mead refinement.
///
/// The scan runs in parallel; results are assembled in index order, so the
/// output does not depend on the number of workers.
pub fn multistart_max<F>(f: &F, lo: &[f64], hi: &[f64], grid: usize, cap: usize, tol: f64) -> Multistart
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = lo.len();
    if dim == 0 {
        let v = f(&[]);
        return Multistart { candidates: vec![(Vec::new(), v)], scan: vec![(Vec::new(), v)] };
    }
    let mut n = grid.max(2);
    while n > 2 && n.checked_pow(dim as u32).is_none_or(|t| t > cap) {
        n -= 1;
    }
    let points = tensor_grid(lo, hi, n);
    let values: Vec<f64> = points.par_iter().map(|p| f(p)).collect();
    let clean = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };

    let mut starts: Vec<usize> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let v = clean(v);
        if !v.is_finite() {
            continue;
        }
        let mut is_max = true;
        let mut stride = 1;
        for _ in 0..dim {
            let pos = (i / stride) % n;
            if pos > 0 && clean(values[i - stride]) > v {
                is_max = false;
            }
            if pos + 1 < n && clean(values[i + stride]) > v {
                is_max = false;
            }
            stride *= n;
        }
        if is_max {
            starts.push(i);
        }
    }
    starts.sort_by(|&a, &b| clean(values[b]).total_cmp(&clean(values[a])).then(a.cmp(&b)));
    starts.truncate(MAX_STARTS);
    starts.sort_unstable();

    let spacing: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / (n - 1) as f64).collect();
    let neg = |x: &[f64]| -clean(f(x));
    let candidates: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|&i| {
            let x0 = &points[i];
            let v0 = clean(values[i]);
            let (x, v) = if dim == 1 {
                let a = (x0[0] - spacing[0]).max(lo[0]);
                let b = (x0[0] + spacing[0]).min(hi[0]);
                let (t, nv) = golden_section(|t| neg(&[t]), a, b, tol);
                (vec![t], -nv)
            } else {
                let step = 0.5 * spacing.iter().copied().fold(f64::INFINITY, f64::min);
                let (x, nv) = nelder_mead(&neg, x0, step, lo, hi, tol, 5000);
                (x, -nv)
            };
            if v >= v0 {
                (x, v)
            } else {
                (x0.clone(), v0)
            }
        })
        .collect();
    let scan = points.into_iter().zip(values).collect();
    Multistart { candidates, scan }
}

/// Keeps candidates within `window` of the best value and merges those
/// closer than `radius` (sup norm), keeping the better member. The result
/// is sorted lexicographically.
pub fn cluster_maxima(candidates: &[(Vec<f64>, f64)], radius: f64, window: f64) -> Vec<(Vec<f64>, f64)> {
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let mut clusters: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, v) in candidates {
        if *v < best - window {
            continue;
        }
        let near = clusters.iter_mut().find(|(c, _)| c.iter().zip(x).all(|(a, b)| (a - b).abs() <= radius));
        match near {
            Some(c) => {
                if *v > c.1 {
                    *c = (x.clone(), *v);
                }
            }
            None => clusters.push((x.clone(), *v)),
        }
    }
    clusters.sort_by(|a, b| {
        a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    clusters
}

fn differentiable(g: Option<&ConvexSpec>) -> bool {
    g.is_none_or(ConvexSpec::is_differentiable)
}

/// Distance from `x` to `∂g(τ)`; `+∞` when the subdifferential is unavailable.
fn residual(g: Option<&ConvexSpec>, x: &[f64], tau: &[f64]) -> f64 {
    match g {
        None => 0.0,
        Some(g) => g.subdiff(tau).map_or(f64::INFINITY, |s| s.distance(x)),
    }
}

/// Gibbs measure of `Θ(x₊, x₋)` with its self-consistency residuals.
pub(crate) fn equilibrium_at(model: &ModelSpec, x_plus: &[f64], x_minus: &[f64]) -> Result<Equilibrium> {
    let theta = approximating_potential(model, x_plus, x_minus)?;
    let mu = rpf(&theta, &model.alphabet)?.gibbs;
    let tau_plus = tau(&model.plus, &mu)?;
    let tau_minus = tau(&model.minus, &mu)?;
    let residual_plus = residual(model.g_plus.as_ref(), x_plus, &tau_plus);
    let residual_minus = residual(model.g_minus.as_ref(), x_minus, &tau_minus);
    let p_value = nonlinear_pressure_of(model, &mu)?.to_f64();
    Ok(Equilibrium {
        x_plus: DualPoint(x_plus.to_vec()),
        x_minus: DualPoint(x_minus.to_vec()),
        measure: mu,
        tau_plus,
        tau_minus,
        residual_plus,
        residual_minus,
        p_value,
    })
}

/// Max-min side of the game: `P♭`, `M♭`, `M♭(x₊)` and the equilibria.
pub fn solve_flat(model: &ModelSpec, config: &SolverConfig) -> Result<GameSolution> {
    let ctx = GameContext::new(model, config)?;
    let mut diagnostics = vec![format!("search radii R+ = {}, R- = {}", ctx.r_plus, ctx.r_minus)];

    let outer = |y: &[f64]| ctx.p_flat_of(y);
    let ms = multistart_max(&outer, &ctx.lo_plus, &ctx.hi_plus, config.grid, config.multistart, config.tol);
    diagnostics.push(format!("outer scan: {} points, {} refined starts", ms.scan.len(), ms.candidates.len()));

    let mut candidates = ms.candidates.clone();
    if model.n_plus() > 0 && differentiable(model.g_plus.as_ref()) && differentiable(model.g_minus.as_ref()) {
        for c in candidates.iter_mut() {
            let inner = ctx.inner_min(&c.0)?;
            let mut y0 = c.0.clone();
            y0.extend(&inner.minimizers[0]);
            let Ok(report) = mean_field_iterate(model, &y0, 0.5, 500) else {
                continue;
            };
            if let Some(fp) = report.fixed_point {
                let fp_plus = &fp[..model.n_plus()];
                let close = fp_plus.iter().zip(&c.0).all(|(a, b)| (a - b).abs() < 1e-3);
                let in_box =
                    fp_plus.iter().zip(ctx.lo_plus.iter().zip(&ctx.hi_plus)).all(|(v, (a, b))| v >= a && v <= b);
                if close && in_box {
                    let v = ctx.p_flat_of(fp_plus);
                    if v >= c.1 - 1e-12 {
                        *c = (fp_plus.to_vec(), v);
                    }
                }
            }
        }
    }

    let maxima = cluster_maxima(&candidates, config.cluster_radius, config.value_window);
    if maxima.is_empty() {
        return Err(Error::NoConvergence("outer scan found no finite value".into()));
    }
    let p_flat = maxima.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);

    let mut m_flat = Vec::new();
    let mut m_flat_of = Vec::new();
    let mut equilibria = Vec::new();
    for (x_plus, _) in &maxima {
        let inner = ctx.inner_min(x_plus)?;
        for x_minus in &inner.minimizers {
            let eq = equilibrium_at(model, x_plus, x_minus)?;
            let admitted = eq.residual_plus < config.sc_tol && eq.residual_minus < config.sc_tol;
            if (eq.p_value - p_flat).abs() > 1e-6 {
                diagnostics
                    .push(format!("direct pressure {} differs from P♭ = {p_flat} at x+ = {x_plus:?}", eq.p_value));
            }
            if admitted {
                equilibria.push(eq);
            } else {
                diagnostics.push(format!(
                    "rejected x+ = {x_plus:?}, x- = {x_minus:?}: residuals {:e}, {:e}",
                    eq.residual_plus, eq.residual_minus
                ));
            }
        }
        m_flat.push(DualPoint(x_plus.clone()));
        m_flat_of.push(OptimizerSet {
            at: DualPoint(x_plus.clone()),
            value: inner.value,
            optimizers: inner.minimizers.into_iter().map(DualPoint).collect(),
        });
    }
    if equilibria.is_empty() {
        return Err(Error::NoSelfConsistentOptimizer(diagnostics.join("; ")));
    }

    Ok(GameSolution {
        p_flat,
        m_flat,
        m_flat_of,
        p_sharp: None,
        m_sharp: Vec::new(),
        m_sharp_of: Vec::new(),
        gap: None,
        equilibria,
        growth_radii: (ctx.r_plus, ctx.r_minus),
        scan: ms.scan,
        diagnostics,
    })
}

/// Min-max side, added to a solution of [`solve_flat`].
///
/// `S(y₋) = sup_{y₊} P_NL(y₊, y₋)` is convex, so its minimization is a
/// convex problem; each evaluation of `S` is a multistart maximization.
pub fn solve_sharp(model: &ModelSpec, config: &SolverConfig, mut solution: GameSolution) -> Result<GameSolution> {
    if model.g_minus.is_none() {
        solution.p_sharp = Some(solution.p_flat);
        solution.gap = Some(0.0);
        solution.diagnostics.push("g- absent: P♯ equals P♭ by convention".into());
        return Ok(solution);
    }
    let ctx = GameContext::new(model, config)?;
    let sharp_grid = config.grid.min(9);
    let sup_over_plus = |y_minus: &[f64]| -> Multistart {
        let f = |y: &[f64]| ctx.payoff(y, y_minus);
        multistart_max(&f, &ctx.lo_plus, &ctx.hi_plus, sharp_grid, config.multistart, config.tol)
    };
    let s = |y_minus: &[f64]| {
        let ms = sup_over_plus(y_minus);
        ms.candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max)
    };
    let (x_minus, p_sharp) = minimize_convex_box(s, &ctx.lo_minus, &ctx.hi_minus, config.tol);
    if !p_sharp.is_finite() {
        return Err(Error::NoConvergence("min-max value is not finite".into()));
    }
    let best = cluster_maxima(&sup_over_plus(&x_minus).candidates, config.cluster_radius, config.value_window);
    solution.m_sharp = vec![DualPoint(x_minus.clone())];
    solution.m_sharp_of = vec![OptimizerSet {
        at: DualPoint(x_minus),
        value: p_sharp,
        optimizers: best.into_iter().map(|b| DualPoint(b.0)).collect(),
    }];
    solution.p_sharp = Some(p_sharp);
    solution.gap = Some(p_sharp - solution.p_flat);
    Ok(solution)
}

/// Both sides of the game.
pub fn solve_game(model: &ModelSpec, config: &SolverConfig) -> Result<GameSolution> {
    let flat = solve_flat(model, config)?;
    solve_sharp(model, config, flat)
}
