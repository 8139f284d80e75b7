//! Discrete Monge–Kantorovich problems.

use serde::{Deserialize, Serialize};

use super::DiscreteDualMeasure;
use crate::error::{Error, Result};
use crate::linearizer::{GameContext, ModelSpec, SolverConfig};
use crate::tolerances;

/// A transport plan between two discrete measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub matrix: Vec<Vec<f64>>,
}

impl Coupling {
    /// Largest deviation of row and column sums from the marginals.
    pub fn marginal_error(&self, rows: &[f64], cols: &[f64]) -> f64 {
        let row_err = self.matrix.iter().zip(rows).map(|(r, a)| (r.iter().sum::<f64>() - a).abs()).fold(0.0, f64::max);
        let col_err = cols
            .iter()
            .enumerate()
            .map(|(j, b)| (self.matrix.iter().map(|r| r[j]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        row_err.max(col_err)
    }

    pub fn cost(&self, cost: &[Vec<f64>]) -> f64 {
        self.matrix.iter().zip(cost).flat_map(|(r, c)| r.iter().zip(c).map(|(x, y)| x * y)).sum()
    }
}

/// Optimal value and one optimal coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub value: f64,
    pub coupling: Coupling,
    pub cost: Vec<Vec<f64>>,
    pub method: String,
}

fn check_problem(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Result<()> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::Transport("empty support".into()));
    }
    if m > tolerances::MAX_TRANSPORT_SUPPORT || n > tolerances::MAX_TRANSPORT_SUPPORT {
        return Err(Error::Transport(format!("supports {m}×{n} exceed the cap")));
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(Error::Transport("cost matrix shape does not match the supports".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Transport("infinite transport cost".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-10 || a.iter().chain(b).any(|&w| w < 0.0) {
        return Err(Error::Transport("marginals are not balanced probability vectors".into()));
    }
    Ok(())
}

/// Basis of a transportation problem as a spanning tree of the bipartite
/// row/column graph; node `i < m` is row `i`, node `m + j` column `j`.
fn tree_path(basis: &[(usize, usize)], m: usize, n: usize, from: usize, to: usize) -> Option<Vec<usize>> {
    // Returns indices into `basis` along the path between two nodes.
    let nodes = m + n;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
    let mut seen = vec![false; nodes];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            break;
        }
        for (e, &(i, j)) in basis.iter().enumerate() {
            let (r, c) = (i, m + j);
            let v = if u == r {
                c
            } else if u == c {
                r
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, e));
                stack.push(v);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let (p, e) = prev[node]?;
        path.push(e);
        node = p;
    }
    path.reverse();
    Some(path)
}

/// Transportation simplex: northwest-corner start, MODI potentials and
/// Bland's rule (first improving cell in row-major order, smallest-index
/// leaving cell).
pub fn transport_simplex(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Result<TransportPlan> {
    check_problem(cost, a, b)?;
    let (m, n) = (a.len(), b.len());
    let mut x = vec![vec![0.0; n]; m];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = ra[i].min(rb[j]).max(0.0);
        x[i][j] = q;
        ra[i] -= q;
        rb[j] -= q;
        basis.push((i, j));
        if i == m - 1 && j == n - 1 {
            break;
        }
        if (ra[i] <= rb[j] && i < m - 1) || j == n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    for _ in 0..10_000 {
        // Potentials u_i + v_j = c_ij on the basis tree.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut changed = true;
        while changed {
            changed = false;
            for &(i, j) in &basis {
                if !u[i].is_nan() && v[j].is_nan() {
                    v[j] = cost[i][j] - u[i];
                    changed = true;
                } else if u[i].is_nan() && !v[j].is_nan() {
                    u[i] = cost[i][j] - v[j];
                    changed = true;
                }
            }
        }
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !basis.contains(&(i, j)) && cost[i][j] - u[i] - v[j] < -1e-12);
        let Some((ei, ej)) = entering else {
            let coupling = Coupling { matrix: x };
            return Ok(TransportPlan {
                value: coupling.cost(cost),
                coupling,
                cost: cost.to_vec(),
                method: "transportation simplex".into(),
            });
        };
        let path = tree_path(&basis, m, n, m + ej, ei)
            .ok_or_else(|| Error::Transport("basis is not a spanning tree".into()))?;
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let plus: Vec<usize> = path.iter().skip(1).step_by(2).copied().collect();
        let theta = minus.iter().map(|&e| x[basis[e].0][basis[e].1]).fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&e| x[basis[e].0][basis[e].1] <= theta)
            .min_by_key(|&e| basis[e].0 * n + basis[e].1)
            .expect("cycle has a minus cell");
        for &e in &plus {
            x[basis[e].0][basis[e].1] += theta;
        }
        for &e in &minus {
            x[basis[e].0][basis[e].1] -= theta;
        }
        x[ei][ej] = theta;
        let (li, lj) = basis[leaving];
        x[li][lj] = 0.0;
        basis[leaving] = (ei, ej);
    }
    Err(Error::Transport("simplex iteration cap reached".into()))
}

/// Exact solution by enumerating every basic feasible solution (spanning
/// trees of the row/column graph). Intended for supports up to 3×3.
pub fn transport_by_enumeration(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Result<TransportPlan> {
    check_problem(cost, a, b)?;
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let size = m + n - 1;
    if cells.len() > 16 {
        return Err(Error::Transport("vertex enumeration limited to 16 cells".into()));
    }
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for mask in 0u32..(1 << cells.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let chosen: Vec<(usize, usize)> =
            cells.iter().enumerate().filter(|(e, _)| mask >> e & 1 == 1).map(|(_, &c)| c).collect();
        let Some(x) = peel_tree(&chosen, a, b) else {
            continue;
        };
        let value: f64 = x.iter().zip(cost).flat_map(|(r, c)| r.iter().zip(c).map(|(p, q)| p * q)).sum();
        if best.as_ref().is_none_or(|(bv, _)| value < *bv - 1e-15) {
            best = Some((value, x));
        }
    }
    let (value, matrix) = best.ok_or_else(|| Error::Transport("no feasible vertex".into()))?;
    Ok(TransportPlan { value, coupling: Coupling { matrix }, cost: cost.to_vec(), method: "vertex enumeration".into() })
}

/// Solves the flows on a candidate basis by repeatedly fixing leaf cells.
/// `None` if the cells do not form a spanning tree or a flow is negative.
fn peel_tree(cells: &[(usize, usize)], a: &[f64], b: &[f64]) -> Option<Vec<Vec<f64>>> {
    let (m, n) = (a.len(), b.len());
    let mut x = vec![vec![0.0; n]; m];
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let mut alive = vec![true; cells.len()];
    for _ in 0..cells.len() {
        let mut degree = vec![0usize; m + n];
        for (e, &(i, j)) in cells.iter().enumerate() {
            if alive[e] {
                degree[i] += 1;
                degree[m + j] += 1;
            }
        }
        let leaf = cells.iter().enumerate().find(|(e, &(i, j))| alive[*e] && (degree[i] == 1 || degree[m + j] == 1));
        let (e, &(i, j)) = leaf?;
        let q = if degree[i] == 1 { ra[i] } else { rb[j] };
        if q < -1e-12 {
            return None;
        }
        x[i][j] = q.max(0.0);
        ra[i] -= q;
        rb[j] -= q;
        alive[e] = false;
    }
    if ra.iter().chain(&rb).any(|r| r.abs() > 1e-10) {
        return None;
    }
    Some(x)
}

/// `c_ij = P_NL(y₊ᵢ, y₋ⱼ)`.
pub fn payoff_costs(
    model: &ModelSpec,
    y_plus: &DiscreteDualMeasure,
    y_minus: &DiscreteDualMeasure,
) -> Result<Vec<Vec<f64>>> {
    y_plus
        .support
        .iter()
        .map(|p| {
            y_minus
                .support
                .iter()
                .map(|q| Ok(crate::linearizer::p_nl(model, p.as_slice(), q.as_slice())?.to_f64()))
                .collect()
        })
        .collect()
}

/// Minimal transport cost between the order-parameter distributions with
/// cost `P_NL`.
pub fn kantorovich_primal(
    model: &ModelSpec,
    y_plus: &DiscreteDualMeasure,
    y_minus: &DiscreteDualMeasure,
) -> Result<TransportPlan> {
    let cost = payoff_costs(model, y_plus, y_minus)?;
    if y_plus.len() <= 3 && y_minus.len() <= 3 {
        transport_by_enumeration(&cost, &y_plus.weights, &y_minus.weights)
    } else {
        transport_simplex(&cost, &y_plus.weights, &y_minus.weights)
    }
}

/// Feasibility and value of a dual candidate `(P₊, P₋)` sampled on the
/// supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub feasible: bool,
    /// `(i, j, excess)` with `P₊(y₊ᵢ) − P₋(y₋ⱼ) − c_ij > 1e−10`.
    pub violations: Vec<(usize, usize, f64)>,
    pub dual_value: f64,
    pub primal_value: f64,
    /// `dual ≤ primal + 1e−8`.
    pub weak_duality_holds: bool,
}

pub fn kantorovich_dual_check(
    model: &ModelSpec,
    y_plus: &DiscreteDualMeasure,
    y_minus: &DiscreteDualMeasure,
    p_plus: &[f64],
    p_minus: &[f64],
) -> Result<DualReport> {
    if p_plus.len() != y_plus.len() {
        return Err(Error::DimensionMismatch { expected: y_plus.len(), got: p_plus.len() });
    }
    if p_minus.len() != y_minus.len() {
        return Err(Error::DimensionMismatch { expected: y_minus.len(), got: p_minus.len() });
    }
    let primal = kantorovich_primal(model, y_plus, y_minus)?;
    let mut violations = Vec::new();
    for (i, pp) in p_plus.iter().enumerate() {
        for (j, pm) in p_minus.iter().enumerate() {
            let excess = pp - pm - primal.cost[i][j];
            if excess > 1e-10 {
                violations.push((i, j, excess));
            }
        }
    }
    let dual_value = y_plus.weights.iter().zip(p_plus).map(|(w, p)| w * p).sum::<f64>()
        - y_minus.weights.iter().zip(p_minus).map(|(w, p)| w * p).sum::<f64>();
    Ok(DualReport {
        feasible: violations.is_empty(),
        violations,
        dual_value,
        primal_value: primal.value,
        weak_duality_holds: dual_value <= primal.value + 1e-8,
    })
}

/// The canonical dual pair `(P₊, P₋) = (P♭(·), 0)` on the supports.
pub fn canonical_pair(
    model: &ModelSpec,
    config: &SolverConfig,
    y_plus: &DiscreteDualMeasure,
    y_minus: &DiscreteDualMeasure,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ctx = GameContext::new(model, config)?;
    let p_plus = y_plus.support.iter().map(|y| Ok(ctx.inner_min(y.as_slice())?.value)).collect::<Result<_>>()?;
    Ok((p_plus, vec![0.0; y_minus.len()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let a = norm((0..m).map(|_| rng.random_range(0.1..1.0)).collect());
        let b = norm((0..n).map(|_| rng.random_range(0.1..1.0)).collect());
        let cost = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..2.0)).collect()).collect();
        (cost, a, b)
    }

    #[test]
    fn simplex_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let m = rng.random_range(1..=3);
            let n = rng.random_range(1..=3);
            let (cost, a, b) = random_problem(&mut rng, m, n);
            let s = transport_simplex(&cost, &a, &b).unwrap();
            let e = transport_by_enumeration(&cost, &a, &b).unwrap();
            assert!((s.value - e.value).abs() < 1e-12, "{} vs {}", s.value, e.value);
            assert!(s.coupling.marginal_error(&a, &b) < 1e-10);
            assert!(e.coupling.marginal_error(&a, &b) < 1e-10);
        }
    }

    #[test]
    fn degenerate_marginals() {
        // Equal weights force degenerate northwest-corner pivots.
        let a = vec![0.25; 4];
        let b = vec![0.25; 4];
        let cost: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| ((i * 3 + j * 5) % 7) as f64).collect()).collect();
        let s = transport_simplex(&cost, &a, &b).unwrap();
        // Assignment problem: brute force over permutations.
        let mut best = f64::INFINITY;
        let mut perm = [0usize, 1, 2, 3];
        permute(&mut perm, 0, &mut |p| {
            best = best.min(p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>() * 0.25)
        });
        assert!((s.value - best).abs() < 1e-12);
    }

    fn permute(p: &mut [usize; 4], k: usize, visit: &mut dyn FnMut(&[usize; 4])) {
        if k == p.len() {
            visit(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, visit);
            p.swap(k, i);
        }
    }

    #[test]
    fn cost_shift_moves_value_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (cost, a, b) = random_problem(&mut rng, 5, 6);
        let base = transport_simplex(&cost, &a, &b).unwrap();
        let shifted: Vec<Vec<f64>> = cost.iter().map(|r| r.iter().map(|c| c + 0.7).collect()).collect();
        let moved = transport_simplex(&shifted, &a, &b).unwrap();
        assert!((moved.value - base.value - 0.7).abs() < 1e-12);
        assert_eq!(moved.coupling, base.coupling);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(transport_simplex(&[vec![1.0]], &[1.0], &[0.5]).is_err());
        assert!(transport_simplex(&[vec![f64::INFINITY]], &[1.0], &[1.0]).is_err());
        let big = vec![vec![0.0; 17]; 17];
        assert!(transport_simplex(&big, &[1.0 / 17.0; 17], &[1.0 / 17.0; 17]).is_err());
    }
}
