//! Convex functions, Legendre–Fenchel conjugates and subdifferentials.
//!
//! The nonlinearities `g±` of a model are [`ConvexSpec`] values. Closed forms
//! are used wherever they exist; tabulated functions go through the discrete
//! transform [`discrete_lft`], a direct `O(n_primal · n_dual)` maximization.
//!
//! The `2 cosh x` family is intentionally not a built-in kind. Its conjugate
//! is `s·asinh(s/2) − √(4 + s²)`; supply it as a [`GridFunction`] if needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::optim::linspace;
use crate::tolerances;

/// A point of the dual space (an order parameter / Bogoliubov slope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualPoint(pub Vec<f64>);

impl DualPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConvex(format!("non-finite dual point {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for DualPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Samples of a function on a tensor grid (row-major, last axis fastest).
///
/// No convexity is required here; [`ConvexSpec::grid`] adds that check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for axis in &grid {
            if axis.is_empty() {
                return Err(Error::EmptyGrid);
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConvex("grid axes must be finite and strictly increasing".into()));
            }
        }
        let expected: usize = grid.iter().map(Vec::len).product();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConvex("grid values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on the tensor grid spanned by `axes`.
    pub fn sample<F: Fn(&[f64]) -> f64>(axes: Vec<Vec<f64>>, f: F) -> Result<Self> {
        let values = crate::optim::tensor_product(&axes).iter().map(|p| f(p)).collect();
        Self::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for d in (0..self.dim().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.grid[d + 1].len();
        }
        strides
    }

    /// Coordinates of every node, in storage order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        crate::optim::tensor_product(&self.grid)
    }

    /// Value at a multi-index.
    pub fn at(&self, idx: &[usize]) -> f64 {
        let strides = self.strides();
        self.values[idx.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Multilinear interpolation; `None` outside the grid hull.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() {
            return None;
        }
        // Per axis: (lower index, weight of upper node).
        let mut cells = Vec::with_capacity(self.dim());
        for (axis, &xi) in self.grid.iter().zip(x) {
            let n = axis.len();
            if xi < axis[0] || xi > axis[n - 1] || !xi.is_finite() {
                return None;
            }
            if n == 1 {
                cells.push((0, 0.0));
                continue;
            }
            let hi = axis.partition_point(|&a| a <= xi).clamp(1, n - 1);
            let lo = hi - 1;
            let t = (xi - axis[lo]) / (axis[hi] - axis[lo]);
            cells.push((lo, t));
        }
        let dim = self.dim();
        let mut total = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = Vec::with_capacity(dim);
            for (d, &(lo, t)) in cells.iter().enumerate() {
                let upper = corner >> d & 1 == 1;
                if upper {
                    if t == 0.0 {
                        w = 0.0;
                        break;
                    }
                    w *= t;
                    idx.push(lo + 1);
                } else {
                    w *= 1.0 - t;
                    idx.push(lo);
                }
            }
            if w != 0.0 {
                total += w * self.at(&idx);
            }
        }
        Some(total)
    }

    /// Largest violation of slope monotonicity along any grid line
    /// (zero for convex data).
    pub fn convexity_defect(&self) -> f64 {
        let strides = self.strides();
        let mut worst = 0.0f64;
        for (d, axis) in self.grid.iter().enumerate() {
            if axis.len() < 3 {
                continue;
            }
            for base in 0..self.values.len() {
                // Only start from nodes whose index along `d` is zero.
                if (base / strides[d]) % axis.len() != 0 {
                    continue;
                }
                for i in 1..axis.len() - 1 {
                    let v0 = self.values[base + (i - 1) * strides[d]];
                    let v1 = self.values[base + i * strides[d]];
                    let v2 = self.values[base + (i + 1) * strides[d]];
                    let left = (v1 - v0) / (axis[i] - axis[i - 1]);
                    let right = (v2 - v1) / (axis[i + 1] - axis[i]);
                    worst = worst.max(left - right);
                }
            }
        }
        worst
    }

    /// Default dual axes: the range of secant slopes along each axis,
    /// sampled with `n` points.
    pub fn slope_axes(&self, n: usize) -> Vec<Vec<f64>> {
        let strides = self.strides();
        (0..self.dim())
            .map(|d| {
                let axis = &self.grid[d];
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for base in 0..self.values.len() {
                    let i = (base / strides[d]) % axis.len();
                    if i + 1 >= axis.len() {
                        continue;
                    }
                    let s = (self.values[base + strides[d]] - self.values[base]) / (axis[i + 1] - axis[i]);
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
                if !lo.is_finite() {
                    lo = -1.0;
                    hi = 1.0;
                }
                if hi - lo < 1e-12 {
                    lo -= 1.0;
                    hi += 1.0;
                }
                linspace(lo, hi, n)
            })
            .collect()
    }
}

/// The shape of a convex function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexKind {
    /// `β‖x‖²/2`.
    Quadratic { beta: f64, dim: usize },
    /// `Σ|xᵢ|`; its conjugate is the indicator of the unit sup-norm ball.
    AbsSum { dim: usize },
    /// Convex samples on a grid, interpolated multilinearly, `+∞` outside.
    Grid(GridFunction),
    /// `base(x) + slope·x` (an external field).
    LinearShift { slope: Vec<f64>, base: Box<ConvexSpec> },
}

/// A convex function `g` together with its conjugate `g*` and `∂g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConvexSpec")]
pub struct ConvexSpec {
    #[serde(flatten)]
    pub kind: ConvexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Deserialize)]
struct RawConvexSpec {
    #[serde(flatten)]
    kind: ConvexKind,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<RawConvexSpec> for ConvexSpec {
    type Error = Error;

    fn try_from(raw: RawConvexSpec) -> Result<Self> {
        let spec = ConvexSpec { kind: raw.kind, label: raw.label };
        spec.validate()?;
        Ok(spec)
    }
}

/// Componentwise interval hull of a subdifferential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub is_singleton: bool,
}

impl SubdiffSet {
    fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let is_singleton = lower.iter().zip(&upper).all(|(a, b)| (b - a).abs() <= tolerances::SINGLETON);
        Self { lower, upper, is_singleton }
    }

    pub fn singleton(point: Vec<f64>) -> Self {
        Self::new(point.clone(), point)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.distance(y) <= tol
    }

    /// Euclidean distance from `y` to the box.
    pub fn distance(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&a, &b))| {
                let d = if v < a {
                    a - v
                } else if v > b {
                    v - b
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Midpoint of the box (the gradient for singletons).
    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

impl ConvexSpec {
    pub fn quadratic(beta: f64, dim: usize) -> Result<Self> {
        let s = Self { kind: ConvexKind::Quadratic { beta, dim }, label: None };
        s.validate()?;
        Ok(s)
    }

    pub fn abs_sum(dim: usize) -> Result<Self> {
        let s = Self { kind: ConvexKind::AbsSum { dim }, label: None };
        s.validate()?;
        Ok(s)
    }

    /// A tabulated convex function; rejects non-convex samples and axes with
    /// fewer than three points.
    pub fn grid(g: GridFunction) -> Result<Self> {
        let s = Self { kind: ConvexKind::Grid(g), label: None };
        s.validate()?;
        Ok(s)
    }

    pub fn linear_shift(slope: Vec<f64>, base: ConvexSpec) -> Result<Self> {
        let s = Self { kind: ConvexKind::LinearShift { slope, base: Box::new(base) }, label: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ConvexKind::Quadratic { beta, dim } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(Error::InvalidConvex(format!("quadratic requires beta > 0, got {beta}")));
                }
                if *dim == 0 {
                    return Err(Error::InvalidConvex("dimension must be positive".into()));
                }
            }
            ConvexKind::AbsSum { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidConvex("dimension must be positive".into()));
                }
            }
            ConvexKind::Grid(g) => {
                let g = GridFunction::new(g.grid.clone(), g.values.clone())?;
                if g.grid.iter().any(|a| a.len() < 3) {
                    return Err(Error::InvalidConvex("grid axes need at least 3 points".into()));
                }
                let defect = g.convexity_defect();
                if defect > tolerances::CONVEXITY {
                    return Err(Error::InvalidConvex(format!("samples are not convex (slope defect {defect:e})")));
                }
            }
            ConvexKind::LinearShift { slope, base } => {
                base.validate()?;
                if slope.len() != base.dim() {
                    return Err(Error::DimensionMismatch { expected: base.dim(), got: slope.len() });
                }
                if slope.iter().any(|s| !s.is_finite()) {
                    return Err(Error::InvalidConvex("non-finite slope".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ConvexKind::Quadratic { dim, .. } | ConvexKind::AbsSum { dim } => *dim,
            ConvexKind::Grid(g) => g.dim(),
            ConvexKind::LinearShift { base, .. } => base.dim(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    /// `g(x)`; `+∞` outside the effective domain.
    pub fn value(&self, x: &[f64]) -> Result<ExtReal> {
        self.check_dim(x.len())?;
        Ok(match &self.kind {
            ConvexKind::Quadratic { beta, .. } => ExtReal::Finite(0.5 * beta * dot(x, x)),
            ConvexKind::AbsSum { .. } => ExtReal::Finite(x.iter().map(|v| v.abs()).sum()),
            ConvexKind::Grid(g) => g.interpolate(x).map_or(ExtReal::PosInf, ExtReal::Finite),
            ConvexKind::LinearShift { slope, base } => base.value(x)? + dot(slope, x),
        })
    }

    /// The Legendre–Fenchel conjugate `g*(y) = sup_x {y·x − g(x)}`.
    pub fn conjugate(&self, y: &[f64]) -> Result<ExtReal> {
        self.check_dim(y.len())?;
        Ok(match &self.kind {
            ConvexKind::Quadratic { beta, .. } => ExtReal::Finite(dot(y, y) / (2.0 * beta)),
            ConvexKind::AbsSum { .. } => {
                if y.iter().all(|v| v.abs() <= 1.0) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexKind::Grid(g) => {
                let nodes = g.nodes();
                let best = nodes.iter().zip(&g.values).map(|(x, v)| dot(y, x) - v).fold(f64::NEG_INFINITY, f64::max);
                ExtReal::Finite(best)
            }
            ConvexKind::LinearShift { slope, base } => {
                let shifted: Vec<f64> = y.iter().zip(slope).map(|(a, b)| a - b).collect();
                base.conjugate(&shifted)?
            }
        })
    }

    /// Box containing `dom g*` (unbounded coordinates are `±∞`).
    pub fn conjugate_domain(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ConvexKind::AbsSum { dim } => vec![(-1.0, 1.0); *dim],
            ConvexKind::LinearShift { slope, base } => {
                base.conjugate_domain().into_iter().zip(slope).map(|((a, b), s)| (a + s, b + s)).collect()
            }
            _ => vec![(f64::NEG_INFINITY, f64::INFINITY); self.dim()],
        }
    }

    /// `∂g(x)` as a componentwise interval hull.
    pub fn subdiff(&self, x: &[f64]) -> Result<SubdiffSet> {
        self.check_dim(x.len())?;
        Ok(match &self.kind {
            ConvexKind::Quadratic { beta, .. } => SubdiffSet::singleton(x.iter().map(|v| beta * v).collect()),
            ConvexKind::AbsSum { .. } => {
                let lower = x.iter().map(|&v| if v > 0.0 { 1.0 } else { -1.0 }).collect();
                let upper = x.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
                SubdiffSet::new(lower, upper)
            }
            ConvexKind::Grid(g) => grid_subdiff(g, x)?,
            ConvexKind::LinearShift { slope, base } => {
                let s = base.subdiff(x)?;
                SubdiffSet::new(
                    s.lower.iter().zip(slope).map(|(a, b)| a + b).collect(),
                    s.upper.iter().zip(slope).map(|(a, b)| a + b).collect(),
                )
            }
        })
    }

    /// `∇g(x)`, or [`Error::NotDifferentiable`] for kinds with kinks.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_differentiable() {
            return Err(Error::NotDifferentiable);
        }
        Ok(self.subdiff(x)?.center())
    }

    /// Whether `g` is Gateaux-differentiable everywhere.
    pub fn is_differentiable(&self) -> bool {
        match &self.kind {
            ConvexKind::Quadratic { .. } => true,
            ConvexKind::LinearShift { base, .. } => base.is_differentiable(),
            _ => false,
        }
    }

    /// Whether `g*` is strictly convex (unique inner minimizers).
    pub fn has_strictly_convex_conjugate(&self) -> bool {
        self.is_differentiable()
    }
}

fn grid_subdiff(g: &GridFunction, x: &[f64]) -> Result<SubdiffSet> {
    let boundary = || Error::BoundarySubdifferential(x.to_vec());
    let mut lower = Vec::with_capacity(x.len());
    let mut upper = Vec::with_capacity(x.len());
    for (d, axis) in g.grid.iter().enumerate() {
        let n = axis.len();
        let xi = x[d];
        if !(xi > axis[0] && xi < axis[n - 1]) {
            return Err(boundary());
        }
        let at = |t: f64| {
            let mut p = x.to_vec();
            p[d] = t;
            g.interpolate(&p).ok_or_else(boundary)
        };
        let hi = axis.partition_point(|&a| a <= xi);
        let scale = (axis[n - 1] - axis[0]).abs().max(1.0);
        let on_node = (xi - axis[hi - 1]).abs() <= 1e-12 * scale;
        if on_node {
            let i = hi - 1;
            let v = at(axis[i])?;
            lower.push((v - at(axis[i - 1])?) / (axis[i] - axis[i - 1]));
            upper.push((at(axis[i + 1])? - v) / (axis[i + 1] - axis[i]));
        } else {
            let s = (at(axis[hi])? - at(axis[hi - 1])?) / (axis[hi] - axis[hi - 1]);
            lower.push(s);
            upper.push(s);
        }
    }
    Ok(SubdiffSet::new(lower, upper))
}

/// `g*(y)`.
pub fn conjugate(g: &ConvexSpec, y: &DualPoint) -> Result<ExtReal> {
    g.conjugate(y.as_slice())
}

/// `∂g(x)`.
pub fn subdiff(g: &ConvexSpec, x: &[f64]) -> Result<SubdiffSet> {
    g.subdiff(x)
}

/// Discrete Legendre–Fenchel transform: `g*(y_j) = max_i (y_j·x_i − g(x_i))`
/// on the tensor grid `dual_axes`.
///
/// The transform only sees the primal nodes, so for slopes outside the range
/// of secant slopes the result grows linearly instead of jumping to `+∞`.
pub fn discrete_lft(g: &GridFunction, dual_axes: &[Vec<f64>]) -> Result<GridFunction> {
    if dual_axes.is_empty() || dual_axes.iter().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    if dual_axes.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: dual_axes.len() });
    }
    let primal = g.nodes();
    let duals = crate::optim::tensor_product(dual_axes);
    let values = duals
        .iter()
        .map(|y| primal.iter().zip(&g.values).map(|(x, v)| dot(y, x) - v).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    GridFunction::new(dual_axes.to_vec(), values)
}

/// `g**` on `primal_axes`, computed through the dual grid `dual_axes`.
///
/// Always `g** ≤ g` on the input nodes; for convex input whose slopes are
/// covered by the dual grid the two agree up to the dual spacing.
pub fn biconjugate(g: &GridFunction, primal_axes: &[Vec<f64>], dual_axes: &[Vec<f64>]) -> Result<GridFunction> {
    let star = discrete_lft(g, dual_axes)?;
    discrete_lft(&star, primal_axes)
}

/// Evidence that `λ‖y‖ − g*(y)` falls below its value at the origin
/// outside a ball, confining the game's optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub lambda: f64,
    pub safe_radius: f64,
    pub margin: f64,
    /// `(radius, sup over the sphere of λ‖y‖ − g*(y))`, finite values only.
    pub decay_samples: Vec<(f64, f64)>,
}

pub(crate) fn sphere_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = Vec::new();
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; dim];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            if dim <= 8 {
                let scale = 1.0 / (dim as f64).sqrt();
                for mask in 0..(1u32 << dim) {
                    dirs.push((0..dim).map(|i| if mask >> i & 1 == 1 { -scale } else { scale }).collect());
                }
            }
            dirs
        }
    }
}

/// Doubles a radius `R` (from 1) until
/// `sup_{‖y‖ ∈ [R, 2R]} {λ‖y‖ − g*(y)} < −g*(0) − margin`.
///
/// `gstar` is any conjugate view. Along rays the objective is concave, so
/// once it drops below its value at the origin it keeps decreasing; the
/// shell test therefore certifies the whole exterior of `B(0, R)`.
pub fn growth_radius_with<F>(gstar: F, dim: usize, lambda: f64, margin: f64) -> Result<GrowthCertificate>
where
    F: Fn(&[f64]) -> ExtReal,
{
    let reference = match -gstar(&vec![0.0; dim]) {
        ExtReal::Finite(v) => v,
        _ => return Err(Error::NoLinearGrowth(lambda)),
    };
    if dim == 0 {
        return Ok(GrowthCertificate { lambda, safe_radius: 1.0, margin, decay_samples: Vec::new() });
    }
    let dirs = sphere_directions(dim);
    let sphere_sup = |r: f64| -> ExtReal {
        dirs.iter()
            .map(|u| {
                let y: Vec<f64> = u.iter().map(|c| c * r).collect();
                ExtReal::Finite(lambda * r) - gstar(&y)
            })
            .fold(ExtReal::NegInf, ExtReal::max)
    };
    let threshold = ExtReal::Finite(reference - margin);
    let mut radius = 1.0;
    for _ in 0..tolerances::GROWTH_MAX_DOUBLINGS {
        let shell = (0..=8).map(|j| sphere_sup(radius * (1.0 + j as f64 / 8.0))).fold(ExtReal::NegInf, ExtReal::max);
        if shell < threshold {
            let decay_samples = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0]
                .iter()
                .filter_map(|&f| sphere_sup(radius * f).finite().map(|v| (radius * f, v)))
                .collect();
            return Ok(GrowthCertificate { lambda, safe_radius: radius, margin, decay_samples });
        }
        radius *= 2.0;
    }
    Err(Error::NoLinearGrowth(lambda))
}

/// Growth certificate for the conjugate of `g` at slope `lambda`, with the
/// default margin.
pub fn growth_radius(g: &ConvexSpec, lambda: f64) -> Result<GrowthCertificate> {
    growth_radius_margin(g, lambda, tolerances::GROWTH_MARGIN)
}

pub fn growth_radius_margin(g: &ConvexSpec, lambda: f64, margin: f64) -> Result<GrowthCertificate> {
    growth_radius_with(|y| g.conjugate(y).unwrap_or(ExtReal::PosInf), g.dim(), lambda, margin)
}
