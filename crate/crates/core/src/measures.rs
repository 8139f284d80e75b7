//! Alphabets, locally constant potentials and shift-invariant measures.
//!
//! Words are encoded as integers in base `k`, first symbol most significant:
//! `(w₁, …, w_L) ↦ Σ wᵢ k^{L−i}`. A potential of memory `m` reads the
//! first `m` symbols of a sequence.
//!
//! Entropy is always *relative to the a priori product measure* `m⊗`
//! (natural logarithm), so it is non-positive and vanishes exactly at `m⊗`.
//! The Shannon entropy rate is recovered as `h + log k` for uniform `m`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

/// `k^len`, or `None` on overflow.
pub fn word_count(k: usize, len: usize) -> Option<usize> {
    k.checked_pow(len as u32)
}

/// Decodes a word index into its symbols.
pub fn decode_word(mut idx: usize, k: usize, len: usize) -> Vec<usize> {
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    w
}

/// Encodes symbols into a word index.
pub fn encode_word(word: &[usize], k: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * k + s)
}

/// Finite alphabet `{0, …, k−1}` with full-support a priori weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlphabet")]
pub struct AprioriAlphabet {
    k: usize,
    m: Vec<f64>,
}

#[derive(Deserialize)]
struct RawAlphabet {
    k: usize,
    #[serde(default)]
    m: Option<Vec<f64>>,
}

impl TryFrom<RawAlphabet> for AprioriAlphabet {
    type Error = Error;

    fn try_from(raw: RawAlphabet) -> Result<Self> {
        match raw.m {
            Some(m) => {
                if m.len() != raw.k {
                    return Err(Error::InvalidAlphabet(format!("k = {} but {} weights", raw.k, m.len())));
                }
                Self::new(m)
            }
            None => Self::uniform(raw.k),
        }
    }
}

impl AprioriAlphabet {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.len() < 2 {
            return Err(Error::InvalidAlphabet("need at least two symbols".into()));
        }
        if m.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidAlphabet("a priori weights must be positive".into()));
        }
        let total: f64 = m.iter().sum();
        if (total - 1.0).abs() > tolerances::PROBABILITY_SUM {
            return Err(Error::InvalidAlphabet(format!("weights sum to {total}")));
        }
        Ok(Self { k: m.len(), m })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidAlphabet("need at least two symbols".into()));
        }
        Ok(Self { k, m: vec![1.0 / k as f64; k] })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.m
    }

    /// The a priori product measure `m⊗`.
    pub fn product_measure(&self) -> MarkovMeasure {
        MarkovMeasure::product(self.m.clone()).expect("alphabet weights form a distribution")
    }
}

/// A potential depending on the first `memory` symbols, tabulated over
/// all `k^memory` words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderPotential {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    k: usize,
    memory: usize,
    table: Vec<f64>,
}

impl CylinderPotential {
    pub fn new(k: usize, memory: usize, table: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidPotential("alphabet needs at least two symbols".into()));
        }
        if memory == 0 || memory > tolerances::MAX_MEMORY {
            return Err(Error::InvalidPotential(format!(
                "memory must be in 1..={}, got {memory}",
                tolerances::MAX_MEMORY
            )));
        }
        let expected = word_count(k, memory).ok_or_else(|| Error::InvalidPotential("table too large".into()))?;
        if table.len() != expected {
            return Err(Error::InvalidPotential(format!("table has {} entries, expected {expected}", table.len())));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("table entries must be finite".into()));
        }
        Ok(Self { name: None, k, memory, table })
    }

    /// Tabulates `f` over all words of length `memory`.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(k: usize, memory: usize, mut f: F) -> Result<Self> {
        let n = word_count(k, memory).ok_or_else(|| Error::InvalidPotential("table too large".into()))?;
        Self::new(k, memory, (0..n).map(|i| f(&decode_word(i, k, memory))).collect())
    }

    pub fn zero(k: usize) -> Self {
        Self::constant(k, 0.0)
    }

    pub fn constant(k: usize, c: f64) -> Self {
        Self::new(k, 1, vec![c; k]).expect("valid constant potential")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Value at a sequence starting with `word` (only the first `memory`
    /// symbols are read).
    pub fn eval(&self, word: &[usize]) -> Result<f64> {
        if word.len() < self.memory {
            return Err(Error::WordTooShort { len: word.len(), memory: self.memory });
        }
        Ok(self.table[encode_word(&word[..self.memory], self.k)])
    }

    /// The same function tabulated over longer words.
    pub fn pad(&self, memory: usize) -> Result<Self> {
        if memory < self.memory {
            return Err(Error::InvalidPotential(format!("cannot shrink memory {} to {memory}", self.memory)));
        }
        let extra = word_count(self.k, memory - self.memory).expect("memory within cap");
        let mut out = Self::from_fn(self.k, memory, |_| 0.0)?;
        for (i, v) in out.table.iter_mut().enumerate() {
            *v = self.table[i / extra];
        }
        out.name = self.name.clone();
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { name: None, k: self.k, memory: self.memory, table: self.table.iter().map(|v| c * v).collect() }
    }

    /// `self + c·other`, padded to the larger memory.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::AlphabetMismatch(self.k, other.k));
        }
        let mem = self.memory.max(other.memory);
        let a = self.pad(mem)?;
        let b = other.pad(mem)?;
        let table = a.table.iter().zip(&b.table).map(|(x, y)| x + c * y).collect();
        Self::new(self.k, mem, table)
    }

    /// `Σ cᵢ φᵢ` over a non-empty family sharing an alphabet.
    pub fn linear_combination(k: usize, coeffs: &[f64], pots: &[&CylinderPotential]) -> Result<Self> {
        if coeffs.len() != pots.len() {
            return Err(Error::DimensionMismatch { expected: pots.len(), got: coeffs.len() });
        }
        let mut acc = Self::zero(k);
        for (c, p) in coeffs.iter().zip(pots) {
            acc = acc.add_scaled(p, *c)?;
        }
        Ok(acc)
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A finite-order stationary Markov measure on the full shift.
///
/// Order 0 is a product measure with marginal `stationary`. Order `r ≥ 1`
/// uses the `k^r` words of length `r` as states; `transitions[u][v]` is
/// non-zero only when `v` is `u` shifted by one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarkov")]
pub struct MarkovMeasure {
    k: usize,
    order: usize,
    stationary: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transitions: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RawMarkov {
    k: usize,
    order: usize,
    #[serde(default)]
    stationary: Option<Vec<f64>>,
    #[serde(default)]
    transitions: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawMarkov> for MarkovMeasure {
    type Error = Error;

    fn try_from(raw: RawMarkov) -> Result<Self> {
        match (raw.order, raw.stationary, raw.transitions) {
            (0, Some(p), None) => {
                if p.len() != raw.k {
                    return Err(Error::AlphabetMismatch(raw.k, p.len()));
                }
                Self::product(p)
            }
            (0, _, _) => Err(Error::InvalidMeasure("order-0 measure needs stationary and no transitions".into())),
            (r, Some(pi), Some(q)) => Self::with_stationary(raw.k, r, q, pi),
            (r, None, Some(q)) => Self::from_transitions(raw.k, r, q),
            (_, _, None) => Err(Error::InvalidMeasure("missing transitions".into())),
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidMeasure(format!("{what} has negative or non-finite entries")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tolerances::PROBABILITY_SUM {
        return Err(Error::InvalidMeasure(format!("{what} sums to {total}")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MarkovMeasure {
    /// Product (Bernoulli) measure with one-symbol marginal `p`.
    pub fn product(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidMeasure("need at least two symbols".into()));
        }
        check_distribution(&p, "marginal")?;
        Ok(Self { k: p.len(), order: 0, stationary: p, transitions: None })
    }

    fn check_transitions(k: usize, order: usize, q: &[Vec<f64>]) -> Result<usize> {
        if order == 0 {
            return Err(Error::InvalidMeasure("use `product` for order 0".into()));
        }
        if order > tolerances::MAX_MEMORY {
            return Err(Error::InvalidMeasure(format!("order {order} above cap")));
        }
        let n = word_count(k, order).ok_or_else(|| Error::InvalidMeasure("state space too large".into()))?;
        if q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidMeasure(format!("transition matrix must be {n}×{n}")));
        }
        for (u, row) in q.iter().enumerate() {
            check_distribution(row, &format!("transition row {u}"))?;
            for (v, &x) in row.iter().enumerate() {
                if x > 0.0 && (u * k) % n != v - v % k {
                    return Err(Error::InvalidMeasure(format!("transition {u}→{v} does not shift the word")));
                }
            }
        }
        Ok(n)
    }

    /// Order-`r` chain whose stationary vector is computed; the transition
    /// support must be irreducible and aperiodic.
    pub fn from_transitions(k: usize, order: usize, q: Vec<Vec<f64>>) -> Result<Self> {
        let n = Self::check_transitions(k, order, &q)?;
        let all: Vec<bool> = vec![true; n];
        if !strongly_connected(&q, &all) || period(&q, &all) != 1 {
            return Err(Error::NonErgodic);
        }
        let stationary = stationary_vector(&q)?;
        Ok(Self { k, order, stationary, transitions: Some(q) })
    }

    /// Order-`r` chain with an explicitly supplied stationary vector (used for
    /// reducible or periodic chains).
    pub fn with_stationary(k: usize, order: usize, q: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let n = Self::check_transitions(k, order, &q)?;
        if pi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pi.len() });
        }
        check_distribution(&pi, "stationary vector")?;
        let residual = stationarity_residual(&q, &pi);
        if residual > tolerances::STATIONARITY {
            return Err(Error::InvalidMeasure(format!("πQ ≠ π (residual {residual:e})")));
        }
        Ok(Self { k, order, stationary: pi, transitions: Some(q) })
    }

    /// Order-`r` chain from next-symbol kernels `kernel[state][b]`.
    pub fn from_kernel(k: usize, order: usize, kernel: Vec<Vec<f64>>) -> Result<Self> {
        let n = word_count(k, order).ok_or_else(|| Error::InvalidMeasure("state space too large".into()))?;
        if kernel.len() != n || kernel.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidMeasure(format!("kernel must be {n}×{k}")));
        }
        let mut q = vec![vec![0.0; n]; n];
        for (u, row) in kernel.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                q[u][(u * k + b) % n] = x;
            }
        }
        Self::from_transitions(k, order, q)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transitions(&self) -> Option<&[Vec<f64>]> {
        self.transitions.as_deref()
    }

    fn states(&self) -> usize {
        self.stationary.len()
    }

    /// Probability of appending `b` in state `u`.
    pub fn kernel(&self, u: usize, b: usize) -> f64 {
        match &self.transitions {
            None => self.stationary[b],
            Some(q) => q[u][(u * self.k + b) % self.states()],
        }
    }

    /// `‖πQ − π‖∞` (zero for products).
    pub fn stationarity_residual(&self) -> f64 {
        self.transitions.as_ref().map_or(0.0, |q| stationarity_residual(q, &self.stationary))
    }

    /// Probabilities of all `k^len` words (cylinder measures).
    pub fn word_probs(&self, len: usize) -> Vec<f64> {
        let k = self.k;
        if self.order == 0 {
            let mut probs = vec![1.0];
            for _ in 0..len {
                probs = probs.iter().flat_map(|&p| self.stationary.iter().map(move |&q| p * q)).collect();
            }
            return probs;
        }
        let r = self.order;
        if len <= r {
            let group = word_count(k, r - len).expect("within cap");
            let mut probs = vec![0.0; word_count(k, len).expect("within cap")];
            for (s, &p) in self.stationary.iter().enumerate() {
                probs[s / group] += p;
            }
            return probs;
        }
        let n = self.states();
        let mut probs = self.stationary.clone();
        for _ in r..len {
            let mut next = Vec::with_capacity(probs.len() * k);
            for (w, &p) in probs.iter().enumerate() {
                let u = w % n;
                for b in 0..k {
                    next.push(p * self.kernel(u, b));
                }
            }
            probs = next;
        }
        probs
    }

    /// Probability of a single word.
    pub fn word_prob(&self, word: &[usize]) -> f64 {
        let k = self.k;
        if self.order == 0 {
            return word.iter().map(|&a| self.stationary[a]).product();
        }
        let r = self.order;
        if word.len() <= r {
            let group = word_count(k, r - word.len()).expect("within cap");
            let start = encode_word(word, k) * group;
            return self.stationary[start..start + group].iter().sum();
        }
        let n = self.states();
        let mut u = encode_word(&word[..r], k);
        let mut p = self.stationary[u];
        for &b in &word[r..] {
            p *= self.kernel(u, b);
            u = (u * k + b) % n;
        }
        p
    }

    /// Whether the measure is ergodic: the transition graph restricted to
    /// the support of `π` is strongly connected.
    pub fn is_ergodic(&self) -> bool {
        match &self.transitions {
            None => true,
            Some(q) => {
                let support: Vec<bool> = self.stationary.iter().map(|&p| p > 0.0).collect();
                strongly_connected(q, &support)
            }
        }
    }

    /// Whether the chain is irreducible and aperiodic on the support of `π`.
    pub fn is_mixing(&self) -> bool {
        match &self.transitions {
            None => true,
            Some(q) => {
                let support: Vec<bool> = self.stationary.iter().map(|&p| p > 0.0).collect();
                strongly_connected(q, &support) && period(q, &support) == 1
            }
        }
    }

    /// A path of `n` symbols started from the stationary distribution.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        let k = self.k;
        let mut path = Vec::with_capacity(n);
        if self.order == 0 {
            for _ in 0..n {
                path.push(sample_index(rng, &self.stationary));
            }
            return path;
        }
        let r = self.order;
        let states = self.states();
        let mut u = sample_index(rng, &self.stationary);
        path.extend(decode_word(u, k, r));
        let q = self.transitions.as_ref().expect("order ≥ 1 has transitions");
        while path.len() < n {
            let v = sample_index(rng, &q[u]);
            path.push(v % k);
            u = v;
        }
        debug_assert!(u < states);
        path.truncate(n);
        path
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let t: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if t < acc {
                return i;
            }
        }
    }
    last
}

fn stationarity_residual(q: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = pi.len();
    (0..n).map(|v| ((0..n).map(|u| pi[u] * q[u][v]).sum::<f64>() - pi[v]).abs()).fold(0.0, f64::max)
}

fn reachable(q: &[Vec<f64>], support: &[bool], start: usize, reverse: bool) -> Vec<bool> {
    let n = q.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let edge = if reverse { q[v][u] } else { q[u][v] };
            if edge > 0.0 && support[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn strongly_connected(q: &[Vec<f64>], support: &[bool]) -> bool {
    let Some(start) = support.iter().position(|&s| s) else {
        return false;
    };
    let fwd = reachable(q, support, start, false);
    let bwd = reachable(q, support, start, true);
    (0..q.len()).all(|i| !support[i] || (fwd[i] && bwd[i]))
}

/// Period of a strongly connected graph: gcd of `level(u) + 1 − level(v)`
/// over edges, with BFS levels from one vertex.
fn period(q: &[Vec<f64>], support: &[bool]) -> usize {
    let n = q.len();
    let Some(start) = support.iter().position(|&s| s) else {
        return 0;
    };
    let mut level = vec![usize::MAX; n];
    level[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut g = 0;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if q[u][v] > 0.0 && support[v] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
    }
    g
}

/// Solves `πQ = π`, `Σπ = 1` for an irreducible chain by LU with one
/// balance equation replaced by the normalization.
fn stationary_vector(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = q.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = q[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::NoConvergence("singular stationary system".into()))?;
    let mut pi: Vec<f64> = sol.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    let residual = stationarity_residual(q, &pi);
    if residual > tolerances::STATIONARITY {
        return Err(Error::NoConvergence(format!("stationary residual {residual:e}")));
    }
    Ok(pi)
}

fn check_alphabet(mu: &MarkovMeasure, phi: &CylinderPotential) -> Result<()> {
    if mu.k != phi.k {
        return Err(Error::AlphabetMismatch(mu.k, phi.k));
    }
    Ok(())
}

/// `∫ φ dμ`.
pub fn expectation(mu: &MarkovMeasure, phi: &CylinderPotential) -> Result<f64> {
    check_alphabet(mu, phi)?;
    let probs = mu.word_probs(phi.memory);
    Ok(probs.iter().zip(&phi.table).map(|(p, v)| p * v).sum())
}

fn relative_term(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).ln()
    } else {
        0.0
    }
}

/// Entropy of `μ` relative to `m⊗`.
pub fn entropy_rate(mu: &MarkovMeasure, alphabet: &AprioriAlphabet) -> Result<f64> {
    if mu.k != alphabet.k {
        return Err(Error::AlphabetMismatch(mu.k, alphabet.k));
    }
    let m = &alphabet.m;
    if mu.order == 0 {
        return Ok(-mu.stationary.iter().zip(m).map(|(&p, &w)| relative_term(p, w)).sum::<f64>());
    }
    let mut h = 0.0;
    for (u, &pu) in mu.stationary.iter().enumerate() {
        if pu == 0.0 {
            continue;
        }
        let row: f64 = (0..mu.k).map(|b| relative_term(mu.kernel(u, b), m[b])).sum();
        h -= pu * row;
    }
    Ok(h)
}

/// `n⁻¹ Σ_{j<n} φ(T^j w)` with the word closed up periodically.
pub fn birkhoff_average(phi: &CylinderPotential, word: &[usize]) -> Result<f64> {
    let n = word.len();
    if n < phi.memory || n == 0 {
        return Err(Error::WordTooShort { len: n, memory: phi.memory });
    }
    let k = phi.k;
    let mut total = 0.0;
    for j in 0..n {
        let idx = (0..phi.memory).fold(0, |acc, i| acc * k + word[(j + i) % n]);
        total += phi.table[idx];
    }
    Ok(total / n as f64)
}

/// Average of `φ` over the `n − memory + 1` windows that fit inside `word`.
pub fn birkhoff_average_open(phi: &CylinderPotential, word: &[usize]) -> Result<f64> {
    let n = word.len();
    if n < phi.memory || n == 0 {
        return Err(Error::WordTooShort { len: n, memory: phi.memory });
    }
    let windows = n - phi.memory + 1;
    let total: f64 = (0..windows).map(|j| phi.table[encode_word(&word[j..j + phi.memory], phi.k)]).sum();
    Ok(total / windows as f64)
}

/// One component of an explicit convex combination of measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub measure: MarkovMeasure,
    pub ergodic: bool,
}

/// A finite mixture `Σ λᵢ νᵢ`; the weights play the role of the Choquet
/// decomposition when every component is ergodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MixtureComponent>", into = "Vec<MixtureComponent>")]
pub struct MixtureMeasure {
    components: Vec<MixtureComponent>,
}

impl TryFrom<Vec<MixtureComponent>> for MixtureMeasure {
    type Error = Error;

    fn try_from(components: Vec<MixtureComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<MixtureMeasure> for Vec<MixtureComponent> {
    fn from(m: MixtureMeasure) -> Self {
        m.components
    }
}

impl MixtureMeasure {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("empty mixture".into()));
        }
        let k = components[0].measure.k;
        for c in &components {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidMeasure(format!("mixture weight {} outside (0, 1]", c.weight)));
            }
            if c.measure.k != k {
                return Err(Error::AlphabetMismatch(k, c.measure.k));
            }
            if c.ergodic && !c.measure.is_ergodic() {
                return Err(Error::InvalidMeasure("component flagged ergodic is not".into()));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > tolerances::PROBABILITY_SUM {
            return Err(Error::InvalidMeasure(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    /// Mixture of ergodic components with the given weights.
    pub fn ergodic(parts: Vec<(f64, MarkovMeasure)>) -> Result<Self> {
        Self::new(
            parts.into_iter().map(|(weight, measure)| MixtureComponent { weight, measure, ergodic: true }).collect(),
        )
    }

    pub fn single(measure: MarkovMeasure) -> Result<Self> {
        let ergodic = measure.is_ergodic();
        Self::new(vec![MixtureComponent { weight: 1.0, measure, ergodic }])
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components[0].measure.k
    }

    pub fn all_ergodic(&self) -> bool {
        self.components.iter().all(|c| c.ergodic)
    }

    pub fn word_probs(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; word_count(self.k(), len).expect("within cap")];
        for c in &self.components {
            for (o, p) in out.iter_mut().zip(c.measure.word_probs(len)) {
                *o += c.weight * p;
            }
        }
        out
    }
}

/// `Σ λᵢ ∫ φ dνᵢ`.
pub fn mixture_expectation(mix: &MixtureMeasure, phi: &CylinderPotential) -> Result<f64> {
    mix.components.iter().map(|c| Ok(c.weight * expectation(&c.measure, phi)?)).sum()
}

/// `Σ λᵢ h(νᵢ)` (entropy is affine).
pub fn mixture_entropy(mix: &MixtureMeasure, alphabet: &AprioriAlphabet) -> Result<f64> {
    mix.components.iter().map(|c| Ok(c.weight * entropy_rate(&c.measure, alphabet)?)).sum()
}
