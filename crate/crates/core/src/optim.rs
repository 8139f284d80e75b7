//! Derivative-free minimization primitives.
//!
//! All routines minimize; maximize by negating. Objective values may be
//! `f64::INFINITY` outside an effective domain.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `n` equally spaced points covering `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// All points of the tensor grid with `n` points per axis, last axis fastest.
pub fn tensor_grid(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(&a, &b)| linspace(a, b, n)).collect();
    tensor_product(&axes)
}

/// Cartesian product of axes, last axis fastest. An empty axis list yields
/// the single empty point.
pub fn tensor_product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
/// Returns the best point evaluated and its value.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Coarse scan of `[lo, hi]` followed by golden-section refinement on the
/// bracket around the best sample. Exact for convex objectives.
pub fn scan_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, coarse: usize, tol: f64) -> (f64, f64) {
    if hi - lo <= tol {
        let x = 0.5 * (lo + hi);
        return (x, f(x));
    }
    let xs = linspace(lo, hi, coarse.max(3));
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let i = argmin(&vals);
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(xs.len() - 1)];
    let (x, v) = golden_section(&f, a, b, tol);
    if v <= vals[i] {
        (x, v)
    } else {
        (xs[i], vals[i])
    }
}

/// Minimizes a convex function over the box `[lo, hi]`.
///
/// One dimension uses [`scan_golden`]; higher dimensions use cyclic
/// coordinate descent with a golden-section line search per coordinate.
pub fn minimize_convex_box<F: Fn(&[f64]) -> f64>(f: F, lo: &[f64], hi: &[f64], tol: f64) -> (Vec<f64>, f64) {
    let dim = lo.len();
    match dim {
        0 => (Vec::new(), f(&[])),
        1 => {
            let (x, v) = scan_golden(|t| f(&[t]), lo[0], hi[0], 33, tol);
            (vec![x], v)
        }
        _ => {
            // Start from the best node of a coarse grid.
            let starts = tensor_grid(lo, hi, 9);
            let vals: Vec<f64> = starts.iter().map(|p| f(p)).collect();
            let x0 = starts[argmin(&vals)].clone();
            coordinate_descent(&f, lo, hi, x0, tol, 2000)
        }
    }
}

/// Cyclic coordinate descent with golden-section line searches.
pub fn coordinate_descent<F: Fn(&[f64]) -> f64>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    let mut width: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / 8.0).collect();
    for _ in 0..max_sweeps {
        let mut moved = 0.0f64;
        for i in 0..x.len() {
            let a = (x[i] - width[i]).max(lo[i]);
            let b = (x[i] + width[i]).min(hi[i]);
            let (t, v) = golden_section(
                |t| {
                    let mut probe = x.clone();
                    probe[i] = t;
                    f(&probe)
                },
                a,
                b,
                tol * 0.1,
            );
            if v < fx {
                let step = (t - x[i]).abs();
                moved = moved.max(step);
                // Keep the search window proportional to recent steps, but
                // widen it again when the minimizer sits on the window edge.
                let on_edge = (t - a).abs() < 1e-9 * width[i].max(1.0) || (t - b).abs() < 1e-9 * width[i].max(1.0);
                width[i] = if on_edge { (width[i] * 2.0).min(hi[i] - lo[i]) } else { (4.0 * step).max(16.0 * tol) };
                x[i] = t;
                fx = v;
            } else {
                width[i] = (width[i] * 0.5).max(16.0 * tol);
            }
        }
        if moved <= tol && width.iter().all(|&w| w <= 64.0 * tol) {
            break;
        }
    }
    (x, fx)
}

/// Nelder–Mead simplex search restricted to a box (points are clamped).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    lo: &[f64],
    hi: &[f64],
    xtol: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f(&[]));
    }
    let clamp = |p: &mut Vec<f64>| {
        for i in 0..n {
            p[i] = p[i].clamp(lo[i], hi[i]);
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i] + step <= hi[i] { step } else { -step };
        clamp(&mut p);
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let size = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= xtol {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clamp(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let p = along(-0.5);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(0.5);
            let v = f(&p);
            (p, v)
        };
        if fc < vals[n].min(fr) {
            simplex[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
            vals[i] = f(&p);
            simplex[i] = p;
        }
    }
    let i = argmin(&vals);
    (simplex[i].clone(), vals[i])
}

/// Index of the smallest value; ties resolve to the first index.
pub fn argmin(vals: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[best] {
            best = i;
        }
    }
    best
}
