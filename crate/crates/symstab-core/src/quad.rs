//! Quadrature rules: adaptive Simpson, the periodic trapezoid rule, and
//! Gauss–Legendre / Gauss–Hermite nodes.
//!
//! The periodic trapezoid rule is the workhorse for boundary integrals over
//! circles and star-shaped curves (spectrally accurate on smooth periodic
//! integrands). Gauss–Hermite nodes are generated from the orthonormal
//! Hermite recurrence with interlacing bisection, so no linear-algebra
//! dependency is needed.

use crate::{Error, Result};

/// Adaptive Simpson integration of `f` over the finite interval `[a, b]`.
///
/// `tol` is an absolute tolerance on the result; recursion stops early on
/// intervals whose Simpson correction is already below the local budget.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailed("endpoints must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut out = 0.0;
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50, &mut out)?;
    Ok(out)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut f64,
) -> Result<()> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 {
        *acc += left + right + delta / 15.0;
        return Ok(());
    }
    if depth == 0 {
        return Err(Error::QuadratureFailed(format!(
            "adaptive Simpson recursion exhausted on [{a}, {b}]"
        )));
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc)?;
    simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc)
}

/// Trapezoid rule for a `period`-periodic function sampled at `m` uniform
/// points starting at 0. Summation runs left to right so results are
/// bit-stable across schedulers.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, period: f64, m: usize) -> f64 {
    let h = period / m as f64;
    let mut s = 0.0;
    for k in 0..m {
        s += f(k as f64 * h);
    }
    s * h
}

/// Same rule applied to pre-tabulated samples on the uniform periodic grid.
pub fn periodic_trapezoid_samples(samples: &[f64], period: f64) -> f64 {
    let h = period / samples.len() as f64;
    samples.iter().sum::<f64>() * h
}

/// A quadrature rule as (nodes, weights).
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `k` nodes on [-1, 1].
///
/// Nodes by Newton iteration from the Chebyshev initial guess; weights from
/// the classical `2 / ((1-x²) P_k'(x)²)` formula.
pub fn gauss_legendre(k: usize) -> Rule {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 1..=k {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(k, x);
        nodes.push(-x); // ascending order
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    Rule { nodes, weights }
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 1..k {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule with `k` nodes for the weight γ₁ (density e^{-x²/2}/√(2π)).
///
/// Exact for polynomials of degree ≤ 2k-1; the weights sum to 1. Nodes are
/// the roots of the degree-k orthonormal Hermite polynomial, found by
/// interlacing bisection plus Newton polish; weights are Christoffel numbers
/// `1 / Σ_{j<k} p_j(x)²`.
pub fn gauss_hermite(k: usize) -> Rule {
    assert!(k >= 1, "need at least one node");
    let bound = (4.0 * k as f64 + 2.0).sqrt() + 1.0;
    let mut roots = vec![0.0f64]; // roots of p_1(x) = x
    for deg in 2..=k {
        let mut brackets = Vec::with_capacity(deg);
        brackets.push(-bound);
        brackets.extend_from_slice(&roots);
        brackets.push(bound);
        let mut next = Vec::with_capacity(deg);
        for w in brackets.windows(2) {
            next.push(hermite_root_in(deg, w[0], w[1]));
        }
        roots = next;
    }
    let weights = roots
        .iter()
        .map(|&x| {
            let p = orthonormal_hermite_column(k, x);
            1.0 / p[..k].iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Rule {
        nodes: roots,
        weights,
    }
}

/// Values p_0(x), ..., p_k(x) of the orthonormal Hermite polynomials
/// (p_j = He_j / √(j!), orthonormal against γ₁).
fn orthonormal_hermite_column(k: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(k + 1);
    p.push(1.0);
    if k >= 1 {
        p.push(x);
    }
    for j in 1..k {
        let jf = j as f64;
        let v = (x * p[j] - jf.sqrt() * p[j - 1]) / (jf + 1.0).sqrt();
        p.push(v);
    }
    p
}

fn hermite_root_in(deg: usize, mut lo: f64, mut hi: f64) -> f64 {
    let eval = |x: f64| *orthonormal_hermite_column(deg, x).last().unwrap();
    let mut flo = eval(lo);
    // interlacing guarantees a sign change strictly inside the bracket
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        let fmid = eval(mid);
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // Newton polish with p_k' = √k p_{k-1}
    for _ in 0..3 {
        let col = orthonormal_hermite_column(deg, x);
        let d = (deg as f64).sqrt() * col[deg - 1];
        if d != 0.0 {
            x -= col[deg] / d;
        }
    }
    x
}
