//! The smoothing operator T_ρ, noise stability by spectral series and by
//! Monte Carlo, the quadratic functional F, the ρ = 0 second derivative, and
//! the 1D first-variation / rearrangement checks.
//!
//! T_ρ f(x) = E f(ρx + √(1−ρ²) Z) multiplies the degree-ℓ Hermite component
//! by ρ^{‖ℓ‖₁}, so noise stability of a pair of sets is the weighted dot
//! product of their coefficient tables. For 1D interval unions T_ρ of the
//! indicator is a finite sum of normal CDFs, which serves as the exact
//! cross-route for the spectral evaluations.

use crate::gaussian::radius_for_measure;
use crate::sets::{FourierTable, IntervalUnion, SymmetricSet};
use crate::special::{normal_cdf, normal_pdf};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// A correlation parameter with −1 < ρ < 1 strictly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > -1.0 && rho < 1.0) {
            return Err(Error::invalid("rho", format!("{rho} is outside (-1, 1)")));
        }
        Ok(Correlation(rho))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// How a stability value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMethod {
    Series,
    MonteCarlo,
    ClosedFormRho0,
}

/// A noise-stability value with method tag and error accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEstimate {
    pub value: f64,
    pub method: StabilityMethod,
    pub truncation_degree: Option<usize>,
    pub tail_bound: Option<f64>,
    pub std_error: Option<f64>,
}

/// A pointwise T_ρ evaluation together with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    /// Uniform bound on the discarded spectral tail at this point
    /// (Hermite growth bound route); infinite when the bound diverges.
    pub tail_bound: f64,
}

/// Spectral evaluation of T_ρ f at a point from a coefficient table:
/// Σ_{‖ℓ‖₁ ≤ L} ρ^{‖ℓ‖₁} c_ℓ √(ℓ!) h_ℓ(x).
pub fn t_rho_apply(table: &FourierTable, rho: Correlation, x: &[f64]) -> Result<PointValue> {
    if x.len() != table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: x.len(),
        });
    }
    let r = rho.get();
    let mut value = 0.0;
    for (ell, c) in table.iter() {
        if c == 0.0 {
            continue;
        }
        value += r.powi(ell.degree() as i32) * c * crate::hermite::orthonormal_hermite_nd(ell, x)?;
    }
    Ok(PointValue {
        value,
        tail_bound: pointwise_tail_bound(table, r, x),
    })
}

/// Same as [`t_rho_apply`], but fails when the tail certificate cannot meet
/// the requested tolerance.
pub fn t_rho_apply_checked(
    table: &FourierTable,
    rho: Correlation,
    x: &[f64],
    tol: f64,
) -> Result<PointValue> {
    let pv = t_rho_apply(table, rho, x)?;
    if !(pv.tail_bound <= tol) {
        return Err(Error::TailBoundTooLarge {
            bound: pv.tail_bound,
            tol,
        });
    }
    Ok(pv)
}

/// Tail of the pointwise spectral sum bounded through the Hermite growth
/// bound: Σ_{k>L} |ρ|^k · #{‖ℓ‖₁=k} · kⁿ 3^k max(1,‖x‖_∞)^k · c_max.
fn pointwise_tail_bound(table: &FourierTable, rho: f64, x: &[f64]) -> f64 {
    let n = table.dim();
    let mass = table.mass();
    // indicator tables have |c_ℓ| ≤ min(√a, √(1-a)); anything else ≤ 1
    let coef_bound = if mass > 0.0 && mass < 1.0 {
        mass.sqrt().min((1.0 - mass).sqrt())
    } else {
        1.0
    };
    let mx = x.iter().fold(1.0f64, |m, xi| m.max(xi.abs()));
    let factor = 3.0 * rho.abs() * mx;
    if factor >= 1.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    let mut pw = factor.powi(table.degree_cap() as i32 + 1);
    for k in (table.degree_cap() + 1)..(table.degree_cap() + 4000) {
        let kf = k as f64;
        // #{ℓ ∈ N^n : ‖ℓ‖₁ = k} = C(k+n-1, n-1) ≤ (k+1)^{n-1}
        let count = (kf + 1.0).powi(n as i32 - 1);
        let term = coef_bound * count * kf.powi(n as i32) * pw;
        acc += term;
        if term < 1e-18 * acc.max(1e-300) {
            break;
        }
        pw *= factor;
    }
    acc
}

/// Noise stability Σ_ℓ ρ^{‖ℓ‖₁} c_A(ℓ) c_B(ℓ) from two coefficient tables.
///
/// The reported tail bound combines Cauchy–Schwarz across each degree shell
/// with the Parseval mass left outside the truncation.
pub fn stability_series_tables(
    a: &FourierTable,
    b: &FourierTable,
    rho: Correlation,
) -> Result<StabilityEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let cap = a.degree_cap().min(b.degree_cap());
    let r = rho.get();
    let mut value = 0.0;
    for (ell, ca) in a.iter() {
        if ell.degree() > cap {
            continue;
        }
        if let Some(cb) = b.get(ell) {
            value += r.powi(ell.degree() as i32) * ca * cb;
        }
    }
    let gap = |t: &FourierTable| -> f64 {
        let within: f64 = t
            .iter()
            .filter(|(ell, _)| ell.degree() <= cap)
            .map(|(_, c)| c * c)
            .sum();
        (t.mass() - within).max(0.0)
    };
    let tail = r.abs().powi(cap as i32 + 1) / (1.0 - r.abs()) * (gap(a) * gap(b)).sqrt();
    Ok(StabilityEstimate {
        value,
        method: StabilityMethod::Series,
        truncation_degree: Some(cap),
        tail_bound: Some(tail),
        std_error: None,
    })
}

/// Noise stability of a pair of sets by the spectral series at degree `cap`.
pub fn stability_series(
    a: &SymmetricSet,
    b: &SymmetricSet,
    rho: Correlation,
    cap: usize,
) -> Result<StabilityEstimate> {
    if rho.get() == 0.0 {
        return Ok(StabilityEstimate {
            value: a.measure() * b.measure(),
            method: StabilityMethod::ClosedFormRho0,
            truncation_degree: None,
            tail_bound: Some(0.0),
            std_error: None,
        });
    }
    let ta = FourierTable::build(a, cap)?;
    let tb = FourierTable::build(b, cap)?;
    stability_series_tables(&ta, &tb, rho)
}

const MC_BATCH: u64 = 1 << 16;

/// Monte Carlo noise stability: the empirical frequency of
/// (X, ρX + √(1−ρ²) Z) ∈ A × B over `samples` standard normal pairs.
///
/// Sampling is partitioned into fixed batches, each driven by its own
/// counter-indexed stream of a seeded ChaCha generator, so the result is
/// identical for every thread count.
pub fn stability_mc(
    a: &SymmetricSet,
    b: &SymmetricSet,
    rho: Correlation,
    samples: u64,
    seed: u64,
) -> Result<StabilityEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let n = a.dim();
    let r = rho.get();
    let s = (1.0 - r * r).sqrt();
    let batches = samples.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let lo = batch * MC_BATCH;
            let hi = (lo + MC_BATCH).min(samples);
            let mut x = vec![0.0f64; n];
            let mut y = vec![0.0f64; n];
            let mut count = 0u64;
            for _ in lo..hi {
                for i in 0..n {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    let zi: f64 = StandardNormal.sample(&mut rng);
                    x[i] = xi;
                    y[i] = r * xi + s * zi;
                }
                if a.contains(&x) && b.contains(&y) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(StabilityEstimate {
        value: p,
        method: StabilityMethod::MonteCarlo,
        truncation_degree: None,
        tail_bound: None,
        std_error: Some((p * (1.0 - p) / samples as f64).sqrt()),
    })
}

/// The quadratic functional F(A) = Σ_i (∫_A (1 - x_i²) dγ_n)².
pub fn functional_f(a: &SymmetricSet) -> f64 {
    a.defect_vector().iter().map(|d| d * d).sum()
}

/// ln F(B(0, r)) = ln n + 2 ln ∫_{B}(1-x₁²) dγ_n, stable for any n.
pub fn ln_functional_f_ball(n: usize, r: f64) -> Option<f64> {
    crate::gaussian::ln_second_moment_defect_ball(n, r).map(|ld| (n as f64).ln() + 2.0 * ld)
}

/// d²/dρ²|₀ of the noise stability of A with itself:
/// Σ_i (∫_A (1-x_i²) dγ)² + 2 Σ_{i<j} (∫_A x_i x_j dγ)², i.e. twice the
/// squared L² mass of the degree-2 Hermite projection of 1_A.
pub fn second_derivative_at_zero(a: &SymmetricSet) -> f64 {
    let defects = a.defect_vector();
    let mut acc: f64 = defects.iter().map(|d| d * d).sum();
    let n = a.dim();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let c = a.cross_moment(i, j).expect("valid index pair");
            acc += 2.0 * c * c;
        }
    }
    acc
}

/// Taylor comparison of the stability series against its ρ² model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRemainder {
    pub stability: f64,
    pub quadratic_model: f64,
    pub remainder: f64,
}

/// |S_ρ(A,A) − γ(A)² − (ρ²/2) d²/dρ²|₀| — bounded by |ρ|³ for symmetric A.
pub fn quadratic_remainder(
    a: &SymmetricSet,
    rho: Correlation,
    cap: usize,
) -> Result<QuadraticRemainder> {
    let stability = stability_series(a, a, rho, cap)?.value;
    let mass = a.measure();
    let model = mass * mass + 0.5 * rho.get() * rho.get() * second_derivative_at_zero(a);
    Ok(QuadraticRemainder {
        stability,
        quadratic_model: model,
        remainder: (stability - model).abs(),
    })
}

/// View of a 1D set as a maximal interval union, when it is one.
pub fn as_interval_union(set: &SymmetricSet) -> Result<IntervalUnion> {
    match set {
        SymmetricSet::Ball { dim: 1, radius } => {
            IntervalUnion::new(vec![(-radius, *radius)])
        }
        SymmetricSet::BallComplement { dim: 1, radius } => IntervalUnion::new(vec![
            (f64::NEG_INFINITY, -radius),
            (*radius, f64::INFINITY),
        ]),
        SymmetricSet::Strip { dim: 1, halfwidth } => {
            IntervalUnion::new(vec![(-halfwidth, *halfwidth)])
        }
        SymmetricSet::IntervalUnion1D(u) => Ok(u.clone()),
        _ => Err(Error::invalid("set", "not a one-dimensional interval set")),
    }
}

/// Exact T_ρ 1_B(x) for a 1D interval union, as a finite sum of normal CDFs.
pub fn t_rho_1d_exact(b: &IntervalUnion, rho: Correlation, x: f64) -> f64 {
    let r = rho.get();
    let s = (1.0 - r * r).sqrt();
    b.intervals()
        .iter()
        .map(|&(c, d)| {
            let lo = if c == f64::NEG_INFINITY { 0.0 } else { normal_cdf((c - r * x) / s) };
            let hi = if d == f64::INFINITY { 1.0 } else { normal_cdf((d - r * x) / s) };
            hi - lo
        })
        .sum()
}

/// d/dx T_ρ 1_B(x) by the derivative identity
/// (ρ/√(1−ρ²)) ∫ y 1_B(xρ + y√(1−ρ²)) dγ₁(y); closed form through
/// ∫_α^β y dγ₁ = φ(α) − φ(β).
pub fn t_rho_derivative_1d(b: &SymmetricSet, rho: Correlation, x: f64) -> Result<f64> {
    let u = as_interval_union(b)?;
    let r = rho.get();
    if r == 0.0 {
        return Ok(0.0);
    }
    let s = (1.0 - r * r).sqrt();
    let mut acc = 0.0;
    for &(c, d) in u.intervals() {
        let alpha = if c == f64::NEG_INFINITY { 0.0 } else { normal_pdf((c - r * x) / s) };
        let beta = if d == f64::INFINITY { 0.0 } else { normal_pdf((d - r * x) / s) };
        acc += alpha - beta;
    }
    Ok(r / s * acc)
}

/// Outcome of searching for a threshold c making A ≈ {T_ρ 1_B ≤ c}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetReport {
    pub threshold: f64,
    pub is_sublevel_set: bool,
    /// γ₁ of the symmetric difference between A and the best sublevel set.
    pub max_violation: f64,
    /// ρ = 0 makes T_ρ 1_B constant, so every set is trivially a level set.
    pub degenerate: bool,
}

/// Scan thresholds over the grid values of T_ρ 1_B on [-6, 6] and report the
/// best sublevel-set approximation of A.
pub fn level_set_check(
    a: &SymmetricSet,
    b: &SymmetricSet,
    rho: Correlation,
    grid: usize,
    tol: f64,
) -> Result<LevelSetReport> {
    let ua = as_interval_union(a)?;
    let ub = as_interval_union(b)?;
    if rho.get() == 0.0 {
        return Ok(LevelSetReport {
            threshold: ub.measure(),
            is_sublevel_set: true,
            max_violation: 0.0,
            degenerate: true,
        });
    }
    let m = grid.max(16);
    let h = 12.0 / m as f64;
    // cell k = [x_k - h/2, x_k + h/2]; outermost cells absorb the tails
    let mut cells = Vec::with_capacity(m);
    for k in 0..m {
        let x = -6.0 + (k as f64 + 0.5) * h;
        let lo = if k == 0 { f64::NEG_INFINITY } else { x - 0.5 * h };
        let hi = if k == m - 1 { f64::INFINITY } else { x + 0.5 * h };
        let weight = gauss_interval(lo, hi);
        let value = t_rho_1d_exact(&ub, rho, x);
        let in_a = ua.contains(x);
        cells.push((value, weight, in_a));
    }
    // sweep the threshold upward; each cell flips into the sublevel set once
    cells.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut violation: f64 = cells.iter().filter(|c| c.2).map(|c| c.1).sum(); // empty sublevel set
    let mut best = (violation, f64::NEG_INFINITY);
    for &(value, weight, in_a) in &cells {
        violation += if in_a { -weight } else { weight };
        if violation < best.0 {
            best = (violation, value);
        }
    }
    Ok(LevelSetReport {
        threshold: best.1,
        is_sublevel_set: best.0 <= tol,
        max_violation: best.0.max(0.0),
        degenerate: false,
    })
}

fn gauss_interval(lo: f64, hi: f64) -> f64 {
    let cdf = |x: f64| {
        if x == f64::NEG_INFINITY {
            0.0
        } else if x == f64::INFINITY {
            1.0
        } else {
            normal_cdf(x)
        }
    };
    cdf(hi) - cdf(lo)
}

/// The two sides of the 1D rearrangement inequality: moving mass of a
/// symmetric set away from the centered interval of the same measure costs
/// at least (a/6)·(L¹ distance)² in the (x²-1) integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RearrangementDeficit {
    /// ∫_B (x²-1) dγ − ∫_{B'} (x²-1) dγ for B the measure-matched interval.
    pub lhs: f64,
    /// −(a/6) (∫|1_{B'} − 1_B| dγ)².
    pub rhs: f64,
    pub l1_distance: f64,
}

/// Evaluate the rearrangement deficit of a 1D symmetric set against the
/// centered interval with the same Gaussian measure. Contract: lhs ≤ rhs.
pub fn rearrangement_deficit(bprime: &SymmetricSet) -> Result<RearrangementDeficit> {
    let u = as_interval_union(bprime)?;
    let a = u.measure();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid("bprime", format!("measure {a} must be in (0,1)")));
    }
    let r = radius_for_measure(1, a)?;
    let ball = IntervalUnion::new(vec![(-r, r)])?;
    let ball_set = SymmetricSet::IntervalUnion1D(ball.clone());
    let matched = ball_set.measure();
    if (matched - a).abs() > 1e-9 {
        return Err(Error::MeasureMismatch {
            left: matched,
            right: a,
            tol: 1e-9,
        });
    }
    // ∫ (x²-1) dγ = −defect
    let lhs = bprime.defect_vector()[0] - ball_set.defect_vector()[0];
    let delta = ball.symmetric_difference_measure(&u);
    Ok(RearrangementDeficit {
        lhs,
        rhs: -(a / 6.0) * delta * delta,
        l1_distance: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::ExponentialTilt;
    use crate::quad::gauss_hermite;
    use crate::sets::StarBoundary;
    use approx::assert_abs_diff_eq;

    fn corr(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    #[test]
    fn correlation_bounds() {
        assert!(Correlation::new(1.0).is_err());
        assert!(Correlation::new(-1.0).is_err());
        assert!(Correlation::new(0.999).is_ok());
    }

    #[test]
    fn t_rho_at_zero_correlation_is_the_measure() {
        let set = SymmetricSet::ball(1, 1.0).unwrap();
        let table = FourierTable::build(&set, 12).unwrap();
        for &x in &[-2.0, 0.0, 1.5] {
            let pv = t_rho_apply(&table, corr(0.0), &[x]).unwrap();
            assert_abs_diff_eq!(pv.value, set.measure(), epsilon = 1e-14);
        }
    }

    #[test]
    fn tilt_is_an_eigenfunction() {
        // T_ρ e^{λx-λ²/2} = e^{(λρ)x-(λρ)²/2}
        for &(lambda, rho) in &[(0.3, 0.2), (1.0, -0.3)] {
            let table = FourierTable::from_tilt(ExponentialTilt { lambda }, 40);
            for &x in &[-1.0, 0.0, 0.7, 2.0] {
                let pv = t_rho_apply(&table, corr(rho), &[x]).unwrap();
                let expected = ExponentialTilt { lambda: lambda * rho }.eval(x);
                assert_abs_diff_eq!(pv.value, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spectral_vs_exact_route_within_tail_bound() {
        let set = SymmetricSet::ball(1, 1.0).unwrap();
        let u = as_interval_union(&set).unwrap();
        let table = FourierTable::build(&set, 20).unwrap();
        for &rho in &[0.05, 0.2, -0.2] {
            for &x in &[0.0, 0.5, -1.2] {
                let pv = t_rho_apply(&table, corr(rho), &[x]).unwrap();
                let exact = t_rho_1d_exact(&u, corr(rho), x);
                assert!(pv.tail_bound.is_finite());
                assert!(
                    (pv.value - exact).abs() <= pv.tail_bound + 1e-12,
                    "ρ={rho}, x={x}: |{}-{exact}| > tail {}",
                    pv.value,
                    pv.tail_bound
                );
            }
        }
        // the certificate fails honestly when the growth bound diverges
        let pv = t_rho_apply(&table, corr(0.5), &[4.0]).unwrap();
        assert!(pv.tail_bound.is_infinite());
        assert!(t_rho_apply_checked(&table, corr(0.5), &[4.0], 1e-6).is_err());
    }

    #[test]
    fn eigenrelation_by_quadrature() {
        // T_ρ(√(ℓ!) h_ℓ)(x) = ρ^ℓ √(ℓ!) h_ℓ(x)
        let rule = gauss_hermite(48);
        for ell in 0..=6usize {
            for &rho in &[0.3, -0.3] {
                let s = (1.0f64 - rho * rho).sqrt();
                for &x in &[0.0, 0.8, -1.7] {
                    let lhs = rule.integrate(|y| {
                        crate::hermite::orthonormal_hermite_1d(ell, rho * x + s * y).unwrap()
                    });
                    let rhs = rho.powi(ell as i32)
                        * crate::hermite::orthonormal_hermite_1d(ell, x).unwrap();
                    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn series_at_rho_zero_is_product_of_measures() {
        let a = SymmetricSet::ball(2, 2.4).unwrap();
        let b = SymmetricSet::strip(2, 1.90999).unwrap();
        let est = stability_series(&a, &b, corr(0.0), 8).unwrap();
        assert_abs_diff_eq!(est.value, a.measure() * b.measure(), epsilon = 1e-14);
        assert_eq!(est.method, StabilityMethod::ClosedFormRho0);
    }

    #[test]
    fn series_monotone_in_rho_for_self_stability() {
        let a = SymmetricSet::ball(1, 1.0).unwrap();
        let ta = FourierTable::build(&a, 20).unwrap();
        let mut prev = 0.0;
        for k in 0..=18 {
            let rho = 0.05 * k as f64;
            let v = stability_series_tables(&ta, &ta, corr(rho)).unwrap().value;
            assert!(v >= prev - 1e-15, "series decreased at ρ={rho}");
            prev = v;
        }
    }

    #[test]
    fn series_approaches_parseval_mass_as_rho_to_one() {
        let a = SymmetricSet::ball(1, 1.0).unwrap();
        let ta = FourierTable::build(&a, 60).unwrap();
        let v = stability_series_tables(&ta, &ta, corr(0.995)).unwrap().value;
        let mass = a.measure();
        assert!(v < mass);
        assert!(mass - v < 0.05, "series {v} too far from γ(A) = {mass}");
    }

    #[test]
    fn tail_bound_is_conservative() {
        // raising the cap by 5 moves the value by less than the tail bound
        let a = SymmetricSet::ball(2, 2.4).unwrap();
        let b = SymmetricSet::ellipse(2.5, 2.31394).unwrap();
        for &rho in &[0.1, 0.3] {
            let short = stability_series(&a, &b, corr(rho), 10).unwrap();
            let long = stability_series(&a, &b, corr(rho), 15).unwrap();
            assert!(
                (short.value - long.value).abs() <= short.tail_bound.unwrap() + 1e-15,
                "ρ={rho}"
            );
        }
    }

    #[test]
    fn mc_independence_and_full_space() {
        let a = SymmetricSet::ball(2, 2.4).unwrap();
        let b = SymmetricSet::strip(2, 1.90999).unwrap();
        let est = stability_mc(&a, &b, corr(0.0), 1_000_000, 7).unwrap();
        let expected = a.measure() * b.measure();
        let se = est.std_error.unwrap();
        assert!(
            (est.value - expected).abs() <= 4.0 * se,
            "MC {} vs {} (4σ = {})",
            est.value,
            expected,
            4.0 * se
        );
        let full = SymmetricSet::IntervalUnion1D(IntervalUnion::full_line());
        let est = stability_mc(&full, &full, corr(0.3), 10_000, 1).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn mc_is_deterministic_across_thread_counts() {
        let a = SymmetricSet::ball(2, 2.4).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| stability_mc(&a, &a, corr(0.1), 300_000, 42).unwrap().value)
        };
        let single = run(1);
        let multi = run(4);
        assert_eq!(single, multi);
        assert_eq!(single, run(2));
    }

    #[test]
    fn mc_matches_series_for_ball() {
        let a = SymmetricSet::ball(1, 1.0).unwrap();
        let series = stability_series(&a, &a, corr(0.1), 20).unwrap();
        let mc = stability_mc(&a, &a, corr(0.1), 2_000_000, 11).unwrap();
        assert!(
            (series.value - mc.value).abs() <= 3.0 * mc.std_error.unwrap(),
            "series {} vs MC {} ± {}",
            series.value,
            mc.value,
            mc.std_error.unwrap()
        );
    }

    #[test]
    fn functional_values_from_the_counterexample() {
        let ball = SymmetricSet::ball(2, 2.4).unwrap();
        assert_abs_diff_eq!(functional_f(&ball), 0.052_273_160_084_275_14, epsilon = 1e-12);
        let strip = SymmetricSet::strip(2, 1.90999).unwrap();
        assert_abs_diff_eq!(functional_f(&strip), 0.060_479_640_423_693_1, epsilon = 1e-10);
        let rp = (-2.0 * (1.0 - (-2.88f64).exp()).ln()).sqrt();
        let small = SymmetricSet::ball(2, rp).unwrap();
        assert_abs_diff_eq!(functional_f(&small), 0.005_946_795_211_287_411, epsilon = 1e-12);
        let ellipse = SymmetricSet::ellipse(2.5, 2.31394).unwrap();
        let fe = functional_f(&ellipse);
        assert!((fe - 0.052_472_0).abs() < 1e-4);
        // strict ordering of the candidates at this measure
        assert!(functional_f(&strip) > fe);
        assert!(fe > functional_f(&ball));
        assert!(functional_f(&ball) > functional_f(&small));
    }

    #[test]
    fn f_is_invariant_under_complement() {
        for set in [
            SymmetricSet::ball(2, 2.4).unwrap(),
            SymmetricSet::ball(3, 1.2).unwrap(),
        ] {
            let (dim, radius) = match set {
                SymmetricSet::Ball { dim, radius } => (dim, radius),
                _ => unreachable!(),
            };
            let comp = SymmetricSet::ball_complement(dim, radius).unwrap();
            assert_abs_diff_eq!(functional_f(&set), functional_f(&comp), epsilon = 1e-10);
        }
        let a = SymmetricSet::intervals(vec![(-1.0, 1.0)]).unwrap();
        let ac = SymmetricSet::intervals(vec![
            (f64::NEG_INFINITY, -1.0),
            (1.0, f64::INFINITY),
        ])
        .unwrap();
        assert_abs_diff_eq!(functional_f(&a), functional_f(&ac), epsilon = 1e-10);
    }

    #[test]
    fn second_derivative_examples_and_rotation_invariance() {
        let ball = SymmetricSet::ball(2, 2.4).unwrap();
        assert_abs_diff_eq!(
            second_derivative_at_zero(&ball),
            0.052_273_160_084_275_14,
            epsilon = 1e-12
        );
        let ellipse = SymmetricSet::ellipse(2.5, 2.31394).unwrap();
        assert!((second_derivative_at_zero(&ellipse) - 0.052_472_0).abs() < 1e-4);
        let full = SymmetricSet::IntervalUnion1D(IntervalUnion::full_line());
        assert_eq!(second_derivative_at_zero(&full), 0.0);

        // the degree-2 projection mass does not change when the set rotates
        let make = |alpha: f64| {
            SymmetricSet::StarShaped2D(
                StarBoundary::from_fn(2048, move |t| 1.0 + 0.1 * (2.0 * (t - alpha)).sin())
                    .unwrap(),
            )
        };
        let base = second_derivative_at_zero(&make(0.0));
        for &alpha in &[0.3, std::f64::consts::FRAC_PI_4, 1.2] {
            assert_abs_diff_eq!(second_derivative_at_zero(&make(alpha)), base, epsilon = 1e-9);
        }
        // d² at 0 dominates F, with equality only in the diagonalized frame
        let tilted = make(0.3);
        assert!(second_derivative_at_zero(&tilted) >= functional_f(&tilted));
        assert!(second_derivative_at_zero(&tilted) - functional_f(&tilted) > 1e-5);
        let diag = make(std::f64::consts::FRAC_PI_4);
        assert_abs_diff_eq!(
            second_derivative_at_zero(&diag),
            functional_f(&diag),
            epsilon = 1e-10
        );
    }

    #[test]
    fn quadratic_remainder_bounds() {
        let ball = SymmetricSet::ball(1, 1.0).unwrap();
        let q = quadratic_remainder(&ball, corr(0.2), 20).unwrap();
        assert!(q.remainder <= 0.008, "remainder {}", q.remainder);
        let ellipse = SymmetricSet::ellipse(2.5, 2.31394).unwrap();
        let q = quadratic_remainder(&ellipse, corr(0.1), 14).unwrap();
        assert!(q.remainder <= 1e-3, "remainder {}", q.remainder);
        let q0 = quadratic_remainder(&ball, corr(0.0), 8).unwrap();
        assert_abs_diff_eq!(q0.remainder, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn derivative_identity_vs_finite_differences() {
        let b = SymmetricSet::ball(1, 1.0).unwrap();
        let u = as_interval_union(&b).unwrap();
        for &rho in &[0.1, -0.25] {
            for &x in &[0.0, 0.5, -1.3] {
                let ident = t_rho_derivative_1d(&b, corr(rho), x).unwrap();
                let h = 1e-4;
                let fd = (t_rho_1d_exact(&u, corr(rho), x + h)
                    - t_rho_1d_exact(&u, corr(rho), x - h))
                    / (2.0 * h);
                assert_abs_diff_eq!(ident, fd, epsilon = 1e-6);
            }
        }
        assert_eq!(
            t_rho_derivative_1d(&b, corr(0.0), 0.7).unwrap(),
            0.0
        );
    }

    #[test]
    fn derivative_leading_term_at_small_rho() {
        // d/dx T_ρ 1_B ≈ −ρ² √(2/π) x r e^{-r²/2}
        let r = 1.0;
        let b = SymmetricSet::ball(1, r).unwrap();
        for &rho in &[0.01, 0.02] {
            for &x in &[0.5, 1.0] {
                let lead = -rho * rho * (2.0 / std::f64::consts::PI).sqrt()
                    * x
                    * r
                    * (-0.5 * r * r).exp();
                let v = t_rho_derivative_1d(&b, corr(rho), x).unwrap();
                assert!(
                    (v - lead).abs() < 0.2 * lead.abs(),
                    "ρ={rho}, x={x}: {v} vs leading {lead}"
                );
            }
        }
    }

    #[test]
    fn level_sets_of_the_optimal_pair() {
        // A = central interval, B = complement of a central interval: A is a
        // sublevel set of T_ρ 1_B at small positive ρ
        let a_measure = 0.3;
        let ra = radius_for_measure(1, a_measure).unwrap();
        let rb = radius_for_measure(1, 1.0 - 0.3).unwrap();
        let a = SymmetricSet::ball(1, ra).unwrap();
        let b = SymmetricSet::ball_complement(1, rb).unwrap();
        let report = level_set_check(&a, &b, corr(0.05), 4096, 2e-3).unwrap();
        assert!(report.is_sublevel_set, "violation {}", report.max_violation);
        assert!(!report.degenerate);

        // a two-interval union far from the centered interval is not
        let outer_pair = SymmetricSet::intervals(vec![(-2.0, -1.0), (1.0, 2.0)]).unwrap();
        let central = SymmetricSet::ball(1, 0.8).unwrap();
        // best sublevel set is {|x| ≥ t}, leaving ≈ γ₁(|x| > 2) ≈ 0.0455
        let report = level_set_check(&outer_pair, &central, corr(0.05), 4096, 2e-3).unwrap();
        assert!(!report.is_sublevel_set);
        assert!(report.max_violation > 0.03);

        let degenerate = level_set_check(&a, &b, corr(0.0), 64, 1e-3).unwrap();
        assert!(degenerate.degenerate && degenerate.is_sublevel_set);
    }

    #[test]
    fn rearrangement_examples() {
        // B' = B gives equality 0 = 0
        let b = SymmetricSet::ball(1, 1.0).unwrap();
        let d = rearrangement_deficit(&b).unwrap();
        assert_abs_diff_eq!(d.lhs, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.rhs, 0.0, epsilon = 1e-10);

        // same measure split into a middle interval plus outer shells
        let a = SymmetricSet::ball(1, 1.0).unwrap().measure();
        let r0 = 0.8f64;
        let inner = 2.0 * normal_cdf(r0) - 1.0;
        let need = (a - inner) / 2.0; // per side
        let lo = normal_cdf(1.5);
        let hi_q = crate::special::normal_quantile(lo + need).unwrap();
        let split = SymmetricSet::intervals(vec![(-hi_q, -1.5), (-r0, r0), (1.5, hi_q)]).unwrap();
        assert_abs_diff_eq!(split.measure(), a, epsilon = 1e-12);
        let d = rearrangement_deficit(&split).unwrap();
        assert!(d.lhs <= d.rhs, "lhs {} > rhs {}", d.lhs, d.rhs);
        assert!(d.l1_distance > 0.1);

        // complement of a ball with the same measure
        let rc = radius_for_measure(1, 1.0 - a).unwrap();
        let comp = SymmetricSet::ball_complement(1, rc).unwrap();
        let d = rearrangement_deficit(&comp).unwrap();
        assert!(d.lhs < d.rhs, "strict inequality expected: {} vs {}", d.lhs, d.rhs);
    }

    #[test]
    fn star_cross_moment_confirmed_by_monte_carlo() {
        let star = SymmetricSet::StarShaped2D(
            StarBoundary::from_fn(2048, |t| 1.0 + 0.1 * (2.0 * t).sin()).unwrap(),
        );
        let quadrature = star.cross_moment(1, 2).unwrap();
        // E[x₁x₂ 1_A] by the same seeded sampler used for stability
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = 2_000_000;
        let mut acc = 0.0;
        let mut sq = 0.0;
        for _ in 0..samples {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            let v = if star.contains(&[x, y]) { x * y } else { 0.0 };
            acc += v;
            sq += v * v;
        }
        let mean = acc / samples as f64;
        let se = ((sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!(
            (quadrature - mean).abs() <= 4.0 * se,
            "quadrature {quadrature} vs MC {mean} ± {se}"
        );
    }
}
