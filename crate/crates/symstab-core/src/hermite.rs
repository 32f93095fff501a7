//! Hermite polynomials in the generating-function normalization
//! `e^{λx−λ²/2} = Σ_ℓ λ^ℓ h_ℓ(x)`, so h₁(x) = x, h₂(x) = (x²−1)/2 and
//! ∫ h_ℓ² dγ₁ = 1/ℓ!. The orthonormal basis of L²(γ₁) is {√(ℓ!) h_ℓ}.
//!
//! Values are produced by the three-term recurrence
//! (ℓ+1) h_{ℓ+1}(x) = x h_ℓ(x) − h_{ℓ−1}(x); the explicit summation formula
//! is kept as a test oracle. Multi-index products, the growth bound and the
//! exact antiderivative identity ∫_c^d h_ℓ dγ₁ = −(1/ℓ)[h_{ℓ−1} φ]_c^d
//! round out the module.

use crate::special::{normal_cdf, normal_pdf};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Degree cap for univariate evaluations (overflow guard).
pub const DEGREE_CAP: usize = 60;

/// A multi-index ℓ = (ℓ₁, …, ℓ_n) of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Total degree ‖ℓ‖₁ = Σ ℓᵢ.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// ℓ! = Π ℓᵢ!, computed in exact integer arithmetic then converted.
    pub fn factorial(&self) -> f64 {
        let mut acc = BigUint::from(1u32);
        for &e in &self.0 {
            for k in 2..=e {
                acc *= k as u32;
            }
        }
        acc.to_f64().expect("factorial fits in f64 range for capped degrees")
    }

    /// All multi-indices of dimension `dim` with total degree ≤ `max_degree`,
    /// in lexicographic order.
    pub fn enumerate(dim: usize, max_degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; dim];
        fn rec(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<MultiIndex>) {
            if pos == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in 0..=left {
                cur[pos] = v;
                rec(cur, pos + 1, left - v, out);
            }
            cur[pos] = 0;
        }
        rec(&mut cur, 0, max_degree, &mut out);
        out
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// The tilt e^{λx−λ²/2}, whose Hermite expansion is Σ λ^ℓ h_ℓ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialTilt {
    pub lambda: f64,
}

impl ExponentialTilt {
    pub fn eval(&self, x: f64) -> f64 {
        (self.lambda * x - 0.5 * self.lambda * self.lambda).exp()
    }

    /// Coefficient against the orthonormal basis: ∫ f √(ℓ!) h_ℓ dγ₁ = λ^ℓ/√(ℓ!).
    pub fn orthonormal_coefficient(&self, ell: usize) -> f64 {
        let fact = MultiIndex::new(vec![ell]).factorial();
        self.lambda.powi(ell as i32) / fact.sqrt()
    }
}

fn check_cap(ell: usize) -> Result<()> {
    if ell > DEGREE_CAP {
        return Err(Error::DegreeCapExceeded {
            degree: ell,
            cap: DEGREE_CAP,
        });
    }
    Ok(())
}

/// h_ℓ(x) by the three-term recurrence.
pub fn hermite_1d(ell: usize, x: f64) -> Result<f64> {
    check_cap(ell)?;
    let mut prev = 1.0; // h_0
    if ell == 0 {
        return Ok(prev);
    }
    let mut cur = x; // h_1
    for k in 1..ell {
        let next = (x * cur - prev) / (k as f64 + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// √(ℓ!) h_ℓ(x), evaluated directly through the orthonormal recurrence
/// p_{j+1} = (x p_j − √j p_{j−1}) / √(j+1). Better conditioned than forming
/// √(ℓ!) separately.
pub fn orthonormal_hermite_1d(ell: usize, x: f64) -> Result<f64> {
    check_cap(ell)?;
    let mut prev = 1.0;
    if ell == 0 {
        return Ok(prev);
    }
    let mut cur = x;
    for j in 1..ell {
        let jf = j as f64;
        let next = (x * cur - jf.sqrt() * prev) / (jf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Monomial coefficients of h_ℓ: entry m holds the coefficient of x^{ℓ−2m}
/// in the explicit sum (−1)^m 2^{−m} / (m! (ℓ−2m)!).
pub fn monomial_coefficients(ell: usize) -> Result<Vec<f64>> {
    check_cap(ell)?;
    let mut out = Vec::with_capacity(ell / 2 + 1);
    for m in 0..=(ell / 2) {
        let m_fact = MultiIndex::new(vec![m]).factorial();
        let rest_fact = MultiIndex::new(vec![ell - 2 * m]).factorial();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign / (2f64.powi(m as i32) * m_fact * rest_fact));
    }
    Ok(out)
}

/// Explicit summation formula for h_ℓ(x); the reference oracle for the
/// recurrence.
pub fn hermite_explicit_sum(ell: usize, x: f64) -> Result<f64> {
    let coeffs = monomial_coefficients(ell)?;
    let mut acc = 0.0;
    for (m, c) in coeffs.iter().enumerate() {
        acc += c * x.powi((ell - 2 * m) as i32);
    }
    Ok(acc)
}

/// h_ℓ(x) = Π h_{ℓᵢ}(xᵢ) for multi-indices.
pub fn hermite_nd(ell: &MultiIndex, x: &[f64]) -> Result<f64> {
    if ell.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: ell.dim(),
            got: x.len(),
        });
    }
    let mut acc = 1.0;
    for (&e, &xi) in ell.entries().iter().zip(x) {
        acc *= hermite_1d(e, xi)?;
    }
    Ok(acc)
}

/// √(ℓ!) h_ℓ(x) in n dimensions.
pub fn orthonormal_hermite_nd(ell: &MultiIndex, x: &[f64]) -> Result<f64> {
    if ell.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: ell.dim(),
            got: x.len(),
        });
    }
    let mut acc = 1.0;
    for (&e, &xi) in ell.entries().iter().zip(x) {
        acc *= orthonormal_hermite_1d(e, xi)?;
    }
    Ok(acc)
}

/// ∫ h_ℓ² dγ₁ = 1/ℓ! (componentwise product in n dimensions).
pub fn hermite_norm(ell: &MultiIndex) -> f64 {
    1.0 / ell.factorial()
}

/// Dominating bound ‖ℓ‖₁ⁿ 3^{‖ℓ‖₁} Π max(1, |xᵢ|^{ℓᵢ}) ≥ |√(ℓ!) h_ℓ(x)|.
///
/// At ℓ = 0 the printed prefactor degenerates to 0; the bound is defined as
/// max(1, ·) so it still dominates |h₀| = 1.
pub fn hermite_growth_bound(ell: &MultiIndex, x: &[f64]) -> Result<f64> {
    if ell.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: ell.dim(),
            got: x.len(),
        });
    }
    let deg = ell.degree() as f64;
    let n = ell.dim() as i32;
    let mut prod = 1.0;
    for (&e, &xi) in ell.entries().iter().zip(x) {
        prod *= xi.abs().powi(e as i32).max(1.0);
    }
    Ok((deg.powi(n) * 3f64.powi(ell.degree() as i32) * prod).max(1.0))
}

/// Exact ∫_c^d h_ℓ dγ₁ for ℓ ≥ 1, from (d/dx) h_ℓ = h_{ℓ−1}:
/// the value is −(1/ℓ)[h_{ℓ−1}(x) φ(x)]_c^d. Endpoints may be ±∞.
pub fn hermite_interval_integral(ell: usize, c: f64, d: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid("ell", "degree must be at least 1"));
    }
    check_cap(ell)?;
    if c > d {
        return Err(Error::invalid("c", "need c ≤ d"));
    }
    let boundary = |x: f64| -> Result<f64> {
        if x.is_infinite() {
            return Ok(0.0);
        }
        Ok(hermite_1d(ell - 1, x)? * normal_pdf(x))
    };
    Ok(-(boundary(d)? - boundary(c)?) / ell as f64)
}

/// Orthonormal-basis coefficient ∫_c^d √(ℓ!) h_ℓ dγ₁, with the ℓ = 0 case
/// given by Φ(d) − Φ(c). Evaluated through the orthonormal recurrence:
/// √(ℓ!) hermite_interval_integral(ℓ,c,d) = −[p_{ℓ−1}(x) φ(x)]_c^d / √ℓ.
pub fn orthonormal_interval_integral(ell: usize, c: f64, d: f64) -> Result<f64> {
    check_cap(ell)?;
    if c > d {
        return Err(Error::invalid("c", "need c ≤ d"));
    }
    if ell == 0 {
        let cdf = |x: f64| {
            if x == f64::NEG_INFINITY {
                0.0
            } else if x == f64::INFINITY {
                1.0
            } else {
                normal_cdf(x)
            }
        };
        return Ok(cdf(d) - cdf(c));
    }
    let boundary = |x: f64| -> Result<f64> {
        if x.is_infinite() {
            return Ok(0.0);
        }
        Ok(orthonormal_hermite_1d(ell - 1, x)? * normal_pdf(x))
    };
    Ok(-(boundary(d)? - boundary(c)?) / (ell as f64).sqrt())
}
