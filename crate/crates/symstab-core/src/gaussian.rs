//! Gaussian measures of centered balls, radius solvers, sphere volumes,
//! Wallis integrals, Gamma-function expansion bounds and Edgeworth-scaled
//! radii.

use crate::special::{
    clamp_probability, double_factorial, ln_gamma, normal_cdf, normal_pdf, regularized_gamma_p,
    INV_SQRT_2PI,
};
use crate::{Error, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// A centered ball `B(0, r) ⊂ R^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    dim: usize,
    radius: f64,
}

impl BallSpec {
    /// Requires `dim ≥ 1` and `radius ≥ 0`.
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::invalid("radius", format!("{radius} is not a nonnegative real")));
        }
        Ok(BallSpec { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Radius r(s, n) = √(n + s√(2n)), the CLT scaling of ball radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledRadius {
    s: f64,
    dim: usize,
}

impl ScaledRadius {
    /// Requires `n + s√(2n) ≥ 0` so the radius is real.
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        let n = dim as f64;
        if !s.is_finite() || n + s * (2.0 * n).sqrt() < 0.0 {
            return Err(Error::invalid(
                "s",
                format!("n + s√(2n) = {} must be nonnegative", n + s * (2.0 * n).sqrt()),
            ));
        }
        Ok(ScaledRadius { s, dim })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The realized radius √(n + s√(2n)).
    pub fn radius(&self) -> f64 {
        let n = self.dim as f64;
        (n + self.s * (2.0 * n).sqrt()).sqrt()
    }
}

/// Two-sided bounds on the Stirling remainder λ_m of the Gamma expansion
/// Γ(n/2) = √(2π) m^{m+1/2} e^{-m} e^{1/(12m)} e^{-λ_m}, m = (n-2)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaExpansionBounds {
    pub m: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
}

impl GammaExpansionBounds {
    /// Bounds from the printed rational expressions; requires `m ≥ 3`.
    pub fn new(m: f64) -> Result<Self> {
        if m < 3.0 {
            return Err(Error::invalid("m", "index must be at least 3"));
        }
        let base = 1.0 / (360.0 * m * (m - 1.0) * (m + 1.0));
        let lower = base - 1.0 / (120.0 * m * m * (m - 1.0) * (m + 1.0));
        let upper = base + 11.0 / (480.0 * m * m * (m - 1.0) * (m + 1.0));
        debug_assert!(lower >= 0.0 && lower <= upper);
        Ok(GammaExpansionBounds {
            m,
            lambda_lower: lower,
            lambda_upper: upper,
        })
    }
}

/// Gaussian measure γ_n(B(0, r)) = P(n/2, r²/2).
pub fn gaussian_measure_ball(spec: BallSpec) -> f64 {
    let p = regularized_gamma_p(spec.dim as f64 / 2.0, 0.5 * spec.radius * spec.radius)
        .expect("valid BallSpec implies valid gamma arguments");
    clamp_probability(p)
}

/// χ_n density of the radial variable |X|, the derivative of
/// `gaussian_measure_ball` in r.
fn radial_density(n: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let ln = (nf - 1.0) * r.ln() - 0.5 * r * r - (0.5 * nf - 1.0) * std::f64::consts::LN_2
        - ln_gamma(0.5 * nf);
    ln.exp()
}

/// Solve γ_n(B(0, r)) = a for r, with absolute tolerance 1e-12 on the measure.
///
/// Newton steps seeded inside a monotone bracket; bisection whenever Newton
/// leaves the bracket.
pub fn radius_for_measure(n: usize, a: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid("a", format!("measure {a} must lie in (0,1)")));
    }
    let measure = |r: f64| gaussian_measure_ball(BallSpec { dim: n, radius: r });
    let mut lo = 0.0f64;
    let mut hi = (n as f64).sqrt() + 1.0;
    while measure(hi) < a {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::invalid("a", "bracketing failed"));
        }
    }
    // Shrink the bracket until the radius itself is pinned; the 1e-12
    // measure tolerance alone cannot resolve r where the radial density is
    // tiny (deep tails), so both exits are required.
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let err = measure(r) - a;
        if err.abs() <= 1e-12 && hi - lo <= 1e-12 * (1.0 + r) {
            return Ok(r);
        }
        if err > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = radial_density(n, r);
        let newton = if d > 0.0 { r - err / d } else { f64::NAN };
        r = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::QuadratureFailed(
        "radius solver did not reach tolerance 1e-12".into(),
    ))
}

/// Surface measure Vol(S^{n-1}) of the unit sphere via 2π^{n/2}/Γ(n/2).
///
/// Vol(S^0) = 2 (counting measure on two points).
pub fn sphere_volume(n: usize) -> f64 {
    assert!(n >= 1, "dimension must be at least 1");
    let nf = n as f64;
    2.0 * (0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf)).exp()
}

/// Vol(S^{n-1}) as the Wallis product 2π ∏_{ℓ=1}^{n-2} ∫₀^π sin^ℓ.
///
/// The product formula needs n ≥ 2; the 0-sphere is special-cased to 2.
pub fn sphere_volume_wallis(n: usize) -> f64 {
    assert!(n >= 1, "dimension must be at least 1");
    if n == 1 {
        return 2.0;
    }
    let mut v = TAU;
    for ell in 1..=(n as i64 - 2) {
        v *= wallis_integral(ell as usize);
    }
    v
}

/// ∫₀^π sin^k(θ) dθ by the double-factorial formula.
pub fn wallis_integral(k: usize) -> f64 {
    let k = k as i64;
    let ratio = double_factorial(k - 1) / double_factorial(k);
    if k % 2 == 0 {
        std::f64::consts::PI * ratio
    } else {
        2.0 * ratio
    }
}

/// ∫_{B(0,r)} (1 - x₁²) dγ_n = Vol(S^{n-1}) rⁿ e^{-r²/2} / (n (2π)^{n/2}).
///
/// The defect of the complement is the negation.
pub fn second_moment_defect_ball(spec: BallSpec) -> f64 {
    ln_second_moment_defect_ball(spec.dim, spec.radius).map_or(0.0, f64::exp)
}

/// Natural log of `second_moment_defect_ball`, stable for large n.
/// `None` when r = 0 (the defect is exactly 0).
pub fn ln_second_moment_defect_ball(n: usize, r: f64) -> Option<f64> {
    if r <= 0.0 {
        return None;
    }
    let nf = n as f64;
    Some(
        std::f64::consts::LN_2 + 0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf)
            + nf * r.ln()
            - 0.5 * r * r
            - nf.ln()
            - 0.5 * nf * TAU.ln(),
    )
}

/// Two-sided interval guaranteed to contain Γ(n/2), from the λ_m bounds.
///
/// Restricted to n ≥ 8 so that m = (n-2)/2 ≥ 3 meets the index constraint.
pub fn gamma_half_expansion(n: usize) -> Result<(f64, f64)> {
    if n < 8 {
        return Err(Error::invalid("n", "expansion requires n ≥ 8"));
    }
    let m = (n as f64 - 2.0) / 2.0;
    let bounds = GammaExpansionBounds::new(m)?;
    let ln_c = 0.5 * TAU.ln() + (m + 0.5) * m.ln() - m + 1.0 / (12.0 * m);
    Ok((
        (ln_c - bounds.lambda_upper).exp(),
        (ln_c - bounds.lambda_lower).exp(),
    ))
}

/// Exact measure, CLT term and printed first-order Edgeworth correction for
/// the scaled ball B(0, r(s,n)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeworthMeasure {
    /// γ_n(B(0, r(s,n))), computed exactly.
    pub exact: f64,
    /// The CLT term Φ(s).
    pub clt_term: f64,
    /// The printed correction (1-s²) φ(s) / √n. Recorded, not asserted: the
    /// standard χ² expansion carries an extra √2/3 skewness factor.
    pub correction_term: f64,
}

/// Evaluate the Edgeworth decomposition of γ_n(B(0, r(s,n))).
pub fn edgeworth_ball_measure(sr: ScaledRadius) -> EdgeworthMeasure {
    let spec = BallSpec {
        dim: sr.dim,
        radius: sr.radius(),
    };
    EdgeworthMeasure {
        exact: gaussian_measure_ball(spec),
        clt_term: normal_cdf(sr.s),
        correction_term: (1.0 - sr.s * sr.s) * normal_pdf(sr.s) / (sr.dim as f64).sqrt(),
    }
}

/// Density of γ_n at a point with norm `r`, i.e. e^{-r²/2}/(2π)^{n/2}.
pub fn gaussian_density_at_radius(n: usize, r: f64) -> f64 {
    (-0.5 * r * r).exp() / TAU.powf(n as f64 / 2.0)
}

/// Standard normal density (re-exported for convenience).
pub fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ball_measure_printed_example() {
        // n=2, r=2.4 closed form 1 - e^{-2.88}
        let spec = BallSpec::new(2, 2.4).unwrap();
        assert_abs_diff_eq!(
            gaussian_measure_ball(spec),
            1.0 - (-2.88f64).exp(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(gaussian_measure_ball(spec), 0.943_865_237_165_866_2, epsilon = 1e-12);
    }

    #[test]
    fn ball_measure_trivial_and_quadrature_oracle() {
        for n in 1..=6 {
            assert_eq!(gaussian_measure_ball(BallSpec::new(n, 0.0).unwrap()), 0.0);
        }
        // independent oracle: adaptive quadrature of the normal density on [-1,1]
        let oracle = adaptive_simpson(&phi, -1.0, 1.0, 1e-13).unwrap();
        assert_abs_diff_eq!(oracle, 0.682_689_492_137_085_9, epsilon = 1e-12);
        assert_abs_diff_eq!(
            gaussian_measure_ball(BallSpec::new(1, 1.0).unwrap()),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ball_measure_monotone_in_radius() {
        for n in 1..=12 {
            let mut prev = 0.0;
            for k in 1..=40 {
                let r = 0.2 * k as f64;
                let m = gaussian_measure_ball(BallSpec::new(n, r).unwrap());
                assert!(m > prev, "measure not increasing at n={n}, r={r}");
                prev = m;
            }
        }
    }

    #[test]
    fn radius_solver_examples() {
        let a = 1.0 - (-2.88f64).exp();
        assert_abs_diff_eq!(radius_for_measure(2, a).unwrap(), 2.4, epsilon = 1e-9);
        // paper's complementary radius r' = √(-2 ln(1 - e^{-2.88}))
        let ap = (-2.88f64).exp();
        let expected = (-2.0 * (1.0 - (-2.88f64).exp()).ln()).sqrt();
        assert_abs_diff_eq!(radius_for_measure(2, ap).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(expected, 0.339_917_284_841_384_45, epsilon = 1e-12);
        // continuity at the empty set
        assert!(radius_for_measure(1, 1e-12).unwrap() < 1e-5);
        assert!(radius_for_measure(1, 0.0).is_err());
        assert!(radius_for_measure(1, 1.0).is_err());
    }

    #[test]
    fn radius_measure_roundtrip() {
        for n in [1usize, 2, 3, 7, 12] {
            for k in 1..=12 {
                let r = 0.35 * k as f64;
                let a = gaussian_measure_ball(BallSpec::new(n, r).unwrap());
                if a > 0.0 && a < 1.0 {
                    let back = radius_for_measure(n, a).unwrap();
                    assert_abs_diff_eq!(back, r, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn sphere_volumes() {
        assert_abs_diff_eq!(sphere_volume(2), TAU, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(3), 2.0 * TAU, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_volume(4), TAU * std::f64::consts::PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_volume(1), 2.0, epsilon = 1e-14);
        for n in 1..=30 {
            let a = sphere_volume(n);
            let b = sphere_volume_wallis(n);
            assert!(
                ((a - b) / a).abs() < 1e-12,
                "volume routes disagree at n={n}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn wallis_values_and_quadrature() {
        assert_abs_diff_eq!(wallis_integral(0), std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wallis_integral(1), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wallis_integral(2), std::f64::consts::PI / 2.0, epsilon = 1e-15);
        for k in 0..=40 {
            let oracle =
                adaptive_simpson(&|t: f64| t.sin().powi(k as i32), 0.0, std::f64::consts::PI, 1e-12)
                    .unwrap();
            assert_abs_diff_eq!(wallis_integral(k), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn defect_examples_and_oracle() {
        // closed form 2.88 e^{-2.88}; cross-checked by the polar quadrature oracle
        let spec = BallSpec::new(2, 2.4).unwrap();
        assert_abs_diff_eq!(
            second_moment_defect_ball(spec),
            2.88 * (-2.88f64).exp(),
            epsilon = 1e-13
        );
        let polar = adaptive_simpson(
            &|s: f64| {
                // ∫_0^{2π} (1 - s² cos²θ) dθ /(2π) = 1 - s²/2
                (1.0 - 0.5 * s * s) * s * (-0.5 * s * s).exp()
            },
            0.0,
            2.4,
            1e-13,
        )
        .unwrap();
        assert_abs_diff_eq!(second_moment_defect_ball(spec), polar, epsilon = 1e-11);

        assert_eq!(second_moment_defect_ball(BallSpec::new(5, 0.0).unwrap()), 0.0);

        // 1D quadrature oracle for (1 - x²) against γ₁ on [-1, 1]
        let oracle = adaptive_simpson(&|x: f64| (1.0 - x * x) * phi(x), -1.0, 1.0, 1e-13).unwrap();
        assert_abs_diff_eq!(oracle, 0.483_941_449_038_286_7, epsilon = 1e-12);
        assert_abs_diff_eq!(
            second_moment_defect_ball(BallSpec::new(1, 1.0).unwrap()),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn defect_maximized_at_sqrt_n() {
        for n in 1..=8 {
            let star = (n as f64).sqrt();
            let best = second_moment_defect_ball(BallSpec::new(n, star).unwrap());
            for k in 1..=60 {
                let r = 0.1 * k as f64;
                if (r - star).abs() < 1e-9 {
                    continue;
                }
                let v = second_moment_defect_ball(BallSpec::new(n, r).unwrap());
                assert!(v < best, "defect at r={r} beats r=√n for n={n}");
            }
        }
    }

    #[test]
    fn gamma_expansion_contains_truth() {
        let (lo, hi) = gamma_half_expansion(8).unwrap();
        assert!(lo <= 6.0 && 6.0 <= hi, "Γ(4)=6 outside [{lo}, {hi}]");
        let (lo, hi) = gamma_half_expansion(10).unwrap();
        assert!(lo <= 24.0 && 24.0 <= hi, "Γ(5)=24 outside [{lo}, {hi}]");
        // Γ(4.5), frozen from an independent log-gamma oracle
        let g45 = 11.631_728_396_567_448;
        let (lo, hi) = gamma_half_expansion(9).unwrap();
        assert!(lo <= g45 && g45 <= hi, "Γ(4.5) outside [{lo}, {hi}]");
        assert!(gamma_half_expansion(7).is_err());
        // intervals stay tight and correct over a range
        for n in 8..=40 {
            let (lo, hi) = gamma_half_expansion(n).unwrap();
            let truth = ln_gamma(n as f64 / 2.0).exp();
            assert!(lo <= truth && truth <= hi, "Γ({}/2) outside bounds", n);
            assert!((hi - lo) / truth < 1e-3);
        }
    }

    #[test]
    fn edgeworth_examples() {
        // s = 0: exact → 1/2 as n → ∞
        for (n, tol) in [(100usize, 0.02), (10_000, 0.002)] {
            let e = edgeworth_ball_measure(ScaledRadius::new(0.0, n).unwrap());
            assert_abs_diff_eq!(e.clt_term, 0.5, epsilon = 1e-15);
            assert!((e.exact - 0.5).abs() < tol);
        }
        // recorded value at (s=0, n=100): P(χ²₁₀₀ ≤ 100), frozen from an
        // independent χ² CDF oracle
        let e = edgeworth_ball_measure(ScaledRadius::new(0.0, 100).unwrap());
        assert_abs_diff_eq!(e.exact, 0.518_808_315_472_043_3, epsilon = 1e-10);
        // √n (exact - Φ(s)) stays bounded over a wide grid
        for &s in &[-2.0, -1.0, 0.0, 1.0, 2.0] {
            for &n in &[50usize, 200, 1000, 10_000] {
                let e = edgeworthe(s, n);
                let scaled = (n as f64).sqrt() * (e.exact - e.clt_term);
                assert!(scaled.abs() < 0.5, "unbounded at s={s}, n={n}: {scaled}");
            }
        }
    }

    fn edgeworthe(s: f64, n: usize) -> EdgeworthMeasure {
        edgeworth_ball_measure(ScaledRadius::new(s, n).unwrap())
    }

    #[test]
    fn scaled_radius_rejects_negative_square() {
        assert!(ScaledRadius::new(-3.0, 2).is_err());
        assert!(ScaledRadius::new(-1.0, 2).is_ok());
    }
}
