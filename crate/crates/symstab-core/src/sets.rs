//! The origin-symmetric set family, Gaussian measures and Hermite-Fourier
//! coefficients of their indicators.
//!
//! Closed forms are used wherever they exist (balls, strips, interval
//! unions, and all coefficients of 1D sets); the 2D curved variants go
//! through polar coordinates with closed-form radial integrals and a
//! periodic trapezoid rule in the angle, which is spectrally accurate for
//! smooth boundaries.

use crate::gaussian::{gaussian_measure_ball, second_moment_defect_ball, BallSpec};
use crate::hermite::{monomial_coefficients, orthonormal_interval_integral, MultiIndex};
use crate::special::{normal_cdf, normal_pdf};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Default angular grid for polar quadrature on curved 2D boundaries.
pub const DEFAULT_ANGULAR_GRID: usize = 2048;

/// Default truncation degree for coefficient tables. Spectral tails at
/// |ρ| ≤ 0.3 are far below 1e-9 at this depth.
pub const DEFAULT_DEGREE_CAP: usize = 20;

/// A union of disjoint intervals on the line, stored maximal and sorted.
/// Endpoints may be ±∞. The union must be closed under negation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Normalizes (sorts, merges overlaps) and enforces symmetry.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(c, d) in &intervals {
            if c.is_nan() || d.is_nan() || c > d {
                return Err(Error::invalid("intervals", format!("bad interval [{c}, {d}]")));
            }
        }
        let mut sorted = intervals;
        sorted.retain(|&(c, d)| c < d);
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (c, d) in sorted {
            match merged.last_mut() {
                Some(last) if c <= last.1 => last.1 = last.1.max(d),
                _ => merged.push((c, d)),
            }
        }
        let union = IntervalUnion { intervals: merged };
        union.check_symmetry()?;
        Ok(union)
    }

    pub fn empty() -> Self {
        IntervalUnion { intervals: vec![] }
    }

    /// The full line (-∞, ∞).
    pub fn full_line() -> Self {
        IntervalUnion {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    fn check_symmetry(&self) -> Result<()> {
        let tol = 1e-12;
        let n = self.intervals.len();
        for k in 0..n {
            let (c, d) = self.intervals[k];
            let (mc, md) = self.intervals[n - 1 - k];
            let ok_left = (c + md).abs() <= tol || (c.is_infinite() && md.is_infinite());
            let ok_right = (d + mc).abs() <= tol || (d.is_infinite() && mc.is_infinite());
            if !ok_left || !ok_right {
                return Err(Error::NotSymmetric(format!(
                    "interval [{c}, {d}] has no mirror image"
                )));
            }
        }
        Ok(())
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(c, d)| c <= x && x <= d)
    }

    pub fn measure(&self) -> f64 {
        self.intervals
            .iter()
            .map(|&(c, d)| gauss_cdf_ext(d) - gauss_cdf_ext(c))
            .sum()
    }

    /// γ₁ of the symmetric difference with another union.
    pub fn symmetric_difference_measure(&self, other: &IntervalUnion) -> f64 {
        // endpoints partition the line into cells of constant membership
        let mut cuts: Vec<f64> = Vec::new();
        for &(c, d) in self.intervals.iter().chain(&other.intervals) {
            if c.is_finite() {
                cuts.push(c);
            }
            if d.is_finite() {
                cuts.push(d);
            }
        }
        cuts.push(-40.0);
        cuts.push(40.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if self.contains(mid) != other.contains(mid) {
                acc += normal_cdf(w[1]) - normal_cdf(w[0]);
            }
        }
        acc
    }
}

fn gauss_cdf_ext(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        normal_cdf(x)
    }
}

/// Periodic boundary samples R(θ_k) > 0 on the uniform grid θ_k = 2πk/M.
/// Antipodal symmetry R(θ) = R(θ+π) is enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StarBoundary {
    samples: Vec<f64>,
}

impl StarBoundary {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let m = samples.len();
        if m < 8 || m % 2 != 0 {
            return Err(Error::invalid(
                "samples",
                format!("need an even grid of at least 8 samples, got {m}"),
            ));
        }
        if samples.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::invalid("samples", "boundary radii must be positive"));
        }
        for k in 0..m / 2 {
            if (samples[k] - samples[k + m / 2]).abs() > 1e-12 {
                return Err(Error::NotSymmetric(format!(
                    "R(θ_{k}) = {} but R(θ_{k}+π) = {}",
                    samples[k],
                    samples[k + m / 2]
                )));
            }
        }
        Ok(StarBoundary { samples })
    }

    /// Sample a smooth radius function on an M-point grid.
    pub fn from_fn<F: Fn(f64) -> f64>(m: usize, f: F) -> Result<Self> {
        let samples = (0..m).map(|k| f(TAU * k as f64 / m as f64)).collect();
        StarBoundary::new(samples)
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Linear interpolation of R at an arbitrary angle.
    pub fn radius_at(&self, theta: f64) -> f64 {
        let m = self.samples.len() as f64;
        let t = (theta.rem_euclid(TAU)) / TAU * m;
        let k = t.floor() as usize % self.samples.len();
        let frac = t - t.floor();
        let next = (k + 1) % self.samples.len();
        self.samples[k] * (1.0 - frac) + self.samples[next] * frac
    }
}

/// Tagged family of origin-symmetric sets.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricSet {
    /// Centered ball B(0, r) ⊂ R^n.
    Ball { dim: usize, radius: f64 },
    /// Complement of a centered ball.
    BallComplement { dim: usize, radius: f64 },
    /// { |x₁| ≤ w } ⊂ R^n.
    Strip { dim: usize, halfwidth: f64 },
    /// { x₁²/a² + x₂²/b² ≤ 1 } ⊂ R².
    Ellipse2D { a: f64, b: f64 },
    /// Symmetric union of intervals on the line.
    IntervalUnion1D(IntervalUnion),
    /// 2D region enclosed by a star-shaped boundary R(θ).
    StarShaped2D(StarBoundary),
}

impl fmt::Display for SymmetricSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetricSet::Ball { dim, radius } => write!(f, "ball n={dim} r={radius}"),
            SymmetricSet::BallComplement { dim, radius } => {
                write!(f, "ball-complement n={dim} r={radius}")
            }
            SymmetricSet::Strip { dim, halfwidth } => write!(f, "strip n={dim} w={halfwidth}"),
            SymmetricSet::Ellipse2D { a, b } => write!(f, "ellipse a={a} b={b}"),
            SymmetricSet::IntervalUnion1D(u) => {
                write!(f, "intervals ")?;
                if u.intervals().is_empty() {
                    return write!(f, "∅");
                }
                for (k, (c, d)) in u.intervals().iter().enumerate() {
                    if k > 0 {
                        write!(f, "∪")?;
                    }
                    write!(f, "[{c},{d}]")?;
                }
                Ok(())
            }
            SymmetricSet::StarShaped2D(s) => write!(f, "star m={}", s.grid_size()),
        }
    }
}

impl SymmetricSet {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        BallSpec::new(dim, radius)?;
        Ok(SymmetricSet::Ball { dim, radius })
    }

    pub fn ball_complement(dim: usize, radius: f64) -> Result<Self> {
        BallSpec::new(dim, radius)?;
        Ok(SymmetricSet::BallComplement { dim, radius })
    }

    pub fn strip(dim: usize, halfwidth: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        if !(halfwidth.is_finite() && halfwidth >= 0.0) {
            return Err(Error::invalid("halfwidth", "must be a nonnegative real"));
        }
        Ok(SymmetricSet::Strip { dim, halfwidth })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::invalid("semi_axis", "semi-axes must be positive"));
        }
        Ok(SymmetricSet::Ellipse2D { a, b })
    }

    pub fn intervals(intervals: Vec<(f64, f64)>) -> Result<Self> {
        Ok(SymmetricSet::IntervalUnion1D(IntervalUnion::new(intervals)?))
    }

    pub fn star(samples: Vec<f64>) -> Result<Self> {
        Ok(SymmetricSet::StarShaped2D(StarBoundary::new(samples)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricSet::Ball { dim, .. }
            | SymmetricSet::BallComplement { dim, .. }
            | SymmetricSet::Strip { dim, .. } => *dim,
            SymmetricSet::Ellipse2D { .. } | SymmetricSet::StarShaped2D(_) => 2,
            SymmetricSet::IntervalUnion1D(_) => 1,
        }
    }

    /// Indicator evaluation (boundary points count as inside).
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            SymmetricSet::Ball { radius, .. } => {
                x.iter().map(|v| v * v).sum::<f64>() <= radius * radius
            }
            SymmetricSet::BallComplement { radius, .. } => {
                x.iter().map(|v| v * v).sum::<f64>() > radius * radius
            }
            SymmetricSet::Strip { halfwidth, .. } => x[0].abs() <= *halfwidth,
            SymmetricSet::Ellipse2D { a, b } => {
                (x[0] / a).powi(2) + (x[1] / b).powi(2) <= 1.0
            }
            SymmetricSet::IntervalUnion1D(u) => u.contains(x[0]),
            SymmetricSet::StarShaped2D(s) => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                r <= s.radius_at(x[1].atan2(x[0]))
            }
        }
    }

    /// Angular radius profile of the 2D curved variants.
    fn polar_radius(&self, theta: f64) -> f64 {
        match self {
            SymmetricSet::Ellipse2D { a, b } => {
                let (c, s) = (theta.cos(), theta.sin());
                1.0 / ((c / a).powi(2) + (s / b).powi(2)).sqrt()
            }
            SymmetricSet::StarShaped2D(star) => star.radius_at(theta),
            _ => unreachable!("polar radius only defined for curved 2D sets"),
        }
    }

    fn angular_grid(&self) -> usize {
        match self {
            SymmetricSet::StarShaped2D(s) => s.grid_size(),
            _ => DEFAULT_ANGULAR_GRID,
        }
    }

    /// γ_n(A).
    pub fn measure(&self) -> f64 {
        self.measure_with_grid(self.angular_grid())
    }

    /// γ_n(A) with an explicit angular grid for the curved variants
    /// (convergence diagnostics; closed-form variants ignore the grid).
    pub fn measure_with_grid(&self, m: usize) -> f64 {
        match self {
            SymmetricSet::Ball { dim, radius } => {
                gaussian_measure_ball(BallSpec::new(*dim, *radius).unwrap())
            }
            SymmetricSet::BallComplement { dim, radius } => {
                1.0 - gaussian_measure_ball(BallSpec::new(*dim, *radius).unwrap())
            }
            SymmetricSet::Strip { halfwidth, .. } => {
                2.0 * normal_cdf(*halfwidth) - 1.0
            }
            SymmetricSet::IntervalUnion1D(u) => u.measure(),
            SymmetricSet::Ellipse2D { .. } | SymmetricSet::StarShaped2D(_) => {
                self.polar_average(m, |_theta, r2, exp_term| {
                    let _ = r2;
                    1.0 - exp_term
                })
            }
        }
    }

    /// Left-to-right polar trapezoid average of f(θ, R², e^{-R²/2}).
    fn polar_average<F: Fn(f64, f64, f64) -> f64>(&self, m: usize, f: F) -> f64 {
        let mut acc = 0.0;
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            let r = self.polar_radius(theta);
            let r2 = r * r;
            acc += f(theta, r2, (-0.5 * r2).exp());
        }
        acc / m as f64
    }

    /// Per-coordinate defects ∫_A (1 - x_i²) dγ_n.
    pub fn defect_vector(&self) -> Vec<f64> {
        self.defect_vector_with_grid(self.angular_grid())
    }

    pub fn defect_vector_with_grid(&self, m: usize) -> Vec<f64> {
        match self {
            SymmetricSet::Ball { dim, radius } => {
                let d = second_moment_defect_ball(BallSpec::new(*dim, *radius).unwrap());
                vec![d; *dim]
            }
            SymmetricSet::BallComplement { dim, radius } => {
                let d = second_moment_defect_ball(BallSpec::new(*dim, *radius).unwrap());
                vec![-d; *dim]
            }
            SymmetricSet::Strip { dim, halfwidth } => {
                let mut v = vec![0.0; *dim];
                v[0] = 2.0 * halfwidth * normal_pdf(*halfwidth);
                v
            }
            SymmetricSet::IntervalUnion1D(u) => {
                let d = u
                    .intervals()
                    .iter()
                    .map(|&(c, d)| boundary_x_phi(d) - boundary_x_phi(c))
                    .sum();
                vec![d]
            }
            SymmetricSet::Ellipse2D { .. } | SymmetricSet::StarShaped2D(_) => {
                // inner radial integrals: ∫₀^R s e^{-s²/2} ds = 1 - E and
                // ∫₀^R s³ e^{-s²/2} ds = 2 - E (R²+2), E = e^{-R²/2}
                let d1 = self.polar_average(m, |theta, r2, e| {
                    (1.0 - e) - theta.cos().powi(2) * (2.0 - e * (r2 + 2.0))
                });
                let d2 = self.polar_average(m, |theta, r2, e| {
                    (1.0 - e) - theta.sin().powi(2) * (2.0 - e * (r2 + 2.0))
                });
                vec![d1, d2]
            }
        }
    }

    /// ∫_A x_i x_j dγ_n for i < j; zero by reflection symmetry for every
    /// axis-aligned variant.
    pub fn cross_moment(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.dim();
        if !(i < j && j < n + 1 && i >= 1) {
            return Err(Error::invalid("ij", format!("need 1 ≤ i < j ≤ {n}, got ({i}, {j})")));
        }
        Ok(match self {
            SymmetricSet::StarShaped2D(_) => self.polar_average(self.angular_grid(), |t, r2, e| {
                t.cos() * t.sin() * (2.0 - e * (r2 + 2.0))
            }),
            _ => 0.0,
        })
    }

    /// Orthonormal Hermite-Fourier coefficient ∫_A √(ℓ!) h_ℓ dγ_n.
    pub fn fourier_coefficient(&self, ell: &MultiIndex) -> Result<f64> {
        if ell.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: ell.dim(),
            });
        }
        match self {
            SymmetricSet::IntervalUnion1D(u) => {
                let l = ell.entries()[0];
                u.intervals()
                    .iter()
                    .map(|&(c, d)| orthonormal_interval_integral(l, c, d))
                    .sum()
            }
            SymmetricSet::Strip { halfwidth, .. } => {
                if ell.entries()[1..].iter().any(|&e| e > 0) {
                    return Ok(0.0); // ∫_R √(ℓ!) h_ℓ dγ₁ = 0 for ℓ ≥ 1
                }
                orthonormal_interval_integral(ell.entries()[0], -halfwidth, *halfwidth)
            }
            SymmetricSet::Ball { dim, radius } => {
                ball_coefficient(*dim, *radius, ell, false)
            }
            SymmetricSet::BallComplement { dim, radius } => {
                ball_coefficient(*dim, *radius, ell, true)
            }
            SymmetricSet::Ellipse2D { .. } | SymmetricSet::StarShaped2D(_) => {
                curved_coefficient(self, ell)
            }
        }
    }
}

fn boundary_x_phi(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * normal_pdf(x)
    }
}

/// Ball coefficients: 1D via the exact interval integral; 2D via radial
/// closed forms for ‖ℓ‖₁ ≤ 2 and an exact angular reduction with radial 1D
/// quadrature above.
fn ball_coefficient(dim: usize, radius: f64, ell: &MultiIndex, complement: bool) -> Result<f64> {
    // coefficient of the complement: full-space value δ_{ℓ,0} minus the ball's
    let flip = |v: f64| {
        if complement {
            (if ell.degree() == 0 { 1.0 } else { 0.0 }) - v
        } else {
            v
        }
    };
    match dim {
        1 => Ok(flip(orthonormal_interval_integral(
            ell.entries()[0],
            -radius,
            radius,
        )?)),
        2 => {
            let spec = BallSpec::new(2, radius).unwrap();
            let deg = ell.degree();
            if deg == 0 {
                return Ok(flip(gaussian_measure_ball(spec)));
            }
            if deg % 2 == 1 {
                return Ok(0.0);
            }
            if deg == 2 {
                // √2 h₂(x_i) pairs with (x_i²-1)/√2; mixed term vanishes
                let v = if ell.entries().contains(&2) {
                    -second_moment_defect_ball(spec) / std::f64::consts::SQRT_2
                } else {
                    0.0
                };
                return Ok(flip(v));
            }
            // angular reduction: t(s) = (1/2π)∫ √(ℓ!) h_{ℓ₁}(s cosθ) h_{ℓ₂}(s sinθ) dθ
            // is exact under the trapezoid rule (trigonometric polynomial),
            // leaving a smooth radial integral.
            let m_ang = 2 * (deg + 2);
            let radial = |s: f64| -> f64 {
                let mut acc = 0.0;
                for k in 0..m_ang {
                    let theta = TAU * k as f64 / m_ang as f64;
                    acc += crate::hermite::orthonormal_hermite_nd(
                        ell,
                        &[s * theta.cos(), s * theta.sin()],
                    )
                    .unwrap();
                }
                acc / m_ang as f64 * s * (-0.5 * s * s).exp()
            };
            let v = crate::quad::adaptive_simpson(&radial, 0.0, radius, 1e-13)?;
            Ok(flip(v))
        }
        _ => Err(Error::invalid(
            "dim",
            "coefficient tables for balls support dimension ≤ 2",
        )),
    }
}

/// Curved 2D coefficients: per angle, √(ℓ!) h_{ℓ₁}(s cosθ) h_{ℓ₂}(s sinθ) is
/// a polynomial in s whose radial integrals ∫₀^R s^{j+1} e^{-s²/2} ds follow
/// the two-term recurrence; the outer θ integral is a periodic trapezoid.
fn curved_coefficient(set: &SymmetricSet, ell: &MultiIndex) -> Result<f64> {
    let l1 = ell.entries()[0];
    let l2 = ell.entries()[1];
    let deg = l1 + l2;
    if deg > crate::hermite::DEGREE_CAP {
        return Err(Error::DegreeCapExceeded {
            degree: deg,
            cap: crate::hermite::DEGREE_CAP,
        });
    }
    let norm = ell.factorial().sqrt();
    let c1 = monomial_coefficients(l1)?;
    let c2 = monomial_coefficients(l2)?;
    let m = set.angular_grid();
    let mut acc = 0.0;
    let mut poly = vec![0.0; deg + 1];
    for k in 0..m {
        let theta = TAU * k as f64 / m as f64;
        let (ct, st) = (theta.cos(), theta.sin());
        // polynomial of h_{ℓ₁}(s·cosθ) h_{ℓ₂}(s·sinθ) in s
        poly.iter_mut().for_each(|v| *v = 0.0);
        for (m1, a) in c1.iter().enumerate() {
            let e1 = l1 - 2 * m1;
            let fa = a * ct.powi(e1 as i32);
            for (m2, b) in c2.iter().enumerate() {
                let e2 = l2 - 2 * m2;
                poly[e1 + e2] += fa * b * st.powi(e2 as i32);
            }
        }
        let r = set.polar_radius(theta);
        let moments = radial_gaussian_moments(deg + 1, r);
        let mut inner = 0.0;
        for (j, &p) in poly.iter().enumerate() {
            if p != 0.0 {
                inner += p * moments[j + 1];
            }
        }
        acc += inner;
    }
    Ok(norm * acc / m as f64)
}

/// I_j(R) = ∫₀^R s^j e^{-s²/2} ds for j = 0..=jmax.
fn radial_gaussian_moments(jmax: usize, r: f64) -> Vec<f64> {
    let e = (-0.5 * r * r).exp();
    let mut out = Vec::with_capacity(jmax + 1);
    out.push((TAU).sqrt() * (normal_cdf(r) - 0.5)); // I_0
    if jmax >= 1 {
        out.push(1.0 - e); // I_1
    }
    let mut rpow = r; // r^{j-1} for j = 2
    for j in 2..=jmax {
        let v = (j as f64 - 1.0) * out[j - 2] - rpow * e;
        out.push(v);
        rpow *= r;
    }
    out
}

/// Truncated table of orthonormal Hermite-Fourier coefficients of a set.
#[derive(Debug, Clone)]
pub struct FourierTable {
    set_id: String,
    dim: usize,
    degree_cap: usize,
    entries: BTreeMap<MultiIndex, f64>,
}

impl FourierTable {
    /// Tabulate ∫_A √(ℓ!) h_ℓ dγ_n for all ‖ℓ‖₁ ≤ `degree_cap`.
    pub fn build(set: &SymmetricSet, degree_cap: usize) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for ell in MultiIndex::enumerate(set.dim(), degree_cap) {
            let v = set.fourier_coefficient(&ell)?;
            entries.insert(ell, v);
        }
        Ok(FourierTable {
            set_id: set.to_string(),
            dim: set.dim(),
            degree_cap,
            entries,
        })
    }

    /// Table of the exponential tilt e^{λx−λ²/2} (1D), whose coefficients
    /// are λ^ℓ/√(ℓ!).
    pub fn from_tilt(tilt: crate::hermite::ExponentialTilt, degree_cap: usize) -> Self {
        let mut entries = BTreeMap::new();
        for ell in 0..=degree_cap {
            entries.insert(
                MultiIndex::new(vec![ell]),
                tilt.orthonormal_coefficient(ell),
            );
        }
        FourierTable {
            set_id: format!("tilt λ={}", tilt.lambda),
            dim: 1,
            degree_cap,
            entries,
        }
    }

    pub fn set_id(&self) -> &str {
        &self.set_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn get(&self, ell: &MultiIndex) -> Option<f64> {
        self.entries.get(ell).copied()
    }

    /// The ℓ = 0 entry, i.e. γ_n(A) for indicator tables.
    pub fn mass(&self) -> f64 {
        self.entries
            .get(&MultiIndex::new(vec![0; self.dim]))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// Σ_{‖ℓ‖₁ = k} c_ℓ².
    pub fn shell_mass(&self, k: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(ell, _)| ell.degree() == k)
            .map(|(_, &v)| v * v)
            .sum()
    }

    /// Parseval partial sum Σ_{‖ℓ‖₁ ≤ L} c_ℓ².
    pub fn partial_parseval(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Exact action of T_ρ on coefficients: entry ℓ scales by ρ^{‖ℓ‖₁}.
    pub fn apply_t_rho(&self, rho: f64) -> FourierTable {
        let entries = self
            .entries
            .iter()
            .map(|(ell, &v)| (ell.clone(), rho.powi(ell.degree() as i32) * v))
            .collect();
        FourierTable {
            set_id: format!("T_{rho}({})", self.set_id),
            dim: self.dim,
            degree_cap: self.degree_cap,
            entries,
        }
    }
}

/// Parse the CLI set-description grammar, e.g. `ball n=2 r=2.4`,
/// `ellipse a=2.5 b=2.31394`, `strip n=2 w=1.90999`,
/// `intervals [-1,1]∪[-3,-2]∪[2,3]`, `star m=2048 file=boundary.csv`.
pub fn parse_set(text: &str) -> Result<SymmetricSet> {
    let mut parts = text.split_whitespace();
    let head = parts
        .next()
        .ok_or_else(|| Error::ParseError("empty description".into()))?;
    let rest: Vec<&str> = parts.collect();
    let kv = |key: &str| -> Result<String> {
        rest.iter()
            .find_map(|p| p.strip_prefix(&format!("{key}=")))
            .map(str::to_string)
            .ok_or_else(|| Error::ParseError(format!("missing `{key}=` in `{text}`")))
    };
    let num = |key: &str| -> Result<f64> {
        kv(key)?
            .parse::<f64>()
            .map_err(|e| Error::ParseError(format!("bad number for `{key}`: {e}")))
    };
    let int = |key: &str| -> Result<usize> {
        kv(key)?
            .parse::<usize>()
            .map_err(|e| Error::ParseError(format!("bad integer for `{key}`: {e}")))
    };
    match head {
        "ball" => SymmetricSet::ball(int("n")?, num("r")?),
        "ball-complement" | "ballc" => SymmetricSet::ball_complement(int("n")?, num("r")?),
        "strip" => SymmetricSet::strip(int("n")?, num("w")?),
        "ellipse" => SymmetricSet::ellipse(num("a")?, num("b")?),
        "intervals" => {
            let body = rest.join("");
            parse_intervals(&body)
        }
        "star" => {
            let m = int("m")?;
            let path = kv("file")?;
            let samples = read_star_csv(&path, m)?;
            SymmetricSet::star(samples)
        }
        other => Err(Error::ParseError(format!("unknown set kind `{other}`"))),
    }
}

fn parse_intervals(body: &str) -> Result<SymmetricSet> {
    if body == "∅" || body.is_empty() || body == "empty" {
        return Ok(SymmetricSet::IntervalUnion1D(IntervalUnion::empty()));
    }
    let mut intervals = Vec::new();
    for piece in body.split(['∪', 'U', 'u']) {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let inner = piece
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::ParseError(format!("expected [c,d], got `{piece}`")))?;
        let mut nums = inner.split(',').map(str::trim);
        let parse_endpoint = |s: Option<&str>| -> Result<f64> {
            let s = s.ok_or_else(|| Error::ParseError(format!("expected two endpoints in `{piece}`")))?;
            match s {
                "inf" | "+inf" | "∞" => Ok(f64::INFINITY),
                "-inf" | "-∞" => Ok(f64::NEG_INFINITY),
                _ => s
                    .parse::<f64>()
                    .map_err(|e| Error::ParseError(format!("bad endpoint `{s}`: {e}"))),
            }
        };
        let c = parse_endpoint(nums.next())?;
        let d = parse_endpoint(nums.next())?;
        if nums.next().is_some() {
            return Err(Error::ParseError(format!("too many endpoints in `{piece}`")));
        }
        intervals.push((c, d));
    }
    SymmetricSet::intervals(intervals)
}

fn read_star_csv(path: &str, m: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("cannot read `{path}`: {e}")))?;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("theta") {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let theta: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ParseError(format!("{path}:{}: bad θ", lineno + 1)))?;
        let r: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ParseError(format!("{path}:{}: bad R", lineno + 1)))?;
        rows.push((theta, r));
    }
    if rows.len() != m {
        return Err(Error::ParseError(format!(
            "expected {m} rows in `{path}`, found {}",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (k, &(theta, _)) in rows.iter().enumerate() {
        let expect = TAU * k as f64 / m as f64;
        if (theta - expect).abs() > 1e-6 {
            return Err(Error::ParseError(format!(
                "row {k}: θ = {theta} is not on the uniform grid (expected {expect})"
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ellipse_counterexample() -> SymmetricSet {
        SymmetricSet::ellipse(2.5, 2.31394).unwrap()
    }

    #[test]
    fn measures_of_printed_sets() {
        // values frozen from the polar quadrature at M = 20000 and checked
        // against the printed ≈ .943865
        assert_abs_diff_eq!(
            ellipse_counterexample().measure(),
            0.943_865_299_330_603,
            epsilon = 1e-9
        );
        assert!((ellipse_counterexample().measure() - 0.943_865).abs() < 1e-4);
        let strip = SymmetricSet::strip(2, 1.90999).unwrap();
        assert_abs_diff_eq!(strip.measure(), 0.943_865_499_114_872_3, epsilon = 1e-12);
        let empty = SymmetricSet::intervals(vec![]).unwrap();
        assert_eq!(empty.measure(), 0.0);
        let ball = SymmetricSet::ball(2, 2.4).unwrap();
        assert_abs_diff_eq!(ball.measure(), 1.0 - (-2.88f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn defects_match_printed_values() {
        let d = ellipse_counterexample().defect_vector();
        // frozen from two independent quadratures (polar and Cartesian);
        // the paper prints ≈ .143076 and ≈ .178889
        assert_abs_diff_eq!(d[0], 0.143_066_788_780_581, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 0.178_888_973_897_043_5, epsilon = 1e-9);
        assert!((d[0] - 0.143_076).abs() < 1e-4);
        assert!((d[1] - 0.178_889).abs() < 1e-4);

        let ball = SymmetricSet::ball(2, 2.4).unwrap().defect_vector();
        assert_abs_diff_eq!(ball[0], 2.88 * (-2.88f64).exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(ball[0], ball[1], epsilon = 1e-15);

        let full = SymmetricSet::IntervalUnion1D(IntervalUnion::full_line());
        assert_eq!(full.measure(), 1.0);
        assert_eq!(full.defect_vector()[0], 0.0);
    }

    #[test]
    fn complement_identity() {
        for n in 1..=3 {
            let r = 1.3;
            let a = SymmetricSet::ball(n, r).unwrap().defect_vector();
            let ac = SymmetricSet::ball_complement(n, r).unwrap().defect_vector();
            for i in 0..n {
                assert_abs_diff_eq!(a[i], -ac[i], epsilon = 1e-15);
            }
        }
        // interval union vs its complement
        let a = SymmetricSet::intervals(vec![(-1.0, 1.0)]).unwrap();
        let ac = SymmetricSet::intervals(vec![
            (f64::NEG_INFINITY, -1.0),
            (1.0, f64::INFINITY),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            a.defect_vector()[0],
            -ac.defect_vector()[0],
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(a.measure() + ac.measure(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn symmetry_is_enforced() {
        assert!(SymmetricSet::intervals(vec![(0.5, 1.0)]).is_err());
        assert!(SymmetricSet::intervals(vec![(-1.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(SymmetricSet::intervals(vec![(-1.0, 1.0), (2.0, 3.0), (-3.0, -2.0)]).is_ok());
        let bad_star = StarBoundary::from_fn(64, |t| 1.0 + 0.2 * t.sin());
        assert!(bad_star.is_err());
        let good_star = StarBoundary::from_fn(64, |t| 1.0 + 0.2 * (2.0 * t).sin());
        assert!(good_star.is_ok());
    }

    #[test]
    fn fourier_coefficients_1d_closed_forms() {
        for &r in &[0.5, 1.0, 2.0] {
            let ball = SymmetricSet::ball(1, r).unwrap();
            let c2 = ball
                .fourier_coefficient(&MultiIndex::new(vec![2]))
                .unwrap();
            assert_abs_diff_eq!(
                c2,
                -r * (-0.5 * r * r).exp() / std::f64::consts::PI.sqrt(),
                epsilon = 1e-14
            );
            for odd in [1usize, 3, 5] {
                let c = ball
                    .fourier_coefficient(&MultiIndex::new(vec![odd]))
                    .unwrap();
                assert_abs_diff_eq!(c, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn ball2d_coefficient_closed_form_and_quadrature_agree() {
        let ball = SymmetricSet::ball(2, 2.4).unwrap();
        let c20 = ball
            .fourier_coefficient(&MultiIndex::new(vec![2, 0]))
            .unwrap();
        let expected = -0.161_668_116_962_305_13 / std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(c20, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(
            c20,
            ball.fourier_coefficient(&MultiIndex::new(vec![0, 2])).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ball.fourier_coefficient(&MultiIndex::new(vec![1, 1])).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // the radial-quadrature path (degree 4) against the curved-set engine
        // running on a star with constant boundary
        let star = SymmetricSet::star(vec![2.4; 512]).unwrap();
        for ell in [vec![4, 0], vec![2, 2], vec![0, 4], vec![6, 2]] {
            let a = ball.fourier_coefficient(&MultiIndex::new(ell.clone())).unwrap();
            let b = star.fourier_coefficient(&MultiIndex::new(ell)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn star_with_constant_radius_reproduces_ball() {
        for &r in &[1.0, 2.4] {
            let ball = SymmetricSet::ball(2, r).unwrap();
            let star = SymmetricSet::star(vec![r; 256]).unwrap();
            assert_abs_diff_eq!(ball.measure(), star.measure(), epsilon = 1e-8);
            let db = ball.defect_vector();
            let ds = star.defect_vector();
            assert_abs_diff_eq!(db[0], ds[0], epsilon = 1e-8);
            assert_abs_diff_eq!(db[1], ds[1], epsilon = 1e-8);
        }
    }

    #[test]
    fn cross_moments() {
        assert_eq!(
            SymmetricSet::ball(2, 2.4).unwrap().cross_moment(1, 2).unwrap(),
            0.0
        );
        assert_eq!(
            ellipse_counterexample().cross_moment(1, 2).unwrap(),
            0.0
        );
        assert!(SymmetricSet::ball(2, 1.0).unwrap().cross_moment(2, 1).is_err());
        assert!(SymmetricSet::ball(2, 1.0).unwrap().cross_moment(1, 3).is_err());
        // R(θ) = 1 + 0.1 sin 2θ couples the axes; frozen quadrature value,
        // cross-checked by Monte Carlo in the stability tests
        let star =
            SymmetricSet::StarShaped2D(StarBoundary::from_fn(4096, |t| 1.0 + 0.1 * (2.0 * t).sin()).unwrap());
        let cm = star.cross_moment(1, 2).unwrap();
        assert_abs_diff_eq!(cm, 0.015_163_250_645_305_76, epsilon = 1e-8);
        // rotating by π/4 diagonalizes the second-moment matrix
        let rotated = SymmetricSet::StarShaped2D(
            StarBoundary::from_fn(4096, |t| {
                1.0 + 0.1 * (2.0 * (t - std::f64::consts::FRAC_PI_4)).sin()
            })
            .unwrap(),
        );
        assert_abs_diff_eq!(rotated.cross_moment(1, 2).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn table_parity_and_parseval() {
        let sets: Vec<SymmetricSet> = vec![
            SymmetricSet::ball(1, 1.0).unwrap(),
            SymmetricSet::intervals(vec![(-3.0, -1.0), (1.0, 3.0)]).unwrap(),
            SymmetricSet::strip(2, 1.90999).unwrap(),
            ellipse_counterexample(),
            SymmetricSet::StarShaped2D(
                StarBoundary::from_fn(512, |t| 1.0 + 0.15 * (4.0 * t).cos()).unwrap(),
            ),
        ];
        for set in &sets {
            let table = FourierTable::build(set, 8).unwrap();
            for (ell, v) in table.iter() {
                if ell.degree() % 2 == 1 {
                    assert!(
                        v.abs() < 1e-8,
                        "odd coefficient {v} at {ell:?} for {set}"
                    );
                }
            }
            let mass = set.measure();
            assert!(table.partial_parseval() <= mass + 1e-8, "Parseval violated for {set}");
            assert_abs_diff_eq!(table.mass(), mass, epsilon = 1e-9);
        }
    }

    #[test]
    fn parseval_gap_shrinks_for_unit_ball() {
        let ball = SymmetricSet::ball(1, 1.0).unwrap();
        let mass = ball.measure();
        let mut prev_gap = f64::INFINITY;
        for cap in [2usize, 4, 6, 8, 10, 12, 14, 16, 18, 20] {
            let gap = mass - FourierTable::build(&ball, cap).unwrap().partial_parseval();
            assert!(gap >= -1e-12);
            assert!(gap <= prev_gap + 1e-12, "gap grew at L={cap}");
            prev_gap = gap;
        }
        // indicator coefficients decay like ℓ^{-3/4}, so the gap is still
        // ≈ 0.036 at L = 20
        assert!(prev_gap < 0.04);
    }

    #[test]
    fn ellipse_quadrature_converges_spectrally() {
        // eccentric ellipse so the angular error is visible at small M
        let set = SymmetricSet::ellipse(3.5, 0.5).unwrap();
        let reference = set.defect_vector_with_grid(4096);
        let mut prev = f64::INFINITY;
        let mut m = 64;
        while m <= 1024 {
            let d = set.defect_vector_with_grid(m);
            let err = (d[0] - reference[0]).abs().max((d[1] - reference[1]).abs());
            assert!(
                err <= 0.5 * prev + 1e-13,
                "error did not halve: {err} vs {prev} at M={m}"
            );
            prev = err;
            m *= 2;
        }
    }

    #[test]
    fn semigroup_on_tables_is_exact() {
        let table = FourierTable::build(&ellipse_counterexample(), 6).unwrap();
        let a = table.apply_t_rho(0.3).apply_t_rho(-0.5);
        let b = table.apply_t_rho(-0.15);
        for (ell, v) in a.iter() {
            assert_eq!(v, b.get(ell).unwrap(), "semigroup mismatch at {ell:?}");
        }
    }

    #[test]
    fn parser_roundtrip() {
        let cases = [
            "ball n=2 r=2.4",
            "ball-complement n=1 r=0.5",
            "strip n=2 w=1.90999",
            "ellipse a=2.5 b=2.31394",
            "intervals [-1,1]∪[-3,-2]∪[2,3]",
            "intervals [-inf,-1]U[1,inf]",
        ];
        for text in cases {
            let set = parse_set(text).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert!(set.measure() >= 0.0 && set.measure() <= 1.0);
        }
        assert!(parse_set("ball r=2.4").is_err());
        assert!(parse_set("frisbee n=2").is_err());
        assert!(parse_set("intervals [1,2]").is_err()); // not symmetric
    }

    #[test]
    fn star_csv_roundtrip() {
        let m = 64;
        let path = std::env::temp_dir().join("symstab_star_test.csv");
        let mut text = String::from("theta,R\n");
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            text.push_str(&format!("{theta},{}\n", 1.0 + 0.1 * (2.0 * theta).sin()));
        }
        std::fs::write(&path, text).unwrap();
        let set = parse_set(&format!("star m={m} file={}", path.display())).unwrap();
        assert_eq!(set.dim(), 2);
        assert!(set.measure() > 0.0);
        std::fs::remove_file(&path).ok();
    }
}
