//! First and second variations of Gaussian measure, of the quadratic
//! functional F, and of noise stability along explicit flows, together with
//! the sphere surface moments and Poincaré-type inequality they rest on.
//!
//! Boundary integrals use the periodic trapezoid rule on circles and a
//! Gauss–Legendre × trapezoid product grid on S². Flows Ψ(x, t) and their
//! Jacobians DΨ are integrated with a classical 4th-order one-step method;
//! set functionals are then evaluated on the FIXED region by the change of
//! variables ∫_{A^{(t)}} w = ∫_A w(Ψ(x,t)) det DΨ(x,t) dx, which keeps
//! finite-difference checks in t free of grid noise.

use crate::gaussian::{
    gaussian_density_at_radius, second_moment_defect_ball, sphere_volume, BallSpec,
};
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::sets::{StarBoundary, SymmetricSet};
use crate::special::{normal_cdf, normal_pdf};
use crate::stability::Correlation;
use crate::{Error, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Default angular grid for boundary quadrature.
pub const BOUNDARY_GRID: usize = 2048;

/// Grid per axis for the boundary double integrals of the Mehler kernel.
pub const KERNEL_GRID: usize = 512;

// ---------------------------------------------------------------------------
// Surface quadrature
// ---------------------------------------------------------------------------

/// ∫_{∂B(0,r)} g(x) dx by trapezoid (n = 2) or Gauss–Legendre × trapezoid
/// (n = 3). Higher dimensions have no generic surface rule here; the closed
/// forms cover them.
pub fn sphere_surface_integral<F: Fn(&[f64]) -> f64>(
    n: usize,
    r: f64,
    m: usize,
    g: F,
) -> Result<f64> {
    match n {
        2 => {
            let mut acc = 0.0;
            for k in 0..m {
                let t = TAU * k as f64 / m as f64;
                acc += g(&[r * t.cos(), r * t.sin()]);
            }
            Ok(acc * r * TAU / m as f64)
        }
        3 => {
            let rule = gauss_legendre(64);
            let m_theta = m.min(512).max(64);
            let mut acc = 0.0;
            for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - u * u).sqrt();
                let mut ring = 0.0;
                for k in 0..m_theta {
                    let t = TAU * k as f64 / m_theta as f64;
                    ring += g(&[r * s * t.cos(), r * s * t.sin(), r * u]);
                }
                acc += w * ring * TAU / m_theta as f64;
            }
            Ok(acc * r * r)
        }
        _ => Err(Error::invalid(
            "n",
            "surface quadrature is implemented for n = 2, 3 only",
        )),
    }
}

/// Fourth-moment kinds on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereMomentKind {
    /// ∫ x₁⁴ dx = 3 r^{n+3} Vol(S^{n-1}) / (n(n+2))
    X1Fourth,
    /// ∫ x₁² x₂² dx = r^{n+3} Vol(S^{n-1}) / (n(n+2))
    X1SqX2Sq,
}

/// Closed-form degree-4 surface moments of ∂B(0, r) ⊂ R^n, n ≥ 2.
pub fn sphere_moment(n: usize, r: f64, kind: SphereMomentKind) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "moments need n ≥ 2"));
    }
    let base = r.powi(n as i32 + 3) * sphere_volume(n) / (n as f64 * (n as f64 + 2.0));
    Ok(match kind {
        SphereMomentKind::X1Fourth => 3.0 * base,
        SphereMomentKind::X1SqX2Sq => base,
    })
}

/// Gram matrix entries of the quadratic harmonics
/// g_i(x) = (n-1)x_i² − Σ_{j≠i} x_j² on ∂B(0, r):
/// diagonal 2(n-1) r^{n+3} Vol(S^{n-1})/(n+2), off-diagonal −2 r^{n+3} Vol/(n+2).
pub fn harmonic_gram(n: usize, r: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::invalid("n", "harmonics need n ≥ 2"));
    }
    let base = 2.0 * r.powi(n as i32 + 3) * sphere_volume(n) / (n as f64 + 2.0);
    Ok(((n as f64 - 1.0) * base / 1.0, -base / 1.0))
}

// ---------------------------------------------------------------------------
// Normal perturbations
// ---------------------------------------------------------------------------

/// Representation of a scalar field f on ∂B(0, r).
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationData {
    /// Coefficients against the quadratic harmonics {g₁, …, g_n}.
    Basis(Vec<f64>),
    /// Periodic samples f(θ_k) on the uniform circle grid (n = 2 only).
    Grid(Vec<f64>),
}

/// A normal perturbation f = ⟨X, N⟩ of the sphere ∂B(0, r).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPerturbation {
    dim: usize,
    radius: f64,
    data: PerturbationData,
}

impl NormalPerturbation {
    /// f = Σ c_i g_i. Mean-zero by construction.
    pub fn basis(dim: usize, radius: f64, coeffs: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", "perturbations need n ≥ 2"));
        }
        if coeffs.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coeffs.len(),
            });
        }
        if radius <= 0.0 {
            return Err(Error::invalid("radius", "must be positive"));
        }
        Ok(NormalPerturbation {
            dim,
            radius,
            data: PerturbationData::Basis(coeffs),
        })
    }

    /// The distinguished direction f = g₁.
    pub fn g1(dim: usize, radius: f64) -> Result<Self> {
        let mut c = vec![0.0; dim];
        c[0] = 1.0;
        NormalPerturbation::basis(dim, radius, c)
    }

    /// Grid samples on the circle; must already be mean-zero in the surface
    /// measure (within 1e-10 after scaling by the circumference).
    pub fn grid(radius: f64, samples: Vec<f64>) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if samples.len() < 16 {
            return Err(Error::invalid("samples", "need at least 16 samples"));
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        if mean.abs() * TAU * radius > 1e-10 {
            return Err(Error::invalid(
                "samples",
                format!("not mean-zero: ∫ f dx = {}", mean * TAU * radius),
            ));
        }
        Ok(NormalPerturbation {
            dim: 2,
            radius,
            data: PerturbationData::Grid(samples),
        })
    }

    /// Center grid samples to mean zero, then construct.
    pub fn grid_centered(radius: f64, mut samples: Vec<f64>) -> Result<Self> {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        samples.iter_mut().for_each(|v| *v -= mean);
        NormalPerturbation::grid(radius, samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn data(&self) -> &PerturbationData {
        &self.data
    }

    /// f at a boundary point (‖x‖ = r assumed). On the sphere
    /// g_i = n x_i² − r².
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.data {
            PerturbationData::Basis(c) => {
                let n = self.dim as f64;
                c.iter()
                    .zip(x)
                    .map(|(ci, xi)| ci * (n * xi * xi - self.radius * self.radius))
                    .sum()
            }
            PerturbationData::Grid(samples) => {
                periodic_cubic(samples, x[1].atan2(x[0]))
            }
        }
    }

    /// ∫_{∂B} f dx (surface Lebesgue measure).
    pub fn mean_integral(&self) -> Result<f64> {
        match &self.data {
            PerturbationData::Basis(_) => Ok(0.0),
            PerturbationData::Grid(_) => {
                sphere_surface_integral(2, self.radius, BOUNDARY_GRID, |x| self.eval(x))
            }
        }
    }

    /// ∫_{∂B} f² dx.
    pub fn norm_sq(&self) -> Result<f64> {
        match (&self.data, self.dim) {
            (PerturbationData::Basis(c), n) if n >= 4 => {
                let (diag, off) = harmonic_gram(n, self.radius)?;
                Ok(gram_quadratic(c, diag, off))
            }
            _ => sphere_surface_integral(self.dim, self.radius, BOUNDARY_GRID, |x| {
                let v = self.eval(x);
                v * v
            }),
        }
    }

    /// Rescale so that ∫ f² dx = 1.
    pub fn normalized(&self) -> Result<Self> {
        let nsq = self.norm_sq()?;
        if nsq <= 0.0 {
            return Err(Error::invalid("f", "cannot normalize the zero perturbation"));
        }
        let s = 1.0 / nsq.sqrt();
        let data = match &self.data {
            PerturbationData::Basis(c) => {
                PerturbationData::Basis(c.iter().map(|v| v * s).collect())
            }
            PerturbationData::Grid(g) => PerturbationData::Grid(g.iter().map(|v| v * s).collect()),
        };
        Ok(NormalPerturbation {
            dim: self.dim,
            radius: self.radius,
            data,
        })
    }

    /// ∫_{∂B} x_i² f dx for each i.
    pub fn second_moment_pairings(&self) -> Result<Vec<f64>> {
        match (&self.data, self.dim) {
            (PerturbationData::Basis(c), n) if n >= 4 => {
                let (diag, off) = harmonic_gram(n, self.radius)?;
                // ∫ x_i² f = (1/n) ⟨g_i, f⟩
                Ok((0..n)
                    .map(|i| gram_row(c, i, diag, off) / n as f64)
                    .collect())
            }
            _ => (0..self.dim)
                .map(|i| {
                    sphere_surface_integral(self.dim, self.radius, BOUNDARY_GRID, |x| {
                        x[i] * x[i] * self.eval(x)
                    })
                })
                .collect(),
        }
    }
}

fn gram_quadratic(c: &[f64], diag: f64, off: f64) -> f64 {
    let s: f64 = c.iter().sum();
    let sq: f64 = c.iter().map(|v| v * v).sum();
    diag * sq + off * (s * s - sq)
}

fn gram_row(c: &[f64], i: usize, diag: f64, off: f64) -> f64 {
    let s: f64 = c.iter().sum();
    diag * c[i] + off * (s - c[i])
}

/// Periodic cubic Lagrange interpolation on a uniform grid.
fn periodic_cubic(samples: &[f64], theta: f64) -> f64 {
    let m = samples.len();
    let t = theta.rem_euclid(TAU) / TAU * m as f64;
    let k = t.floor() as isize;
    let u = t - k as f64;
    let at = |j: isize| samples[(k + j).rem_euclid(m as isize) as usize];
    let (f_m1, f0, f1, f2) = (at(-1), at(0), at(1), at(2));
    // cubic through the four neighbors, evaluated at offset u ∈ [0,1)
    -u * (u - 1.0) * (u - 2.0) / 6.0 * f_m1
        + (u * u - 1.0) * (u - 2.0) / 2.0 * f0
        - u * (u + 1.0) * (u - 2.0) / 2.0 * f1
        + u * (u * u - 1.0) / 6.0 * f2
}

/// 4th-order periodic finite-difference derivative samples.
fn periodic_derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let m = samples.len();
    let h = period / m as f64;
    (0..m)
        .map(|k| {
            let at = |j: isize| samples[(k as isize + j).rem_euclid(m as isize) as usize];
            (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Poincaré inequality
// ---------------------------------------------------------------------------

/// The two sides of the sphere Poincaré inequality
/// Σ_i (∫ x_i² f)² ≤ [2 r^{n+3} Vol(S^{n-1})/(n(n+2))] ∫ f².
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareRatio {
    pub lhs: f64,
    pub constant: f64,
    pub ratio: f64,
}

/// Evaluate both sides for a mean-zero perturbation. Errors if the mean-zero
/// hypothesis fails.
pub fn poincare_ratio(f: &NormalPerturbation) -> Result<PoincareRatio> {
    let mean = f.mean_integral()?;
    if mean.abs() > 1e-8 {
        return Err(Error::invalid("f", format!("not mean-zero: ∫f = {mean}")));
    }
    let pair = f.second_moment_pairings()?;
    let lhs: f64 = pair.iter().map(|v| v * v).sum();
    let n = f.dim() as f64;
    let constant = 2.0 * f.radius().powi(f.dim() as i32 + 3) * sphere_volume(f.dim())
        / (n * (n + 2.0))
        * f.norm_sq()?;
    Ok(PoincareRatio {
        lhs,
        constant,
        ratio: if constant > 0.0 { lhs / constant } else { f64::NAN },
    })
}

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

/// Vector fields generating the flows under study.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowField {
    /// X(x) = x.
    Dilation,
    /// The explicit combination X(x) with components
    /// X^{(k)} = r (n c_k − Σc)(x_k + g_k(x)), g_k(x) = (‖x‖²−r²) x_k / 2;
    /// both measure derivatives vanish at t = 0 on ∂B(0, r).
    Corollary {
        dim: usize,
        radius: f64,
        coeffs: Vec<f64>,
    },
    /// Radial extension f(θ) ψ(s) x/s of a grid perturbation on the circle,
    /// with ψ(r) = 1, ψ'(r) = r − 1/r so the second measure variation
    /// vanishes (n = 2 only).
    PolynomialNormal {
        radius: f64,
        samples: Vec<f64>,
        derivative: Vec<f64>,
    },
    /// X = 0.
    Zero,
}

impl FlowField {
    /// The corollary field matching a basis perturbation.
    pub fn corollary(f: &NormalPerturbation) -> Result<Self> {
        match f.data() {
            PerturbationData::Basis(c) => Ok(FlowField::Corollary {
                dim: f.dim(),
                radius: f.radius(),
                coeffs: c.clone(),
            }),
            PerturbationData::Grid(_) => Err(Error::invalid(
                "f",
                "corollary field needs a basis perturbation",
            )),
        }
    }

    /// The measure-preserving radial extension of a grid perturbation.
    pub fn polynomial_normal(f: &NormalPerturbation) -> Result<Self> {
        match f.data() {
            PerturbationData::Grid(samples) => Ok(FlowField::PolynomialNormal {
                radius: f.radius(),
                samples: samples.clone(),
                derivative: periodic_derivative(samples, TAU),
            }),
            PerturbationData::Basis(_) => Err(Error::invalid(
                "f",
                "polynomial-normal field needs a grid perturbation",
            )),
        }
    }

    /// X(x).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FlowField::Dilation => x.to_vec(),
            FlowField::Zero => vec![0.0; x.len()],
            FlowField::Corollary {
                dim,
                radius,
                coeffs,
            } => {
                let n = *dim as f64;
                let sigma: f64 = coeffs.iter().sum();
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                let shift = 0.5 * (norm2 - radius * radius);
                x.iter()
                    .enumerate()
                    .map(|(k, &xk)| radius * (n * coeffs[k] - sigma) * (xk + shift * xk))
                    .collect()
            }
            FlowField::PolynomialNormal {
                radius, samples, ..
            } => {
                let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if s < 1e-12 {
                    return vec![0.0, 0.0];
                }
                let theta = x[1].atan2(x[0]);
                let f = periodic_cubic(samples, theta);
                let psi = 1.0 + (s - radius) * (radius - 1.0 / radius);
                let u = f * psi / s;
                vec![u * x[0], u * x[1]]
            }
        }
    }

    /// Jacobian DX(x), row k = ∇X^{(k)}.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = x.len();
        match self {
            FlowField::Dilation => identity(n),
            FlowField::Zero => vec![vec![0.0; n]; n],
            FlowField::Corollary {
                dim,
                radius,
                coeffs,
            } => {
                let nf = *dim as f64;
                let sigma: f64 = coeffs.iter().sum();
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                let shift = 0.5 * (norm2 - radius * radius);
                let mut jac = vec![vec![0.0; n]; n];
                for k in 0..n {
                    let scale = radius * (nf * coeffs[k] - sigma);
                    for j in 0..n {
                        let mut d = x[k] * x[j];
                        if j == k {
                            d += 1.0 + shift;
                        }
                        jac[k][j] = scale * d;
                    }
                }
                jac
            }
            FlowField::PolynomialNormal {
                radius,
                samples,
                derivative,
            } => {
                let s2 = x[0] * x[0] + x[1] * x[1];
                let s = s2.sqrt();
                let theta = x[1].atan2(x[0]);
                let f = periodic_cubic(samples, theta);
                let fp = periodic_cubic(derivative, theta);
                let psi = 1.0 + (s - radius) * (radius - 1.0 / radius);
                let psip = radius - 1.0 / radius;
                // u = f(θ)ψ(s); X_k = u x_k / s
                let grad_theta = [-x[1] / s2, x[0] / s2];
                let grad_s = [x[0] / s, x[1] / s];
                let u = f * psi;
                let mut jac = vec![vec![0.0; 2]; 2];
                for k in 0..2 {
                    for j in 0..2 {
                        let du = fp * psi * grad_theta[j] + f * psip * grad_s[j];
                        let dkr = if k == j { 1.0 } else { 0.0 };
                        jac[k][j] = du * x[k] / s + u * (dkr / s - x[k] * x[j] / (s2 * s));
                    }
                }
                jac
            }
        }
    }

    /// div X(x) = tr DX(x).
    pub fn divergence(&self, x: &[f64]) -> f64 {
        match self {
            FlowField::Dilation => x.len() as f64,
            FlowField::Zero => 0.0,
            _ => {
                let j = self.jacobian(x);
                (0..x.len()).map(|k| j[k][k]).sum()
            }
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    m
}

/// A flow: the generating field plus the one-step integrator resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub field: FlowField,
    pub step: f64,
}

impl FlowSpec {
    pub fn new(field: FlowField) -> Self {
        FlowSpec { field, step: 1e-3 }
    }

    /// Integrate (Ψ(x,t), DΨ(x,t)) by RK4 from 0 to t; DΨ solves the
    /// variational equation d/dt DΨ = DX(Ψ)·DΨ.
    pub fn flow_with_jacobian(&self, x: &[f64], t: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = x.len();
        let steps = ((t.abs() / self.step).ceil() as usize).max(1);
        let h = t / steps as f64;
        let mut pos = x.to_vec();
        let mut jac = identity(n);
        for _ in 0..steps {
            let (k1p, k1j) = self.rhs(&pos, &jac);
            let (p2, j2) = advance(&pos, &jac, &k1p, &k1j, 0.5 * h);
            let (k2p, k2j) = self.rhs(&p2, &j2);
            let (p3, j3) = advance(&pos, &jac, &k2p, &k2j, 0.5 * h);
            let (k3p, k3j) = self.rhs(&p3, &j3);
            let (p4, j4) = advance(&pos, &jac, &k3p, &k3j, h);
            let (k4p, k4j) = self.rhs(&p4, &j4);
            for i in 0..n {
                pos[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
                for j in 0..n {
                    jac[i][j] +=
                        h / 6.0 * (k1j[i][j] + 2.0 * k2j[i][j] + 2.0 * k3j[i][j] + k4j[i][j]);
                }
            }
        }
        (pos, jac)
    }

    fn rhs(&self, pos: &[f64], jac: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = pos.len();
        let dx = self.field.jacobian(pos);
        let mut jdot = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += dx[i][k] * jac[k][j];
                }
                jdot[i][j] = acc;
            }
        }
        (self.field.eval(pos), jdot)
    }
}

fn advance(
    pos: &[f64],
    jac: &[Vec<f64>],
    dp: &[f64],
    dj: &[Vec<f64>],
    h: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = pos.len();
    let mut p = pos.to_vec();
    let mut j = jac.to_vec();
    for i in 0..n {
        p[i] += h * dp[i];
        for k in 0..n {
            j[i][k] += h * dj[i][k];
        }
    }
    (p, j)
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("determinants needed only for n ≤ 3"),
    }
}

// ---------------------------------------------------------------------------
// Polar regions and pullback quadrature
// ---------------------------------------------------------------------------

/// A 2D region bounded by a star-shaped curve s ≤ R(θ), with quadrature
/// nodes for Lebesgue integrals over the region.
#[derive(Debug, Clone)]
pub struct PolarRegion {
    boundary: StarBoundary,
}

impl PolarRegion {
    pub fn disk(r: f64, m: usize) -> Result<Self> {
        Ok(PolarRegion {
            boundary: StarBoundary::new(vec![r; m])?,
        })
    }

    pub fn from_star(boundary: StarBoundary) -> Self {
        PolarRegion { boundary }
    }

    pub fn boundary(&self) -> &StarBoundary {
        &self.boundary
    }

    /// Interior nodes and Lebesgue weights (s ds dθ).
    pub fn nodes(&self, m_theta: usize, k_radial: usize) -> Vec<([f64; 2], f64)> {
        let rule = gauss_legendre(k_radial);
        let mut out = Vec::with_capacity(m_theta * k_radial);
        for kt in 0..m_theta {
            let theta = TAU * kt as f64 / m_theta as f64;
            let rmax = self.boundary.radius_at(theta);
            let wtheta = TAU / m_theta as f64;
            for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = 0.5 * rmax * (u + 1.0);
                out.push((
                    [s * theta.cos(), s * theta.sin()],
                    w * 0.5 * rmax * s * wtheta,
                ));
            }
        }
        out
    }

    /// Boundary points, tangent-speed weights and outward normals on the
    /// uniform grid of the stored boundary samples.
    pub fn boundary_elements(&self) -> Vec<BoundaryElement> {
        let samples = self.boundary.samples();
        let m = samples.len();
        let deriv = periodic_derivative(samples, TAU);
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            let (ct, st) = (theta.cos(), theta.sin());
            let r = samples[k];
            let rp = deriv[k];
            let speed = (r * r + rp * rp).sqrt();
            // c'(θ) = R'(cos,sin) + R(−sin,cos); outward normal = (c₂', −c₁')/|c'|
            let n = [
                (rp * st + r * ct) / speed,
                -(rp * ct - r * st) / speed,
            ];
            out.push(BoundaryElement {
                point: [r * ct, r * st],
                normal: n,
                weight: speed * TAU / m as f64,
            });
        }
        out
    }
}

/// One node of the boundary quadrature rule.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryElement {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub weight: f64,
}

/// ∫_{A^{(t)}} w(x) dx over the flowed region by pullback to fixed nodes.
pub fn flowed_region_integral<W: Fn(&[f64]) -> f64>(
    region: &PolarRegion,
    flow: &FlowSpec,
    t: f64,
    w: W,
    m_theta: usize,
    k_radial: usize,
) -> f64 {
    let mut acc = 0.0;
    for (x, wt) in region.nodes(m_theta, k_radial) {
        let (y, j) = flow.flow_with_jacobian(&x, t);
        acc += wt * w(&y) * det(&j);
    }
    acc
}

/// γ₂ of a flowed region.
pub fn flowed_gaussian_measure(region: &PolarRegion, flow: &FlowSpec, t: f64) -> f64 {
    flowed_region_integral(
        region,
        flow,
        t,
        |y| gaussian_density_at_radius(2, (y[0] * y[0] + y[1] * y[1]).sqrt()),
        256,
        48,
    )
}

/// γ_n of a flowed ball for n = 2, 3 (spherical product grid in 3D).
pub fn flowed_ball_measure(n: usize, r: f64, flow: &FlowSpec, t: f64) -> Result<f64> {
    match n {
        2 => Ok(flowed_gaussian_measure(
            &PolarRegion::disk(r, 256)?,
            flow,
            t,
        )),
        3 => {
            let rad = gauss_legendre(48);
            let ang = gauss_legendre(32);
            let m_theta = 64;
            let mut acc = 0.0;
            for (ur, wr) in rad.nodes.iter().zip(&rad.weights) {
                let s = 0.5 * r * (ur + 1.0);
                for (u, wu) in ang.nodes.iter().zip(&ang.weights) {
                    let sin_phi = (1.0 - u * u).sqrt();
                    for kt in 0..m_theta {
                        let theta = TAU * kt as f64 / m_theta as f64;
                        let x = [
                            s * sin_phi * theta.cos(),
                            s * sin_phi * theta.sin(),
                            s * u,
                        ];
                        let (y, j) = flow.flow_with_jacobian(&x, t);
                        let w = wr * 0.5 * r * wu * (TAU / m_theta as f64) * s * s;
                        acc += w
                            * gaussian_density_at_radius(
                                3,
                                (y.iter().map(|v| v * v).sum::<f64>()).sqrt(),
                            )
                            * det(&j);
                    }
                }
            }
            Ok(acc)
        }
        _ => Err(Error::invalid("n", "flowed measures support n = 2, 3")),
    }
}

// ---------------------------------------------------------------------------
// Measure variation
// ---------------------------------------------------------------------------

/// First and second t-derivatives of γ_n(A^{(t)}) at t = 0 for A a centered
/// ball or its complement, from the boundary formulas
/// d/dt = ∫ ⟨X,N⟩ γ dx and d²/dt² = ∫ (div X − ⟨X,x⟩) ⟨X,N⟩ γ dx.
pub fn measure_variation(
    flow: &FlowSpec,
    set: &SymmetricSet,
) -> Result<(f64, f64)> {
    let (n, r, sign) = ball_data(set)?;
    let gamma = gaussian_density_at_radius(n, r);
    let first = sphere_surface_integral(n, r, BOUNDARY_GRID, |x| {
        let xv = flow.field.eval(x);
        sign * dot(&xv, x) / r * gamma
    })?;
    let second = sphere_surface_integral(n, r, BOUNDARY_GRID, |x| {
        let xv = flow.field.eval(x);
        let div = flow.field.divergence(x);
        (div - dot(&xv, x)) * sign * dot(&xv, x) / r * gamma
    })?;
    Ok((first, second))
}

fn ball_data(set: &SymmetricSet) -> Result<(usize, f64, f64)> {
    match set {
        SymmetricSet::Ball { dim, radius } => Ok((*dim, *radius, 1.0)),
        SymmetricSet::BallComplement { dim, radius } => Ok((*dim, *radius, -1.0)),
        _ => Err(Error::invalid("set", "variation formulas need a ball or complement")),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Phase classification and variation reports
// ---------------------------------------------------------------------------

/// Local optimality phase of B(0, r) ⊂ R^n for the functional F.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    LocallyMax,
    Boundary,
    NotLocallyMax,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::LocallyMax => write!(f, "locally_max"),
            Phase::Boundary => write!(f, "boundary"),
            Phase::NotLocallyMax => write!(f, "not_locally_max"),
        }
    }
}

/// Classify by the sign of r² − (n+2).
pub fn phase_classify(n: usize, r: f64) -> Phase {
    let gap = r * r - (n as f64 + 2.0);
    if gap.abs() <= 1e-12 {
        Phase::Boundary
    } else if gap < 0.0 {
        Phase::LocallyMax
    } else {
        Phase::NotLocallyMax
    }
}

/// Closed-form equality value of the second variation of F at f ∝ g₁:
/// 2 r^{n+1} e^{-r²} Vol(S^{n-1}) (r² − n − 2) / (n (n+2) (2π)^n).
pub fn closed_form_second_variation(n: usize, r: f64) -> f64 {
    2.0 * r.powi(n as i32 + 1) * (-r * r).exp() * sphere_volume(n) * (r * r - n as f64 - 2.0)
        / (n as f64 * (n as f64 + 2.0) * TAU.powi(n as i32))
}

/// The potential V(x, 0) = ∫_A G(x, y) dy of the kernel behind a report.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelPotential {
    /// F-kernel: V(x,0) = Σ_i d_i (1−x_i²) γ_n(x).
    DefectProduct { defects: Vec<f64> },
    /// Noise kernel: V(x,0) = T_ρ 1_{B(0,r)}(x) γ_n(x) (n = 2).
    Mehler { rho: f64, radius: f64 },
}

impl KernelPotential {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let norm = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        match self {
            KernelPotential::DefectProduct { defects } => {
                let gamma = gaussian_density_at_radius(x.len(), norm);
                defects
                    .iter()
                    .zip(x)
                    .map(|(d, xi)| d * (1.0 - xi * xi))
                    .sum::<f64>()
                    * gamma
            }
            KernelPotential::Mehler { rho, radius } => {
                t_rho_disk_radial(*radius, *rho, norm) * gaussian_density_at_radius(2, norm)
            }
        }
    }
}

/// First/second variation values with the matching closed form and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    pub first_variation: f64,
    /// (1/2) d²/dt² at t = 0, matching the boundary formulas.
    pub second_variation: f64,
    pub closed_form_bound: Option<f64>,
    pub phase: Phase,
    pub potential: KernelPotential,
    /// Residual second measure variation of the chosen extension
    /// (identically zero for basis perturbations).
    pub measure_residual: f64,
}

/// Second variation of F(A^{(t)}) at A = B(0, r) or its complement for a
/// normalized mean-zero perturbation:
/// (1/2) d²/dt² F = Σ_i (∫(1−x_i²) f γ dx)² + 2 Σ_i d_i ∫(−x_i) X^{(i)} f γ dx.
pub fn second_variation_f(f: &NormalPerturbation, complement: bool) -> Result<VariationReport> {
    let n = f.dim();
    let r = f.radius();
    let spec = BallSpec::new(n, r)?;
    let sign = if complement { -1.0 } else { 1.0 };
    let d_ball = second_moment_defect_ball(spec);
    let defects = vec![sign * d_ball; n];
    let gamma = gaussian_density_at_radius(n, r);
    let nsq = f.norm_sq()?;
    if (nsq - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("f", format!("not normalized: ∫f² = {nsq}")));
    }

    // ⟨X,N⟩ = sign·f once the complement flips the normal
    let pairings = f.second_moment_pairings()?; // ∫ x_i² f dx
    // ∫ (1-x_i²) f dx = -∫ x_i² f dx for mean-zero f
    let first_variation: f64 = defects
        .iter()
        .zip(&pairings)
        .map(|(d, p)| 2.0 * d * gamma * (-p) * sign)
        .sum();

    let term1: f64 = pairings.iter().map(|p| (gamma * p).powi(2)).sum();

    // on ∂B the field has X^{(i)} = r(n c_i − σ) x_i (basis) or f x_i / r (grid)
    let term2 = match f.data() {
        PerturbationData::Basis(c) => {
            let sigma: f64 = c.iter().sum();
            let mut acc = 0.0;
            for i in 0..n {
                let scale = r * (n as f64 * c[i] - sigma);
                // ∫ (−x_i) X^{(i)} f dx = −scale ∫ x_i² f dx
                acc += 2.0 * defects[i] * sign * gamma * (-scale * pairings[i]);
            }
            acc
        }
        PerturbationData::Grid(_) => {
            let mut acc = 0.0;
            for (i, d) in defects.iter().enumerate() {
                let integral = sphere_surface_integral(2, r, BOUNDARY_GRID, |x| {
                    let fv = f.eval(x);
                    -x[i] * (fv * x[i] / r) * fv
                })?;
                acc += 2.0 * d * sign * gamma * integral;
            }
            acc
        }
    };

    let residual = match f.data() {
        PerturbationData::Basis(_) => 0.0,
        PerturbationData::Grid(_) => {
            // measure second variation of the radial extension; ψ was chosen
            // to cancel it, report the quadrature residual
            let field = FlowField::polynomial_normal(f)?;
            sphere_surface_integral(2, r, BOUNDARY_GRID, |x| {
                let div = field.divergence(x);
                let xv = field.eval(x);
                (div - dot(&xv, x)) * (dot(&xv, x) / r) * gamma
            })?
        }
    };

    Ok(VariationReport {
        first_variation,
        second_variation: term1 + term2,
        closed_form_bound: Some(closed_form_second_variation(n, r)),
        phase: phase_classify(n, r),
        potential: KernelPotential::DefectProduct { defects },
        measure_residual: residual,
    })
}

/// T_ρ 1_{B(0,r)} in R² at radius s from the center, reduced to a single 1D
/// integral of normal CDFs.
pub fn t_rho_disk_radial(r: f64, rho: f64, s: f64) -> f64 {
    let sq = (1.0 - rho * rho).sqrt();
    let lo = (-r - rho * s) / sq;
    let hi = (r - rho * s) / sq;
    let integrand = |y1: f64| {
        let u = rho * s + y1 * sq;
        let inner = (r * r - u * u).max(0.0) / (1.0 - rho * rho);
        (2.0 * normal_cdf(inner.sqrt()) - 1.0) * normal_pdf(y1)
    };
    adaptive_simpson(&integrand, lo, hi, 1e-12).unwrap_or(f64::NAN)
}

/// Radial derivative d/ds T_ρ 1_{B(0,r)}(s e₁) by the derivative identity,
/// independent of the spectral route.
pub fn t_rho_disk_radial_derivative(r: f64, rho: f64, s: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let sq = (1.0 - rho * rho).sqrt();
    let lo = (-r - rho * s) / sq;
    let hi = (r - rho * s) / sq;
    let integrand = |y1: f64| {
        let u = rho * s + y1 * sq;
        let inner = (r * r - u * u).max(0.0) / (1.0 - rho * rho);
        y1 * (2.0 * normal_cdf(inner.sqrt()) - 1.0) * normal_pdf(y1)
    };
    rho / sq * adaptive_simpson(&integrand, lo, hi, 1e-12).unwrap_or(f64::NAN)
}

/// Second variation of noise stability at A = B(0, r) ⊂ R² (or complement):
/// (1/2) d²/dt² F_ρ = ∬_{∂A×∂A} G(x,y) f(x) f(y) dx dy + c_r ∫ f² dx, where
/// G is the correlated Gaussian pair density and c_r the radial derivative
/// of T_ρ 1_A on ∂A.
pub fn second_variation_noise(
    f: &NormalPerturbation,
    rho: Correlation,
    complement: bool,
) -> Result<VariationReport> {
    if f.dim() != 2 {
        return Err(Error::invalid("f", "noise second variation is implemented for n = 2"));
    }
    let r = f.radius();
    let rr = rho.get();
    let nsq = f.norm_sq()?;
    if (nsq - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("f", format!("not normalized: ∫f² = {nsq}")));
    }
    // complement flips both f = ⟨X,N⟩ and ∇T_ρ1_{A^c} = −∇T_ρ1_A, so the
    // report matches the ball's; sign kept explicit for clarity
    let sign = if complement { -1.0 } else { 1.0 };

    let m = KERNEL_GRID;
    let fs: Vec<f64> = (0..m)
        .map(|k| {
            let t = TAU * k as f64 / m as f64;
            sign * f.eval(&[r * t.cos(), r * t.sin()])
        })
        .collect();
    // G depends on θ−φ through ⟨x,y⟩ = r² cos(θ−φ)
    let pref = 1.0 / ((1.0 - rr * rr) * TAU.powi(2));
    let kernel: Vec<f64> = (0..m)
        .map(|k| {
            let dtheta = TAU * k as f64 / m as f64;
            pref * ((-2.0 * r * r + 2.0 * rr * r * r * dtheta.cos()) / (2.0 * (1.0 - rr * rr)))
                .exp()
        })
        .collect();
    let h = TAU / m as f64;
    let mut term_a = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += kernel[(i + m - j) % m] * fs[j];
        }
        term_a += fs[i] * row;
    }
    term_a *= (r * h) * (r * h);

    // gradient term ∫ ⟨∇T_ρ1_A, X⟩⟨X,N⟩ γ dx = c_r γ(r) ∫ f² dx; the γ
    // weight comes from V(x,0) = T_ρ1_A(x) γ(x) in the derivation
    let c_r = sign * sign * t_rho_disk_radial_derivative(r, rr, r);
    let term_b = c_r * gaussian_density_at_radius(2, r); // ∫ f² dx = 1

    Ok(VariationReport {
        first_variation: 0.0,
        second_variation: term_a + term_b,
        closed_form_bound: None,
        phase: phase_classify(2, r),
        potential: KernelPotential::Mehler { rho: rr, radius: r },
        measure_residual: 0.0,
    })
}

// ---------------------------------------------------------------------------
// General kernel second variation on star-shaped regions
// ---------------------------------------------------------------------------

/// A smooth symmetric kernel G(x, y) on R² × R² with an analytic x-gradient.
pub trait Kernel2D: Sync {
    fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64;
    fn grad_x(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2];
}

/// G(x, y) = γ₂(x) γ₂(y); its quadratic functional is γ₂(A)².
pub struct GaussianProductKernel;

impl Kernel2D for GaussianProductKernel {
    fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let g = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / TAU;
        g(x) * g(y)
    }

    fn grad_x(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let v = self.eval(x, y);
        [-x[0] * v, -x[1] * v]
    }
}

/// G(x, y) = Σ_i (1−x_i²)(1−y_i²) γ₂(x) γ₂(y); quadratic functional F(A).
pub struct DefectProductKernel;

impl Kernel2D for DefectProductKernel {
    fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let g = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / TAU;
        let sum: f64 = (0..2)
            .map(|i| (1.0 - x[i] * x[i]) * (1.0 - y[i] * y[i]))
            .sum();
        sum * g(x) * g(y)
    }

    fn grad_x(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let g = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / TAU;
        let gx = g(x) * g(y);
        let mut out = [0.0; 2];
        let sum: f64 = (0..2)
            .map(|i| (1.0 - x[i] * x[i]) * (1.0 - y[i] * y[i]))
            .sum();
        for k in 0..2 {
            let dsum = -2.0 * x[k] * (1.0 - y[k] * y[k]);
            out[k] = (dsum - x[k] * sum) * gx;
        }
        out
    }
}

/// The correlated Gaussian pair density
/// G(x,y) = exp[(−‖x‖²−‖y‖²+2ρ⟨x,y⟩)/(2(1−ρ²))] / ((1−ρ²)(2π)²).
pub struct MehlerKernel {
    pub rho: f64,
}

impl Kernel2D for MehlerKernel {
    fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let r = self.rho;
        let q = -(x[0] * x[0] + x[1] * x[1] + y[0] * y[0] + y[1] * y[1])
            + 2.0 * r * (x[0] * y[0] + x[1] * y[1]);
        (q / (2.0 * (1.0 - r * r))).exp() / ((1.0 - r * r) * TAU * TAU)
    }

    fn grad_x(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let r = self.rho;
        let v = self.eval(x, y);
        [
            (r * y[0] - x[0]) / (1.0 - r * r) * v,
            (r * y[1] - x[1]) / (1.0 - r * r) * v,
        ]
    }
}

/// ∬ 1_A(x) G(x,y) 1_A(y) dx dy by nested polar quadrature.
pub fn kernel_functional<K: Kernel2D>(kernel: &K, region: &PolarRegion) -> f64 {
    let nodes = region.nodes(96, 48);
    let mut acc = 0.0;
    for &(x, wx) in &nodes {
        let mut inner = 0.0;
        for &(y, wy) in &nodes {
            inner += wy * kernel.eval(x, y);
        }
        acc += wx * inner;
    }
    acc
}

/// The same functional on the flowed region A^{(t)}, by pullback.
pub fn kernel_functional_flowed<K: Kernel2D>(
    kernel: &K,
    region: &PolarRegion,
    flow: &FlowSpec,
    t: f64,
) -> f64 {
    let nodes = region.nodes(96, 48);
    let flowed: Vec<([f64; 2], f64)> = nodes
        .iter()
        .map(|&(x, w)| {
            let (y, j) = flow.flow_with_jacobian(&x, t);
            ([y[0], y[1]], w * det(&j))
        })
        .collect();
    let mut acc = 0.0;
    for &(x, wx) in &flowed {
        let mut inner = 0.0;
        for &(y, wy) in &flowed {
            inner += wy * kernel.eval(x, y);
        }
        acc += wx * inner;
    }
    acc
}

/// (1/2) d²/dt²|₀ of the kernel functional along a flow, from the boundary
/// formula ∬_{∂A×∂A} G ⟨X,N⟩⟨X,N⟩ + ∫_{∂A} div(V(x,0) X(x)) ⟨X,N⟩ dx.
///
/// The potential V(x,0) = ∫_A G(x,·) and its gradient are evaluated by polar
/// quadrature at every boundary node.
pub fn general_second_variation<K: Kernel2D>(
    kernel: &K,
    region: &PolarRegion,
    flow: &FlowSpec,
) -> f64 {
    let elements = region.boundary_elements();
    let fnorm: Vec<f64> = elements
        .iter()
        .map(|e| {
            let xv = flow.field.eval(&e.point);
            xv[0] * e.normal[0] + xv[1] * e.normal[1]
        })
        .collect();
    // double boundary integral
    let mut term1 = 0.0;
    for (i, ei) in elements.iter().enumerate() {
        let mut row = 0.0;
        for (j, ej) in elements.iter().enumerate() {
            row += ej.weight * fnorm[j] * kernel.eval(ei.point, ej.point);
        }
        term1 += ei.weight * fnorm[i] * row;
    }
    // divergence term: div(V X) = ⟨∇V, X⟩ + V div X
    let inner_nodes = region.nodes(128, 48);
    let mut term2 = 0.0;
    for (i, e) in elements.iter().enumerate() {
        let mut v = 0.0;
        let mut grad = [0.0f64; 2];
        for &(y, wy) in &inner_nodes {
            v += wy * kernel.eval(e.point, y);
            let g = kernel.grad_x(e.point, y);
            grad[0] += wy * g[0];
            grad[1] += wy * g[1];
        }
        let xv = flow.field.eval(&e.point);
        let divx = flow.field.divergence(&e.point);
        term2 += e.weight * fnorm[i] * (grad[0] * xv[0] + grad[1] * xv[1] + v * divx);
    }
    term1 + term2
}

/// Richardson-extrapolated central second difference of t ↦ F(A^{(t)}).
pub fn richardson_second_derivative<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let d = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}
