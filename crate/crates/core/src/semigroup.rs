//! Gaussian convolution semigroups `μ_t = Normal(t·v, t·Σ)` seen from both
//! sides: the multiplication semigroup of characteristic functions acting on
//! quantum characteristic functions (`C_t`), and the twirling semigroup
//! `T_t ρ = ∫ U(z) ρ U(z)† dμ_t(z)` on density operators.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Checked, Error, Result, Warning};
use crate::fock::{displacement_matrix, CMatrix, DensityState, FockOperator};
use crate::par;
use crate::phase::{grid_integral, symplectic_form, ComplexField, PhaseFunction, PhaseGrid, PhasePoint, Weight};
use crate::transforms::{dequantize, CharFunction};

/// Tensor Gauss–Hermite nodes lighter than this are dropped.
pub const NODE_PRUNE: f64 = 1e-14;
/// Trace drift that is renormalized silently.
pub const TRACE_BUDGET: f64 = 1e-6;
/// Trace drift beyond which the twirl is rejected.
pub const TRACE_LIMIT: f64 = 1e-4;

const SYM_TOL: f64 = 1e-12;
const MC_CHUNK: usize = 1000;
const REDUCE_CHUNK: usize = 32;

/// Drift `v` and diffusion covariance `Σ` (per unit time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GaussianSemigroupParams {
    drift: PhasePoint,
    covariance: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    drift: PhasePoint,
    covariance: [[f64; 2]; 2],
}

impl TryFrom<RawParams> for GaussianSemigroupParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        Self::new(r.drift, r.covariance)
    }
}

impl From<GaussianSemigroupParams> for RawParams {
    fn from(p: GaussianSemigroupParams) -> Self {
        RawParams { drift: p.drift, covariance: p.covariance }
    }
}

impl GaussianSemigroupParams {
    pub fn new(drift: PhasePoint, covariance: [[f64; 2]; 2]) -> Result<Self> {
        if !drift.q.is_finite() || !drift.p.is_finite() {
            return Err(Error::InvalidValue("non-finite drift".into()));
        }
        if covariance.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::BadCovariance("non-finite entry".into()));
        }
        let asym = (covariance[0][1] - covariance[1][0]).abs();
        if asym > SYM_TOL {
            return Err(Error::BadCovariance(format!("asymmetry {asym:e}")));
        }
        let (lo, _) = sym2_eigen(&covariance);
        if lo < -SYM_TOL {
            return Err(Error::BadCovariance(format!("negative eigenvalue {lo:e}")));
        }
        Ok(Self { drift, covariance })
    }

    /// `v = 0`, `Σ = σ²·I`.
    pub fn isotropic(sigma_sq: f64) -> Result<Self> {
        Self::new(PhasePoint::ORIGIN, [[sigma_sq, 0.0], [0.0, sigma_sq]])
    }

    /// `Σ = 0`: the point masses `δ_{t·v}`.
    pub fn drift_only(v: PhasePoint) -> Result<Self> {
        Self::new(v, [[0.0; 2]; 2])
    }

    pub fn drift(&self) -> PhasePoint {
        self.drift
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        self.covariance
    }

    fn is_degenerate(&self) -> bool {
        self.covariance.iter().flatten().all(|&c| c == 0.0)
    }

    /// Symmetric PSD square root of `Σ`.
    fn sqrt_covariance(&self) -> [[f64; 2]; 2] {
        let c = &self.covariance;
        let eig = SymmetricEigen::new(Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1]));
        let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let s = eig.eigenvectors * Matrix2::from_diagonal(&d) * eig.eigenvectors.transpose();
        [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]]
    }
}

fn sym2_eigen(c: &[[f64; 2]; 2]) -> (f64, f64) {
    let tr = c[0][0] + c[1][1];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// `χ_t(z) = ∫ exp(i ω(z, z′)) dμ_t(z′) = exp(i t ω(z, v) − (t/2) uᵀΣu)` with
/// `u = (−p, q)`, so that `ω(z, z′) = u·z′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChar {
    params: GaussianSemigroupParams,
    t: f64,
}

impl GaussianChar {
    pub fn at(&self, z: PhasePoint) -> Complex64 {
        let (u0, u1) = (-z.p, z.q);
        let c = &self.params.covariance;
        let quad = u0 * u0 * c[0][0] + u0 * u1 * (c[0][1] + c[1][0]) + u1 * u1 * c[1][1];
        Complex64::from_polar((-0.5 * self.t * quad).exp(), self.t * symplectic_form(z, self.params.drift))
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn sample(&self, grid: PhaseGrid) -> ComplexField {
        ComplexField::from_fn(grid, |z| self.at(z))
    }
}

impl PhaseFunction for GaussianChar {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        Ok(self.at(z))
    }
}

pub fn gaussian_char(params: &GaussianSemigroupParams, t: f64) -> Result<GaussianChar> {
    check_time(t)?;
    Ok(GaussianChar { params: *params, t })
}

/// `(C_t χ)(z) = χ_t(z)·χ(z)`.
pub fn cq_apply(params: &GaussianSemigroupParams, t: f64, chi: &CharFunction) -> Result<CharFunction> {
    let g = gaussian_char(params, t)?;
    let grid = *chi.grid();
    let field = ComplexField::from_fn_indexed(grid, |j, k| g.at(grid.node(j, k)) * chi.field.get(j, k));
    Ok(CharFunction { field, source_dim: chi.source_dim })
}

/// How the twirling integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum TwirlingQuadrature {
    GaussHermite { order: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl TwirlingQuadrature {
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        let q = TwirlingQuadrature::GaussHermite { order };
        q.validate()?;
        Ok(q)
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Result<Self> {
        let q = TwirlingQuadrature::MonteCarlo { samples, seed };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TwirlingQuadrature::GaussHermite { order } if order < 4 => {
                Err(Error::InvalidQuadrature(format!("Gauss-Hermite order {order} < 4")))
            }
            TwirlingQuadrature::MonteCarlo { samples, .. } if samples < 1000 => {
                Err(Error::InvalidQuadrature(format!("{samples} Monte-Carlo samples < 1000")))
            }
            _ => Ok(()),
        }
    }

    /// Standard-normal nodes `x_k` in R² with weights summing to 1.
    fn standard_nodes(&self) -> Vec<([f64; 2], f64)> {
        match *self {
            TwirlingQuadrature::GaussHermite { order } => {
                let rule = gauss_hermite(order);
                let mut nodes: Vec<([f64; 2], f64)> = rule
                    .iter()
                    .flat_map(|&(x0, w0)| rule.iter().map(move |&(x1, w1)| ([x0, x1], w0 * w1)))
                    .filter(|&(_, w)| w >= NODE_PRUNE)
                    .collect();
                let total: f64 = nodes.iter().map(|n| n.1).sum();
                nodes.iter_mut().for_each(|n| n.1 /= total);
                nodes
            }
            TwirlingQuadrature::MonteCarlo { samples, seed } => {
                let chunks = samples.div_ceil(MC_CHUNK);
                let w = 1.0 / samples as f64;
                par::map_range(chunks, |c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c as u64);
                    let n = MC_CHUNK.min(samples - c * MC_CHUNK);
                    (0..n)
                        .map(|_| {
                            let x0: f64 = StandardNormal.sample(&mut rng);
                            let x1: f64 = StandardNormal.sample(&mut rng);
                            ([x0, x1], w)
                        })
                        .collect::<Vec<_>>()
                })
                .into_iter()
                .flatten()
                .collect()
            }
        }
    }
}

/// Probabilists' Gauss–Hermite rule (weight `e^{−x²/2}/√(2π)`) by
/// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix with
/// off-diagonal `√k`, weights the squared first eigenvector components.
pub fn gauss_hermite(order: usize) -> Vec<(f64, f64)> {
    let jac = DMatrix::from_fn(order, order, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jac);
    let mut rule: Vec<(f64, f64)> =
        (0..order).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// Phase-space nodes `z_k = t·v + √t·Σ^{1/2}·x_k` of `μ_t` with weights.
pub fn twirl_nodes(params: &GaussianSemigroupParams, t: f64, quad: &TwirlingQuadrature) -> Result<Vec<(PhasePoint, f64)>> {
    check_time(t)?;
    quad.validate()?;
    let mean = params.drift.scale(t);
    if t == 0.0 || params.is_degenerate() {
        return Ok(vec![(mean, 1.0)]);
    }
    let s = params.sqrt_covariance();
    let rt = t.sqrt();
    Ok(quad
        .standard_nodes()
        .into_iter()
        .map(|([x0, x1], w)| {
            let z = PhasePoint::new(s[0][0] * x0 + s[0][1] * x1, s[1][0] * x0 + s[1][1] * x1);
            (mean + z.scale(rt), w)
        })
        .collect())
}

/// `Σ_k w_k U(z_k) ρ U(z_k)†` before any trace correction. Its trace falls
/// short of 1 by the weight that leaked past the Fock cutoff.
pub fn twirl_unnormalized(
    params: &GaussianSemigroupParams,
    t: f64,
    rho: &DensityState,
    quad: &TwirlingQuadrature,
) -> Result<FockOperator> {
    let nodes = twirl_nodes(params, t, quad)?;
    let dim = rho.dim();
    let limit = dim as f64 / 4.0;
    if let Some((z, _)) = nodes.iter().find(|(z, _)| z.alpha().norm_sqr() > limit) {
        return Err(Error::Truncation(format!(
            "twirl node ({}, {}) has |alpha|^2 = {} > N/4 = {limit}",
            z.q,
            z.p,
            z.alpha().norm_sqr()
        )));
    }

    // ρ = Φ Φ† with Φ = V·diag(√λ) over the non-negligible spectrum.
    let eig = SymmetricEigen::new(rho.op().matrix().clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 1e-14 * lmax).collect();
    let phi = CMatrix::from_fn(dim, keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    });
    let rank = keep.len();

    let chunks = nodes.len().div_ceil(REDUCE_CHUNK);
    let partials = par::map_range(chunks, |c| {
        let block = &nodes[c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(nodes.len())];
        let mut stacked = CMatrix::zeros(dim, rank * block.len());
        for (b, &(z, w)) in block.iter().enumerate() {
            let d = displacement_matrix(z.alpha(), dim);
            let v = d * &phi * Complex64::new(w.sqrt(), 0.0);
            stacked.columns_mut(b * rank, rank).copy_from(&v);
        }
        &stacked * stacked.adjoint()
    });
    let mut out = CMatrix::zeros(dim, dim);
    for p in partials {
        out += p;
    }
    Ok(FockOperator::from_matrix_unchecked((&out + out.adjoint()) * Complex64::new(0.5, 0.0)))
}

/// `T_t ρ ≈ Σ_k w_k U(z_k) ρ U(z_k)†`, re-certified after trace
/// renormalization.
pub fn twirl_apply(
    params: &GaussianSemigroupParams,
    t: f64,
    rho: &DensityState,
    quad: &TwirlingQuadrature,
) -> Result<Checked<DensityState>> {
    if t == 0.0 {
        check_time(t)?;
        quad.validate()?;
        return Ok(Checked::new(rho.clone()));
    }
    let out = twirl_unnormalized(params, t, rho, quad)?;
    let trace = out.trace().re;
    let drift = (trace - 1.0).abs();
    if drift > TRACE_LIMIT {
        return Err(Error::Certification(format!("twirl trace drift {drift:e} exceeds {TRACE_LIMIT:e}")));
    }
    let mut warnings = Vec::new();
    if drift > TRACE_BUDGET {
        warnings.push(Warning::TraceDrift { drift, budget: TRACE_BUDGET });
    }
    let op = out.scale(Complex64::new(1.0 / trace, 0.0));
    let state = DensityState::certify(op, rho.trace_tol(), rho.psd_tol())?;
    Ok(Checked::with_warnings(state, warnings))
}

/// `(W(w) f)(z) = exp(−i ω(w, z)) f(z)`: how conjugation by `U(w)` acts on
/// characteristic functions.
pub fn phase_representation(w: PhasePoint, f: &ComplexField) -> ComplexField {
    let grid = *f.grid();
    ComplexField::from_fn_indexed(grid, |j, k| {
        Complex64::from_polar(1.0, -symplectic_form(w, grid.node(j, k))) * f.get(j, k)
    })
}

/// `max_z |D(T_t ρ)(z) − χ_t(z)·D(ρ)(z)|`.
pub fn intertwine_verify(
    params: &GaussianSemigroupParams,
    t: f64,
    rho: &DensityState,
    quad: &TwirlingQuadrature,
    grid: PhaseGrid,
) -> Result<Checked<f64>> {
    let mut warnings = Vec::new();
    let evolved = twirl_apply(params, t, rho, quad)?.drain_into(&mut warnings);
    let lhs = dequantize(evolved.op(), grid).drain_into(&mut warnings);
    let chi = dequantize(rho.op(), grid).drain_into(&mut warnings);
    let rhs = cq_apply(params, t, &chi)?;
    Ok(Checked::with_warnings(lhs.field.max_abs_diff(&rhs.field)?, warnings))
}

/// Haar `∫ |χ|²`, the purity of the state behind `χ`.
pub fn purity_from_char(chi: &CharFunction) -> Checked<f64> {
    let sq = chi.field.map(|v| Complex64::new(v.norm_sqr(), 0.0));
    grid_integral(&sq, Weight::Haar).map(|v| v.re)
}
