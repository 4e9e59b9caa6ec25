//! Operators on the truncated Fock space `span{|0⟩, …, |N−1⟩}`.
//!
//! Displacements `U(q, p) = exp(i(p q̂ − q p̂)) = D((q + ip)/√2)` are built
//! from the closed-form matrix elements in terms of associated Laguerre
//! polynomials, which are exact entry by entry. Truncation only enters when
//! operators are multiplied, so truncation-sensitive comparisons look at the
//! leading block.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Checked, Error, Result, Warning};
use crate::phase::PhasePoint;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default tolerances used when certifying density states.
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-8;

/// Dense complex `N×N` operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::DimensionMismatch { left: n, right: matrix.ncols() });
        }
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidValue("operator has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { matrix: CMatrix::identity(dim, dim) })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { matrix: CMatrix::zeros(dim, dim) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn adjoint(&self) -> FockOperator {
        Self { matrix: self.matrix.adjoint() }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn mul(&self, other: &FockOperator) -> Result<FockOperator> {
        self.ensure_dim(other)?;
        Ok(Self { matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.ensure_dim(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.ensure_dim(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, s: Complex64) -> FockOperator {
        Self { matrix: &self.matrix * s }
    }

    /// `tr(A† B)`.
    pub fn hs_inner(&self, other: &FockOperator) -> Result<Complex64> {
        self.ensure_dim(other)?;
        Ok(self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn ensure_dim(&self, other: &FockOperator) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() })
        }
    }

    /// `max |A − A†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry deviation restricted to the leading `block×block` corner.
    pub fn block_max_diff(&self, other: &FockOperator, block: usize) -> Result<f64> {
        self.ensure_dim(other)?;
        let b = block.min(self.dim());
        let mut worst = 0.0f64;
        for i in 0..b {
            for j in 0..b {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        Ok(worst)
    }

    /// Number of leading basis states carrying entries above `eps·max|A|`.
    /// Rows and columns beyond it are negligible.
    pub(crate) fn support(&self, eps: f64) -> usize {
        let cut = eps * self.max_abs();
        let n = self.dim();
        let mut last = 0;
        for i in 0..n {
            for j in 0..n {
                if self.matrix[(i, j)].norm() > cut {
                    last = last.max(i.max(j) + 1);
                }
            }
        }
        last
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

pub fn op_product(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    a.mul(b)
}

pub fn op_adjoint(a: &FockOperator) -> FockOperator {
    a.adjoint()
}

pub fn op_trace(a: &FockOperator) -> Complex64 {
    a.trace()
}

pub fn hs_inner(a: &FockOperator, b: &FockOperator) -> Result<Complex64> {
    a.hs_inner(b)
}

/// Annihilation and creation operators, `a|n⟩ = √n |n−1⟩`.
pub fn ladder_matrices(dim: usize) -> Result<(FockOperator, FockOperator)> {
    check_dim(dim)?;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    Ok((FockOperator { matrix: a }, FockOperator { matrix: adag }))
}

/// Position `q̂ = (a + a†)/√2`.
pub fn position(dim: usize) -> Result<FockOperator> {
    let (a, ad) = ladder_matrices(dim)?;
    Ok(FockOperator { matrix: (a.matrix + ad.matrix) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0) })
}

/// Momentum `p̂ = (a − a†)/(i√2)`.
pub fn momentum(dim: usize) -> Result<FockOperator> {
    let (a, ad) = ladder_matrices(dim)?;
    let s = Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
    Ok(FockOperator { matrix: (a.matrix - ad.matrix) * s })
}

/// Number operator `a†a`.
pub fn number(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    Ok(FockOperator {
        matrix: CMatrix::from_fn(dim, dim, |i, j| if i == j { Complex64::new(i as f64, 0.0) } else { ZERO }),
    })
}

/// Matrix of `D(α)` on the leading `dim` Fock states.
///
/// Uses `⟨m|D(α)|n⟩ = √(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)` for
/// `m ≥ n` and `⟨m|D(α)|n⟩ = √(m!/n!) (−α*)^{n−m} e^{−|α|²/2} L_m^{(n−m)}(|α|²)`
/// otherwise. The Laguerre upward recurrence is run on the already-scaled
/// products so that intermediate values stay bounded.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    fill_displacement(alpha, dim, |m, n, v| out[(m, n)] = v);
    out
}

pub(crate) fn fill_displacement(alpha: Complex64, dim: usize, mut put: impl FnMut(usize, usize, Complex64)) {
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let theta = alpha.arg();
    let log_r = r.ln();
    let mut log_fact = 0.0; // ln k!
    for k in 0..dim {
        if k > 0 {
            log_fact += (k as f64).ln();
        }
        // y_0 = |α|^k / √(k!) · e^{−x/2}
        let y0 = if k == 0 {
            (-0.5 * x).exp()
        } else if r == 0.0 {
            0.0
        } else {
            (k as f64 * log_r - 0.5 * log_fact - 0.5 * x).exp()
        };
        let phase_lower = Complex64::from_polar(1.0, k as f64 * theta);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let phase_upper = phase_lower.conj() * sign;
        let kf = k as f64;
        let len = dim - k;
        // y_n = √(n!/(n+k)!) |α|^k e^{−x/2} L_n^{(k)}(x)
        let mut y_prev = 0.0;
        let mut y = y0;
        let mut r_prev = 0.0;
        for n in 0..len {
            put(n + k, n, phase_lower * y);
            if k > 0 {
                put(n, n + k, phase_upper * y);
            }
            let nf = n as f64;
            let ratio = ((nf + 1.0) / (nf + kf + 1.0)).sqrt();
            let next = ((2.0 * nf + 1.0 + kf - x) * ratio * y - (nf + kf) * ratio * r_prev * y_prev) / (nf + 1.0);
            y_prev = y;
            y = next;
            r_prev = ratio;
        }
    }
}

/// The Weyl operator `U(z)` on `dim` Fock states; warns when `|α|² > dim/4`.
pub fn displacement(z: PhasePoint, dim: usize) -> Result<Checked<FockOperator>> {
    check_dim(dim)?;
    let alpha = z.alpha();
    let limit = dim as f64 / 4.0;
    let warnings = if alpha.norm_sqr() > limit {
        vec![Warning::Truncation { alpha_sq: alpha.norm_sqr(), limit }]
    } else {
        Vec::new()
    };
    Ok(Checked::with_warnings(FockOperator { matrix: displacement_matrix(alpha, dim) }, warnings))
}

/// `exp(α a† − α* a)` of the truncated generators. Accurate only away from
/// the basis edge; used to cross-check [`displacement`].
pub fn displacement_by_exponential(z: PhasePoint, dim: usize) -> Result<FockOperator> {
    let (a, ad) = ladder_matrices(dim)?;
    let alpha = z.alpha();
    let gen = ad.matrix * alpha - a.matrix * alpha.conj();
    Ok(FockOperator { matrix: gen.exp() })
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue_hermitian(a: &FockOperator) -> Result<f64> {
    Ok(hermitian_eigen_bounds(a.matrix())?.0)
}

/// `(λ_min, λ_max)` of a Hermitian matrix; fails if it is not Hermitian to
/// 10⁻¹⁰ relative to its largest entry.
pub fn hermitian_eigen_bounds(m: &CMatrix) -> Result<(f64, f64)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { left: n, right: m.ncols() });
    }
    let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    let eig = hermitian_eigenvalues(m);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Eigenvalues of `(M + M†)/2`.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// A density operator that passed certification.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    op: FockOperator,
    trace_tol: f64,
    psd_tol: f64,
}

/// Evidence gathered while certifying a [`DensityState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub dim: usize,
    pub trace: f64,
    pub hermiticity_defect: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    pub purity: f64,
    pub trace_tol: f64,
    pub psd_tol: f64,
}

impl DensityState {
    pub fn certify(op: FockOperator, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        let state = Self { op, trace_tol, psd_tol };
        state.certification()?;
        Ok(state)
    }

    /// Re-checks the invariants and returns the evidence.
    pub fn certification(&self) -> Result<Certification> {
        let defect = self.op.hermiticity_defect();
        if defect > self.psd_tol {
            return Err(Error::Certification(format!("hermiticity defect {defect:e} > {:e}", self.psd_tol)));
        }
        let trace = self.op.trace();
        if (trace - ONE).norm() > self.trace_tol {
            return Err(Error::Certification(format!(
                "trace {trace} deviates from 1 by more than {:e}",
                self.trace_tol
            )));
        }
        let eig = hermitian_eigenvalues(self.op.matrix());
        let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eig = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min_eig < -self.psd_tol * max_eig.max(0.0) {
            return Err(Error::Certification(format!(
                "smallest eigenvalue {min_eig:e} below -{:e}·λmax",
                self.psd_tol
            )));
        }
        Ok(Certification {
            dim: self.op.dim(),
            trace: trace.re,
            hermiticity_defect: defect,
            min_eig,
            max_eig,
            purity: self.purity(),
            trace_tol: self.trace_tol,
            psd_tol: self.psd_tol,
        })
    }

    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn into_op(self) -> FockOperator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        purity_of(&self.op)
    }
}

impl AsRef<FockOperator> for DensityState {
    fn as_ref(&self) -> &FockOperator {
        &self.op
    }
}

impl AsRef<FockOperator> for FockOperator {
    fn as_ref(&self) -> &FockOperator {
        self
    }
}

pub fn purity(rho: &DensityState) -> f64 {
    rho.purity()
}

/// `tr(A²)` for a Hermitian `A`, i.e. `Σ |A_ij|²`.
pub(crate) fn purity_of(a: &FockOperator) -> f64 {
    a.matrix.iter().map(|v| v.norm_sqr()).sum()
}

fn certified(matrix: CMatrix) -> Result<DensityState> {
    DensityState::certify(FockOperator { matrix }, TRACE_TOL, PSD_TOL)
}

fn projector(psi: &[Complex64]) -> CMatrix {
    let n = psi.len();
    CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

fn comfort_alpha(alpha: Complex64, dim: usize) -> Result<()> {
    check_dim(dim)?;
    let limit = dim as f64 / 4.0;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidValue(format!("non-finite amplitude {alpha}")));
    }
    if alpha.norm_sqr() > limit {
        return Err(Error::Truncation(format!(
            "|alpha|^2 = {} exceeds N/4 = {limit}",
            alpha.norm_sqr()
        )));
    }
    Ok(())
}

/// Truncated coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!`.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut psi = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        psi.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    psi
}

pub fn state_vacuum(dim: usize) -> Result<DensityState> {
    state_fock(0, dim)
}

pub fn state_fock(k: usize, dim: usize) -> Result<DensityState> {
    check_dim(dim)?;
    if k >= dim {
        return Err(Error::Truncation(format!("Fock level {k} does not fit in dimension {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    m[(k, k)] = ONE;
    certified(m)
}

pub fn state_coherent(alpha: Complex64, dim: usize) -> Result<DensityState> {
    comfort_alpha(alpha, dim)?;
    certified(projector(&coherent_amplitudes(alpha, dim)))
}

/// Even cat state `(|α⟩ + |−α⟩)/√(2(1 + e^{−2|α|²}))`.
pub fn state_cat(alpha: Complex64, dim: usize) -> Result<DensityState> {
    comfort_alpha(alpha, dim)?;
    let plus = coherent_amplitudes(alpha, dim);
    let minus = coherent_amplitudes(-alpha, dim);
    let norm = (2.0 * (1.0 + (-2.0 * alpha.norm_sqr()).exp())).sqrt();
    let psi: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a + b) / norm).collect();
    certified(projector(&psi))
}

/// Thermal state with mean occupation `n̄`, renormalized on the truncated basis.
pub fn state_thermal(nbar: f64, dim: usize) -> Result<DensityState> {
    check_dim(dim)?;
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::InvalidValue(format!("mean occupation {nbar} must be non-negative")));
    }
    if nbar > dim as f64 / 8.0 {
        return Err(Error::Truncation(format!("mean occupation {nbar} exceeds N/8 = {}", dim as f64 / 8.0)));
    }
    let ratio = nbar / (nbar + 1.0);
    let weights: Vec<f64> = (0..dim).map(|k| ratio.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(dim, dim);
    for (k, w) in weights.iter().enumerate() {
        m[(k, k)] = Complex64::new(w / total, 0.0);
    }
    certified(m)
}

/// `I/d` on the leading `d` states, embedded in dimension `dim`.
pub fn state_maximally_mixed(d: usize, dim: usize) -> Result<DensityState> {
    check_dim(dim)?;
    if d == 0 || d > dim {
        return Err(Error::Truncation(format!("block size {d} must lie in 1..={dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..d {
        m[(k, k)] = Complex64::new(1.0 / d as f64, 0.0);
    }
    certified(m)
}
