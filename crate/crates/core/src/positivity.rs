//! Finite-sample positive-definiteness tests, classical and quantum.
//!
//! A function χ is positive definite when every Gram matrix
//! `G[j,k] = χ(z_k − z_j)` is PSD; it is of quantum positive type when the
//! multiplier-weighted `G[j,k] = χ(z_k − z_j)·exp(i ω(z_j, z_k)/2)` is.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Checked, Error, Result, Warning};
use crate::fock::{hermitian_eigenvalues, CMatrix};
use crate::par;
use crate::phase::{symplectic_form, ComplexField, PhaseFunction, PhasePoint};
use crate::semigroup::{gaussian_char, GaussianSemigroupParams};

/// Relative PSD tolerance for analytic inputs.
pub const TOL_ANALYTIC: f64 = 1e-9;
/// Relative PSD tolerance for grid-interpolated inputs.
pub const TOL_GRID: f64 = 1e-6;
/// Seed of the published random sample sets.
pub const STANDARD_SEED: u64 = 20_240_917;

const MIN_POINTS: usize = 2;
const MAX_POINTS: usize = 512;
const MIN_SEPARATION: f64 = 1e-6;
const INTEGRAL_CUT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Lattice,
    Random { seed: u64 },
    User,
}

/// Distinct phase-space points at which Gram matrices are built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<PhasePoint>,
    provenance: Provenance,
}

impl SampleSet {
    pub fn new(points: Vec<PhasePoint>, provenance: Provenance) -> Result<Self> {
        let m = points.len();
        if !(MIN_POINTS..=MAX_POINTS).contains(&m) {
            return Err(Error::InvalidSampleSet(format!("{m} points, need {MIN_POINTS}..={MAX_POINTS}")));
        }
        if points.iter().any(|z| !z.q.is_finite() || !z.p.is_finite()) {
            return Err(Error::InvalidSampleSet("non-finite point".into()));
        }
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if (*a - *b).norm() < MIN_SEPARATION {
                    return Err(Error::InvalidSampleSet(format!(
                        "points ({}, {}) and ({}, {}) closer than {MIN_SEPARATION:e}",
                        a.q, a.p, b.q, b.p
                    )));
                }
            }
        }
        Ok(Self { points, provenance })
    }

    /// `side × side` origin-centered lattice with the given spacing.
    pub fn lattice(side: usize, spacing: f64) -> Result<Self> {
        let off = (side as f64 - 1.0) / 2.0;
        let points = (0..side * side)
            .map(|i| PhasePoint::new(((i / side) as f64 - off) * spacing, ((i % side) as f64 - off) * spacing))
            .collect();
        Self::new(points, Provenance::Lattice)
    }

    /// Uniform draws from `[−half_width, half_width]²`.
    pub fn random(m: usize, half_width: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..m)
            .map(|_| PhasePoint::new(rng.random_range(-half_width..=half_width), rng.random_range(-half_width..=half_width)))
            .collect();
        Self::new(points, Provenance::Random { seed })
    }

    /// The 7×7 lattice of spacing 0.7 plus one seeded off-lattice point.
    pub fn lattice_50() -> Self {
        let mut base = Self::lattice(7, 0.7).expect("static lattice");
        let mut rng = ChaCha8Rng::seed_from_u64(STANDARD_SEED);
        let extra = PhasePoint::new(rng.random_range(-2.1..=2.1), rng.random_range(-2.1..=2.1));
        base.points.push(extra);
        Self::new(base.points, Provenance::Lattice).expect("off-lattice point is distinct")
    }

    /// 50 uniform points in `[−3, 3]²`.
    pub fn random_50() -> Self {
        Self::random(50, 3.0, STANDARD_SEED).expect("distinct draws")
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub gram_dim: usize,
    pub min_eig: f64,
    pub max_eig: f64,
    pub hermiticity_defect: f64,
    pub verdict: Verdict,
    pub tolerance_used: f64,
}

impl PsdReport {
    /// Decides `min_eig ≥ −tol·max(max_eig, 1)` on the Hermitian part of `gram`.
    pub fn from_gram(gram: &CMatrix, tol: f64) -> Self {
        let defect = hermiticity_defect(gram);
        let eig = hermitian_eigenvalues(gram);
        let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eig = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let verdict = if min_eig >= -tol * max_eig.max(1.0) { Verdict::Pass } else { Verdict::Fail };
        Self { gram_dim: gram.nrows(), min_eig, max_eig, hermiticity_defect: defect, verdict, tolerance_used: tol }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `min_eig / max_eig`.
    pub fn ratio(&self) -> f64 {
        self.min_eig / self.max_eig
    }
}

fn hermiticity_defect(g: &CMatrix) -> f64 {
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((g[(i, j)] - g[(j, i)].conj()).norm());
        }
    }
    worst
}

fn gram_with(chi: &dyn PhaseFunction, s: &SampleSet, quantum: bool) -> Result<CMatrix> {
    let pts = s.points();
    let m = pts.len();
    let entries = par::map_range(m * m, |i| {
        let (j, k) = (i / m, i % m);
        let v = chi.eval(pts[k] - pts[j])?;
        Ok(if quantum { v * Complex64::from_polar(1.0, 0.5 * symplectic_form(pts[j], pts[k])) } else { v })
    });
    let entries: Vec<Complex64> = entries.into_iter().collect::<Result<_>>()?;
    Ok(DMatrix::from_row_slice(m, m, &entries))
}

/// `G[j,k] = χ(z_k − z_j)`.
pub fn classical_gram(chi: &dyn PhaseFunction, s: &SampleSet) -> Result<CMatrix> {
    gram_with(chi, s, false)
}

/// `G[j,k] = χ(z_k − z_j)·exp(i ω(z_j, z_k)/2)`.
pub fn quantum_gram(chi: &dyn PhaseFunction, s: &SampleSet) -> Result<CMatrix> {
    gram_with(chi, s, true)
}

pub fn pd_test_classical(chi: &dyn PhaseFunction, s: &SampleSet, tol: f64) -> Result<PsdReport> {
    Ok(PsdReport::from_gram(&classical_gram(chi, s)?, tol))
}

pub fn pd_test_quantum(chi: &dyn PhaseFunction, s: &SampleSet, tol: f64) -> Result<PsdReport> {
    Ok(PsdReport::from_gram(&quantum_gram(chi, s)?, tol))
}

/// Double quadrature of `∬ χ(z − z′) conj φ(z′) φ(z) dz dz′` (Lebesgue),
/// optionally weighted by `exp(i ω(z′, z)/2)`. Only nodes where `φ` is
/// non-negligible contribute; differences of nodes are nodes, so `χ` is read
/// without interpolation.
fn integral_form(chi: &ComplexField, phi: &ComplexField, quantum: bool) -> Result<Checked<Complex64>> {
    chi.ensure_same_grid(phi)?;
    let grid = *chi.grid();
    let m = grid.points();
    let cut = INTEGRAL_CUT * phi.max_abs();
    let live: Vec<(usize, usize)> =
        (0..m * m).map(|i| (i / m, i % m)).filter(|&(j, k)| phi.get(j, k).norm() > cut).collect();
    let half = m as i64 / 2;
    let rows = par::map_range(live.len(), |a| {
        let (j, k) = live[a];
        let z = grid.node(j, k);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(jp, kp) in &live {
            let u = j as i64 - jp as i64 + half;
            let v = k as i64 - kp as i64 + half;
            if !(0..m as i64).contains(&u) || !(0..m as i64).contains(&v) {
                continue;
            }
            let mut term = chi.get(u as usize, v as usize) * phi.get(jp, kp).conj();
            if quantum {
                term *= Complex64::from_polar(1.0, 0.5 * symplectic_form(grid.node(jp, kp), z));
            }
            acc += term;
        }
        acc * phi.get(j, k)
    });
    let h2 = grid.spacing().powi(2);
    let total: Complex64 = rows.iter().sum::<Complex64>() * (h2 * h2);
    let warnings: Vec<Warning> = chi.decay_warning(crate::algebra::OPERAND_DECAY).into_iter().collect();
    Ok(Checked::with_warnings(total, warnings))
}

/// Classical positive-type functional; nonnegative (up to quadrature error)
/// for positive-definite `χ`.
pub fn integral_form_test_classical(chi: &ComplexField, phi: &ComplexField) -> Result<Checked<Complex64>> {
    integral_form(chi, phi, false)
}

/// Quantum analogue with the multiplier inside the double integral.
pub fn integral_form_test_quantum(chi: &ComplexField, phi: &ComplexField) -> Result<Checked<Complex64>> {
    integral_form(chi, phi, true)
}

/// Node-wise product.
pub fn hadamard_product(f: &ComplexField, g: &ComplexField) -> Result<ComplexField> {
    f.zip_with(g, |a, b| a * b)
}

/// Pointwise product of two evaluable functions.
pub struct Product<'a>(pub &'a dyn PhaseFunction, pub &'a dyn PhaseFunction);

impl PhaseFunction for Product<'_> {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        Ok(self.0.eval(z)? * self.1.eval(z)?)
    }
}

/// The characteristic function of `Normal(v, Σ)` (the time-1 member of the
/// Gaussian semigroup) must pass the classical test.
pub fn bochner_roundtrip_classical(params: &GaussianSemigroupParams, s: &SampleSet, tol: f64) -> Result<PsdReport> {
    let chi = gaussian_char(params, 1.0)?;
    pd_test_classical(&chi, s, tol)
}

/// Empirical characteristic function `(1/n) Σ exp(i ω(z, x_k))` of `n`
/// seeded draws from `Normal(v, Σ)`.
#[derive(Debug, Clone)]
pub struct EmpiricalChar {
    draws: Vec<PhasePoint>,
}

impl EmpiricalChar {
    pub fn sample(params: &GaussianSemigroupParams, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidValue("empty sample".into()));
        }
        let c = params.covariance();
        // Cholesky of the 2×2 covariance, tolerant of a singular Σ.
        let l00 = c[0][0].max(0.0).sqrt();
        let l10 = if l00 > 0.0 { c[1][0] / l00 } else { 0.0 };
        let l11 = (c[1][1] - l10 * l10).max(0.0).sqrt();
        let v = params.drift();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = (0..n)
            .map(|_| {
                let x0: f64 = StandardNormal.sample(&mut rng);
                let x1: f64 = StandardNormal.sample(&mut rng);
                PhasePoint::new(v.q + l00 * x0, v.p + l10 * x0 + l11 * x1)
            })
            .collect();
        Ok(Self { draws })
    }
}

impl PhaseFunction for EmpiricalChar {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        let sum: Complex64 = self.draws.iter().map(|&x| Complex64::from_polar(1.0, symplectic_form(z, x))).sum();
        Ok(sum / self.draws.len() as f64)
    }
}

/// Bochner round trip with a Monte-Carlo characteristic function.
pub fn bochner_roundtrip_empirical(
    params: &GaussianSemigroupParams,
    s: &SampleSet,
    draws: usize,
    seed: u64,
    tol: f64,
) -> Result<PsdReport> {
    let chi = EmpiricalChar::sample(params, draws, seed)?;
    pd_test_classical(&chi, s, tol)
}
