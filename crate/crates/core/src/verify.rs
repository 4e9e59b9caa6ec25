//! Cross-module identity suites on a built-in corpus of states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{twisted_convolve_with, MultiplierSign};
use crate::config::RunConfig;
use crate::error::Result;
use crate::fock::{
    displacement, op_product, state_cat, state_coherent, state_fock, state_thermal, state_vacuum, DensityState,
};
use crate::phase::{weyl_multiplier, PhaseFunction, PhasePoint};
use crate::positivity::{bochner_roundtrip_classical, pd_test_quantum, Product, PsdReport, SampleSet};
use crate::semigroup::{gaussian_char, intertwine_verify, GaussianSemigroupParams};
use crate::transforms::{dequantize, OperatorChar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Multiplier,
    Star,
    Bochner,
    Schur,
    Intertwine,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Multiplier, Suite::Star, Suite::Bochner, Suite::Schur, Suite::Intertwine];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Multiplier => "multiplier",
            Suite::Star => "star",
            Suite::Bochner => "bochner",
            Suite::Schur => "schur",
            Suite::Intertwine => "intertwine",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Conjugates the Weyl multiplier everywhere it is used explicitly. The
    /// suites are expected to fail under this mutation.
    pub flip_multiplier: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    fn holds(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    fn push(&mut self, suite: Suite, name: impl Into<String>, measured: f64, bound: Bound) {
        let passed = bound.holds(measured);
        self.checks.push(Check { suite: suite.name().into(), name: name.into(), measured, bound, passed });
    }

    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }
}

/// Vacuum, coherent(1), fock(1), thermal(n̄ = 1) and cat(1.5).
pub fn corpus(dim: usize) -> Result<Vec<(&'static str, DensityState)>> {
    Ok(vec![
        ("vacuum", state_vacuum(dim)?),
        ("coherent(1)", state_coherent(Complex64::new(1.0, 0.0), dim)?),
        ("fock(1)", state_fock(1, dim)?),
        ("thermal(1)", state_thermal(1.0, dim)?),
        ("cat(1.5)", state_cat(Complex64::new(1.5, 0.0), dim)?),
    ])
}

/// Relative smallest eigenvalue `min_eig / max(max_eig, 1)`, the quantity
/// the PSD verdict thresholds.
pub fn relative_min(r: &PsdReport) -> f64 {
    r.min_eig / r.max_eig.max(1.0)
}

pub fn run(suite: Suite, cfg: &RunConfig, opts: VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        log::info!("verify: running {} suite", s.name());
        match s {
            Suite::Multiplier => multiplier(cfg, opts, &mut report)?,
            Suite::Star => star(cfg, opts, &mut report)?,
            Suite::Bochner => bochner(cfg, opts, &mut report)?,
            Suite::Schur => schur(cfg, opts, &mut report)?,
            Suite::Intertwine => intertwine(cfg, &mut report)?,
            Suite::All => unreachable!(),
        }
    }
    Ok(report.finish())
}

fn multiplier_factor(z: PhasePoint, w: PhasePoint, opts: VerifyOptions) -> Complex64 {
    let m = weyl_multiplier(z, w);
    if opts.flip_multiplier {
        m
    } else {
        m.inv()
    }
}

/// `U(z)U(w) = m(z; w)⁻¹ U(z + w)` on the interior block, 5×5 pairs with
/// `|z|, |w| ≤ 2`.
fn multiplier(cfg: &RunConfig, opts: VerifyOptions, out: &mut VerifyReport) -> Result<()> {
    let n = cfg.fock_dim;
    let zs = [(0.0, 0.0), (1.2, -0.4), (-0.6, 1.5), (1.4, 1.4), (-2.0, 0.0)].map(|(q, p)| PhasePoint::new(q, p));
    let ws = [(0.3, 0.2), (-1.0, -1.0), (0.0, 2.0), (1.9, -0.5), (-0.8, 0.9)].map(|(q, p)| PhasePoint::new(q, p));
    let mut worst = 0.0f64;
    for &z in &zs {
        let uz = displacement(z, n)?.into_value();
        for &w in &ws {
            let lhs = uz.mul(&displacement(w, n)?.into_value())?;
            let rhs = displacement(z + w, n)?.into_value().scale(multiplier_factor(z, w, opts));
            worst = worst.max(lhs.block_max_diff(&rhs, n / 2)?);
        }
    }
    out.push(Suite::Multiplier, "U(z)U(w) = m(z;w)^-1 U(z+w), 25 pairs", worst, Bound::AtMost(1e-8));
    Ok(())
}

/// `D(ρσ) = Dρ ⋆ Dσ` for coherent pairs, vacuum idempotence, and a
/// non-commutativity witness.
fn star(cfg: &RunConfig, opts: VerifyOptions, out: &mut VerifyReport) -> Result<()> {
    let grid = cfg.grid()?;
    let n = cfg.fock_dim;
    let sign = if opts.flip_multiplier { MultiplierSign::Flipped } else { MultiplierSign::Standard };
    let pairs = [
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)),
        (Complex64::new(-0.7, 0.7), Complex64::new(1.2, 0.0)),
        (Complex64::new(1.5, 0.0), Complex64::new(0.0, -1.5)),
    ];
    let mut worst = 0.0f64;
    let mut witness = f64::INFINITY;
    for (a, b) in pairs {
        let rho = state_coherent(a, n)?;
        let sigma = state_coherent(b, n)?;
        let lhs = dequantize(&op_product(rho.op(), sigma.op())?, grid).into_value();
        let f = dequantize(rho.op(), grid).into_value();
        let g = dequantize(sigma.op(), grid).into_value();
        let fg = twisted_convolve_with(&f.field, &g.field, sign)?.into_value();
        let gf = twisted_convolve_with(&g.field, &f.field, sign)?.into_value();
        worst = worst.max(lhs.field.max_abs_diff(&fg)?);
        witness = witness.min(fg.max_abs_diff(&gf)?);
    }
    out.push(Suite::Star, "D(rho sigma) = D(rho) * D(sigma), 3 coherent pairs", worst, Bound::AtMost(1e-3));
    out.push(Suite::Star, "non-commutativity witness ||f*g - g*f||", witness, Bound::AtLeast(1e-2));

    let vac = dequantize(state_vacuum(n)?.op(), grid).into_value();
    let sq = twisted_convolve_with(&vac.field, &vac.field, sign)?.into_value();
    out.push(Suite::Star, "vacuum idempotence", sq.max_abs_diff(&vac.field)?, Bound::AtMost(1e-4));
    Ok(())
}

fn sub_vacuum(c: f64) -> impl Fn(PhasePoint) -> Complex64 + Sync {
    move |z: PhasePoint| Complex64::new((-c * z.norm_sqr()).exp(), 0.0)
}

/// Dequantized states are of quantum positive type; narrower-than-vacuum
/// Gaussians are not; classical characteristic functions are positive
/// definite.
fn bochner(cfg: &RunConfig, opts: VerifyOptions, out: &mut VerifyReport) -> Result<()> {
    let tol = cfg.psd_tol_analytic;
    let sets = [("lattice-50", SampleSet::lattice_50()), ("random-50", SampleSet::random_50())];
    for (name, rho) in corpus(cfg.fock_dim)? {
        let chi = OperatorChar::new(rho.op());
        for (sname, s) in &sets {
            let r = quantum_test(&chi, s, tol, opts)?;
            out.push(Suite::Bochner, format!("{name} quantum PSD on {sname}"), relative_min(&r), Bound::AtLeast(-tol));
        }
    }
    let lattice = &sets[0].1;
    let fail = quantum_test(&sub_vacuum(0.15), lattice, tol, opts)?;
    out.push(Suite::Bochner, "exp(-0.15|z|^2) fails on lattice-50", fail.ratio(), Bound::AtMost(-1e-2));
    let pass = quantum_test(&sub_vacuum(0.3), lattice, tol, opts)?;
    out.push(Suite::Bochner, "exp(-0.3|z|^2) passes on lattice-50", relative_min(&pass), Bound::AtLeast(-tol));

    for (name, params) in [
        ("point mass", GaussianSemigroupParams::drift_only(PhasePoint::ORIGIN)?),
        ("standard Gaussian", GaussianSemigroupParams::isotropic(1.0)?),
    ] {
        let r = bochner_roundtrip_classical(&params, &sets[1].1, tol)?;
        out.push(Suite::Bochner, format!("{name} classical PSD"), relative_min(&r), Bound::AtLeast(-tol));
    }
    Ok(())
}

fn quantum_test(chi: &dyn PhaseFunction, s: &SampleSet, tol: f64, opts: VerifyOptions) -> Result<PsdReport> {
    if !opts.flip_multiplier {
        return pd_test_quantum(chi, s, tol);
    }
    // Flipped multiplier: weight by m(z_j, z_k)⁻¹ instead.
    let pts = s.points();
    let m = pts.len();
    let mut g = crate::fock::CMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            g[(j, k)] = chi.eval(pts[k] - pts[j])? * weyl_multiplier(pts[j], pts[k]).conj();
        }
    }
    Ok(PsdReport::from_gram(&g, tol))
}

/// 100 seeded products of a classical characteristic function with a
/// corpus state's quantum one.
fn schur(cfg: &RunConfig, opts: VerifyOptions, out: &mut VerifyReport) -> Result<()> {
    let tol = cfg.psd_tol_analytic;
    let states = corpus(cfg.fock_dim)?;
    let sets = [SampleSet::lattice_50(), SampleSet::random_50()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_eig = f64::INFINITY;
    let mut worst_origin = 0.0f64;
    for i in 0..100 {
        let drift = PhasePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let params = if rng.random_bool(0.5) {
            GaussianSemigroupParams::drift_only(drift)?
        } else {
            let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-0.7..0.7));
            let c01 = a[0] * a[2] + a[1] * a[3];
            GaussianSemigroupParams::new(drift, [[a[0] * a[0] + a[1] * a[1], c01], [c01, a[2] * a[2] + a[3] * a[3]]])?
        };
        let classical = gaussian_char(&params, 1.0)?;
        let (_, rho) = &states[rng.random_range(0..states.len())];
        let quantum = OperatorChar::new(rho.op());
        let product = Product(&classical, &quantum);
        let r = quantum_test(&product, &sets[i % 2], tol, opts)?;
        worst_eig = worst_eig.min(relative_min(&r));
        worst_origin = worst_origin.max((product.eval(PhasePoint::ORIGIN)? - 1.0).norm());
    }
    out.push(Suite::Schur, "100 Hadamard products, worst relative min eigenvalue", worst_eig, Bound::AtLeast(-tol));
    out.push(Suite::Schur, "100 Hadamard products, worst |value at origin - 1|", worst_origin, Bound::AtMost(1e-10));
    Ok(())
}

/// `D(T_t ρ) = χ_t · D(ρ)`.
fn intertwine(cfg: &RunConfig, out: &mut VerifyReport) -> Result<()> {
    let grid = cfg.grid()?;
    let quad = cfg.quadrature()?;
    let n = cfg.fock_dim;
    let diffusion = GaussianSemigroupParams::isotropic(0.5)?;
    for (name, rho) in [("vacuum", state_vacuum(n)?), ("cat(1.5)", state_cat(Complex64::new(1.5, 0.0), n)?)] {
        for t in [0.25, 0.5] {
            let d = intertwine_verify(&diffusion, t, &rho, &quad, grid)?.into_value();
            out.push(Suite::Intertwine, format!("{name}, sigma^2 = 0.5, t = {t}"), d, Bound::AtMost(1e-3));
        }
    }
    let drift = GaussianSemigroupParams::drift_only(PhasePoint::new(1.0, 0.0))?;
    let d = intertwine_verify(&drift, 1.0, &state_vacuum(n)?, &quad, grid)?.into_value();
    out.push(Suite::Intertwine, "vacuum, drift (1, 0), t = 1", d, Bound::AtMost(1e-6));
    Ok(())
}
