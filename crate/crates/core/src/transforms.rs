//! Weyl dequantization and quantization, the symplectic Fourier–Plancherel
//! transform, and the Wigner picture built from them.
//!
//! Conventions: `χ(z) = tr(U(z)† ρ)` with Haar measure `dλ = dq dp / 2π`, so
//! the dequantization constant is 1, quantization is `Q f = ∫ f U dλ`, and
//! the Wigner function is `ϱ = (2π)⁻¹ F_s χ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chirp::ChirpTransform;
use crate::error::{Checked, Error, Result, Warning};
use crate::fock::{fill_displacement, CMatrix, DensityState, FockOperator};
use crate::par;
use crate::phase::{ComplexField, PhaseFunction, PhaseGrid, PhasePoint, Weight};

/// Boundary magnitude a characteristic function must decay below.
pub const CHAR_DECAY: f64 = 1e-8;

/// Operator entries below this fraction of the largest entry are ignored when
/// tracing against displacements (those entries are bounded by 1).
const SUPPORT_EPS: f64 = 1e-18;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A sampled quantum characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFunction {
    pub field: ComplexField,
    /// Fock dimension of the source operator, 0 for analytic fields.
    pub source_dim: usize,
}

impl CharFunction {
    pub fn analytic(field: ComplexField) -> Self {
        Self { field, source_dim: 0 }
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.field.grid()
    }

    /// Largest `|χ(−z) − conj χ(z)|` over nodes whose mirror is on the grid.
    pub fn hermitian_symmetry_defect(&self) -> f64 {
        let m = self.grid().points();
        let mut worst = 0.0f64;
        for j in 1..m {
            for k in 1..m {
                let v = self.field.get(j, k);
                let w = self.field.get(m - j, m - k);
                worst = worst.max((w - v.conj()).norm());
            }
        }
        worst
    }
}

impl AsRef<ComplexField> for CharFunction {
    fn as_ref(&self) -> &ComplexField {
        &self.field
    }
}

/// A sampled Wigner function.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub field: ComplexField,
}

impl WignerField {
    /// Largest imaginary part over nodes.
    pub fn max_imag(&self) -> f64 {
        self.field.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_real(&self) -> f64 {
        self.field.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    /// `∫ ϱ dq dp` on the grid.
    pub fn integral(&self) -> f64 {
        crate::phase::grid_integral(&self.field, Weight::Lebesgue).value.re
    }
}

impl AsRef<ComplexField> for WignerField {
    fn as_ref(&self) -> &ComplexField {
        &self.field
    }
}

/// `tr(U(z)† A)` at a single point.
pub fn char_at(a: &FockOperator, z: PhasePoint) -> Complex64 {
    trace_against(a.matrix(), a.support(SUPPORT_EPS), -z.alpha())
}

/// `tr(D(β) A) = Σ D(β)_{mn} A_{nm}` over the leading `support` states.
fn trace_against(a: &CMatrix, support: usize, beta: Complex64) -> Complex64 {
    let mut acc = ZERO;
    fill_displacement(beta, support, |m, n, v| acc += v * a[(n, m)]);
    acc
}

/// Pointwise characteristic function of an operator, for use where fields
/// would need interpolation (Gram matrices).
#[derive(Debug, Clone)]
pub struct OperatorChar<'a> {
    matrix: &'a CMatrix,
    support: usize,
}

impl<'a> OperatorChar<'a> {
    pub fn new(op: &'a FockOperator) -> Self {
        Self { matrix: op.matrix(), support: op.support(SUPPORT_EPS) }
    }

    pub fn at(&self, z: PhasePoint) -> Complex64 {
        trace_against(self.matrix, self.support, -z.alpha())
    }
}

impl PhaseFunction for OperatorChar<'_> {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        Ok(self.at(z))
    }
}

/// `(D A)(z) = tr(U(z)† A)` at every grid node.
pub fn dequantize(a: &FockOperator, grid: PhaseGrid) -> Checked<CharFunction> {
    let ch = OperatorChar::new(a);
    let field = ComplexField::from_fn(grid, |z| ch.at(z));
    let warnings = field.decay_warning(CHAR_DECAY).into_iter().collect();
    Checked::with_warnings(CharFunction { field, source_dim: a.dim() }, warnings)
}

/// `Q f = ∫ f(z) U(z) dλ(z)` on `dim` Fock states, the adjoint of
/// [`dequantize`] for the Haar-weighted inner product.
pub fn quantize(f: &ComplexField, dim: usize) -> Result<Checked<FockOperator>> {
    if dim < 2 {
        return Err(Error::DimensionMismatch { left: dim, right: 2 });
    }
    let grid = *f.grid();
    let m = grid.points();
    let cut = 1e-16 * f.max_abs();
    let rows: Vec<CMatrix> = par::map_range(m, |j| {
        let mut acc = CMatrix::zeros(dim, dim);
        for k in 0..m {
            let w = f.get(j, k);
            if w.norm() <= cut || w == ZERO {
                continue;
            }
            fill_displacement(grid.node(j, k).alpha(), dim, |r, c, v| acc[(r, c)] += w * v);
        }
        acc
    });
    let mut total = CMatrix::zeros(dim, dim);
    for r in &rows {
        total += r;
    }
    let h = grid.spacing();
    total *= Complex64::new(h * h / (2.0 * PI), 0.0);
    let warnings: Vec<Warning> = f.decay_warning(CHAR_DECAY).into_iter().collect();
    Ok(Checked::with_warnings(FockOperator::from_matrix_unchecked(total), warnings))
}

/// Symplectic Fourier–Plancherel transform
/// `(F_s f)(z) = (2π)⁻¹ ∫ f(z′) exp(i ω(z, z′)) dz′`, via chirp FFTs.
pub fn symplectic_fourier(f: &ComplexField) -> Result<ComplexField> {
    let grid = *f.grid();
    grid.check_aliasing()?;
    let m = grid.points();
    let h = grid.spacing();
    let beta = h * h;
    // ω(z, z′) = q p′ − p q′: first sum over p′ against the output q ...
    let plus = ChirpTransform::new(m, beta);
    let mut stage = vec![ZERO; m * m];
    par::for_each_chunk_mut(&mut stage, m, |jp, out| plus.apply(f.row(jp), out));
    let mut transposed = vec![ZERO; m * m];
    for j in 0..m {
        for jp in 0..m {
            transposed[j * m + jp] = stage[jp * m + j];
        }
    }
    // ... then over q′ against the output p.
    let minus = ChirpTransform::new(m, -beta);
    let mut out = vec![ZERO; m * m];
    par::for_each_chunk_mut(&mut out, m, |j, row| minus.apply(&transposed[j * m..(j + 1) * m], row));
    let scale = beta / (2.0 * PI);
    out.iter_mut().for_each(|v| *v *= scale);
    ComplexField::from_values(grid, out)
}

/// Direct `O(M⁴)` quadrature of the symplectic transform; the reference for
/// [`symplectic_fourier`].
pub fn symplectic_fourier_direct(f: &ComplexField) -> Result<ComplexField> {
    let grid = *f.grid();
    grid.check_aliasing()?;
    let m = grid.points();
    let h = grid.spacing();
    let beta = h * h;
    // phase[a][b] = exp(i β a b) on centered indices
    let phase: Vec<Complex64> = (0..m * m)
        .map(|i| {
            let a = grid.centered(i / m) as f64;
            let b = grid.centered(i % m) as f64;
            Complex64::from_polar(1.0, beta * a * b)
        })
        .collect();
    let scale = beta / (2.0 * PI);
    let values = par::map_range(m * m, |idx| {
        let (j, k) = (idx / m, idx % m);
        let mut acc = ZERO;
        for jp in 0..m {
            let outer = phase[k * m + jp].conj();
            let row = f.row(jp);
            let mut inner = ZERO;
            for (kp, v) in row.iter().enumerate() {
                inner += v * phase[j * m + kp];
            }
            acc += outer * inner;
        }
        acc * scale
    });
    ComplexField::from_values(grid, values)
}

/// `ϱ = (2π)⁻¹ F_s D ρ`.
pub fn wigner_from_state(rho: &FockOperator, grid: PhaseGrid) -> Result<Checked<WignerField>> {
    let chi = dequantize(rho, grid);
    let field = symplectic_fourier(&chi.value.field)?.scaled(Complex64::new(1.0 / (2.0 * PI), 0.0));
    Ok(Checked::with_warnings(WignerField { field }, chi.warnings))
}

/// Wigner transform of an operator at one point by the displaced-parity
/// formula `W_A(z) = π⁻¹ tr(A U(z) Π U(z)†) = π⁻¹ tr(A D(2α) Π)`.
///
/// Independent of the grid and of [`symplectic_fourier`].
pub fn wigner_at(a: &FockOperator, z: PhasePoint) -> Complex64 {
    wigner_at_support(a.matrix(), a.support(SUPPORT_EPS), z)
}

fn wigner_at_support(a: &CMatrix, support: usize, z: PhasePoint) -> Complex64 {
    let mut acc = ZERO;
    fill_displacement(z.alpha() * 2.0, support, |m, n, v| {
        let s = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc += v * a[(n, m)] * s;
    });
    acc / PI
}

/// `⟨A⟩_ρ = ∫ α(z) ϱ(z) dq dp` with the Weyl symbol `α = 2π W_A`.
pub fn expectation(a: &FockOperator, rho: &DensityState, grid: PhaseGrid) -> Result<Checked<Complex64>> {
    let scale = a.max_abs().max(1.0);
    let defect = a.hermiticity_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    a.ensure_dim(rho.op())?;
    let wigner = wigner_from_state(rho.op(), grid)?;
    let w = &wigner.value.field;
    let cut = 1e-14 * w.max_abs();
    let support = a.support(SUPPORT_EPS);
    let m = grid.points();
    let rows: Vec<Complex64> = par::map_range(m, |j| {
        let mut acc = ZERO;
        for k in 0..m {
            let rv = w.get(j, k);
            if rv.norm() <= cut {
                continue;
            }
            let symbol = wigner_at_support(a.matrix(), support, grid.node(j, k)) * (2.0 * PI);
            acc += symbol * rv;
        }
        acc
    });
    let h = grid.spacing();
    let total: Complex64 = rows.iter().sum::<Complex64>() * (h * h);
    Ok(Checked::with_warnings(total, wigner.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, state_cat, state_coherent, state_fock, state_thermal, state_vacuum};
    use crate::phase::grid_integral;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(10.0, 128).unwrap()
    }

    #[test]
    fn vacuum_char_is_gaussian() {
        let chi = dequantize(state_vacuum(64).unwrap().op(), grid());
        assert!(chi.is_clean());
        let expect = ComplexField::from_fn(grid(), |z| Complex64::new((-z.norm_sqr() / 4.0).exp(), 0.0));
        assert!(chi.value.field.max_abs_diff(&expect).unwrap() < 1e-6);
    }

    #[test]
    fn char_normalized_at_origin() {
        let a = Complex64::new(1.0, 0.0);
        for s in [state_coherent(a, 64).unwrap(), state_fock(1, 64).unwrap(), state_thermal(1.0, 64).unwrap()] {
            assert!((char_at(s.op(), PhasePoint::ORIGIN) - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn coherent_char_magnitude() {
        let beta = Complex64::new(0.8, -1.1);
        let s = state_coherent(beta, 64).unwrap();
        for &(q, p) in &[(0.0, 0.0), (1.0, 2.0), (-3.0, 0.5), (4.0, -4.0)] {
            let z = PhasePoint::new(q, p);
            let v = char_at(s.op(), z);
            assert!((v.norm() - (-z.norm_sqr() / 4.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn fock_one_char_closed_form() {
        let s = state_fock(1, 32).unwrap();
        for &(q, p) in &[(0.3, 0.1), (2.0, -1.0), (-5.0, 3.0)] {
            let z = PhasePoint::new(q, p);
            let x = z.norm_sqr() / 2.0;
            let expect = (-x / 2.0).exp() * (1.0 - x);
            assert!((char_at(s.op(), z) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let s = state_cat(Complex64::new(1.0, 0.5), 64).unwrap();
        let chi = dequantize(s.op(), PhaseGrid::new(8.0, 64).unwrap()).value;
        assert!(chi.hermitian_symmetry_defect() < 1e-8);
    }

    #[test]
    fn quantize_roundtrip_vacuum() {
        let n = 32;
        let vac = state_vacuum(n).unwrap();
        let chi = dequantize(vac.op(), grid()).value;
        let back = quantize(&chi.field, n).unwrap().value;
        assert!(back.block_max_diff(vac.op(), n / 2).unwrap() < 1e-4);
    }

    #[test]
    fn quantize_zero() {
        let q = quantize(&ComplexField::zeros(grid()), 8).unwrap().value;
        assert_eq!(q, FockOperator::zeros(8).unwrap());
        assert!(quantize(&ComplexField::zeros(grid()), 1).is_err());
    }

    #[test]
    fn quantize_is_adjoint_of_dequantize() {
        let n = 16;
        let g = PhaseGrid::new(8.0, 64).unwrap();
        let f = ComplexField::from_fn(g, |z| {
            Complex64::new(0.3 * z.q - 0.2, 0.1 * z.p + 0.4) * (-(z - PhasePoint::new(0.5, -0.3)).norm_sqr() / 2.0).exp()
        });
        let a = state_coherent(Complex64::new(0.4, 0.2), n).unwrap().op().add(&state_fock(2, n).unwrap().op().scale(Complex64::new(0.0, 0.5))).unwrap();
        let lhs = quantize(&f, n).unwrap().value.hs_inner(&a).unwrap();
        let da = dequantize(&a, g).value;
        let integrand = f.conj().zip_with(&da.field, |x, y| x * y).unwrap();
        let rhs = grid_integral(&integrand, Weight::Haar).value;
        assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn gaussian_symplectic_transform() {
        let g = PhaseGrid::new(10.0, 256).unwrap();
        let f = ComplexField::from_fn(g, |z| Complex64::new((-z.norm_sqr() / 4.0).exp(), 0.0));
        let expect = ComplexField::from_fn(g, |z| Complex64::new(2.0 * (-z.norm_sqr()).exp(), 0.0));
        assert!(symplectic_fourier(&f).unwrap().max_abs_diff(&expect).unwrap() < 1e-6);
    }

    #[test]
    fn fast_transform_matches_direct() {
        let g = PhaseGrid::new(6.0, 32).unwrap();
        let f = ComplexField::from_fn(g, |z| {
            Complex64::from_polar((-(z - PhasePoint::new(1.0, -0.5)).norm_sqr() / 3.0).exp(), 0.7 * z.q + 0.2 * z.p)
        });
        let fast = symplectic_fourier(&f).unwrap();
        let direct = symplectic_fourier_direct(&f).unwrap();
        assert!(fast.max_abs_diff(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = PhaseGrid::new(10.0, 32).unwrap();
        assert!(matches!(symplectic_fourier(&ComplexField::zeros(g)), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn vacuum_wigner() {
        let w = wigner_from_state(state_vacuum(64).unwrap().op(), grid()).unwrap().value;
        let expect = ComplexField::from_fn(grid(), |z| Complex64::new((-z.norm_sqr()).exp() / PI, 0.0));
        assert!(w.field.max_abs_diff(&expect).unwrap() < 1e-6);
        assert!((w.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fock_one_wigner_negative_at_origin() {
        let s = state_fock(1, 64).unwrap();
        let w = wigner_from_state(s.op(), grid()).unwrap().value;
        assert!((w.field.at_origin().re + 1.0 / PI).abs() < 1e-4);
        assert!((wigner_at(s.op(), PhasePoint::ORIGIN).re + 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn parity_route_matches_fourier_route() {
        let s = state_cat(Complex64::new(1.0, 0.3), 64).unwrap();
        let w = wigner_from_state(s.op(), grid()).unwrap().value;
        let g = grid();
        for &(j, k) in &[(64, 64), (70, 60), (50, 80), (64, 90)] {
            let parity = wigner_at(s.op(), g.node(j, k));
            assert!((w.field.get(j, k) - parity).norm() < 1e-7, "{j} {k} {} {}", w.field.get(j, k), parity);
        }
    }

    #[test]
    fn expectation_of_quadratures() {
        let n = 64;
        let g = grid();
        let alpha = 0.8;
        let coh = state_coherent(Complex64::new(alpha, 0.0), n).unwrap();
        let q = fock::position(n).unwrap();
        let v = expectation(&q, &coh, g).unwrap().value;
        assert!((v.re - std::f64::consts::SQRT_2 * alpha).abs() < 1e-5);
        let id = FockOperator::identity(n).unwrap();
        assert!((expectation(&id, &coh, g).unwrap().value - 1.0).norm() < 1e-6);
        let th = state_thermal(1.0, n).unwrap();
        let num = fock::number(n).unwrap();
        assert!((expectation(&num, &th, g).unwrap().value.re - 1.0).abs() < 1e-4);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let n = 8;
        let (a, _) = fock::ladder_matrices(n).unwrap();
        let g = PhaseGrid::new(8.0, 64).unwrap();
        assert!(matches!(expectation(&a, &state_vacuum(n).unwrap(), g), Err(Error::NotHermitian { .. })));
    }
}
