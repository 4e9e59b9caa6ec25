//! Phase-space primitives: points, the symplectic form, the Weyl multiplier,
//! centered sampling grids and complex fields sampled on them.
//!
//! Units have ħ = 1 and there is a single degree of freedom, so phase space
//! is the plane of points `z = (q, p)`.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Checked, Error, Result, Warning};
use crate::par;

/// Boundary magnitude below which a field counts as decayed for quadrature.
pub const QUADRATURE_DECAY: f64 = 1e-12;

/// A point `(q, p)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { q: 0.0, p: 0.0 };

    pub const fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    /// Checked constructor rejecting non-finite coordinates.
    pub fn try_new(q: f64, p: f64) -> Result<Self> {
        if q.is_finite() && p.is_finite() {
            Ok(Self { q, p })
        } else {
            Err(Error::InvalidValue(format!("non-finite phase point ({q}, {p})")))
        }
    }

    pub fn norm_sqr(self) -> f64 {
        self.q * self.q + self.p * self.p
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Coherent amplitude `α = (q + ip)/√2` of the displacement `U(q, p)`.
    pub fn alpha(self) -> Complex64 {
        Complex64::new(self.q, self.p) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Inverse of [`PhasePoint::alpha`].
    pub fn from_alpha(alpha: Complex64) -> Self {
        let s = std::f64::consts::SQRT_2;
        Self { q: s * alpha.re, p: s * alpha.im }
    }

    pub fn scale(self, s: f64) -> Self {
        Self { q: s * self.q, p: s * self.p }
    }
}

impl Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.q + o.q, self.p + o.p)
    }
}

impl Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.q - o.q, self.p - o.p)
    }
}

impl Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.q, -self.p)
    }
}

/// `ω(z, w) = q·p′ − p·q′`.
#[inline]
pub fn symplectic_form(z: PhasePoint, w: PhasePoint) -> f64 {
    z.q * w.p - z.p * w.q
}

/// The Weyl multiplier `m(z; w) = exp(i ω(z, w) / 2)`, with
/// `U(z + w) = m(z; w) U(z) U(w)`.
#[inline]
pub fn weyl_multiplier(z: PhasePoint, w: PhasePoint) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * symplectic_form(z, w))
}

/// Integration weight for [`grid_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `dq dp`
    Lebesgue,
    /// `dq dp / 2π`, the Haar normalization that makes the Weyl
    /// dequantization an isometry.
    Haar,
}

impl Weight {
    pub fn density(self) -> f64 {
        match self {
            Weight::Lebesgue => 1.0,
            Weight::Haar => 1.0 / (2.0 * PI),
        }
    }
}

/// Uniform centered grid on `[-L, L)²` with `M` points per axis.
///
/// Node `j` sits at `(j - M/2)·h`, so the origin is node `(M/2, M/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct PhaseGrid {
    half_extent: f64,
    points: usize,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    half_extent: f64,
    points_per_axis: usize,
}

impl TryFrom<GridSpec> for PhaseGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        PhaseGrid::new(s.half_extent, s.points_per_axis)
    }
}

impl From<PhaseGrid> for GridSpec {
    fn from(g: PhaseGrid) -> Self {
        GridSpec { half_extent: g.half_extent, points_per_axis: g.points }
    }
}

impl PhaseGrid {
    pub fn new(half_extent: f64, points: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!("half extent {half_extent} must be positive")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be even and at least 8"
            )));
        }
        let spacing = 2.0 * half_extent / points as f64;
        if spacing * points as f64 != 2.0 * half_extent {
            return Err(Error::InvalidGrid(format!(
                "2L/M is not exactly representable for L = {half_extent}, M = {points}"
            )));
        }
        Ok(Self { half_extent, points, spacing })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed offset of node index `j` from the origin node.
    #[inline]
    pub fn centered(&self, j: usize) -> i64 {
        j as i64 - (self.points / 2) as i64
    }

    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.centered(j) as f64 * self.spacing
    }

    #[inline]
    pub fn node(&self, j: usize, k: usize) -> PhasePoint {
        PhasePoint::new(self.coord(j), self.coord(k))
    }

    /// Index of the origin along either axis.
    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    /// Index of the node `j` units of spacing from the origin, if in range.
    #[inline]
    pub fn index_of_offset(&self, offset: i64) -> Option<usize> {
        let j = offset + (self.points / 2) as i64;
        (0..self.points as i64).contains(&j).then_some(j as usize)
    }

    /// Whether the symplectic transform on this grid is free of aliasing:
    /// `h ≤ π/L`, equivalently `M ≥ 2L²/π`.
    pub fn check_aliasing(&self) -> Result<()> {
        let limit = PI / self.half_extent;
        if self.spacing > limit {
            Err(Error::GridTooCoarse { spacing: self.spacing, limit })
        } else {
            Ok(())
        }
    }
}

/// Complex samples on a [`PhaseGrid`], row-major with the row index along `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: PhaseGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: PhaseGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidValue(format!(
                "expected {} samples for a {}x{} grid, got {}",
                grid.len(),
                grid.points(),
                grid.points(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(PhasePoint) -> Complex64 + Sync + Send,
    {
        let m = grid.points();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        par::for_each_chunk_mut(&mut values, m, |j, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(grid.node(j, k));
            }
        });
        Self { grid, values }
    }

    /// Like [`ComplexField::from_fn`] but addressed by node indices.
    pub fn from_fn_indexed<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(usize, usize) -> Complex64 + Sync + Send,
    {
        let m = grid.points();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        par::for_each_chunk_mut(&mut values, m, |j, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(j, k);
            }
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.grid.points() + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        let m = self.grid.points();
        self.values[j * m + k] = v;
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        let m = self.grid.points();
        &self.values[j * m..(j + 1) * m]
    }

    /// Value at the origin node.
    pub fn at_origin(&self) -> Complex64 {
        let o = self.grid.origin_index();
        self.get(o, o)
    }

    pub fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Node-wise combination of two fields on the same grid.
    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexField> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ComplexField { grid: self.grid, values })
    }

    pub fn scaled(&self, s: Complex64) -> ComplexField {
        self.map(|v| v * s)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest node-wise deviation `max |self − other|`.
    pub fn max_abs_diff(&self, other: &ComplexField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Largest magnitude on the outermost ring of nodes.
    pub fn boundary_max(&self) -> f64 {
        let m = self.grid.points();
        let mut worst = 0.0f64;
        for i in 0..m {
            for (j, k) in [(0, i), (m - 1, i), (i, 0), (i, m - 1)] {
                worst = worst.max(self.get(j, k).norm());
            }
        }
        worst
    }

    /// A [`Warning::Decay`] if the boundary ring is above `threshold`.
    pub fn decay_warning(&self, threshold: f64) -> Option<Warning> {
        let boundary_max = self.boundary_max();
        (boundary_max > threshold).then_some(Warning::Decay { boundary_max, threshold })
    }

    /// Weighted L² norm `(∫ |f|² dw)^{1/2}`.
    pub fn l2_norm(&self, weight: Weight) -> f64 {
        let h = self.grid.spacing();
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * h * h * weight.density()).sqrt()
    }

    /// Bilinear interpolation at an arbitrary point inside the grid.
    pub fn interpolate(&self, z: PhasePoint) -> Result<Complex64> {
        let m = self.grid.points();
        let h = self.grid.spacing();
        let l = self.grid.half_extent();
        let fx = (z.q + l) / h;
        let fy = (z.p + l) / h;
        let last = (m - 1) as f64;
        if !(0.0..=last).contains(&fx) || !(0.0..=last).contains(&fy) {
            return Err(Error::OutOfGrid { q: z.q, p: z.p });
        }
        let j = (fx.floor() as usize).min(m - 2);
        let k = (fy.floor() as usize).min(m - 2);
        let tx = fx - j as f64;
        let ty = fy - k as f64;
        let v00 = self.get(j, k);
        let v01 = self.get(j, k + 1);
        let v10 = self.get(j + 1, k);
        let v11 = self.get(j + 1, k + 1);
        Ok(v00 * ((1.0 - tx) * (1.0 - ty))
            + v01 * ((1.0 - tx) * ty)
            + v10 * (tx * (1.0 - ty))
            + v11 * (tx * ty))
    }
}

impl AsRef<ComplexField> for ComplexField {
    fn as_ref(&self) -> &ComplexField {
        self
    }
}

/// Riemann-sum quadrature `h² Σ f` (Lebesgue) or `h²/2π Σ f` (Haar).
///
/// Warns when the field has not decayed below [`QUADRATURE_DECAY`] on the
/// boundary ring; the sum is returned either way.
pub fn grid_integral(f: &ComplexField, weight: Weight) -> Checked<Complex64> {
    let h = f.grid().spacing();
    let sum: Complex64 = f.values().iter().sum();
    let warnings = f.decay_warning(QUADRATURE_DECAY).into_iter().collect();
    Checked::with_warnings(sum * (h * h * weight.density()), warnings)
}

/// Anything that can be evaluated at a phase-space point.
pub trait PhaseFunction: Sync {
    fn eval(&self, z: PhasePoint) -> Result<Complex64>;
}

impl<F> PhaseFunction for F
where
    F: Fn(PhasePoint) -> Complex64 + Sync,
{
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        Ok(self(z))
    }
}

impl PhaseFunction for ComplexField {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        self.interpolate(z)
    }
}

/// Trigonometric (periodic-sinc) interpolation of a field, exact for
/// band-limited periodic data and spectrally accurate for smooth decayed
/// fields. Bilinear errors of order `h²` are enough to push the Gram matrix
/// of a pure state off the PSD cone; this interpolant is not.
#[derive(Debug, Clone, Copy)]
pub struct SpectralField<'a>(pub &'a ComplexField);

impl SpectralField<'_> {
    /// Even-`M` Dirichlet kernel `sin(πu/h) / (M tan(πu/(Mh)))` at the
    /// offsets `x − x_j`.
    fn kernel(grid: &PhaseGrid, x: f64) -> Vec<f64> {
        let m = grid.points();
        let h = grid.spacing();
        let period = m as f64 * h;
        (0..m)
            .map(|j| {
                let u = x - grid.coord(j);
                if u == 0.0 {
                    1.0
                } else {
                    (PI * u / h).sin() / (m as f64 * (PI * u / period).tan())
                }
            })
            .collect()
    }

    pub fn at(&self, z: PhasePoint) -> Result<Complex64> {
        let f = self.0;
        let g = f.grid();
        let l = g.half_extent();
        let top = l - g.spacing();
        if !(-l..=top).contains(&z.q) || !(-l..=top).contains(&z.p) {
            return Err(Error::OutOfGrid { q: z.q, p: z.p });
        }
        let kq = Self::kernel(g, z.q);
        let kp = Self::kernel(g, z.p);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &wq) in kq.iter().enumerate() {
            let row: Complex64 = f.row(j).iter().zip(&kp).map(|(v, &wp)| v * wp).sum();
            acc += row * wq;
        }
        Ok(acc)
    }
}

impl PhaseFunction for SpectralField<'_> {
    fn eval(&self, z: PhasePoint) -> Result<Complex64> {
        self.at(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn symplectic_form_examples() {
        assert_eq!(symplectic_form(PhasePoint::new(1.0, 0.0), PhasePoint::new(0.0, 1.0)), 1.0);
        let z = PhasePoint::new(0.3, -1.7);
        assert_eq!(symplectic_form(z, z), 0.0);
        assert_eq!(symplectic_form(PhasePoint::new(2.0, 3.0), PhasePoint::new(5.0, 7.0)), -1.0);
    }

    #[test]
    fn multiplier_examples() {
        let w = PhasePoint::new(0.4, 2.2);
        assert_eq!(weyl_multiplier(PhasePoint::ORIGIN, w), c(1.0));
        let v = weyl_multiplier(PhasePoint::new(1.0, 0.0), PhasePoint::new(0.0, PI));
        assert!((v - Complex64::i()).norm() < 1e-15);
        let z = PhasePoint::new(-1.3, 0.8);
        assert!((weyl_multiplier(z, w) * weyl_multiplier(w, z) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn grid_layout() {
        let g = PhaseGrid::new(10.0, 128).unwrap();
        assert_eq!(g.spacing(), 0.15625);
        assert_eq!(g.node(64, 64), PhasePoint::ORIGIN);
        assert_eq!(g.coord(0), -10.0);
        assert_eq!(g.coord(127), 10.0 - 0.15625);
        assert_eq!(g.index_of_offset(-64), Some(0));
        assert_eq!(g.index_of_offset(64), None);
        assert!(g.check_aliasing().is_ok());
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(PhaseGrid::new(10.0, 7).is_err());
        assert!(PhaseGrid::new(10.0, 6).is_err());
        assert!(PhaseGrid::new(10.0, 129).is_err());
        assert!(PhaseGrid::new(-1.0, 64).is_err());
        assert!(PhaseGrid::new(f64::NAN, 64).is_err());
    }

    #[test]
    fn aliasing_rule() {
        // M ≥ 2L²/π: L = 10 needs M ≥ 63.7.
        assert!(PhaseGrid::new(10.0, 64).unwrap().check_aliasing().is_ok());
        assert!(matches!(
            PhaseGrid::new(10.0, 62).unwrap().check_aliasing(),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn gaussian_integrals() {
        let g = PhaseGrid::new(10.0, 256).unwrap();
        let f = ComplexField::from_fn(g, |z| c((-z.norm_sqr() / 2.0).exp()));
        let leb = grid_integral(&f, Weight::Lebesgue);
        assert!(leb.is_clean());
        assert!((leb.value - c(2.0 * PI)).norm() < 1e-8);
        let haar = grid_integral(&f, Weight::Haar).value;
        assert!((haar - c(1.0)).norm() < 1e-8);
        assert_eq!(grid_integral(&ComplexField::zeros(g), Weight::Haar).value, c(0.0));
    }

    #[test]
    fn decay_warning_raised_but_value_kept() {
        let g = PhaseGrid::new(4.0, 32).unwrap();
        let f = ComplexField::from_fn(g, |z| c((-z.norm_sqr() / 8.0).exp()));
        let r = grid_integral(&f, Weight::Lebesgue);
        assert!(matches!(r.warnings.as_slice(), [Warning::Decay { .. }]));
        assert!(r.value.re > 0.0);
    }

    #[test]
    fn spectral_interpolation() {
        let g = PhaseGrid::new(10.0, 128).unwrap();
        let f = ComplexField::from_fn(g, |z| Complex64::from_polar((-z.norm_sqr() / 4.0).exp(), 0.3 * z.q));
        let s = SpectralField(&f);
        assert!((s.at(g.node(40, 77)).unwrap() - f.get(40, 77)).norm() < 1e-14);
        let z = PhasePoint::new(0.123, -0.456);
        let exact = Complex64::from_polar((-z.norm_sqr() / 4.0).exp(), 0.3 * z.q);
        assert!((s.at(z).unwrap() - exact).norm() < 1e-10);
        assert!((f.interpolate(z).unwrap() - exact).norm() > 1e-4);
        assert!(matches!(s.at(PhasePoint::new(0.0, 10.0)), Err(Error::OutOfGrid { .. })));
    }

    #[test]
    fn interpolation_exact_on_nodes_and_bilinear() {
        let g = PhaseGrid::new(4.0, 16).unwrap();
        let f = ComplexField::from_fn(g, |z| Complex64::new(2.0 * z.q - z.p + 1.0, z.q));
        let z = g.node(3, 11);
        assert!((f.interpolate(z).unwrap() - f.get(3, 11)).norm() < 1e-14);
        // affine functions are reproduced exactly
        let w = PhasePoint::new(0.37, -1.21);
        let exact = Complex64::new(2.0 * w.q - w.p + 1.0, w.q);
        assert!((f.interpolate(w).unwrap() - exact).norm() < 1e-12);
        assert!(matches!(f.interpolate(PhasePoint::new(4.0, 0.0)), Err(Error::OutOfGrid { .. })));
    }

    #[test]
    fn grid_serde_validates() {
        let g: PhaseGrid = serde_json::from_str(r#"{"half_extent":10.0,"points_per_axis":128}"#).unwrap();
        assert_eq!(g.points(), 128);
        assert!(serde_json::from_str::<PhaseGrid>(r#"{"half_extent":10.0,"points_per_axis":9}"#).is_err());
    }
}
