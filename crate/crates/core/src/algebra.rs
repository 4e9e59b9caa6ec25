//! The two convolution algebras on sampled phase-space functions.
//!
//! The quantum one uses the twisted convolution
//! `(f ⋆ g)(z) = (2π)⁻¹ ∫ f(z′) g(z − z′) exp((i/2) ω(z, z′)) dz′`
//! and the involution `f*(z) = conj f(−z)`; the classical one is the plain
//! Lebesgue convolution of the translation group.
//!
//! On a centered grid `z − z′` of two nodes is again a node offset, so the
//! sums below need no interpolation. Offsets that leave the grid read zero.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Checked, Result, Warning};
use crate::par;
use crate::phase::{grid_integral, ComplexField, PhaseGrid, Weight};

/// Boundary magnitude convolution operands should decay below.
pub const OPERAND_DECAY: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// An element of either convolution algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub field: ComplexField,
}

impl AlgebraElement {
    pub fn new(field: ComplexField) -> Result<Self> {
        if field.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(crate::Error::InvalidValue("algebra element has non-finite samples".into()));
        }
        Ok(Self { field })
    }
}

impl AsRef<ComplexField> for AlgebraElement {
    fn as_ref(&self) -> &ComplexField {
        &self.field
    }
}

impl From<AlgebraElement> for ComplexField {
    fn from(a: AlgebraElement) -> Self {
        a.field
    }
}

/// Orientation of the multiplier inside the twisted convolution.
///
/// `Flipped` conjugates the multiplier, which turns `f ⋆ g` into the star
/// product of the reversed operator order. It exists so that the
/// consistency checks can be shown to catch a sign error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiplierSign {
    #[default]
    Standard,
    Flipped,
}

impl MultiplierSign {
    fn factor(self) -> f64 {
        match self {
            MultiplierSign::Standard => 0.5,
            MultiplierSign::Flipped => -0.5,
        }
    }
}

fn operand_warnings(f: &ComplexField, g: &ComplexField) -> Vec<Warning> {
    f.decay_warning(OPERAND_DECAY).into_iter().chain(g.decay_warning(OPERAND_DECAY)).collect()
}

/// `exp(i s β a b)` on centered indices, row-major `[a][b]`.
fn phase_table(grid: &PhaseGrid, s: f64) -> Vec<Complex64> {
    let m = grid.points();
    let beta = grid.spacing() * grid.spacing();
    (0..m * m)
        .map(|i| {
            let a = grid.centered(i / m) as f64;
            let b = grid.centered(i % m) as f64;
            Complex64::from_polar(1.0, s * beta * a * b)
        })
        .collect()
}

/// Twisted convolution `f ⋆ g`.
pub fn twisted_convolve(f: impl AsRef<ComplexField>, g: impl AsRef<ComplexField>) -> Result<Checked<ComplexField>> {
    twisted_convolve_with(f.as_ref(), g.as_ref(), MultiplierSign::Standard)
}

/// Twisted convolution with an explicit multiplier orientation, computed as
/// modulated row convolutions through FFTs in `O(M³ log M)`.
pub fn twisted_convolve_with(f: &ComplexField, g: &ComplexField, sign: MultiplierSign) -> Result<Checked<ComplexField>> {
    f.ensure_same_grid(g)?;
    let grid = *f.grid();
    let m = grid.points();
    let half = m / 2;
    let size = (2 * m).next_power_of_two();
    let table = phase_table(&grid, sign.factor());
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(size);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(size);

    let g_hat: Vec<Vec<Complex64>> = par::map_range(m, |u| {
        let mut buf = vec![ZERO; size];
        buf[..m].copy_from_slice(g.row(u));
        fwd.process(&mut buf);
        buf
    });
    let g_live: Vec<bool> = (0..m).map(|u| g.row(u).iter().any(|v| *v != ZERO)).collect();
    let f_live: Vec<bool> = (0..m).map(|j| f.row(j).iter().any(|v| *v != ZERO)).collect();

    let h = grid.spacing();
    let scale = h * h / (2.0 * PI) / size as f64;
    let mut out = vec![ZERO; m * m];
    par::for_each_chunk_mut(&mut out, m, |j, row_out| {
        let mut buf = vec![ZERO; size];
        for jp in 0..m {
            let u = j as i64 - jp as i64 + half as i64;
            if !(0..m as i64).contains(&u) {
                continue;
            }
            let u = u as usize;
            if !f_live[jp] || !g_live[u] {
                continue;
            }
            buf.iter_mut().for_each(|b| *b = ZERO);
            for (kp, (b, v)) in buf.iter_mut().zip(f.row(jp)).enumerate() {
                *b = v * table[j * m + kp];
            }
            fwd.process(&mut buf);
            for (b, gh) in buf.iter_mut().zip(&g_hat[u]) {
                *b *= gh;
            }
            inv.process(&mut buf);
            for (k, o) in row_out.iter_mut().enumerate() {
                *o += table[k * m + jp].conj() * buf[k + half];
            }
        }
        row_out.iter_mut().for_each(|o| *o *= scale);
    });
    Ok(Checked::with_warnings(ComplexField::from_values(grid, out)?, operand_warnings(f, g)))
}

/// Direct `O(M⁴)` twisted convolution; the reference for the FFT path.
pub fn twisted_convolve_direct(f: &ComplexField, g: &ComplexField, sign: MultiplierSign) -> Result<Checked<ComplexField>> {
    f.ensure_same_grid(g)?;
    let grid = *f.grid();
    let m = grid.points();
    let half = m as i64 / 2;
    let table = phase_table(&grid, sign.factor());
    let h = grid.spacing();
    let scale = h * h / (2.0 * PI);
    let values = par::map_range(m * m, |idx| {
        let (j, k) = (idx / m, idx % m);
        let mut acc = ZERO;
        for jp in 0..m {
            let u = j as i64 - jp as i64 + half;
            if !(0..m as i64).contains(&u) {
                continue;
            }
            let grow = g.row(u as usize);
            let frow = f.row(jp);
            let mut inner = ZERO;
            for kp in 0..m {
                let v = k as i64 - kp as i64 + half;
                if !(0..m as i64).contains(&v) {
                    continue;
                }
                inner += frow[kp] * grow[v as usize] * table[j * m + kp];
            }
            acc += inner * table[k * m + jp].conj();
        }
        acc * scale
    });
    Ok(Checked::with_warnings(ComplexField::from_values(grid, values)?, operand_warnings(f, g)))
}

/// `f*(z) = conj f(−z)`. On the grid, node `j` mirrors to `(M − j) mod M`,
/// which fixes the origin and wraps the unpaired edge row onto itself.
pub fn involution_quantum(f: impl AsRef<ComplexField>) -> ComplexField {
    mirror_conj(f.as_ref())
}

/// Classical involution of the (unimodular) translation group; the same
/// formula as the quantum one, acting on the commutative algebra.
pub fn involution_classical(f: impl AsRef<ComplexField>) -> ComplexField {
    mirror_conj(f.as_ref())
}

fn mirror_conj(f: &ComplexField) -> ComplexField {
    let m = f.grid().points();
    ComplexField::from_fn_indexed(*f.grid(), |j, k| f.get((m - j) % m, (m - k) % m).conj())
}

/// Lebesgue convolution `(f ∗ g)(z) = ∫ f(z′) g(z − z′) dz′` by zero-padded
/// 2-D FFT.
pub fn classical_convolve(f: impl AsRef<ComplexField>, g: impl AsRef<ComplexField>) -> Result<Checked<ComplexField>> {
    let (f, g) = (f.as_ref(), g.as_ref());
    f.ensure_same_grid(g)?;
    let grid = *f.grid();
    let m = grid.points();
    let half = m / 2;
    let size = (2 * m).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let padded = |src: &ComplexField| {
        let mut buf = vec![ZERO; size * size];
        for j in 0..m {
            buf[j * size..j * size + m].copy_from_slice(src.row(j));
        }
        buf
    };
    let mut a = padded(f);
    let mut b = padded(g);
    fft2(&mut a, size, &fwd);
    fft2(&mut b, size, &fwd);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    fft2(&mut a, size, &inv);

    let h = grid.spacing();
    let scale = h * h / (size * size) as f64;
    let values: Vec<Complex64> =
        (0..m * m).map(|i| a[(i / m + half) * size + (i % m + half)] * scale).collect();
    Ok(Checked::with_warnings(ComplexField::from_values(grid, values)?, operand_warnings(f, g)))
}

/// Direct `O(M⁴)` classical convolution.
pub fn classical_convolve_direct(f: &ComplexField, g: &ComplexField) -> Result<Checked<ComplexField>> {
    f.ensure_same_grid(g)?;
    let grid = *f.grid();
    let m = grid.points();
    let half = m as i64 / 2;
    let h = grid.spacing();
    let values = par::map_range(m * m, |idx| {
        let (j, k) = (idx as i64 / m as i64, idx as i64 % m as i64);
        let mut acc = ZERO;
        for jp in 0..m as i64 {
            let u = j - jp + half;
            if !(0..m as i64).contains(&u) {
                continue;
            }
            for kp in 0..m as i64 {
                let v = k - kp + half;
                if (0..m as i64).contains(&v) {
                    acc += f.get(jp as usize, kp as usize) * g.get(u as usize, v as usize);
                }
            }
        }
        acc * (h * h)
    });
    Ok(Checked::with_warnings(ComplexField::from_values(grid, values)?, operand_warnings(f, g)))
}

fn fft2(buf: &mut [Complex64], size: usize, plan: &Arc<dyn Fft<f64>>) {
    par::for_each_chunk_mut(buf, size, |_, row| plan.process(row));
    let mut t = vec![ZERO; size * size];
    for i in 0..size {
        for j in 0..size {
            t[j * size + i] = buf[i * size + j];
        }
    }
    par::for_each_chunk_mut(&mut t, size, |_, row| plan.process(row));
    for i in 0..size {
        for j in 0..size {
            buf[j * size + i] = t[i * size + j];
        }
    }
}

/// `⟨φ, χ⟩ = ∫ φ(z) χ(z) dz`.
pub fn pairing(phi: impl AsRef<ComplexField>, chi: impl AsRef<ComplexField>) -> Result<Checked<Complex64>> {
    let prod = phi.as_ref().zip_with(chi.as_ref(), |a, b| a * b)?;
    Ok(grid_integral(&prod, Weight::Lebesgue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhasePoint;

    fn gaussian(grid: PhaseGrid, center: PhasePoint, width: f64, kq: f64, kp: f64) -> ComplexField {
        ComplexField::from_fn(grid, move |z| {
            Complex64::from_polar((-(z - center).norm_sqr() / (2.0 * width)).exp(), kq * z.q + kp * z.p)
        })
    }

    #[test]
    fn fast_twisted_matches_direct() {
        let g = PhaseGrid::new(6.0, 32).unwrap();
        let a = gaussian(g, PhasePoint::new(0.5, -0.8), 1.0, 0.3, -0.6);
        let b = gaussian(g, PhasePoint::new(-0.4, 0.2), 0.7, -0.2, 0.9);
        for sign in [MultiplierSign::Standard, MultiplierSign::Flipped] {
            let fast = twisted_convolve_with(&a, &b, sign).unwrap().value;
            let direct = twisted_convolve_direct(&a, &b, sign).unwrap().value;
            assert!(fast.max_abs_diff(&direct).unwrap() < 1e-12);
        }
    }

    #[test]
    fn twisting_by_zero() {
        let g = PhaseGrid::new(6.0, 32).unwrap();
        let a = gaussian(g, PhasePoint::ORIGIN, 1.0, 0.0, 0.0);
        let r = twisted_convolve(&a, ComplexField::zeros(g)).unwrap().value;
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let a = ComplexField::zeros(PhaseGrid::new(6.0, 32).unwrap());
        let b = ComplexField::zeros(PhaseGrid::new(6.0, 16).unwrap());
        assert!(matches!(twisted_convolve(&a, &b), Err(crate::Error::GridMismatch)));
        assert!(matches!(classical_convolve(&a, &b), Err(crate::Error::GridMismatch)));
    }

    #[test]
    fn involution_is_an_involution() {
        let g = PhaseGrid::new(6.0, 32).unwrap();
        let a = gaussian(g, PhasePoint::new(1.0, 0.3), 1.0, 0.4, 0.1);
        assert_eq!(involution_quantum(involution_quantum(&a)), a);
        assert_eq!(involution_classical(involution_classical(&a)), a);
        let o = g.origin_index();
        assert_eq!(involution_quantum(&a).get(o, o), a.get(o, o).conj());
    }

    #[test]
    fn classical_gaussian_convolution() {
        let g = PhaseGrid::new(10.0, 128).unwrap();
        let a = gaussian(g, PhasePoint::ORIGIN, 1.0, 0.0, 0.0);
        let conv = classical_convolve(&a, &a).unwrap().value;
        let expect = ComplexField::from_fn(g, |z| Complex64::new(PI * (-z.norm_sqr() / 4.0).exp(), 0.0));
        assert!(conv.max_abs_diff(&expect).unwrap() < 1e-6);
    }

    #[test]
    fn classical_fast_matches_direct_and_commutes() {
        let g = PhaseGrid::new(6.0, 32).unwrap();
        let a = gaussian(g, PhasePoint::new(0.5, -0.8), 1.0, 0.3, -0.6);
        let b = gaussian(g, PhasePoint::new(-0.4, 0.2), 0.7, -0.2, 0.9);
        let ab = classical_convolve(&a, &b).unwrap().value;
        let ba = classical_convolve(&b, &a).unwrap().value;
        let direct = classical_convolve_direct(&a, &b).unwrap().value;
        assert!(ab.max_abs_diff(&ba).unwrap() < 1e-8);
        assert!(ab.max_abs_diff(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn pairing_examples() {
        let g = PhaseGrid::new(10.0, 128).unwrap();
        let phi = gaussian(g, PhasePoint::ORIGIN, 1.0, 0.0, 0.0);
        assert_eq!(pairing(ComplexField::zeros(g), &phi).unwrap().value, ZERO);
        let one = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let v = pairing(&phi, &one).unwrap().value;
        assert!((v - 2.0 * PI).norm() < 1e-8);
    }
}
