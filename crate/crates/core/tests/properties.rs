use num_complex::Complex64;
use proptest::prelude::*;

use phasecone::algebra::{classical_convolve, involution_quantum, twisted_convolve};
use phasecone::fock::{CMatrix, DensityState, FockOperator, PSD_TOL, TRACE_TOL};
use phasecone::io::{read_field, write_field, Encoding, Side};
use phasecone::phase::{symplectic_form, weyl_multiplier, ComplexField, PhaseGrid, PhasePoint};
use phasecone::positivity::{pd_test_classical, pd_test_quantum, SampleSet};
use phasecone::semigroup::{gaussian_char, GaussianSemigroupParams};
use phasecone::transforms::{dequantize, OperatorChar};

fn small_grid() -> PhaseGrid {
    PhaseGrid::new(8.0, 64).unwrap()
}

fn point() -> impl Strategy<Value = PhasePoint> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(q, p)| PhasePoint::new(q, p))
}

/// Modulated Gaussian bump `a·exp(−w|z − c|² + i k·z)`, well inside the box.
fn bump() -> impl Strategy<Value = ComplexField> {
    (0.8..1.6f64, -1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64, -0.5..0.5f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(
        |(w, cq, cp, kq, kp, ar, ai)| {
            let centre = PhasePoint::new(cq, cp);
            let amp = Complex64::new(ar, ai);
            ComplexField::from_fn(small_grid(), move |z| {
                amp * (-w * (z - centre).norm_sqr()).exp() * Complex64::from_polar(1.0, kq * z.q + kp * z.p)
            })
        },
    )
}

/// Random density matrix supported on the lowest `rank` Fock levels of a
/// 24-dimensional space.
fn density() -> impl Strategy<Value = DensityState> {
    (1usize..=4).prop_flat_map(|rank| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4 * rank).prop_map(move |entries| {
            let a = CMatrix::from_fn(24, rank, |r, c| {
                if r < 4 {
                    let (re, im) = entries[r * rank + c];
                    Complex64::new(re, im)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let mut rho = &a * a.adjoint();
            let tr = rho.trace().re.max(1e-3);
            rho /= Complex64::new(tr, 0.0);
            // Shrinking drives entries to zero; top the trace up on |0⟩.
            let deficit = 1.0 - rho.trace().re;
            rho[(0, 0)] += Complex64::new(deficit, 0.0);
            DensityState::certify(FockOperator::new(rho).unwrap(), TRACE_TOL, PSD_TOL).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn symplectic_form_is_antisymmetric_and_bilinear(z in point(), w in point(), s in -3.0..3.0f64) {
        prop_assert!((symplectic_form(z, w) + symplectic_form(w, z)).abs() < 1e-12);
        prop_assert!((symplectic_form(z.scale(s), w) - s * symplectic_form(z, w)).abs() < 1e-12);
        prop_assert!((weyl_multiplier(z, w) * weyl_multiplier(w, z) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn twisted_convolution_is_associative(f in bump(), g in bump(), h in bump()) {
        let fg_h = twisted_convolve(twisted_convolve(&f, &g).unwrap().into_value(), &h).unwrap().into_value();
        let f_gh = twisted_convolve(&f, twisted_convolve(&g, &h).unwrap().into_value()).unwrap().into_value();
        prop_assert!(fg_h.max_abs_diff(&f_gh).unwrap() <= 1e-4);
    }

    #[test]
    fn involution_reverses_products(f in bump(), g in bump()) {
        let lhs = involution_quantum(twisted_convolve(&f, &g).unwrap().into_value());
        let rhs = twisted_convolve(involution_quantum(&g), involution_quantum(&f)).unwrap().into_value();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-6);
    }

    #[test]
    fn classical_convolution_preserves_nonnegativity(f in bump(), g in bump()) {
        let (pf, pg) = (f.map(|v| Complex64::new(v.norm(), 0.0)), g.map(|v| Complex64::new(v.norm(), 0.0)));
        let out = classical_convolve(&pf, &pg).unwrap().into_value();
        let scale = out.max_abs().max(1e-300);
        for v in out.values() {
            prop_assert!(v.re >= -1e-12 * scale && v.im.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn dequantized_states_are_hermitian_and_normalized(rho in density()) {
        let chi = dequantize(rho.op(), PhaseGrid::new(10.0, 128).unwrap()).into_value();
        prop_assert!((chi.field.at_origin() - 1.0).norm() < 1e-12);
        prop_assert!(chi.hermitian_symmetry_defect() < 1e-12);
        prop_assert!(chi.field.max_abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn random_states_are_of_quantum_positive_type(rho in density(), seed in any::<u64>()) {
        let s = SampleSet::random(30, 2.5, seed).unwrap();
        let r = pd_test_quantum(&OperatorChar::new(rho.op()), &s, 1e-9).unwrap();
        prop_assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn gaussian_characteristic_functions_are_positive_definite(
        v in point(), a in 0.0..1.0f64, b in -1.0..1.0f64, d in 0.0..1.0f64, t in 0.0..3.0f64, seed in any::<u64>(),
    ) {
        let params = GaussianSemigroupParams::new(v, [[a * a, a * b], [a * b, b * b + d * d]]).unwrap();
        let chi = gaussian_char(&params, t).unwrap();
        let r = pd_test_classical(&chi, &SampleSet::random(30, 2.5, seed).unwrap(), 1e-9).unwrap();
        prop_assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn field_files_round_trip_exactly(f in bump(), csv in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if csv { "f.csv" } else { "f.bin" });
        write_field(&path, &f, Side::Plain, Encoding::for_path(&path)).unwrap();
        let (back, side) = read_field(&path).unwrap();
        prop_assert_eq!(side, Side::Plain);
        prop_assert_eq!(back, f);
    }
}
