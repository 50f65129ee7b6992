//! Property tests of the phase, potential matrix, and N-soliton symmetries.

use hirota_rh::dressing::{nsoliton_at, DEFAULT_POLE_GUARD};
use hirota_rh::laxpair::{build_q_reduced, build_u};
use hirota_rh::linalg;
use hirota_rh::spectral::theta;
use hirota_rh::*;
use proptest::prelude::*;

fn c(a: f64, b: f64) -> Complex {
    Complex::new(a, b)
}

fn close(a: Complex, b: Complex, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn upper() -> impl Strategy<Value = Complex> {
    (-1.0..1.0f64, 0.2..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn unit_box() -> impl Strategy<Value = Complex> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn two_point_spec(conv: SignConvention) -> impl Strategy<Value = SolitonSpec> {
    (upper(), upper(), unit_box(), unit_box(), 0.0..0.3f64)
        .prop_filter("distinct points", |(l1, l2, ..)| (l1 - l2).norm() > 0.1)
        .prop_map(move |(l1, l2, a, b, eps)| {
            SolitonSpec::new(
                HirotaParams::dark(eps, 2),
                vec![
                    SpectralPoint::new(l1, vec![c(1.0, 0.0), a]),
                    SpectralPoint::new(l2, vec![b, c(1.0, 0.0)]),
                ],
                conv,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_is_linear_in_x_and_t(l in upper(), eps in 0.0..0.5f64, x in -5.0..5.0f64,
                                  t in -2.0..2.0f64, y in -5.0..5.0f64, s in -2.0..2.0f64) {
        let lhs = theta(l, eps, x + y, t + s);
        let rhs = theta(l, eps, x, t) + theta(l, eps, y, s);
        prop_assert!(close(lhs, rhs, 1e-13));
        prop_assert!(close(theta(l, eps, 0.0, 0.0), c(0.0, 0.0), 0.0));
    }

    #[test]
    fn theta_conjugation(l in upper(), eps in 0.0..0.5f64, x in -5.0..5.0f64, t in -2.0..2.0f64) {
        prop_assert!(close(theta(l.conj(), eps, x, t), -theta(l, eps, x, t).conj(), 1e-13));
    }

    #[test]
    fn q_matrix_structure(q1 in unit_box(), q2 in unit_box(), q3 in unit_box(), lam in -3.0..3.0f64) {
        let q = [q1, q2, q3];
        for red in [Reduction::Defocusing, Reduction::Focusing] {
            let pm = build_q_reduced(&q, red);
            // zero diagonal blocks
            prop_assert_eq!(pm.q[(0, 0)], c(0.0, 0.0));
            for a in 1..4 {
                for b in 1..4 {
                    prop_assert_eq!(pm.q[(a, b)], c(0.0, 0.0));
                }
            }
            // Q^dagger = -kappa Q
            let lhs = pm.q.adjoint();
            let rhs = if red == Reduction::Focusing { pm.q.clone() } else { -pm.q.clone() };
            prop_assert!(linalg::max_abs(&(lhs - rhs)) < 1e-15);
            // for real lambda, U is anti-Hermitian (focusing) or sigma3-anti-Hermitian (printed)
            let u = build_u(c(lam, 0.0), &pm);
            let sym = match red {
                Reduction::Focusing => u.adjoint() + &u,
                Reduction::Defocusing => &pm.sigma3 * u.adjoint() * &pm.sigma3 + &u,
            };
            prop_assert!(linalg::max_abs(&sym) < 1e-14);
        }
    }

    #[test]
    fn polarization_gauge(spec in two_point_spec(SignConvention::Regularized), phi in 0.0..6.2f64,
                          x in -6.0..6.0f64, t in 0.0..1.0f64) {
        // a common phase on every norming vector rotates q by the conjugate phase
        let rot = Complex::from_polar(1.0, phi);
        let mut turned = spec.clone();
        for p in &mut turned.points {
            for m in &mut p.norm_consts {
                *m *= rot;
            }
        }
        let a = nsoliton_at(&spec, x, t, DEFAULT_POLE_GUARD).unwrap().q;
        let b = nsoliton_at(&turned, x, t, DEFAULT_POLE_GUARD).unwrap().q;
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(close(u * rot.conj(), *v, 1e-11));
        }
    }

    #[test]
    fn translation_covariance(spec in two_point_spec(SignConvention::Regularized), x0 in -3.0..3.0f64,
                              t0 in -0.5..0.5f64, x in -5.0..5.0f64, t in 0.0..1.0f64) {
        // q(x + x0, t + t0; m_j) = q(x, t; m_j e^{2 theta_j(x0, t0)})
        let eps = spec.epsilon();
        let mut shifted = spec.clone();
        for p in &mut shifted.points {
            let f = (2.0 * theta(p.lambda, eps, x0, t0)).exp();
            for m in &mut p.norm_consts {
                *m *= f;
            }
        }
        let a = nsoliton_at(&spec, x + x0, t + t0, DEFAULT_POLE_GUARD).unwrap().q;
        let b = nsoliton_at(&shifted, x, t, DEFAULT_POLE_GUARD).unwrap().q;
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(close(*u, *v, 1e-9));
        }
    }
}
