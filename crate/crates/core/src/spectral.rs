//! Soliton phase, kernel (dressing) vectors, and validation of discrete data.

use crate::error::{Error, Result};
use crate::types::{Complex, SolitonSpec, SpectralPoint, ValidationReport, Violation, I};

/// Largest `|Re theta|` for which `e^{theta}` is representable.
pub const EXP_LIMIT: f64 = 700.0;

/// `theta = (i/2) [lambda x - (lambda^2 + epsilon lambda^3) t]`.
#[inline]
pub fn theta(lambda: Complex, epsilon: f64, x: f64, t: f64) -> Complex {
    let l2 = lambda * lambda;
    let omega = l2 + epsilon * l2 * lambda;
    0.5 * I * (lambda * x - omega * t)
}

/// Column kernel vector `v` and row vector `v_hat` of one spectral point.
#[derive(Clone, Debug, PartialEq)]
pub struct DressingVectors {
    pub v: Vec<Complex>,
    pub v_hat: Vec<Complex>,
}

/// `v = exp(theta sigma3) v0`, `v_hat = v0^dagger exp(theta^* sigma3) sigma3`
/// with `v0 = [1, m_1, ..., m_c]` and `sigma3 = diag(-1, 1, ..., 1)`.
///
/// Values are returned unscaled; points far from the soliton core overflow,
/// which is reported instead of producing infinities.
pub fn dressing_vectors(point: &SpectralPoint, epsilon: f64, x: f64, t: f64) -> Result<DressingVectors> {
    if point.lambda.im <= 0.0 {
        return Err(Error::InvalidSpec(
            "spectral point not in upper half-plane".into(),
        ));
    }
    let th = theta(point.lambda, epsilon, x, t);
    if th.re.abs() > EXP_LIMIT {
        return Err(Error::Overflow(th.re.abs()));
    }
    let down = (-th).exp();
    let up = th.exp();
    let mut v = Vec::with_capacity(point.norm_consts.len() + 1);
    v.push(down);
    v.extend(point.norm_consts.iter().map(|m| m * up));
    // v_hat = v^dagger sigma3
    let v_hat = v
        .iter()
        .enumerate()
        .map(|(k, z)| if k == 0 { -z.conj() } else { z.conj() })
        .collect();
    Ok(DressingVectors { v, v_hat })
}

pub fn validate_spec(spec: &SolitonSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let c = spec.params.components;
    if c == 0 {
        violations.push(Violation::NoComponents);
    }
    if spec.points.is_empty() {
        violations.push(Violation::Empty);
    }
    for (index, p) in spec.points.iter().enumerate() {
        let finite = p.lambda.re.is_finite()
            && p.lambda.im.is_finite()
            && p.norm_consts.iter().all(|m| m.re.is_finite() && m.im.is_finite());
        if !finite {
            violations.push(Violation::NonFinite { index });
            continue;
        }
        if p.lambda.im <= 0.0 {
            violations.push(Violation::NotUpperHalfPlane { index });
        }
        if p.norm_consts.len() != c {
            violations.push(Violation::ComponentMismatch {
                index,
                expected: c,
                found: p.norm_consts.len(),
            });
        }
        if p.norm_consts.iter().all(|m| *m == Complex::new(0.0, 0.0)) {
            violations.push(Violation::ZeroNormConstants { index });
        }
    }
    for a in 0..spec.points.len() {
        for b in a + 1..spec.points.len() {
            let la = spec.points[a].lambda;
            let lb = spec.points[b].lambda;
            if (la - lb).norm() <= 1e-14 * (1.0 + la.norm()) {
                violations.push(Violation::DuplicateLambda { first: a, second: b });
            }
        }
    }
    if !spec.params.epsilon.is_finite() {
        violations.push(Violation::NonFinite { index: usize::MAX });
    }
    ValidationReport { violations }
}
