//! Reflectionless Riemann-Hilbert solution and the N-soliton fields it produces.
//!
//! Kernel vectors are `v_j = exp(theta_j sigma3) [1, m_j]` and the row vectors are
//! `v_hat_j = v_j^dagger Sigma` with `Sigma = sigma3` for [`SignConvention::AsPrinted`]
//! and `Sigma = I` for [`SignConvention::Regularized`]. With
//! `M_jk = v_hat_j v_k / (lambda_j^* - lambda_k)` the sectional solution is
//!
//! ```text
//! P+(lambda) = I + sum_jk v_j (M^-1)_jk v_hat_k / (lambda - lambda_k^*)
//! ```
//!
//! which satisfies `P+(lambda_j) v_j = 0` and has residue matrix
//! `P+^(1) = sum_jk v_j (M^-1)_jk v_hat_k`; the fields are `q_l = -(P+^(1))_{1,l+1}`.
//!
//! The formula is invariant under `v_j -> alpha_j v_j`, so every evaluation rescales
//! each kernel vector to unit max-modulus through its log-magnitudes. This keeps
//! the arithmetic finite far from the soliton cores without a separate overflow path.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral::{theta, validate_spec, EXP_LIMIT};
use crate::types::{Complex, FieldGrid, GridSpec, SignConvention, SolitonSpec, I};

/// Relative threshold on the normalized dressing determinant below which a
/// node is treated as a pole.
pub const DEFAULT_POLE_GUARD: f64 = 1e-8;

/// Distance from a pole `lambda_k^*` of `P+` inside which evaluation is refused.
pub const LAMBDA_POLE_TOL: f64 = 1e-12;

/// `M_jk` at one space-time point, unscaled.
#[derive(Clone, Debug, PartialEq)]
pub struct DressingMatrix {
    pub entries: CMatrix,
    pub at: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    UpperHalf,
    LowerHalf,
    RealAxis,
}

impl Region {
    pub fn of(lambda: Complex) -> Self {
        if lambda.im > 0.0 {
            Region::UpperHalf
        } else if lambda.im < 0.0 {
            Region::LowerHalf
        } else {
            Region::RealAxis
        }
    }
}

/// Value of a sectionally analytic matrix `P+` or `P-` at one `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionalSolution {
    pub value: CMatrix,
    pub lambda: Complex,
    pub region: Region,
}

/// Raw dressing matrix per the general formula; entries may overflow far from the core.
pub fn build_m(spec: &SolitonSpec, x: f64, t: f64) -> DressingMatrix {
    let n = spec.n();
    let s = spec.sign_convention.sign();
    let eps = spec.epsilon();
    let thetas: Vec<Complex> = spec.points.iter().map(|p| theta(p.lambda, eps, x, t)).collect();
    let entries = CMatrix::from_fn(n, n, |j, k| {
        let pj = &spec.points[j];
        let pk = &spec.points[k];
        let z = thetas[j].conj() + thetas[k];
        let cross = inner(&pj.norm_consts, &pk.norm_consts);
        (s * (-z).exp() + cross * z.exp()) / (pj.lambda.conj() - pk.lambda)
    });
    DressingMatrix {
        entries,
        at: (x, t),
    }
}

/// `sum_l a_l^* b_l`.
pub(crate) fn inner(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rescaled dressing data at one `(x, t)`.
pub(crate) struct Dressed {
    /// `(c+1) x N`, column `j` is `v_j` scaled to unit max-modulus.
    pub v: CMatrix,
    /// `N x (c+1)`, row `k` is `v_hat_k` for the same scaling.
    pub w: CMatrix,
    pub m: CMatrix,
    /// `Re det(-i M) prod_j (2 Im lambda_j) / prod_j |v_j|^2`, a real O(1) quantity
    /// whose zeros are the poles of the solution.
    pub det_norm: f64,
}

pub(crate) fn dress(spec: &SolitonSpec, x: f64, t: f64) -> Dressed {
    let n = spec.n();
    let c = spec.components();
    let eps = spec.epsilon();
    let mut v = CMatrix::zeros(c + 1, n);
    let mut w = CMatrix::zeros(n, c + 1);
    let regular = spec.sign_convention == SignConvention::Regularized;
    let mut scale = 1.0;
    for (j, p) in spec.points.iter().enumerate() {
        let th = theta(p.lambda, eps, x, t);
        let log_m = p
            .norm_consts
            .iter()
            .filter(|m| m.norm() > 0.0)
            .map(|m| m.norm().ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let rho = (-th.re).max(th.re + log_m);
        v[(0, j)] = (-th - rho).exp();
        let up = (th - rho).exp();
        for (l, m) in p.norm_consts.iter().enumerate() {
            v[(l + 1, j)] = m * up;
        }
        let mut len2 = 0.0;
        for k in 0..=c {
            let z = v[(k, j)];
            len2 += z.norm_sqr();
            let sigma = if k == 0 && !regular { -1.0 } else { 1.0 };
            w[(j, k)] = sigma * z.conj();
        }
        scale *= 2.0 * p.lambda.im / len2;
    }
    let wv = &w * &v;
    let m = CMatrix::from_fn(n, n, |j, k| {
        wv[(j, k)] / (spec.points[j].lambda.conj() - spec.points[k].lambda)
    });
    let det_norm = linalg::determinant(&(&m * (-I))).re * scale;
    Dressed { v, w, m, det_norm }
}

/// Per-node result of the dressing evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEval {
    pub q: Vec<Complex>,
    pub det_norm: f64,
    /// 1-norm condition number of `M` (after rescaling).
    pub condition: f64,
}

fn eval_node(spec: &SolitonSpec, x: f64, t: f64) -> Option<NodeEval> {
    let d = dress(spec, x, t);
    let minv = linalg::inverse(&d.m)?;
    let c = spec.components();
    let n = spec.n();
    let mut q = vec![Complex::new(0.0, 0.0); c];
    for j in 0..n {
        let vj0 = d.v[(0, j)];
        if vj0 == Complex::new(0.0, 0.0) {
            continue;
        }
        for k in 0..n {
            let a = vj0 * minv[(j, k)];
            for (l, ql) in q.iter_mut().enumerate() {
                *ql -= a * d.w[(k, l + 1)];
            }
        }
    }
    let condition = linalg::norm1(&d.m) * linalg::norm1(&minv);
    Some(NodeEval {
        q,
        det_norm: d.det_norm,
        condition,
    })
}

/// N-soliton fields at a single point, or [`Error::Pole`] where the normalized
/// dressing determinant falls below `pole_guard`.
pub fn nsoliton_at(spec: &SolitonSpec, x: f64, t: f64, pole_guard: f64) -> Result<NodeEval> {
    match eval_node(spec, x, t) {
        Some(e) if e.det_norm.abs() >= pole_guard && e.q.iter().all(|z| z.is_finite()) => Ok(e),
        _ => Err(Error::Pole { x, t }),
    }
}

/// Diagnostics gathered while filling a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DressingDiagnostics {
    pub det_norm: Vec<f64>,
    pub median_det: f64,
    /// Largest condition number of `M` over unmasked nodes.
    pub max_condition: f64,
}

pub fn nsoliton_eval(spec: &SolitonSpec, grid: &GridSpec) -> Result<FieldGrid> {
    nsoliton_eval_detailed(spec, grid, DEFAULT_POLE_GUARD).map(|(f, _)| f)
}

/// Evaluates the N-soliton formula at every node of `grid`.
///
/// A node is masked when `|D| < pole_guard * median|D|` (D the normalized dressing
/// determinant), and additionally where `D` changes sign between x-neighbours: of
/// the straddling pair, the node closer to the zero is masked. Masked values are 0.
pub fn nsoliton_eval_detailed(
    spec: &SolitonSpec,
    grid: &GridSpec,
    pole_guard: f64,
) -> Result<(FieldGrid, DressingDiagnostics)> {
    validate_spec(spec).into_result()?;
    grid.check()?;
    let c = spec.components();
    let nx = grid.nx;

    let slices: Vec<Vec<Option<NodeEval>>> = (0..grid.nt)
        .into_par_iter()
        .map(|j| {
            let t = grid.t(j);
            (0..nx).map(|i| eval_node(spec, grid.x(i), t)).collect()
        })
        .collect();

    let det_norm: Vec<f64> = slices
        .iter()
        .flat_map(|row| row.iter().map(|e| e.as_ref().map_or(0.0, |e| e.det_norm)))
        .collect();
    let mut mags: Vec<f64> = det_norm.iter().map(|d| d.abs()).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    let median_det = mags[mags.len() / 2];

    let mut mask: Vec<bool> = det_norm
        .iter()
        .map(|d| d.abs() < pole_guard * median_det)
        .collect();
    for j in 0..grid.nt {
        for i in 0..nx.saturating_sub(1) {
            let a = det_norm[j * nx + i];
            let b = det_norm[j * nx + i + 1];
            if a * b < 0.0 {
                if a.abs() <= b.abs() {
                    mask[j * nx + i] = true;
                } else {
                    mask[j * nx + i + 1] = true;
                }
            }
        }
    }

    let mut values = vec![Complex::new(0.0, 0.0); grid.len() * c];
    let mut max_condition: f64 = 0.0;
    for (j, row) in slices.into_iter().enumerate() {
        for (i, e) in row.into_iter().enumerate() {
            let node = j * nx + i;
            if mask[node] {
                continue;
            }
            match e {
                Some(e) if e.q.iter().all(|z| z.is_finite()) => {
                    max_condition = max_condition.max(e.condition);
                    values[node * c..(node + 1) * c].copy_from_slice(&e.q);
                }
                _ => {
                    return Err(Error::LinearSolveFailure {
                        x: grid.x(i),
                        t: grid.t(j),
                    })
                }
            }
        }
    }

    let field = FieldGrid::from_parts(*grid, c, spec.reduction(), values, mask);
    Ok((
        field,
        DressingDiagnostics {
            det_norm,
            median_det,
            max_condition,
        },
    ))
}

fn check_one(spec: &SolitonSpec, n: usize) -> Result<()> {
    validate_spec(spec).into_result()?;
    if spec.n() != n {
        return Err(Error::InvalidSpec(format!(
            "closed form needs exactly {n} spectral point(s), spec has {}",
            spec.n()
        )));
    }
    Ok(())
}

/// Closed one-soliton:
/// `q_l = -m_l^* e^{theta^* - theta} (lambda^* - lambda) / [s e^{-(theta^*+theta)} + |m|^2 e^{theta^*+theta}]`.
pub fn one_soliton_closed(spec: &SolitonSpec, x: f64, t: f64, pole_guard: f64) -> Result<Vec<Complex>> {
    check_one(spec, 1)?;
    let p = &spec.points[0];
    let th = theta(p.lambda, spec.epsilon(), x, t);
    let a = 2.0 * th.re;
    if a.abs() > EXP_LIMIT {
        return Err(Error::Overflow(a.abs()));
    }
    let weight = p.norm_sqr();
    let s = spec.sign_convention.sign();
    let den = s * (-a).exp() + weight * a.exp();
    if den.abs() < pole_guard * ((-a).exp() + weight * a.exp()) {
        return Err(Error::Pole { x, t });
    }
    let phase = Complex::new(0.0, -2.0 * th.im).exp();
    let factor = phase * (p.lambda.conj() - p.lambda) / den;
    Ok(p.norm_consts.iter().map(|m| -m.conj() * factor).collect())
}

/// The csch form of the singular one-soliton,
/// `q_l = i lambda_im m_l^* e^{theta^* - theta - xi} csch(theta^* + theta + xi)`, `e^{2 xi} = |m|^2`.
///
/// The prefactor is `+i lambda_im`: that is what the general formula reduces to.
pub fn one_soliton_csch(spec: &SolitonSpec, x: f64, t: f64, pole_guard: f64) -> Result<Vec<Complex>> {
    check_one(spec, 1)?;
    if spec.sign_convention != SignConvention::AsPrinted {
        return Err(Error::InvalidSpec(
            "csch form applies to the as-printed convention only".into(),
        ));
    }
    let p = &spec.points[0];
    let th = theta(p.lambda, spec.epsilon(), x, t);
    let xi = 0.5 * p.norm_sqr().ln();
    let arg = 2.0 * th.re + xi;
    if arg.tanh().abs() < pole_guard {
        return Err(Error::Pole { x, t });
    }
    let phase = Complex::new(-xi, -2.0 * th.im).exp();
    let factor = I * p.lambda.im * phase / arg.sinh();
    Ok(p.norm_consts.iter().map(|m| m.conj() * factor).collect())
}

/// Definition of the `xi` shifts used in the sinh form of the two-soliton `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XiConvention {
    /// `e^{2 xi_1} = |m_1|^2`, `e^{2 xi_2} = <m_1, m_2>`, `e^{2 xi_3} = |m_2|^2`.
    Consistent,
    /// `M_11` built with `e^{2 xi_1} = <m_1, m_2>` as printed. Does not reproduce
    /// the general formula; kept as a negative control.
    PrintedXi1,
}

/// `2 e^{xi} f(z + xi)` with `e^{2 xi} = weight`, `f = sinh` (as-printed) or `cosh` (regularized).
fn sinh_form(weight: Complex, z: Complex, convention: SignConvention) -> Complex {
    if weight == Complex::new(0.0, 0.0) {
        return convention.sign() * (-z).exp();
    }
    let xi = 0.5 * weight.ln();
    let arg = z + xi;
    let f = match convention {
        SignConvention::AsPrinted => arg.sinh(),
        SignConvention::Regularized => arg.cosh(),
    };
    2.0 * xi.exp() * f
}

/// Two-soliton fields written out with `M` in sinh (or cosh) form.
pub fn two_soliton_closed(
    spec: &SolitonSpec,
    x: f64,
    t: f64,
    xi_convention: XiConvention,
) -> Result<Vec<Complex>> {
    check_one(spec, 2)?;
    let (p1, p2) = (&spec.points[0], &spec.points[1]);
    let eps = spec.epsilon();
    let th1 = theta(p1.lambda, eps, x, t);
    let th2 = theta(p2.lambda, eps, x, t);
    let conv = spec.sign_convention;

    let w11 = match xi_convention {
        XiConvention::Consistent => Complex::new(p1.norm_sqr(), 0.0),
        XiConvention::PrintedXi1 => inner(&p1.norm_consts, &p2.norm_consts),
    };
    let w12 = inner(&p1.norm_consts, &p2.norm_consts);
    let w22 = Complex::new(p2.norm_sqr(), 0.0);

    let (l1, l2) = (p1.lambda, p2.lambda);
    let m11 = sinh_form(w11, th1.conj() + th1, conv) / (l1.conj() - l1);
    let m12 = sinh_form(w12, th1.conj() + th2, conv) / (l1.conj() - l2);
    let m21 = sinh_form(w12.conj(), th1 + th2.conj(), conv) / (l2.conj() - l1);
    let m22 = sinh_form(w22, th2.conj() + th2, conv) / (l2.conj() - l2);

    let det = m11 * m22 - m12 * m21;
    if det.norm() == 0.0 || !det.is_finite() {
        return Err(Error::Pole { x, t });
    }
    let (i11, i12, i21, i22) = (m22 / det, -m12 / det, -m21 / det, m11 / det);

    let e11 = (th1.conj() - th1).exp();
    let e12 = (th1.conj() - th2).exp();
    let e21 = (th2.conj() - th1).exp();
    let e22 = (th2.conj() - th2).exp();
    let q = p1
        .norm_consts
        .iter()
        .zip(&p2.norm_consts)
        .map(|(a, b)| {
            let (a, b) = (a.conj(), b.conj());
            -(a * e11 * i11 + a * e12 * i21 + b * e21 * i12 + b * e22 * i22)
        })
        .collect();
    Ok(q)
}

/// `P+(lambda)` at `(x, t)`.
pub fn evaluate_pplus(spec: &SolitonSpec, x: f64, t: f64, lambda: Complex) -> Result<SectionalSolution> {
    for p in &spec.points {
        let pole = p.lambda.conj();
        if (lambda - pole).norm() < LAMBDA_POLE_TOL {
            return Err(Error::PoleAtLambda {
                re: pole.re,
                im: pole.im,
            });
        }
    }
    let d = dress(spec, x, t);
    let minv = linalg::inverse(&d.m).ok_or(Error::Pole { x, t })?;
    let c = spec.components();
    // scale row k of w by 1 / (lambda - lambda_k^*)
    let mut w = d.w.clone();
    for (k, p) in spec.points.iter().enumerate() {
        let f = 1.0 / (lambda - p.lambda.conj());
        for col in 0..=c {
            w[(k, col)] *= f;
        }
    }
    let value = linalg::identity(c + 1) + &d.v * minv * w;
    Ok(SectionalSolution {
        value,
        lambda,
        region: Region::of(lambda),
    })
}

/// Residue matrix `P+^(1) = sum_jk v_j (M^-1)_jk v_hat_k`.
pub fn residue_matrix(spec: &SolitonSpec, x: f64, t: f64) -> Result<CMatrix> {
    let d = dress(spec, x, t);
    let minv = linalg::inverse(&d.m).ok_or(Error::Pole { x, t })?;
    Ok(&d.v * minv * &d.w)
}

/// `q_l = -(P+^(1))_{1, l+1}`.
pub fn reconstruct_potential(spec: &SolitonSpec, x: f64, t: f64) -> Result<Vec<Complex>> {
    let p1 = residue_matrix(spec, x, t)?;
    Ok((1..=spec.components()).map(|l| -p1[(0, l)]).collect())
}

/// Kernel vectors `v_j(x, t)`, each rescaled to unit max-modulus.
pub fn kernel_vectors(spec: &SolitonSpec, x: f64, t: f64) -> Vec<Vec<Complex>> {
    let d = dress(spec, x, t);
    (0..spec.n())
        .map(|j| d.v.column(j).iter().copied().collect())
        .collect()
}

/// `prod_j (lambda - lambda_j) / (lambda - lambda_j^*)`.
pub fn blaschke(spec: &SolitonSpec, lambda: Complex) -> Complex {
    spec.points
        .iter()
        .map(|p| (lambda - p.lambda) / (lambda - p.lambda.conj()))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dressing_vectors;
    use crate::types::{HirotaParams, SpectralPoint};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn unit_spec(conv: SignConvention) -> SolitonSpec {
        SolitonSpec::new(
            HirotaParams::dark(0.0, 2),
            vec![SpectralPoint::new(I, vec![c(1.0, 0.0), c(0.0, 0.0)])],
            conv,
        )
    }

    #[test]
    fn build_m_examples() {
        let m = build_m(&unit_spec(SignConvention::AsPrinted), 0.0, 0.0);
        assert_eq!(m.entries[(0, 0)], c(0.0, 0.0));

        let m = build_m(&unit_spec(SignConvention::Regularized), 0.0, 0.0);
        assert!((m.entries[(0, 0)] - I).norm() < 1e-15);

        // sinh pattern with e^{2 xi} = 1
        for &x in &[-2.0, -0.3, 0.7, 3.1] {
            let m = build_m(&unit_spec(SignConvention::AsPrinted), x, 0.0).entries[(0, 0)];
            let th = theta(I, 0.0, x, 0.0);
            let expected = 2.0 * (th.conj() + th).sinh() / (c(0.0, -2.0));
            assert!((m - expected).norm() < 1e-13 * (1.0 + m.norm()));
            assert!((m - (-I * (x as f64).sinh())).norm() < 1e-13 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn vhat_v_matches_m_diagonal() {
        let spec = SolitonSpec::new(
            HirotaParams::dark(0.2, 2),
            vec![SpectralPoint::new(c(0.3, 0.8), vec![c(0.6, -0.2), c(0.1, 0.9)])],
            SignConvention::AsPrinted,
        );
        for &(x, t) in &[(0.0, 0.0), (1.3, -0.4), (-2.2, 0.9)] {
            let d = dressing_vectors(&spec.points[0], 0.2, x, t).unwrap();
            let lhs: Complex = d.v_hat.iter().zip(&d.v).map(|(a, b)| a * b).sum();
            let l = spec.points[0].lambda;
            let rhs = (l.conj() - l) * build_m(&spec, x, t).entries[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn one_soliton_examples() {
        let sp = unit_spec(SignConvention::AsPrinted);
        let q = one_soliton_closed(&sp, 1.0, 0.0, DEFAULT_POLE_GUARD).unwrap();
        assert!((q[0].norm() - 1.0 / 1f64.sinh()).abs() < 1e-14);
        assert!((q[0].norm() - 0.85092).abs() < 1e-5);
        assert!(matches!(
            one_soliton_closed(&sp, 0.0, 0.0, DEFAULT_POLE_GUARD),
            Err(Error::Pole { .. })
        ));

        let sr = unit_spec(SignConvention::Regularized);
        for &x in &[-3.0, -1.0, 0.0, 0.5, 2.0] {
            let q = one_soliton_closed(&sr, x, 0.4, DEFAULT_POLE_GUARD).unwrap();
            assert!((q[0].norm() - 1.0 / f64::cosh(x)).abs() < 1e-14);
            assert_eq!(q[1], c(0.0, 0.0));
        }
    }

    #[test]
    fn printed_csch_prefactor_has_opposite_sign() {
        let sp = unit_spec(SignConvention::AsPrinted);
        let closed = one_soliton_closed(&sp, 0.8, 0.3, DEFAULT_POLE_GUARD).unwrap();
        let csch = one_soliton_csch(&sp, 0.8, 0.3, DEFAULT_POLE_GUARD).unwrap();
        assert!((closed[0] - csch[0]).norm() < 1e-14);
        // with -i lambda_im instead of +i lambda_im the result is negated
        assert!((closed[0] + csch[0]).norm() > 0.5);
    }

    #[test]
    fn reconstruct_hand_example() {
        let q = reconstruct_potential(&unit_spec(SignConvention::Regularized), 0.0, 0.0).unwrap();
        assert!((q[0] - I).norm() < 1e-15);
        assert!(q[1].norm() < 1e-15);
    }

    #[test]
    fn pplus_refuses_its_poles() {
        let sp = unit_spec(SignConvention::Regularized);
        assert!(matches!(
            evaluate_pplus(&sp, 0.0, 0.0, -I),
            Err(Error::PoleAtLambda { .. })
        ));
        let p = evaluate_pplus(&sp, 0.0, 0.0, c(0.0, 1e6)).unwrap();
        assert!(linalg::max_abs(&(p.value - linalg::identity(3))) < 1e-5);
        assert_eq!(p.region, Region::UpperHalf);
    }

    #[test]
    fn orthogonal_polarizations_two_soliton() {
        // <m1, m2> = 0 drops the cross term entirely
        let spec = SolitonSpec::new(
            HirotaParams::dark(0.0, 2),
            vec![
                SpectralPoint::new(c(0.5, 0.6), vec![c(1.0, 0.0), c(0.0, 0.0)]),
                SpectralPoint::new(c(-0.4, 0.9), vec![c(0.0, 0.0), c(1.0, 0.0)]),
            ],
            SignConvention::Regularized,
        );
        let a = two_soliton_closed(&spec, 0.3, 0.2, XiConvention::Consistent).unwrap();
        let b = nsoliton_at(&spec, 0.3, 0.2, DEFAULT_POLE_GUARD).unwrap().q;
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn masked_grid_has_one_pole_per_slice() {
        let sp = unit_spec(SignConvention::AsPrinted);
        let g = GridSpec::new(-10.0, 10.0, 401, 0.0, 1.0, 11).unwrap();
        let f = nsoliton_eval(&sp, &g).unwrap();
        assert_eq!(f.mask_count(), 11);
        for j in 0..g.nt {
            assert!(f.masked(200, j));
        }
    }
}
