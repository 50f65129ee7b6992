//! Lax matrices `U`, `V` for any component count and finite-difference residual
//! engines (zero-curvature and PDE) for sampled candidate solutions.
//!
//! `U = (i/2) lambda sigma3 + i Q` and `V = -(i/2)(eps lambda^3 + lambda^2) sigma3 + G` with
//!
//! ```text
//! G = -i eps lambda^2 Q + lambda (i eps Q^2 sigma3 - eps sigma3 Q_x - i Q)
//!     - sigma3 Q_x + i eps Q_xx + i g Q^2 sigma3 + 2 i eps Q^3 + eps (Q_x Q - Q Q_x)
//! ```
//!
//! where the printed coefficient is `g = eps` ([`GForm::AsPrinted`]). Only `g = 1`
//! ([`GForm::Repaired`]) cancels the diagonal of the compatibility condition, so both
//! are available and the residual engines measure which one vanishes.
//!
//! The `t`-part sign follows the scalar Lax pair; the multi-component variant in the
//! source writes `+(i/2)(eps lambda^3 + lambda^2) sigma3`, which contradicts the soliton
//! phase and is treated as a typo.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::types::{Complex, FieldGrid, HirotaParams, Reduction, I};

/// `Q = [[0, -q^T], [kappa q^*, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialMatrix {
    pub q: CMatrix,
    pub sigma3: CMatrix,
}

impl PotentialMatrix {
    pub fn components(&self) -> usize {
        self.q.nrows() - 1
    }
}

/// The printed potential (`Q^dagger = -Q`).
pub fn build_q(q: &[Complex]) -> PotentialMatrix {
    build_q_reduced(q, Reduction::Defocusing)
}

pub fn build_q_reduced(q: &[Complex], reduction: Reduction) -> PotentialMatrix {
    let c = q.len();
    let kappa = reduction.kappa();
    let mut m = CMatrix::zeros(c + 1, c + 1);
    for (l, z) in q.iter().enumerate() {
        m[(0, l + 1)] = -z;
        m[(l + 1, 0)] = kappa * z.conj();
    }
    PotentialMatrix {
        q: m,
        sigma3: linalg::sigma3(c),
    }
}

/// Same block structure as [`build_q_reduced`] but with an independent lower block,
/// for derivative matrices where `r_x = kappa q_x^*` etc.
fn matrix_from(q: &[Complex], reduction: Reduction) -> CMatrix {
    build_q_reduced(q, reduction).q
}

/// `U = (i/2) lambda sigma3 + i Q`.
pub fn build_u(lambda: Complex, q: &PotentialMatrix) -> CMatrix {
    &q.sigma3 * (0.5 * I * lambda) + &q.q * I
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GForm {
    /// `i eps Q^2 sigma3` in the `lambda^0` part of `G`.
    AsPrinted,
    /// `i Q^2 sigma3` in the `lambda^0` part of `G`.
    Repaired,
}

/// `V` with the printed `G`.
pub fn build_v(
    lambda: Complex,
    q: &PotentialMatrix,
    qx: &PotentialMatrix,
    qxx: &PotentialMatrix,
    epsilon: f64,
) -> CMatrix {
    build_v_with(lambda, &q.q, &qx.q, &qxx.q, epsilon, GForm::AsPrinted)
}

pub fn build_v_with(
    lambda: Complex,
    q: &CMatrix,
    qx: &CMatrix,
    qxx: &CMatrix,
    epsilon: f64,
    form: GForm,
) -> CMatrix {
    let n = q.nrows();
    let s3 = linalg::sigma3(n - 1);
    let ie = I * epsilon;
    let q2 = q * q;
    let q2s = &q2 * &s3;
    let s3qx = &s3 * qx;
    let l2 = lambda * lambda;
    let quad = match form {
        GForm::AsPrinted => ie,
        GForm::Repaired => I,
    };
    let g = q * (-ie * l2) + (&q2s * ie - &s3qx * Complex::new(epsilon, 0.0) - q * I) * lambda - &s3qx
        + qxx * ie
        + &q2s * quad
        + &q2 * q * (2.0 * ie)
        + (qx * q - q * qx) * Complex::new(epsilon, 0.0);
    &s3 * (-0.5 * I * (epsilon * l2 * lambda + l2)) + g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// `U_t - V_x + [U, V]`, the compatibility of `psi_x = U psi`, `psi_t = V psi`.
    UtMinusVx,
    /// `U_x - V_t + [U, V]`, as printed.
    UxMinusVt,
}

/// Coefficient of `q_xxx` inside the `i eps [...]` bracket of the PDE.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThirdOrderForm {
    /// `k1 q_xxx`.
    AsPrinted,
    /// `i k1 q_xxx`: the only choice for which the `eps` terms share one phase.
    Repaired,
}

/// Convention set under which the residual engines are run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaxConventions {
    pub ordering: Ordering,
    pub g_form: GForm,
    pub third_order: ThirdOrderForm,
}

impl LaxConventions {
    pub const AS_PRINTED: LaxConventions = LaxConventions {
        ordering: Ordering::UxMinusVt,
        g_form: GForm::AsPrinted,
        third_order: ThirdOrderForm::AsPrinted,
    };

    pub fn all() -> Vec<LaxConventions> {
        let mut out = Vec::new();
        for ordering in [Ordering::UtMinusVx, Ordering::UxMinusVt] {
            for g_form in [GForm::AsPrinted, GForm::Repaired] {
                for third_order in [ThirdOrderForm::AsPrinted, ThirdOrderForm::Repaired] {
                    out.push(LaxConventions {
                        ordering,
                        g_form,
                        third_order,
                    });
                }
            }
        }
        out
    }
}

/// Conventions under which dressed solitons pass both residual engines at order 2.
/// Determined by the convention sweep in the acceptance suite.
pub const PINNED_CONVENTIONS: LaxConventions = LaxConventions {
    ordering: Ordering::UtMinusVx,
    g_form: GForm::Repaired,
    third_order: ThirdOrderForm::Repaired,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    T,
}

/// Central difference of formal order 2. Stencil widths 3, 3, 5 for derivative
/// orders 1, 2, 3. Nodes without a full unmasked stencil are masked in the output.
pub fn finite_diff(field: &FieldGrid, axis: Axis, order: u8) -> Result<FieldGrid> {
    let g = field.grid;
    let (n, h) = match axis {
        Axis::X => (g.nx, g.hx()),
        Axis::T => (g.nt, g.ht()),
    };
    let half = match order {
        1 | 2 => 1,
        3 => 2,
        _ => {
            return Err(Error::Dimension(format!(
                "derivative order must be 1, 2 or 3, got {order}"
            )))
        }
    };
    if n < 2 * half + 1 {
        return Err(Error::GridTooCoarse(format!(
            "{axis:?}-derivative of order {order} needs at least {} points, have {n}",
            2 * half + 1
        )));
    }
    let weights: &[f64] = match order {
        1 => &[-0.5, 0.0, 0.5],
        2 => &[1.0, -2.0, 1.0],
        _ => &[-0.5, 1.0, 0.0, -1.0, 0.5],
    };
    let scale = 1.0 / h.powi(order as i32);
    let c = field.components;
    let mut out = FieldGrid::zeros(g, c, field.reduction);
    for j in 0..g.nt {
        for i in 0..g.nx {
            let pos = match axis {
                Axis::X => i,
                Axis::T => j,
            };
            let node = out.node(i, j);
            if pos < half || pos + half >= n {
                out.pole_mask[node] = true;
                continue;
            }
            let at = |k: usize| match axis {
                Axis::X => (pos + k - half, j),
                Axis::T => (i, pos + k - half),
            };
            if (0..weights.len()).any(|k| {
                let (a, b) = at(k);
                field.masked(a, b)
            }) {
                out.pole_mask[node] = true;
                continue;
            }
            for l in 0..c {
                let mut acc = Complex::new(0.0, 0.0);
                for (k, w) in weights.iter().enumerate() {
                    if *w != 0.0 {
                        let (a, b) = at(k);
                        acc += *w * field.get(a, b, l);
                    }
                }
                *out.get_mut(i, j, l) = acc * scale;
            }
        }
    }
    Ok(out)
}

/// Grid norms of a residual field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    #[serde(rename = "max")]
    pub max_norm: f64,
    #[serde(rename = "l2")]
    pub l2_norm: f64,
    pub hx: f64,
    pub ht: f64,
    #[serde(rename = "order")]
    pub convergence_order: Option<f64>,
    pub lambda: Option<Complex>,
}

impl ResidualReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

struct Accumulator {
    max: f64,
    sum_sq: f64,
    count: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            max: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.max = self.max.max(v);
        self.sum_sq += v * v;
        self.count += 1;
    }

    fn merge(mut self, other: Accumulator) -> Self {
        self.max = self.max.max(other.max);
        self.sum_sq += other.sum_sq;
        self.count += other.count;
        self
    }

    fn report(&self, hx: f64, ht: f64, lambda: Option<Complex>) -> ResidualReport {
        ResidualReport {
            max_norm: self.max,
            l2_norm: (self.sum_sq * hx * ht.max(f64::MIN_POSITIVE)).sqrt(),
            hx,
            ht,
            convergence_order: None,
            lambda,
        }
    }
}

/// Residual of the Hirota system with the printed third-order term.
pub fn pde_residual(field: &FieldGrid, params: &HirotaParams) -> Result<ResidualReport> {
    pde_residual_with(field, params, ThirdOrderForm::AsPrinted)
}

/// Residual of
///
/// ```text
/// k1 q_t + 2 A1 k1 q_xx + 4 k1^3 A1 kappa S q
///   + i eps [tau k1 q_xxx + 3 i k1^3 kappa S q_x + 3 i k1^3 kappa q (q^dagger q_x)]
/// ```
///
/// per component, with `S = sum_j |q_j|^2`, `kappa` from the field's reduction and
/// `tau = 1` (as printed) or `tau = i` (repaired). Interior unmasked nodes only.
pub fn pde_residual_with(
    field: &FieldGrid,
    params: &HirotaParams,
    third: ThirdOrderForm,
) -> Result<ResidualReport> {
    let g = field.grid;
    if g.nx < 7 || g.nt < 3 {
        return Err(Error::GridTooCoarse(format!(
            "pde residual needs nx >= 7 and nt >= 3, have {} x {}",
            g.nx, g.nt
        )));
    }
    check_components(field, params)?;
    let qt = finite_diff(field, Axis::T, 1)?;
    let qx = finite_diff(field, Axis::X, 1)?;
    let qxx = finite_diff(field, Axis::X, 2)?;
    let qxxx = finite_diff(field, Axis::X, 3)?;

    let k1 = params.k1;
    let k13 = k1 * k1 * k1;
    let kappa = field.reduction.kappa();
    let ie = I * params.epsilon;
    let tau = match third {
        ThirdOrderForm::AsPrinted => Complex::new(1.0, 0.0),
        ThirdOrderForm::Repaired => I,
    };
    let c = field.components;

    let acc = (0..g.nt)
        .into_par_iter()
        .map(|j| {
            let mut acc = Accumulator::new();
            for i in 0..g.nx {
                if field.masked(i, j)
                    || qt.masked(i, j)
                    || qx.masked(i, j)
                    || qxx.masked(i, j)
                    || qxxx.masked(i, j)
                {
                    continue;
                }
                let q = field.at(i, j);
                let dx = qx.at(i, j);
                let s: f64 = q.iter().map(|z| z.norm_sqr()).sum();
                let cross: Complex = q.iter().zip(dx).map(|(a, b)| a.conj() * b).sum();
                let mut sq = 0.0;
                for l in 0..c {
                    let r = k1 * qt.get(i, j, l)
                        + 2.0 * params.a1 * k1 * qxx.get(i, j, l)
                        + 4.0 * k13 * params.a1 * kappa * s * q[l]
                        + ie * (tau * k1 * qxxx.get(i, j, l)
                            + 3.0 * I * k13 * kappa * s * dx[l]
                            + 3.0 * I * k13 * kappa * q[l] * cross);
                    sq += r.norm_sqr();
                }
                acc.push(sq.sqrt());
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        // sequential merge keeps the floating-point sum independent of scheduling
        .fold(Accumulator::new(), Accumulator::merge);
    if acc.count == 0 {
        return Err(Error::GridTooCoarse("no interior unmasked nodes".into()));
    }
    Ok(acc.report(g.hx(), g.ht(), None))
}

fn check_components(field: &FieldGrid, params: &HirotaParams) -> Result<()> {
    if field.components != params.components {
        return Err(Error::Dimension(format!(
            "field has {} components, parameters declare {}",
            field.components, params.components
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurvatureReport {
    pub per_lambda: Vec<ResidualReport>,
    pub worst: ResidualReport,
}

/// Zero-curvature residual with the printed `G`.
pub fn zero_curvature_residual(
    field: &FieldGrid,
    params: &HirotaParams,
    lambda_samples: &[Complex],
    ordering: Ordering,
) -> Result<ZeroCurvatureReport> {
    zero_curvature_residual_with(field, params, lambda_samples, ordering, GForm::AsPrinted)
}

/// Max-norm over entries of `U_t - V_x + [U, V]` (or `U_x - V_t + [U, V]`), with
/// `Q_x`, `Q_xx` taken from central differences of the sampled field.
pub fn zero_curvature_residual_with(
    field: &FieldGrid,
    params: &HirotaParams,
    lambda_samples: &[Complex],
    ordering: Ordering,
    g_form: GForm,
) -> Result<ZeroCurvatureReport> {
    let g = field.grid;
    if g.nx < 5 || g.nt < 5 {
        return Err(Error::GridTooCoarse(format!(
            "zero-curvature residual needs nx, nt >= 5, have {} x {}",
            g.nx, g.nt
        )));
    }
    if lambda_samples.is_empty() {
        return Err(Error::Dimension("no lambda samples".into()));
    }
    check_components(field, params)?;
    let red = field.reduction;
    let qx = finite_diff(field, Axis::X, 1)?;
    let qxx = finite_diff(field, Axis::X, 2)?;
    let qt = finite_diff(field, Axis::T, 1)?;
    let eps = params.epsilon;
    let (hx, ht) = (g.hx(), g.ht());

    let per_lambda: Vec<ResidualReport> = lambda_samples
        .par_iter()
        .map(|&lambda| {
            // V on every node where Q_xx is available
            let v: Vec<Option<CMatrix>> = (0..g.len())
                .map(|node| {
                    let (i, j) = (node % g.nx, node / g.nx);
                    if field.masked(i, j) || qx.masked(i, j) || qxx.masked(i, j) {
                        return None;
                    }
                    Some(build_v_with(
                        lambda,
                        &matrix_from(field.at(i, j), red),
                        &matrix_from(qx.at(i, j), red),
                        &matrix_from(qxx.at(i, j), red),
                        eps,
                        g_form,
                    ))
                })
                .collect();
            let mut acc = Accumulator::new();
            for j in 0..g.nt {
                for i in 0..g.nx {
                    let node = j * g.nx + i;
                    let Some(v0) = &v[node] else { continue };
                    let (dq, dv) = match ordering {
                        Ordering::UtMinusVx => {
                            if i == 0 || i + 1 == g.nx || qt.masked(i, j) {
                                continue;
                            }
                            let (Some(a), Some(b)) = (&v[node - 1], &v[node + 1]) else {
                                continue;
                            };
                            (qt.at(i, j), (b - a) / Complex::new(2.0 * hx, 0.0))
                        }
                        Ordering::UxMinusVt => {
                            if j == 0 || j + 1 == g.nt {
                                continue;
                            }
                            let (Some(a), Some(b)) = (&v[node - g.nx], &v[node + g.nx]) else {
                                continue;
                            };
                            (qx.at(i, j), (b - a) / Complex::new(2.0 * ht, 0.0))
                        }
                    };
                    let u = build_u(lambda, &build_q_reduced(field.at(i, j), red));
                    let r = matrix_from(dq, red) * I - dv + linalg::commutator(&u, v0);
                    acc.push(linalg::max_abs(&r));
                }
            }
            acc.report(hx, ht, Some(lambda))
        })
        .collect();
    let worst = per_lambda
        .iter()
        .max_by(|a, b| a.max_norm.total_cmp(&b.max_norm))
        .cloned()
        .expect("at least one lambda sample");
    Ok(ZeroCurvatureReport { per_lambda, worst })
}

/// Observed convergence order from reports on successively refined grids:
/// least-squares slope of `ln max` against `ln hx`. `None` with fewer than two levels.
pub fn convergence_order(reports: &[ResidualReport]) -> Option<f64> {
    if reports.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.hx.ln(), r.max_norm.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Pairwise orders `log2(e_k / e_{k+1})` for halving refinements.
pub fn pairwise_orders(reports: &[ResidualReport]) -> Vec<f64> {
    reports
        .windows(2)
        .map(|w| (w[0].max_norm / w[1].max_norm).ln() / (w[0].hx / w[1].hx).ln())
        .collect()
}

/// Attaches the fitted order to the finest report.
pub fn attach_order(mut reports: Vec<ResidualReport>) -> Vec<ResidualReport> {
    let order = convergence_order(&reports);
    if let Some(last) = reports.last_mut() {
        last.convergence_order = order;
    }
    reports
}
