//! Numerical direct scattering for decaying potentials.
//!
//! Jost solutions solve `J_x = (i/2) lambda [sigma3, J] + i Q J` with `J_- -> I` at the
//! left end and `J_+ -> I` at the right end of the integration window (Eqs. 3.6, 3.11;
//! the `-+` labelling of the source would make `S` trivially the identity). Then
//! `J_- = J_+ A S A^{-1}` with `A = exp((i/2) lambda sigma3 x)` and `S` is read at the
//! right end.
//!
//! For real `lambda` the full matrices are integrated in the interaction picture
//! `M = A^{-1} J A`, which is constant wherever `Q` vanishes. For complex `lambda`
//! only the columns of `J` (and rows of `J^{-1}`) that are bounded in the requested
//! half-plane are integrated; the remaining entries are reported as NaN.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressing;
use crate::error::{Error, Result};
use crate::laxpair::ResidualReport;
use crate::linalg::{self, CMatrix};
use crate::ode::{self, Tolerance};
use crate::types::{Complex, FieldGrid, Reduction, SignConvention, SolitonSpec, I};

/// `|q|` at both window ends must stay below this fraction of the peak.
pub const DECAY_TOL: f64 = 1e-10;

/// A potential `q(x)` at fixed time on an integration window.
pub trait Potential: Sync {
    fn components(&self) -> usize;
    fn reduction(&self) -> Reduction;
    /// Increasing output abscissae; the first and last are the window ends.
    fn nodes(&self) -> &[f64];
    fn eval(&self, x: f64, out: &mut [Complex]);

    fn domain(&self) -> (f64, f64) {
        let xs = self.nodes();
        (xs[0], xs[xs.len() - 1])
    }
}

fn uniform_nodes(x0: f64, x1: f64, nx: usize) -> Result<Vec<f64>> {
    if nx < 2 || x1.partial_cmp(&x0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Dimension(format!(
            "window [{x0}, {x1}] with {nx} nodes is empty"
        )));
    }
    let h = (x1 - x0) / (nx - 1) as f64;
    Ok((0..nx)
        .map(|i| if i + 1 == nx { x1 } else { x0 + h * i as f64 })
        .collect())
}

/// One time slice of a [`FieldGrid`], interpolated with centred 6-point Lagrange
/// polynomials between the samples.
#[derive(Clone, Debug)]
pub struct SampledPotential {
    xs: Vec<f64>,
    values: Vec<Complex>,
    components: usize,
    reduction: Reduction,
    h: f64,
}

const INTERP_POINTS: usize = 6;

impl SampledPotential {
    pub fn from_field(field: &FieldGrid, j: usize) -> Result<Self> {
        let g = field.grid;
        if j >= g.nt {
            return Err(Error::Dimension(format!(
                "time index {j} outside grid with {} slices",
                g.nt
            )));
        }
        if g.nx < INTERP_POINTS {
            return Err(Error::GridTooCoarse(format!(
                "scattering needs at least {INTERP_POINTS} x-samples, have {}",
                g.nx
            )));
        }
        let masked = (0..g.nx).filter(|&i| field.masked(i, j)).count();
        if masked > 0 {
            return Err(Error::DecayViolation(format!(
                "slice t = {} has {masked} pole-masked samples; singular potentials have no scattering data",
                g.t(j)
            )));
        }
        let mut values = Vec::with_capacity(g.nx * field.components);
        for i in 0..g.nx {
            values.extend_from_slice(field.at(i, j));
        }
        Ok(Self {
            xs: g.xs(),
            values,
            components: field.components,
            reduction: field.reduction,
            h: g.hx(),
        })
    }
}

impl Potential for SampledPotential {
    fn components(&self) -> usize {
        self.components
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn nodes(&self) -> &[f64] {
        &self.xs
    }

    fn eval(&self, x: f64, out: &mut [Complex]) {
        let n = self.xs.len();
        let s = (x - self.xs[0]) / self.h;
        let start = (s.floor() as isize - (INTERP_POINTS as isize / 2 - 1))
            .clamp(0, (n - INTERP_POINTS) as isize) as usize;
        out.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        let c = self.components;
        for a in 0..INTERP_POINTS {
            let mut w = 1.0;
            for b in 0..INTERP_POINTS {
                if a != b {
                    w *= (s - (start + b) as f64) / (a as f64 - b as f64);
                }
            }
            let base = (start + a) * c;
            for (l, z) in out.iter_mut().enumerate() {
                *z += self.values[base + l] * w;
            }
        }
    }
}

type PotentialFn = dyn Fn(f64, &mut [Complex]) + Send + Sync;

/// A potential given by a closure.
pub struct FnPotential {
    xs: Vec<f64>,
    components: usize,
    reduction: Reduction,
    f: Box<PotentialFn>,
}

impl FnPotential {
    pub fn new<F>(components: usize, reduction: Reduction, x0: f64, x1: f64, nx: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, &mut [Complex]) + Send + Sync + 'static,
    {
        Ok(Self {
            xs: uniform_nodes(x0, x1, nx)?,
            components,
            reduction,
            f: Box::new(f),
        })
    }

    pub fn zero(components: usize, x0: f64, x1: f64, nx: usize) -> Result<Self> {
        Self::new(components, Reduction::Focusing, x0, x1, nx, |_, out| {
            out.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0))
        })
    }

    /// `q_l = a_l exp(-((x - center) / width)^2)`.
    pub fn gaussian(
        amplitudes: Vec<Complex>,
        center: f64,
        width: f64,
        reduction: Reduction,
        x0: f64,
        x1: f64,
        nx: usize,
    ) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidSpec("gaussian width must be positive".into()));
        }
        let c = amplitudes.len();
        Self::new(c, reduction, x0, x1, nx, move |x, out| {
            let g = (-((x - center) / width).powi(2)).exp();
            for (z, a) in out.iter_mut().zip(&amplitudes) {
                *z = a * g;
            }
        })
    }
}

impl Potential for FnPotential {
    fn components(&self) -> usize {
        self.components
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn nodes(&self) -> &[f64] {
        &self.xs
    }

    fn eval(&self, x: f64, out: &mut [Complex]) {
        (self.f)(x, out)
    }
}

/// A Regularized dressed soliton evaluated exactly at any `x`.
#[derive(Clone, Debug)]
pub struct DressedPotential {
    spec: SolitonSpec,
    t: f64,
    xs: Vec<f64>,
}

impl DressedPotential {
    pub fn new(spec: &SolitonSpec, t: f64, x0: f64, x1: f64, nx: usize) -> Result<Self> {
        if spec.sign_convention != SignConvention::Regularized {
            return Err(Error::DecayViolation(
                "as-printed solitons are singular; scattering needs the regularized convention".into(),
            ));
        }
        Ok(Self {
            spec: spec.clone(),
            t,
            xs: uniform_nodes(x0, x1, nx)?,
        })
    }

    /// Window chosen by [`decay_window`] with node spacing close to `hx`.
    pub fn auto(spec: &SolitonSpec, t: f64, hx: f64) -> Result<Self> {
        let (x0, x1) = decay_window(spec, t, DECAY_TOL * 1e-2)?;
        let nx = ((x1 - x0) / hx).ceil() as usize + 1;
        Self::new(spec, t, x0, x1, nx)
    }
}

impl Potential for DressedPotential {
    fn components(&self) -> usize {
        self.spec.components()
    }

    fn reduction(&self) -> Reduction {
        self.spec.reduction()
    }

    fn nodes(&self) -> &[f64] {
        &self.xs
    }

    fn eval(&self, x: f64, out: &mut [Complex]) {
        match dressing::nsoliton_at(&self.spec, x, self.t, 0.0) {
            Ok(e) => out.copy_from_slice(&e.q),
            Err(_) => out.iter_mut().for_each(|z| *z = Complex::new(f64::NAN, f64::NAN)),
        }
    }
}

fn amplitude(q: &[Complex]) -> f64 {
    q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest window `[x0, x1]` (padded by one unit, rounded outward to integers) outside
/// of which `|q(x, t)| < tol * peak`.
pub fn decay_window(spec: &SolitonSpec, t: f64, tol: f64) -> Result<(f64, f64)> {
    let step = 0.05;
    let limit = 4000.0;
    let amp = |x: f64| {
        dressing::nsoliton_at(spec, x, t, 0.0)
            .map(|e| amplitude(&e.q))
            .unwrap_or(f64::INFINITY)
    };
    let mut half = 20.0;
    loop {
        let n = (2.0 * half / step) as usize;
        let samples: Vec<(f64, f64)> = (0..=n)
            .into_par_iter()
            .map(|k| {
                let x = -half + k as f64 * step;
                (x, amp(x))
            })
            .collect();
        let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        if !peak.is_finite() {
            return Err(Error::DecayViolation(
                "potential is singular on the search window".into(),
            ));
        }
        let inside: Vec<f64> = samples
            .iter()
            .filter(|s| s.1 >= tol * peak)
            .map(|s| s.0)
            .collect();
        let (lo, hi) = (inside[0], inside[inside.len() - 1]);
        if lo > -half + 1.0 && hi < half - 1.0 {
            return Ok(((lo - 1.0).floor(), (hi + 1.0).ceil()));
        }
        half *= 2.0;
        if half > limit {
            return Err(Error::DecayViolation(format!(
                "potential does not decay to {tol} x peak within |x| <= {limit}"
            )));
        }
    }
}

/// Checks the window-end decay precondition of every scattering operation.
pub fn check_decay(pot: &dyn Potential, tol: f64) -> Result<()> {
    let c = pot.components();
    let mut buf = vec![Complex::new(0.0, 0.0); c];
    let mut peak: f64 = 0.0;
    for &x in pot.nodes() {
        pot.eval(x, &mut buf);
        let a = amplitude(&buf);
        if !a.is_finite() {
            return Err(Error::DecayViolation(format!(
                "potential is not finite at x = {x}"
            )));
        }
        peak = peak.max(a);
    }
    let (x0, x1) = pot.domain();
    for x in [x0, x1] {
        pot.eval(x, &mut buf);
        let a = amplitude(&buf);
        if a > tol * peak {
            return Err(Error::DecayViolation(format!(
                "|q({x})| = {a:e} exceeds {tol:e} x peak {peak:e}; widen the window"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `J_+ -> I` at the right end.
    Plus,
    /// `J_- -> I` at the left end.
    Minus,
}

/// Columns of `J` on `side` that stay bounded for this `lambda`.
pub fn trusted_columns(side: Side, lambda: Complex, components: usize) -> Vec<bool> {
    let n = components + 1;
    (0..n)
        .map(|j| {
            (0..n).all(|i| {
                let d = lambda.im * (linalg::sigma3_entry(i) - linalg::sigma3_entry(j));
                match side {
                    Side::Minus => d >= 0.0,
                    Side::Plus => d <= 0.0,
                }
            })
        })
        .collect()
}

/// Rows of `J^{-1}` on `side` that stay bounded for this `lambda`.
pub fn trusted_rows(side: Side, lambda: Complex, components: usize) -> Vec<bool> {
    let n = components + 1;
    (0..n)
        .map(|r| {
            (0..n).all(|j| {
                let d = lambda.im * (linalg::sigma3_entry(r) - linalg::sigma3_entry(j));
                match side {
                    Side::Minus => d >= 0.0,
                    Side::Plus => d <= 0.0,
                }
            })
        })
        .collect()
}

/// Jost solution sampled on the potential's nodes (increasing `x`).
#[derive(Clone, Debug, PartialEq)]
pub struct JostSolution {
    pub side: Side,
    pub lambda: Complex,
    pub xs: Vec<f64>,
    /// `J(x_k)`; untrusted columns are NaN.
    pub samples: Vec<CMatrix>,
    /// `J^{-1}(x_k)`; untrusted rows are NaN.
    pub inverse: Vec<CMatrix>,
    pub trusted_cols: Vec<bool>,
    pub trusted_rows: Vec<bool>,
}

impl JostSolution {
    /// `max_x |det J - 1|` (real `lambda` only).
    pub fn det_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|j| (linalg::determinant(j) - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

fn integration_order(xs: &[f64], side: Side) -> Vec<f64> {
    match side {
        Side::Minus => xs.to_vec(),
        Side::Plus => xs.iter().rev().copied().collect(),
    }
}

/// Solves for the Jost solution normalized at the `side` end of the window.
pub fn jost_solve(pot: &dyn Potential, lambda: Complex, side: Side) -> Result<JostSolution> {
    check_decay(pot, DECAY_TOL)?;
    jost_solve_unchecked(pot, lambda, side)
}

fn jost_solve_unchecked(pot: &dyn Potential, lambda: Complex, side: Side) -> Result<JostSolution> {
    if lambda.im == 0.0 {
        jost_real(pot, lambda.re, side)
    } else {
        jost_complex(pot, lambda, side)
    }
}

fn jost_real(pot: &dyn Potential, lambda: f64, side: Side) -> Result<JostSolution> {
    let c = pot.components();
    let n = c + 1;
    let kappa = pot.reduction().kappa();
    let xs = integration_order(pot.nodes(), side);
    let mut y0 = vec![Complex::new(0.0, 0.0); n * n];
    for k in 0..n {
        y0[k * n + k] = Complex::new(1.0, 0.0);
    }
    // M' = B M with B = A^{-1} i Q A; column-major storage y[r + n * col]
    let rhs = |x: f64, y: &[Complex], dy: &mut [Complex]| {
        let mut q = vec![Complex::new(0.0, 0.0); c];
        pot.eval(x, &mut q);
        let ph = Complex::new(0.0, lambda * x).exp();
        for col in 0..n {
            let base = col * n;
            let mut top = Complex::new(0.0, 0.0);
            for k in 1..n {
                top += -I * q[k - 1] * ph * y[base + k];
            }
            dy[base] = top;
            let y0c = y[base];
            for k in 1..n {
                dy[base + k] = I * kappa * q[k - 1].conj() / ph * y0c;
            }
        }
    };
    let out = ode::integrate(rhs, &y0, &xs, Tolerance::default())?;
    let lam = Complex::new(lambda, 0.0);
    let mut samples = Vec::with_capacity(xs.len());
    let mut inverse = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(out) {
        let m = CMatrix::from_column_slice(n, n, &y);
        let a = linalg::phase_matrix(c, lam, *x);
        let ainv = linalg::phase_matrix(c, -lam, *x);
        let j = &a * m * &ainv;
        let jinv = linalg::inverse(&j).ok_or(Error::SingularJost { x: *x })?;
        samples.push(j);
        inverse.push(jinv);
    }
    if side == Side::Plus {
        samples.reverse();
        inverse.reverse();
    }
    Ok(JostSolution {
        side,
        lambda: lam,
        xs: pot.nodes().to_vec(),
        samples,
        inverse,
        trusted_cols: vec![true; n],
        trusted_rows: vec![true; n],
    })
}

fn jost_complex(pot: &dyn Potential, lambda: Complex, side: Side) -> Result<JostSolution> {
    let c = pot.components();
    let n = c + 1;
    let kappa = pot.reduction().kappa();
    let cols: Vec<usize> = trusted_columns(side, lambda, c)
        .iter()
        .enumerate()
        .filter(|(_, t)| **t)
        .map(|(k, _)| k)
        .collect();
    let rows: Vec<usize> = trusted_rows(side, lambda, c)
        .iter()
        .enumerate()
        .filter(|(_, t)| **t)
        .map(|(k, _)| k)
        .collect();
    let xs = integration_order(pot.nodes(), side);
    let blocks = cols.len() + rows.len();
    let mut y0 = vec![Complex::new(0.0, 0.0); blocks * n];
    for (b, &k) in cols.iter().chain(&rows).enumerate() {
        y0[b * n + k] = Complex::new(1.0, 0.0);
    }
    let s = |k: usize| linalg::sigma3_entry(k);
    let half = 0.5 * I * lambda;
    let ncols = cols.len();
    let rhs = |x: f64, y: &[Complex], dy: &mut [Complex]| {
        let mut q = vec![Complex::new(0.0, 0.0); c];
        pot.eval(x, &mut q);
        // column of J: c' = (i/2) lambda (sigma3 - s_j) c + i Q c
        for (b, &j) in cols.iter().enumerate() {
            let v = &y[b * n..(b + 1) * n];
            let d = &mut dy[b * n..(b + 1) * n];
            let mut top = half * (s(0) - s(j)) * v[0];
            for k in 1..n {
                top += -I * q[k - 1] * v[k];
            }
            d[0] = top;
            for k in 1..n {
                d[k] = half * (s(k) - s(j)) * v[k] + I * kappa * q[k - 1].conj() * v[0];
            }
        }
        // row of J^{-1}: r' = (i/2) lambda (s_r - sigma3) r - i r Q
        for (b, &r) in rows.iter().enumerate() {
            let b = ncols + b;
            let v = &y[b * n..(b + 1) * n];
            let d = &mut dy[b * n..(b + 1) * n];
            let mut first = half * (s(r) - s(0)) * v[0];
            for k in 1..n {
                first += -I * v[k] * kappa * q[k - 1].conj();
            }
            d[0] = first;
            for k in 1..n {
                d[k] = half * (s(r) - s(k)) * v[k] + I * v[0] * q[k - 1];
            }
        }
    };
    let out = ode::integrate(rhs, &y0, &xs, Tolerance::default())?;
    let nan = Complex::new(f64::NAN, f64::NAN);
    let mut samples = Vec::with_capacity(xs.len());
    let mut inverse = Vec::with_capacity(xs.len());
    for y in out {
        let mut j = CMatrix::from_element(n, n, nan);
        let mut jinv = CMatrix::from_element(n, n, nan);
        for (b, &col) in cols.iter().enumerate() {
            for k in 0..n {
                j[(k, col)] = y[b * n + k];
            }
        }
        for (b, &row) in rows.iter().enumerate() {
            for k in 0..n {
                jinv[(row, k)] = y[(ncols + b) * n + k];
            }
        }
        samples.push(j);
        inverse.push(jinv);
    }
    if side == Side::Plus {
        samples.reverse();
        inverse.reverse();
    }
    Ok(JostSolution {
        side,
        lambda,
        xs: pot.nodes().to_vec(),
        samples,
        inverse,
        trusted_cols: trusted_columns(side, lambda, c),
        trusted_rows: trusted_rows(side, lambda, c),
    })
}

/// Scattering data at one real `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringRecord {
    pub lambda: f64,
    pub s: CMatrix,
    /// `R = S^{-1}`.
    pub r: CMatrix,
}

impl ScatteringRecord {
    pub fn from_s(lambda: f64, s: CMatrix) -> Result<Self> {
        let r = linalg::inverse(&s).ok_or(Error::SingularJost { x: f64::NAN })?;
        Ok(Self { lambda, s, r })
    }

    pub fn det_error(&self) -> f64 {
        (linalg::determinant(&self.s) - 1.0).norm()
    }

    /// `|r11 s11 + sum_j r1j sj1 - 1|`.
    pub fn identity_error(&self) -> f64 {
        let n = self.s.nrows();
        let sum: Complex = (0..n).map(|k| self.r[(0, k)] * self.s[(k, 0)]).sum();
        (sum - 1.0).norm()
    }

    /// `max |S R - I|`.
    pub fn inverse_error(&self) -> f64 {
        let n = self.s.nrows();
        linalg::max_abs(&(&self.s * &self.r - linalg::identity(n)))
    }
}

/// `S = A^{-1} J_-(x1) A` from a real-`lambda` `J_-`.
pub fn scattering_from_jost(jminus: &JostSolution) -> Result<ScatteringRecord> {
    if jminus.side != Side::Minus || jminus.lambda.im != 0.0 {
        return Err(Error::Dimension(
            "scattering matrix needs J_- at real lambda".into(),
        ));
    }
    let n = jminus.samples[0].nrows();
    let x1 = *jminus.xs.last().expect("non-empty grid");
    let lam = jminus.lambda;
    let a = linalg::phase_matrix(n - 1, lam, x1);
    let ainv = linalg::phase_matrix(n - 1, -lam, x1);
    let s = ainv * jminus.samples.last().expect("non-empty grid") * a;
    ScatteringRecord::from_s(lam.re, s)
}

pub fn scattering_matrix(pot: &dyn Potential, lambda: f64) -> Result<ScatteringRecord> {
    let jm = jost_solve(pot, Complex::new(lambda, 0.0), Side::Minus)?;
    scattering_from_jost(&jm)
}

/// Scattering records over a real sweep, computed in parallel.
pub fn sweep(pot: &dyn Potential, lambdas: &[f64]) -> Result<Vec<ScatteringRecord>> {
    check_decay(pot, DECAY_TOL)?;
    lambdas
        .par_iter()
        .map(|&l| scattering_from_jost(&jost_solve_unchecked(pot, Complex::new(l, 0.0), Side::Minus)?))
        .collect()
}

/// Evenly spaced sweep points, both ends included.
pub fn sweep_points(lmin: f64, lmax: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lmin],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    lmax
                } else {
                    lmin + (lmax - lmin) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// `lambda,re_s11,im_s11,...,re_snn,im_snn,det_err` with one row per record.
pub fn sweep_csv(records: &[ScatteringRecord]) -> String {
    let n = records.first().map_or(0, |r| r.s.nrows());
    let mut out = String::from("lambda");
    for a in 1..=n {
        for b in 1..=n {
            out.push_str(&format!(",re_s{a}{b},im_s{a}{b}"));
        }
    }
    out.push_str(",det_err\n");
    for r in records {
        out.push_str(&r.lambda.to_string());
        for a in 0..n {
            for b in 0..n {
                let z = r.s[(a, b)];
                out.push_str(&format!(",{},{}", z.re, z.im));
            }
        }
        out.push_str(&format!(",{}\n", r.det_error()));
    }
    out
}

/// Sectional solution `P+` or `P-` sampled over the x-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionalSamples {
    pub lambda: Complex,
    pub xs: Vec<f64>,
    pub values: Vec<CMatrix>,
}

fn same_grid(a: &JostSolution, b: &JostSolution) -> Result<()> {
    if a.lambda != b.lambda || a.xs != b.xs {
        return Err(Error::Dimension(
            "Jost solutions belong to different lambda or grids".into(),
        ));
    }
    Ok(())
}

/// `P+ = J+ A S+ A^{-1}` and `P- = A R+ A^{-1} J+^{-1}` (Eqs. 3.15, 3.23), with `S+`
/// keeping the first column of `S` and `R+` the first row of `R`.
pub fn assemble_sectional(
    jplus: &JostSolution,
    jminus: &JostSolution,
    record: &ScatteringRecord,
) -> Result<(SectionalSamples, SectionalSamples)> {
    same_grid(jplus, jminus)?;
    if jplus.side != Side::Plus || jminus.side != Side::Minus {
        return Err(Error::Dimension("expected (J+, J-) in that order".into()));
    }
    let lam = jplus.lambda;
    if lam.im != 0.0 || lam.re != record.lambda {
        return Err(Error::Dimension(
            "sectional assembly needs the record at the same real lambda".into(),
        ));
    }
    let n = record.s.nrows();
    let mut s_plus = linalg::identity(n);
    let mut r_plus = linalg::identity(n);
    for k in 0..n {
        s_plus[(k, 0)] = record.s[(k, 0)];
        r_plus[(0, k)] = record.r[(0, k)];
    }
    let mut plus = Vec::with_capacity(jplus.xs.len());
    let mut minus = Vec::with_capacity(jplus.xs.len());
    for (k, &x) in jplus.xs.iter().enumerate() {
        let a = linalg::phase_matrix(n - 1, lam, x);
        let ainv = linalg::phase_matrix(n - 1, -lam, x);
        plus.push(&jplus.samples[k] * &a * &s_plus * &ainv);
        minus.push(&a * &r_plus * &ainv * &jplus.inverse[k]);
    }
    Ok((
        SectionalSamples {
            lambda: lam,
            xs: jplus.xs.clone(),
            values: plus,
        },
        SectionalSamples {
            lambda: lam,
            xs: jplus.xs.clone(),
            values: minus,
        },
    ))
}

/// Sectional solution off the real axis from the bounded Jost columns/rows:
/// `P+ = ([J-]_1, [J+]_2, ...)` for `Im lambda > 0`, and
/// `P- = (row 1 of J-^{-1}; rows 2.. of J+^{-1})` for `Im lambda < 0`.
pub fn sectional_off_axis(pot: &dyn Potential, lambda: Complex) -> Result<SectionalSamples> {
    if lambda.im == 0.0 {
        return Err(Error::Dimension(
            "use assemble_sectional on the real axis".into(),
        ));
    }
    let jm = jost_solve(pot, lambda, Side::Minus)?;
    let jp = jost_solve_unchecked(pot, lambda, Side::Plus)?;
    let n = pot.components() + 1;
    let values = (0..jm.xs.len())
        .map(|k| {
            let mut p = CMatrix::zeros(n, n);
            if lambda.im > 0.0 {
                for r in 0..n {
                    p[(r, 0)] = jm.samples[k][(r, 0)];
                    for col in 1..n {
                        p[(r, col)] = jp.samples[k][(r, col)];
                    }
                }
            } else {
                for col in 0..n {
                    p[(0, col)] = jm.inverse[k][(0, col)];
                    for r in 1..n {
                        p[(r, col)] = jp.inverse[k][(r, col)];
                    }
                }
            }
            p
        })
        .collect();
    Ok(SectionalSamples {
        lambda,
        xs: jm.xs,
        values,
    })
}

/// Jump matrix `T` of Eq. (3.25) at `x`.
pub fn jump_matrix(record: &ScatteringRecord, x: f64) -> CMatrix {
    let n = record.s.nrows();
    let mut t = linalg::identity(n);
    let e = Complex::new(0.0, record.lambda * x).exp();
    for k in 1..n {
        t[(0, k)] = record.r[(0, k)] / e;
        t[(k, 0)] = record.s[(k, 0)] * e;
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub residual: ResidualReport,
    pub x: f64,
    pub identity_error: f64,
}

/// `||P- P+ - T||` at the grid node nearest to `x` (max-norm; `l2` is Frobenius),
/// together with the scalar identity `r11 s11 + r12 s21 + ... = 1`.
pub fn jump_check(
    pplus: &SectionalSamples,
    pminus: &SectionalSamples,
    record: &ScatteringRecord,
    x: f64,
) -> Result<JumpReport> {
    if pplus.xs != pminus.xs || pplus.lambda != pminus.lambda {
        return Err(Error::Dimension("P+ and P- sampled differently".into()));
    }
    let k = nearest(&pplus.xs, x);
    let xk = pplus.xs[k];
    let d = &pminus.values[k] * &pplus.values[k] - jump_matrix(record, xk);
    let hx = if pplus.xs.len() > 1 {
        pplus.xs[1] - pplus.xs[0]
    } else {
        0.0
    };
    Ok(JumpReport {
        residual: ResidualReport {
            max_norm: linalg::max_abs(&d),
            l2_norm: d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            hx,
            ht: 0.0,
            convergence_order: None,
            lambda: Some(pplus.lambda),
        },
        x: xk,
        identity_error: record.identity_error(),
    })
}

fn nearest(xs: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (k, v) in xs.iter().enumerate() {
        if (v - x).abs() < (xs[best] - x).abs() {
            best = k;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `J^dagger(lambda^*) - Sigma J^{-1}(lambda) Sigma` over both sides and the grid,
    /// restricted to entries that are bounded on both sides of the identity.
    pub jost: ResidualReport,
    /// `S^dagger - Sigma S^{-1} Sigma`, real `lambda` only.
    pub scattering: Option<ResidualReport>,
}

/// `Sigma = sigma3` for the printed (defocusing) potential, `I` for the focusing one.
pub fn involution(reduction: Reduction, components: usize) -> CMatrix {
    match reduction {
        Reduction::Defocusing => linalg::sigma3(components),
        Reduction::Focusing => linalg::identity(components + 1),
    }
}

/// Involution residuals of Eq. (4.2), `J^dagger(lambda^*) = Sigma J^{-1}(lambda) Sigma`.
pub fn symmetry_check(pot: &dyn Potential, lambda: Complex) -> Result<SymmetryReport> {
    check_decay(pot, DECAY_TOL)?;
    let c = pot.components();
    let sigma = involution(pot.reduction(), c);
    let mut acc_max: f64 = 0.0;
    let mut acc_sq = 0.0;
    let mut scattering = None;
    for side in [Side::Minus, Side::Plus] {
        let j = jost_solve_unchecked(pot, lambda, side)?;
        let jc = if lambda.im == 0.0 {
            j.clone()
        } else {
            jost_solve_unchecked(pot, lambda.conj(), side)?
        };
        for k in 0..j.xs.len() {
            let lhs = jc.samples[k].adjoint();
            let rhs = &sigma * &j.inverse[k] * &sigma;
            for r in 0..=c {
                if !(jc.trusted_cols[r] && j.trusted_rows[r]) {
                    continue;
                }
                for col in 0..=c {
                    let e = (lhs[(r, col)] - rhs[(r, col)]).norm();
                    acc_max = acc_max.max(e);
                    acc_sq += e * e;
                }
            }
        }
        if side == Side::Minus && lambda.im == 0.0 {
            let rec = scattering_from_jost(&j)?;
            let d = rec.s.adjoint() - &sigma * &rec.r * &sigma;
            scattering = Some(ResidualReport {
                max_norm: linalg::max_abs(&d),
                l2_norm: d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
                hx: 0.0,
                ht: 0.0,
                convergence_order: None,
                lambda: Some(lambda),
            });
        }
    }
    let xs = pot.nodes();
    let hx = xs[1] - xs[0];
    Ok(SymmetryReport {
        jost: ResidualReport {
            max_norm: acc_max,
            l2_norm: (acc_sq * hx).sqrt(),
            hx,
            ht: 0.0,
            convergence_order: None,
            lambda: Some(lambda),
        },
        scattering,
    })
}

/// Time evolution of Eqs. (3.28)–(3.30): `s1j -> s1j e^{i w t}`, `sj1 -> sj1 e^{-i w t}`,
/// `w = lambda^2 + eps lambda^3`; `R` transforms the same way.
pub fn evolve_scattering(record0: &ScatteringRecord, t: f64, epsilon: f64) -> ScatteringRecord {
    let l = record0.lambda;
    let omega = l * l + epsilon * l * l * l;
    let e = Complex::new(0.0, omega * t).exp();
    let n = record0.s.nrows();
    let mut s = record0.s.clone();
    let mut r = record0.r.clone();
    for k in 1..n {
        s[(0, k)] *= e;
        s[(k, 0)] /= e;
        r[(0, k)] *= e;
        r[(k, 0)] /= e;
    }
    ScatteringRecord { lambda: l, s, r }
}

/// `s11(lambda)` for real `lambda` or `lambda` in the upper half-plane, from the
/// first column of `J_-` at the right end of the window.
pub fn s11(pot: &dyn Potential, lambda: Complex) -> Result<Complex> {
    if lambda.im < 0.0 {
        return Err(Error::Dimension(
            "s11 extends analytically to the upper half-plane only".into(),
        ));
    }
    s11_unchecked(pot, lambda)
}

fn s11_unchecked(pot: &dyn Potential, lambda: Complex) -> Result<Complex> {
    let c = pot.components();
    let n = c + 1;
    let kappa = pot.reduction().kappa();
    let (x0, x1) = pot.domain();
    let mut y0 = vec![Complex::new(0.0, 0.0); n];
    y0[0] = Complex::new(1.0, 0.0);
    let rhs = |x: f64, y: &[Complex], dy: &mut [Complex]| {
        let mut q = vec![Complex::new(0.0, 0.0); c];
        pot.eval(x, &mut q);
        let mut top = Complex::new(0.0, 0.0);
        for k in 1..n {
            top += -I * q[k - 1] * y[k];
        }
        dy[0] = top;
        for k in 1..n {
            dy[k] = I * lambda * y[k] + I * kappa * q[k - 1].conj() * y[0];
        }
    };
    let out = ode::integrate(rhs, &y0, &[x0, x1], Tolerance::default())?;
    Ok(out[1][0])
}

/// Axis-aligned rectangle in the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Self { re0, re1, im0, im1 }
    }

    pub fn size(&self) -> f64 {
        (self.re1 - self.re0).max(self.im1 - self.im0)
    }

    pub fn center(&self) -> Complex {
        Complex::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn contains(&self, z: Complex, margin: f64) -> bool {
        z.re >= self.re0 - margin
            && z.re <= self.re1 + margin
            && z.im >= self.im0 - margin
            && z.im <= self.im1 + margin
    }

    fn corners(&self) -> [Complex; 4] {
        [
            Complex::new(self.re0, self.im0),
            Complex::new(self.re1, self.im0),
            Complex::new(self.re1, self.im1),
            Complex::new(self.re0, self.im1),
        ]
    }

    /// Quadrants split at fraction `f` of each side.
    fn split(&self, f: f64) -> [Rect; 4] {
        let rm = self.re0 + f * (self.re1 - self.re0);
        let im = self.im0 + f * (self.im1 - self.im0);
        [
            Rect::new(self.re0, rm, self.im0, im),
            Rect::new(rm, self.re1, self.im0, im),
            Rect::new(self.re0, rm, im, self.im1),
            Rect::new(rm, self.re1, im, self.im1),
        ]
    }
}

/// Zeros that could not be separated at the minimum rectangle size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCluster {
    pub center: Complex,
    pub multiplicity: i64,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    /// Isolated zeros, refined to ~1e-10.
    pub zeros: Vec<Complex>,
    /// Winding number of `s11` around the search rectangle.
    pub winding: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<ZeroCluster>,
}

impl ZeroReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("zero report serializes")
    }
}

/// Search parameters for [`s11_zeros_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroSearch {
    /// Boundary values below this modulus abort with `ContourThroughZero`.
    pub through_zero: f64,
    /// Rectangles smaller than this holding several zeros are reported as clusters.
    pub min_size: f64,
    /// A rectangle with one zero and at most this size is handed to the secant refiner.
    pub refine_size: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self {
            through_zero: 1e-8,
            min_size: 1e-3,
            refine_size: 0.1,
        }
    }
}

struct S11Cache<'a> {
    pot: &'a dyn Potential,
    cache: RefCell<HashMap<(u64, u64), Complex>>,
}

impl S11Cache<'_> {
    fn eval(&self, z: Complex) -> Result<Complex> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(*v);
        }
        let v = s11_unchecked(self.pot, z)?;
        self.cache.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Evaluates a batch in parallel, filling the cache.
    fn prefetch(&self, zs: &[Complex]) -> Result<()> {
        let missing: Vec<Complex> = {
            let cache = self.cache.borrow();
            zs.iter()
                .copied()
                .filter(|z| !cache.contains_key(&(z.re.to_bits(), z.im.to_bits())))
                .collect()
        };
        let pot = self.pot;
        let vals: Vec<Result<Complex>> = missing
            .par_iter()
            .map(|&z| s11_unchecked(pot, z))
            .collect();
        let mut cache = self.cache.borrow_mut();
        for (z, v) in missing.into_iter().zip(vals) {
            cache.insert((z.re.to_bits(), z.im.to_bits()), v?);
        }
        Ok(())
    }
}

const EDGE_SEGMENTS: usize = 16;
const MAX_PHASE_STEP: f64 = PI / 4.0;

/// Total change of `arg s11` along the positively oriented boundary, in turns.
fn winding_number(f: &S11Cache, rect: &Rect, search: &ZeroSearch) -> Result<i64> {
    let corners = rect.corners();
    let mut pts = Vec::with_capacity(4 * EDGE_SEGMENTS + 1);
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        for k in 0..EDGE_SEGMENTS {
            pts.push(a + (b - a) * (k as f64 / EDGE_SEGMENTS as f64));
        }
    }
    pts.push(corners[0]);
    f.prefetch(&pts)?;
    let min_len = 1e-9 * rect.size().max(1.0);
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += phase_change(f, w[0], w[1], search, min_len, 0)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn phase_change(
    f: &S11Cache,
    a: Complex,
    b: Complex,
    search: &ZeroSearch,
    min_len: f64,
    depth: usize,
) -> Result<f64> {
    let (fa, fb) = (f.eval(a)?, f.eval(b)?);
    for (z, v) in [(a, fa), (b, fb)] {
        if v.norm() < search.through_zero {
            return Err(Error::ContourThroughZero { re: z.re, im: z.im });
        }
    }
    let d = (fb / fa).arg();
    if d.abs() <= MAX_PHASE_STEP {
        return Ok(d);
    }
    if (b - a).norm() < min_len || depth > 40 {
        return Err(Error::ContourThroughZero {
            re: 0.5 * (a.re + b.re),
            im: 0.5 * (a.im + b.im),
        });
    }
    let m = 0.5 * (a + b);
    f.prefetch(&[m])?;
    Ok(phase_change(f, a, m, search, min_len, depth + 1)?
        + phase_change(f, m, b, search, min_len, depth + 1)?)
}

/// Secant iteration from the rectangle centre; `None` if it leaves the rectangle.
fn refine(f: &S11Cache, rect: &Rect) -> Result<Option<Complex>> {
    let mut z0 = rect.center();
    let mut z1 = z0 + Complex::new(1e-3, 1e-3) * rect.size();
    let (mut f0, mut f1) = (f.eval(z0)?, f.eval(z1)?);
    let margin = 0.25 * rect.size();
    for _ in 0..60 {
        if f1 == f0 {
            break;
        }
        let z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
        if !rect.contains(z2, margin) || !z2.is_finite() {
            return Ok(None);
        }
        let step = (z2 - z1).norm();
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f.eval(z1)?;
        if step <= 1e-12 * (1.0 + z1.norm()) {
            break;
        }
    }
    Ok(rect.contains(z1, 1e-9).then_some(z1))
}

const SPLIT_FRACTIONS: [f64; 5] = [0.5, 0.4617, 0.5383, 0.4233, 0.5767];

fn search_rect(
    f: &S11Cache,
    rect: Rect,
    count: i64,
    search: &ZeroSearch,
    report: &mut ZeroReport,
) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    if count == 1 && rect.size() <= search.refine_size {
        if let Some(z) = refine(f, &rect)? {
            report.zeros.push(z);
            return Ok(());
        }
    }
    if rect.size() < search.min_size {
        report.clusters.push(ZeroCluster {
            center: rect.center(),
            multiplicity: count,
            size: rect.size(),
        });
        return Ok(());
    }
    let mut last_err = None;
    for frac in SPLIT_FRACTIONS {
        let quads = rect.split(frac);
        let counts: Result<Vec<i64>> = quads
            .iter()
            .map(|q| winding_number(f, q, search))
            .collect();
        match counts {
            Ok(counts) if counts.iter().sum::<i64>() == count => {
                for (q, n) in quads.iter().zip(counts) {
                    search_rect(f, *q, n, search, report)?;
                }
                return Ok(());
            }
            Ok(_) => continue,
            Err(e @ Error::ContourThroughZero { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    // no clean split: keep the zeros together
    let _ = last_err;
    report.clusters.push(ZeroCluster {
        center: rect.center(),
        multiplicity: count,
        size: rect.size(),
    });
    Ok(())
}

/// Zeros of `s11` inside `region` (upper half-plane) with default search settings.
pub fn s11_zeros(pot: &dyn Potential, region: Rect) -> Result<ZeroReport> {
    s11_zeros_with(pot, region, &ZeroSearch::default())
}

/// Argument-principle count on the boundary, quadrisection, secant refinement.
pub fn s11_zeros_with(pot: &dyn Potential, region: Rect, search: &ZeroSearch) -> Result<ZeroReport> {
    if region.im0 < 0.0 || region.re1 <= region.re0 || region.im1 <= region.im0 {
        return Err(Error::Dimension(format!(
            "search region {region:?} must be a non-empty rectangle in the closed upper half-plane"
        )));
    }
    check_decay(pot, DECAY_TOL)?;
    let f = S11Cache {
        pot,
        cache: RefCell::new(HashMap::new()),
    };
    let winding = winding_number(&f, &region, search)?;
    let mut report = ZeroReport {
        zeros: Vec::new(),
        winding,
        clusters: Vec::new(),
    };
    search_rect(&f, region, winding, search, &mut report)?;
    report
        .zeros
        .sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(report)
}

/// Rectangle enclosing the spectrum of `spec` with unit margins.
pub fn default_region(spec: &SolitonSpec) -> Rect {
    let re = spec.points.iter().map(|p| p.lambda.re);
    let im = spec.points.iter().map(|p| p.lambda.im);
    let re0 = re.clone().fold(f64::INFINITY, f64::min) - 1.0;
    let re1 = re.fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let im_min = im.clone().fold(f64::INFINITY, f64::min);
    let im1 = im.fold(f64::NEG_INFINITY, f64::max) + 1.0;
    Rect::new(re0 + 0.0123, re1 + 0.0123, (0.5 * im_min).min(0.05), im1 + 0.0123)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{HirotaParams, SpectralPoint};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn gaussian() -> FnPotential {
        FnPotential::gaussian(
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            0.0,
            1.0,
            Reduction::Focusing,
            -8.0,
            8.0,
            161,
        )
        .unwrap()
    }

    #[test]
    fn zero_potential_gives_identity() {
        let p = FnPotential::zero(2, -5.0, 5.0, 51).unwrap();
        for lam in [c(1.3, 0.0), c(0.2, 0.7), c(-0.4, -0.3)] {
            for side in [Side::Plus, Side::Minus] {
                let j = jost_solve(&p, lam, side).unwrap();
                for (m, x) in j.samples.iter().zip(&j.xs) {
                    for col in 0..3 {
                        if !j.trusted_cols[col] {
                            continue;
                        }
                        for r in 0..3 {
                            let e = if r == col { 1.0 } else { 0.0 };
                            assert!((m[(r, col)] - e).norm() < 1e-14, "x {x}");
                        }
                    }
                }
            }
        }
        let r = scattering_matrix(&p, 0.7).unwrap();
        assert!(linalg::max_abs(&(r.s - linalg::identity(3))) < 1e-14);
        assert_eq!(s11(&p, c(0.1, 0.5)).unwrap(), c(1.0, 0.0));
        let z = s11_zeros(&p, Rect::new(-1.0, 1.0, 0.05, 1.0)).unwrap();
        assert!(z.zeros.is_empty() && z.winding == 0);
    }

    #[test]
    fn trusted_columns_match_growth_directions() {
        let up = c(0.0, 1.0);
        assert_eq!(trusted_columns(Side::Minus, up, 2), vec![true, false, false]);
        assert_eq!(trusted_columns(Side::Plus, up, 2), vec![false, true, true]);
        assert_eq!(trusted_columns(Side::Minus, up.conj(), 2), vec![false, true, true]);
        assert_eq!(trusted_rows(Side::Minus, up, 2), vec![false, true, true]);
        assert_eq!(trusted_rows(Side::Plus, up, 2), vec![true, false, false]);
        assert_eq!(trusted_columns(Side::Plus, c(1.0, 0.0), 2), vec![true; 3]);
    }

    #[test]
    fn gaussian_jost_has_unit_determinant() {
        let p = gaussian();
        for side in [Side::Plus, Side::Minus] {
            let j = jost_solve(&p, c(1.0, 0.0), side).unwrap();
            assert!(j.det_error() < 1e-9, "{}", j.det_error());
        }
        // J- = J+ A S A^{-1} at every node
        let jm = jost_solve(&p, c(1.0, 0.0), Side::Minus).unwrap();
        let jp = jost_solve(&p, c(1.0, 0.0), Side::Plus).unwrap();
        let rec = scattering_from_jost(&jm).unwrap();
        for k in (0..jm.xs.len()).step_by(20) {
            let a = linalg::phase_matrix(2, c(1.0, 0.0), jm.xs[k]);
            let ai = linalg::phase_matrix(2, c(-1.0, 0.0), jm.xs[k]);
            let d = &jp.samples[k] * a * &rec.s * ai - &jm.samples[k];
            assert!(linalg::max_abs(&d) < 1e-8);
        }
        assert!(linalg::max_abs(&jp.samples[0]) < 10.0);
    }

    #[test]
    fn decay_precondition() {
        let wide = FnPotential::gaussian(
            vec![c(1.0, 0.0)],
            0.0,
            3.0,
            Reduction::Focusing,
            -8.0,
            8.0,
            161,
        )
        .unwrap();
        assert!(matches!(
            jost_solve(&wide, c(1.0, 0.0), Side::Minus),
            Err(Error::DecayViolation(_))
        ));
        let spec = SolitonSpec::new(
            HirotaParams::dark(0.0, 1),
            vec![SpectralPoint::new(c(0.0, 0.5), vec![c(1.0, 0.0)])],
            SignConvention::AsPrinted,
        );
        assert!(matches!(
            DressedPotential::new(&spec, 0.0, -50.0, 50.0, 101),
            Err(Error::DecayViolation(_))
        ));
    }

    #[test]
    fn sampled_interpolation_is_accurate() {
        use crate::types::GridSpec;
        let g = GridSpec::new(-8.0, 8.0, 321, 0.0, 0.0, 1).unwrap();
        let f = FieldGrid::from_fn(g, 1, Reduction::Focusing, |x, _, _| c((-x * x).exp(), 0.0));
        let p = SampledPotential::from_field(&f, 0).unwrap();
        let mut out = [c(0.0, 0.0)];
        for k in 0..997 {
            let x = -7.9 + 15.8 * k as f64 / 996.0;
            p.eval(x, &mut out);
            assert!((out[0].re - (-x * x).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn evolve_is_identity_at_zero_and_unitary() {
        let p = gaussian();
        let r = scattering_matrix(&p, 0.8).unwrap();
        assert_eq!(evolve_scattering(&r, 0.0, 0.3), r);
        let e = evolve_scattering(&r, 2.7, 0.3);
        for k in 1..3 {
            assert!((e.s[(0, k)].norm() - r.s[(0, k)].norm()).abs() < 1e-15);
            assert!((e.s[(k, 0)].norm() - r.s[(k, 0)].norm()).abs() < 1e-15);
        }
        assert_eq!(e.s[(1, 2)], r.s[(1, 2)]);
        assert!(e.inverse_error() < 1e-10);
    }

    #[test]
    fn sweep_csv_header() {
        let p = FnPotential::zero(2, -2.0, 2.0, 11).unwrap();
        let recs = sweep(&p, &sweep_points(-1.0, 1.0, 3)).unwrap();
        let csv = sweep_csv(&recs);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("lambda,re_s11,im_s11,re_s12"));
        assert!(header.ends_with("re_s33,im_s33,det_err"));
        assert_eq!(csv.lines().count(), 4);
    }
}
