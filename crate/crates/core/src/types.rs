//! Domain types shared by every module: spectral data, grids, sampled fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

pub const I: Complex = Complex::new(0.0, 1.0);

/// Coefficients of the coupled Hirota system and the number of field components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HirotaParams {
    /// Strength of the third-order dispersion / self-steepening terms.
    pub epsilon: f64,
    pub k1: Complex,
    pub a1: Complex,
    pub components: usize,
}

impl HirotaParams {
    /// `k1 = i, A1 = i/2`, the preset the Lax pair is written for.
    pub fn dark(epsilon: f64, components: usize) -> Self {
        Self {
            epsilon,
            k1: I,
            a1: Complex::new(0.0, 0.5),
            components,
        }
    }

    /// `k1 = 1, A1 = -i/2`.
    pub fn bright(epsilon: f64, components: usize) -> Self {
        Self {
            epsilon,
            k1: Complex::new(1.0, 0.0),
            a1: Complex::new(0.0, -0.5),
            components,
        }
    }
}

/// A zero `lambda` of `s11` in the upper half-plane together with the tail of
/// its kernel vector `v0 = [1, m, n, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint {
    pub lambda: Complex,
    pub norm_consts: Vec<Complex>,
}

impl SpectralPoint {
    pub fn new(lambda: Complex, norm_consts: Vec<Complex>) -> Self {
        Self {
            lambda,
            norm_consts,
        }
    }

    /// `sum_l |m_l|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.norm_consts.iter().map(|m| m.norm_sqr()).sum()
    }
}

/// Sign of the `e^{-(theta_j^* + theta_k)}` term in the dressing matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// Minus sign, as printed. Singular csch-type solitons.
    AsPrinted,
    /// Plus sign. Bounded sech-type solitons.
    Regularized,
}

impl SignConvention {
    /// `-1` for `AsPrinted`, `+1` for `Regularized`.
    pub fn sign(self) -> f64 {
        match self {
            SignConvention::AsPrinted => -1.0,
            SignConvention::Regularized => 1.0,
        }
    }

    /// Potential reduction the dressed fields belong to.
    pub fn reduction(self) -> Reduction {
        match self {
            SignConvention::AsPrinted => Reduction::Defocusing,
            SignConvention::Regularized => Reduction::Focusing,
        }
    }
}

/// How the lower-left block of `Q` is tied to `q`.
///
/// `Defocusing` is the printed potential `Q = [[0, -q^T], [q^*, 0]]`
/// (`Q^dagger = -Q`). `Focusing` flips the lower block, `Q = [[0, -q^T], [-q^*, 0]]`,
/// which is the reduction the regularized dressing produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    Defocusing,
    Focusing,
}

impl Reduction {
    /// `kappa` in `r = kappa * q^*`.
    pub fn kappa(self) -> f64 {
        match self {
            Reduction::Defocusing => 1.0,
            Reduction::Focusing => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonSpec {
    pub params: HirotaParams,
    pub points: Vec<SpectralPoint>,
    pub sign_convention: SignConvention,
}

impl SolitonSpec {
    pub fn new(params: HirotaParams, points: Vec<SpectralPoint>, sign_convention: SignConvention) -> Self {
        Self {
            params,
            points,
            sign_convention,
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn components(&self) -> usize {
        self.params.components
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn reduction(&self) -> Reduction {
        self.sign_convention.reduction()
    }

    pub fn with_convention(&self, sign_convention: SignConvention) -> Self {
        Self {
            sign_convention,
            ..self.clone()
        }
    }

    pub fn from_document(doc: SpecDocument) -> Self {
        let params = HirotaParams {
            epsilon: doc.epsilon,
            k1: doc.k1,
            a1: doc.a1,
            components: doc.components,
        };
        let points = doc
            .points
            .into_iter()
            .map(|p| SpectralPoint::new(p.lambda, p.norm))
            .collect();
        Self::new(params, points, doc.convention)
    }

    pub fn to_document(&self) -> SpecDocument {
        SpecDocument {
            epsilon: self.params.epsilon,
            k1: self.params.k1,
            a1: self.params.a1,
            components: self.params.components,
            convention: self.sign_convention,
            points: self
                .points
                .iter()
                .map(|p| PointDocument {
                    lambda: p.lambda,
                    norm: p.norm_consts.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str::<SpecDocument>(text).map(Self::from_document)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("spec document serializes")
    }
}

fn default_k1() -> Complex {
    I
}

fn default_a1() -> Complex {
    Complex::new(0.0, 0.5)
}

/// JSON form of a [`SolitonSpec`]. Complex numbers are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub epsilon: f64,
    #[serde(default = "default_k1")]
    pub k1: Complex,
    #[serde(rename = "A1", default = "default_a1")]
    pub a1: Complex,
    pub components: usize,
    pub convention: SignConvention,
    pub points: Vec<PointDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDocument {
    pub lambda: Complex,
    pub norm: Vec<Complex>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotUpperHalfPlane { index: usize },
    DuplicateLambda { first: usize, second: usize },
    ZeroNormConstants { index: usize },
    ComponentMismatch { index: usize, expected: usize, found: usize },
    NoComponents,
    Empty,
    NonFinite { index: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotUpperHalfPlane { index } => {
                write!(f, "points[{index}].lambda: spectral point not in upper half-plane")
            }
            Violation::DuplicateLambda { first, second } => write!(
                f,
                "points[{first}] and points[{second}] share lambda: simple-zeros assumption broken"
            ),
            Violation::ZeroNormConstants { index } => {
                write!(f, "points[{index}].norm: all normalization constants are zero")
            }
            Violation::ComponentMismatch {
                index,
                expected,
                found,
            } => write!(
                f,
                "points[{index}].norm: expected {expected} constants (components), found {found}"
            ),
            Violation::NoComponents => write!(f, "components: must be at least 1"),
            Violation::Empty => write!(f, "points: at least one spectral point is required"),
            Violation::NonFinite { index } => write!(f, "points[{index}]: non-finite value"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msg = self
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidSpec(msg))
        }
    }
}

/// Rectangular space-time sampling `[x0, x1] x [t0, t1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(x0: f64, x1: f64, nx: usize, t0: f64, t1: f64, nt: usize) -> Result<Self> {
        let g = Self {
            x0,
            x1,
            nx,
            t0,
            t1,
            nt,
        };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.nx < 2 || self.nt < 1 {
            return Err(Error::GridTooCoarse(format!(
                "need nx >= 2 and nt >= 1, got nx = {}, nt = {}",
                self.nx, self.nt
            )));
        }
        if !(self.x1 > self.x0) || !(self.t1 >= self.t0) {
            return Err(Error::InvalidSpec(format!(
                "grid bounds must satisfy x1 > x0 and t1 >= t0 (got [{}, {}] x [{}, {}])",
                self.x0, self.x1, self.t0, self.t1
            )));
        }
        if self.nt == 1 && self.t1 != self.t0 {
            return Err(Error::InvalidSpec("nt = 1 requires t1 == t0".into()));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        if self.nt > 1 {
            (self.t1 - self.t0) / (self.nt - 1) as f64
        } else {
            0.0
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x1
        } else {
            self.x0 + i as f64 * self.hx()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if self.nt > 1 && j + 1 == self.nt {
            self.t1
        } else {
            self.t0 + j as f64 * self.ht()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Same box with both spacings halved `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        Self {
            nx: (self.nx - 1) * f + 1,
            nt: if self.nt > 1 { (self.nt - 1) * f + 1 } else { 1 },
            ..*self
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complex envelopes `q_l(x_i, t_j)` on a [`GridSpec`].
///
/// `pole_mask[node]` is true where the sample must not be used: a dressing
/// singularity for generated fields, or a node outside the stencil interior
/// for derivative fields.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub grid: GridSpec,
    pub components: usize,
    pub reduction: Reduction,
    values: Vec<Complex>,
    pub pole_mask: Vec<bool>,
}

impl FieldGrid {
    pub fn zeros(grid: GridSpec, components: usize, reduction: Reduction) -> Self {
        Self {
            grid,
            components,
            reduction,
            values: vec![Complex::new(0.0, 0.0); grid.len() * components],
            pole_mask: vec![false; grid.len()],
        }
    }

    pub fn from_fn<F>(grid: GridSpec, components: usize, reduction: Reduction, f: F) -> Self
    where
        F: Fn(f64, f64, usize) -> Complex,
    {
        let mut field = Self::zeros(grid, components, reduction);
        for j in 0..grid.nt {
            let t = grid.t(j);
            for i in 0..grid.nx {
                let x = grid.x(i);
                for l in 0..components {
                    *field.get_mut(i, j, l) = f(x, t, l);
                }
            }
        }
        field
    }

    pub(crate) fn from_parts(
        grid: GridSpec,
        components: usize,
        reduction: Reduction,
        values: Vec<Complex>,
        pole_mask: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.len() * components);
        debug_assert_eq!(pole_mask.len(), grid.len());
        Self {
            grid,
            components,
            reduction,
            values,
            pole_mask,
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> Complex {
        self.values[self.node(i, j) * self.components + l]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize, l: usize) -> &mut Complex {
        let k = self.node(i, j) * self.components + l;
        &mut self.values[k]
    }

    /// All components at one node.
    pub fn at(&self, i: usize, j: usize) -> &[Complex] {
        let k = self.node(i, j) * self.components;
        &self.values[k..k + self.components]
    }

    pub fn masked(&self, i: usize, j: usize) -> bool {
        self.pole_mask[self.node(i, j)]
    }

    pub fn mask_count(&self) -> usize {
        self.pole_mask.iter().filter(|m| **m).count()
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex] {
        &mut self.values
    }

    /// Largest `|q_l|` over unmasked nodes, per component.
    pub fn peak_amplitudes(&self) -> Vec<f64> {
        let mut peaks = vec![0.0f64; self.components];
        for node in 0..self.grid.len() {
            if self.pole_mask[node] {
                continue;
            }
            for (l, p) in peaks.iter_mut().enumerate() {
                *p = p.max(self.values[node * self.components + l].norm());
            }
        }
        peaks
    }

    /// Total `|q|` at one node.
    pub fn intensity(&self, i: usize, j: usize) -> f64 {
        self.at(i, j).iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }
}
