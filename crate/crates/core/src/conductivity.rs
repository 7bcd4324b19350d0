//! Hydraulic conductivity tensors and scalar/vector source fields.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::random_field::{Draw, RandomFieldSpec};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> Sym2 + Send + Sync>;

pub fn zero_scalar() -> ScalarField {
    Arc::new(|_| 0.0)
}

pub fn zero_vector() -> VectorField {
    Arc::new(|_| [0.0, 0.0])
}

/// Symmetric 2x2 tensor stored as `[xx, xy, yy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2(pub [f64; 3]);

impl Sym2 {
    pub const ZERO: Sym2 = Sym2([0.0, 0.0, 0.0]);

    pub fn diag(a: f64, b: f64) -> Self {
        Sym2([a, 0.0, b])
    }

    pub fn iso(a: f64) -> Self {
        Sym2([a, 0.0, a])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let [a, b, c] = self.0;
        [a * v[0] + b * v[1], b * v[0] + c * v[1]]
    }

    pub fn quad(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let w = self.apply(u);
        w[0] * v[0] + w[1] * v[1]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [a, b, c] = self.0;
        let m = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (m - r, m + r)
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let [a, b, c] = self.0;
        let det = a * c - b * b;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Sym2([c / det, -b / det, a / det]))
    }

    pub fn is_spd(&self) -> bool {
        let [a, b, c] = self.0;
        a > 0.0 && a * c - b * b > 0.0 && a.is_finite() && b.is_finite() && c.is_finite()
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Spectral radius.
    pub fn max_abs_eigenvalue(&self) -> f64 {
        let (l0, l1) = self.eigenvalues();
        l0.abs().max(l1.abs())
    }
}

/// Conductivity tensor `K` as a function of position.
#[derive(Clone)]
pub enum Conductivity {
    /// Constant diagonal tensor.
    Diagonal { k11: f64, k22: f64 },
    /// Isotropic `k(y) = scale * evaluate_k(spec, draw, y)`.
    Random { spec: RandomFieldSpec, draw: Draw, scale: f64 },
    /// Arbitrary tensor field.
    Field(TensorField),
}

impl fmt::Debug for Conductivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diagonal { k11, k22 } => write!(f, "Diagonal({k11}, {k22})"),
            Self::Random { spec, draw, scale } => {
                f.debug_struct("Random").field("spec", spec).field("draw", draw).field("scale", scale).finish()
            }
            Self::Field(_) => write!(f, "Field(..)"),
        }
    }
}

impl Conductivity {
    pub fn isotropic(k: f64) -> Self {
        Self::Diagonal { k11: k, k22: k }
    }

    pub fn tensor(&self, p: Point) -> Sym2 {
        match self {
            Self::Diagonal { k11, k22 } => Sym2::diag(*k11, *k22),
            Self::Random { spec, draw, scale } => Sym2::iso(scale * spec.evaluate(draw, p[1])),
            Self::Field(f) => f(p),
        }
    }

    /// `K^{-1}` at `p`, failing when `K` is not SPD there.
    pub fn inverse(&self, p: Point) -> Result<Sym2> {
        match self {
            Self::Diagonal { k11, k22 } if *k11 > 0.0 && *k22 > 0.0 => Ok(Sym2::diag(1.0 / k11, 1.0 / k22)),
            Self::Random { spec, draw, scale } => {
                let k = scale * spec.evaluate(draw, p[1]);
                if k > 0.0 && k.is_finite() {
                    Ok(Sym2::iso(1.0 / k))
                } else {
                    Err(Error::NotSpd { x: p[0], y: p[1] })
                }
            }
            _ => {
                let k = self.tensor(p);
                if !k.is_spd() {
                    return Err(Error::NotSpd { x: p[0], y: p[1] });
                }
                k.inverse().ok_or(Error::NotSpd { x: p[0], y: p[1] })
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Diagonal { .. })
    }
}
