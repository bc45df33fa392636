//! Constructive transference between Walsh martingales and trigonometric
//! polynomials on the circle.
//!
//! The pipeline lifts a finite Walsh-Paley martingale to multivariate
//! trigonometric polynomials by replacing each sign coordinate with a
//! Fejér approximation of the square wave sgn(cos 2πθ), collapses the lift
//! onto a single circle variable through a frequency vector n (block k
//! contributing frequencies m₁n₁ + … + m_{k−1}n_{k−1} + j·n_k), runs the
//! circle Poisson semigroup e^{−|ν|t} on the collapsed polynomials, and
//! certifies a choice of lacunary frequencies n_k and cut-off times l_k by
//! absolute coefficient-sum bounds that hold uniformly in every angle
//! variable. On top of the certified selection sit the telescoping
//! estimate, the circle-side q-variation evaluator and the cotype
//! inequality chain report.

mod chain;
mod poly;
mod select;

pub use chain::{
    circle_poisson_vq, cotype_chain_report, ChainParams, ChainReport, LinkReport,
};
pub use poly::{
    build_blocks, fejer_squarewave, lift_error, poisson_flow, walsh_expand, DiagonalPoly,
    MultiTrigPoly, ScalarTrigPoly,
};
pub use select::{
    certificate_grid_check, select_sequences, telescoping_error, ConditionGridCheck,
    SelectionCertificate,
};

use crate::error::Result;
use crate::spaces::{Point, Space};

/// Label recorded in reports for the complexified-norm convention below.
pub const MODULUS_SURROGATE: &str = "concat-lr";

/// A complexified vector: real and imaginary parts in one space. The
/// modulus is the norm of the concatenated pair in the same ℓ^r structure,
/// which for ℓ² is the canonical complexification and for other r an
/// equivalent norm; reports carry the [`MODULUS_SURROGATE`] label.
#[derive(Debug, Clone)]
pub struct CPoint {
    re: Point,
    im: Point,
}

impl CPoint {
    pub fn new(re: Point, im: Point) -> Result<CPoint> {
        crate::spaces::check_same_space(&re, &im)?;
        Ok(CPoint { re, im })
    }

    pub fn from_real(re: Point) -> CPoint {
        let im = Point::zero(re.space());
        CPoint { re, im }
    }

    pub fn zero(space: Space) -> CPoint {
        CPoint {
            re: Point::zero(space),
            im: Point::zero(space),
        }
    }

    pub fn space(&self) -> Space {
        self.re.space()
    }

    pub fn re(&self) -> &Point {
        &self.re
    }

    pub fn im(&self) -> &Point {
        &self.im
    }

    /// Concatenated pair as a single vector in the doubled space; its norm
    /// is the modulus.
    pub fn to_doubled_point(&self) -> Point {
        let mut coords = Vec::with_capacity(2 * self.re.space().dim);
        coords.extend_from_slice(self.re.coords());
        coords.extend_from_slice(self.im.coords());
        Point::new(self.re.space().doubled(), coords).expect("finite coords")
    }

    pub fn modulus(&self) -> f64 {
        self.to_doubled_point().norm()
    }

    pub fn add(&self, other: &CPoint) -> Result<CPoint> {
        Ok(CPoint {
            re: self.re.add(&other.re)?,
            im: self.im.add(&other.im)?,
        })
    }

    pub fn sub(&self, other: &CPoint) -> Result<CPoint> {
        Ok(CPoint {
            re: self.re.sub(&other.re)?,
            im: self.im.sub(&other.im)?,
        })
    }

    pub fn scale_real(&self, alpha: f64) -> CPoint {
        CPoint {
            re: self.re.scale(alpha),
            im: self.im.scale(alpha),
        }
    }

    /// Multiply by the complex scalar c + is.
    pub fn rotate(&self, c: f64, s: f64) -> CPoint {
        let re = self
            .re
            .scale(c)
            .add(&self.im.scale(-s))
            .expect("same space");
        let im = self
            .re
            .scale(s)
            .add(&self.im.scale(c))
            .expect("same space");
        CPoint { re, im }
    }
}
