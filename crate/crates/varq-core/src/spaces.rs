//! Finite-dimensional normed spaces ℓ^r_n, 1 ≤ r ≤ ∞.
//!
//! These spaces are the concrete stand-ins for an abstract Banach space:
//! every vector-valued quantity in the crate carries its [`Space`] and all
//! norms are evaluated exactly. Scalars are real; the complexified vectors
//! needed by trigonometric polynomials live in [`crate::transference`] as
//! pairs of [`Point`]s.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which ℓ^r norm a space carries. r = ∞ is a distinguished variant so that
/// the max-norm is exact rather than a large-exponent approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Linf,
    /// General exponent r ∈ [1, ∞).
    Lr(f64),
}

impl NormKind {
    pub fn validate(&self) -> Result<()> {
        if let NormKind::Lr(r) = self {
            if !r.is_finite() || *r < 1.0 {
                return Err(Error::Domain(format!("norm exponent r = {r} must be ≥ 1")));
            }
        }
        Ok(())
    }

    /// Exponent as an extended real (∞ for the max norm).
    pub fn exponent(&self) -> f64 {
        match self {
            NormKind::L1 => 1.0,
            NormKind::L2 => 2.0,
            NormKind::Linf => f64::INFINITY,
            NormKind::Lr(r) => *r,
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormKind::L1 => "l1".to_string(),
            NormKind::L2 => "l2".to_string(),
            NormKind::Linf => "linf".to_string(),
            NormKind::Lr(r) => format!("lr({r})"),
        }
    }

    fn norm_of(&self, coords: &[f64]) -> f64 {
        match self {
            NormKind::L1 => coords.iter().map(|c| c.abs()).sum(),
            NormKind::L2 => coords.iter().map(|c| c * c).sum::<f64>().sqrt(),
            NormKind::Linf => coords.iter().fold(0.0, |m, c| m.max(c.abs())),
            NormKind::Lr(r) => coords
                .iter()
                .map(|c| c.abs().powf(*r))
                .sum::<f64>()
                .powf(1.0 / r),
        }
    }
}

/// A finite-dimensional normed space: dimension plus norm kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub dim: usize,
    pub norm: NormKind,
}

impl Space {
    pub fn new(dim: usize, norm: NormKind) -> Result<Space> {
        if dim == 0 {
            return Err(Error::Domain("space dimension must be ≥ 1".into()));
        }
        norm.validate()?;
        Ok(Space { dim, norm })
    }

    pub fn l1(dim: usize) -> Space {
        Space::new(dim, NormKind::L1).expect("dim ≥ 1")
    }

    pub fn l2(dim: usize) -> Space {
        Space::new(dim, NormKind::L2).expect("dim ≥ 1")
    }

    pub fn linf(dim: usize) -> Space {
        Space::new(dim, NormKind::Linf).expect("dim ≥ 1")
    }

    /// Norm of a raw coordinate slice (length must match `dim`).
    pub fn norm_of(&self, coords: &[f64]) -> f64 {
        debug_assert_eq!(coords.len(), self.dim);
        self.norm.norm_of(coords)
    }

    /// The same ℓ^r structure on concatenated pairs, used as the modulus of
    /// complexified vectors. For r = 2 this is the canonical complexification.
    pub fn doubled(&self) -> Space {
        Space {
            dim: 2 * self.dim,
            norm: self.norm,
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.norm.label(), self.dim)
    }
}

/// An element of a [`Space`]. Coordinates are validated finite at
/// construction; all operations on mixed spaces are hard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Point {
    space: Space,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(space: Space, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != space.dim {
            return Err(Error::Domain(format!(
                "coordinate count {} does not match dim {}",
                coords.len(),
                space.dim
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate rejected".into()));
        }
        Ok(Point { space, coords })
    }

    pub fn zero(space: Space) -> Point {
        Point {
            coords: vec![0.0; space.dim],
            space,
        }
    }

    /// Standard basis vector e_i (0-indexed).
    pub fn basis(space: Space, i: usize) -> Result<Point> {
        if i >= space.dim {
            return Err(Error::Domain(format!(
                "basis index {i} out of range for dim {}",
                space.dim
            )));
        }
        let mut coords = vec![0.0; space.dim];
        coords[i] = 1.0;
        Ok(Point { space, coords })
    }

    pub fn scalar(value: f64, norm: NormKind) -> Result<Point> {
        Point::new(Space::new(1, norm)?, vec![value])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.space.norm_of(&self.coords)
    }

    pub fn scale(&self, alpha: f64) -> Point {
        Point {
            space: self.space,
            coords: self.coords.iter().map(|c| alpha * c).collect(),
        }
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        axpy(1.0, self, other)
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        axpy(-1.0, other, self)
    }

    /// ‖self − other‖ without allocating the difference.
    pub fn distance(&self, other: &Point) -> Result<f64> {
        check_same_space(self, other)?;
        Ok(norm_of_diff(self.space, &self.coords, &other.coords))
    }
}

/// Exact ℓ^r norm. See [`Point::norm`] for the method form.
pub fn norm(v: &Point) -> f64 {
    v.norm()
}

/// Componentwise α·v + w. Spaces must match.
pub fn axpy(alpha: f64, v: &Point, w: &Point) -> Result<Point> {
    check_same_space(v, w)?;
    let coords = v
        .coords
        .iter()
        .zip(&w.coords)
        .map(|(a, b)| alpha * a + b)
        .collect();
    Ok(Point {
        space: v.space,
        coords,
    })
}

pub(crate) fn check_same_space(v: &Point, w: &Point) -> Result<()> {
    if v.space != w.space {
        return Err(Error::SpaceMismatch {
            left: v.space,
            right: w.space,
        });
    }
    Ok(())
}

/// Norm of the coordinate difference a − b, allocation-free.
pub(crate) fn norm_of_diff(space: Space, a: &[f64], b: &[f64]) -> f64 {
    match space.norm {
        NormKind::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        NormKind::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum::<f64>()
            .sqrt(),
        NormKind::Linf => a
            .iter()
            .zip(b)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        NormKind::Lr(r) => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r),
    }
}
