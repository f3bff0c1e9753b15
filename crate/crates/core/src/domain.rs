//! Bounded simulation domains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned box `Λ` in 3-space, optionally carrying the shrink margin
/// used to build the companion box `Λ'` for thermodynamic-limit sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    /// Side lengths, all positive.
    pub sides: [f64; 3],
    /// Margin `R` of the shrunk companion box with sides `s_i - 2R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink_margin: Option<f64>,
}

impl BoxDomain {
    pub fn new(sides: [f64; 3]) -> Result<Self> {
        if sides.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::config(format!("box sides must be positive: {sides:?}")));
        }
        Ok(BoxDomain { sides, shrink_margin: None })
    }

    pub fn cube(side: f64) -> Result<Self> {
        Self::new([side, side, side])
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        if margin < 0.0 {
            return Err(Error::config(format!("shrink margin must be nonnegative: {margin}")));
        }
        let shrunk = self.sides.map(|s| s - 2.0 * margin);
        if shrunk.iter().any(|&s| s <= 0.0) {
            return Err(Error::config(format!(
                "shrink margin {margin} leaves nonpositive sides for box {:?}",
                self.sides
            )));
        }
        self.shrink_margin = Some(margin);
        Ok(self)
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.sides.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// The shrunk companion box `Λ'`, if a margin is set.
    pub fn shrunk(&self) -> Option<BoxDomain> {
        let margin = self.shrink_margin?;
        Some(BoxDomain { sides: self.sides.map(|s| s - 2.0 * margin), shrink_margin: None })
    }

    pub fn contains(&self, q: [f64; 3]) -> bool {
        q.iter().zip(&self.sides).all(|(&x, &s)| (0.0..=s).contains(&x))
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3_sq(a: [f64; 3]) -> f64 {
    dot3(a, a)
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    norm3_sq(a).sqrt()
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn distance3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}
