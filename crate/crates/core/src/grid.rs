use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cyclic discretization of one continuous variable.
///
/// Position sample `j` sits at `x_j = j * spacing` and momentum sample `k` at
/// `p_k = 2 pi k / period`; both wrap. The grid plays the role of the discrete
/// system a finite-precision continuous variable reduces to, with `spacing` the
/// precision scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct ModeGrid {
    n_points: usize,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    n_points: usize,
    spacing: f64,
}

impl TryFrom<GridRepr> for ModeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        ModeGrid::new(r.n_points, r.spacing)
    }
}

impl From<ModeGrid> for GridRepr {
    fn from(g: ModeGrid) -> Self {
        GridRepr {
            n_points: g.n_points,
            spacing: g.spacing,
        }
    }
}

impl ModeGrid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 2 || spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid { n_points, spacing });
        }
        Ok(Self { n_points, spacing })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    pub fn momentum_spacing(&self) -> f64 {
        2.0 * PI / self.period()
    }

    pub fn position(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    /// Unsigned cyclic momentum `2 pi k / L`.
    pub fn momentum(&self, k: usize) -> f64 {
        k as f64 * self.momentum_spacing()
    }

    /// Representative of `k` in `(-N/2, N/2]`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = (k % self.n_points) as i64;
        if 2 * k > n {
            k - n
        } else {
            k
        }
    }

    /// Momentum of sample `k` mapped into `(-pi/spacing, pi/spacing]`.
    pub fn signed_momentum(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.momentum_spacing()
    }

    /// Reduce any integer offset onto `0..N`.
    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.n_points as i64) as usize
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n_points {
            Err(Error::IndexOutOfRange {
                index,
                n_points: self.n_points,
            })
        } else {
            Ok(())
        }
    }
}

pub fn make_grid(n_points: usize, spacing: f64) -> Result<ModeGrid> {
    ModeGrid::new(n_points, spacing)
}
