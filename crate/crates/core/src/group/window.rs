use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lo, hi]` in `ℝ^d`. A box with `lo > hi` on some
/// axis is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxWindow {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxWindow {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput(format!(
                "box bounds must have equal positive length, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().chain(&hi).any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("NaN box bound".into()));
        }
        Ok(BoxWindow { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        BoxWindow {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// `[c − r, c + r]^d`.
    pub fn cube(center: &[f64], half: f64) -> Self {
        BoxWindow {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        BoxWindow {
            lo: vec![1.0; dim],
            hi: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a > b)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|x| x.is_finite())
    }

    pub fn extent(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]).max(0.0)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Whether `other` lies inside this box, up to `slack`.
    pub fn contains_box(&self, other: &BoxWindow, slack: f64) -> bool {
        other.is_empty()
            || (0..self.dim())
                .all(|k| self.lo[k] - slack <= other.lo[k] && other.hi[k] <= self.hi[k] + slack)
    }

    pub fn shrink(&self, margin: f64) -> BoxWindow {
        self.expand(-margin)
    }

    pub fn expand(&self, margin: f64) -> BoxWindow {
        BoxWindow {
            lo: self.lo.iter().map(|a| a - margin).collect(),
            hi: self.hi.iter().map(|b| b + margin).collect(),
        }
    }

    pub fn translate(&self, shift: &[f64]) -> BoxWindow {
        BoxWindow {
            lo: self.lo.iter().zip(shift).map(|(a, s)| a + s).collect(),
            hi: self.hi.iter().zip(shift).map(|(b, s)| b + s).collect(),
        }
    }

    pub fn product(a: &BoxWindow, b: &BoxWindow) -> BoxWindow {
        BoxWindow {
            lo: a.lo.iter().chain(&b.lo).copied().collect(),
            hi: a.hi.iter().chain(&b.hi).copied().collect(),
        }
    }

    /// Sub-box on the axes `range`.
    pub fn axes(&self, range: std::ops::Range<usize>) -> BoxWindow {
        BoxWindow {
            lo: self.lo[range.clone()].to_vec(),
            hi: self.hi[range].to_vec(),
        }
    }

    /// Smallest box holding all `points` (each of length `dim`).
    pub fn bounding<'a>(dim: usize, points: impl IntoIterator<Item = &'a [f64]>) -> BoxWindow {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut any = false;
        for p in points {
            any = true;
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if any {
            BoxWindow { lo, hi }
        } else {
            BoxWindow::empty(dim)
        }
    }

    /// Corners of the box (2^d of them).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|k| {
                        if mask >> k & 1 == 1 {
                            self.hi[k]
                        } else {
                            self.lo[k]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
