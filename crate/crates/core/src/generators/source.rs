use std::sync::Arc;

use super::cut_project::{cut_and_project, CutProjectScheme};
use crate::error::{Error, Result};
use crate::group::{BoxWindow, Embedding, ModulePoint, PointPatch};

/// Anything that can produce exhaustive patches of a fixed point set on
/// requested windows.
pub trait PointSource {
    fn embedding(&self) -> Arc<Embedding>;

    fn dim(&self) -> usize {
        self.embedding().dim()
    }

    /// All points of the set whose position lies in `window`.
    fn patch(&self, window: &BoxWindow) -> Result<PointPatch>;
}

impl PointSource for CutProjectScheme {
    fn embedding(&self) -> Arc<Embedding> {
        CutProjectScheme::embedding(self).clone()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        cut_and_project(self, window)
    }
}

/// A finite patch serves windows inside its own window only.
impl PointSource for PointPatch {
    fn embedding(&self) -> Arc<Embedding> {
        PointPatch::embedding(self).clone()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        if !self.window().contains_box(window, 1e-9) {
            return Err(Error::NotExhaustive(format!(
                "requested {:?}..{:?} but the patch covers {:?}..{:?}",
                window.lo(),
                window.hi(),
                self.window().lo(),
                self.window().hi()
            )));
        }
        self.restrict(window)
    }
}

impl<S: PointSource + ?Sized> PointSource for Arc<S> {
    fn embedding(&self) -> Arc<Embedding> {
        (**self).embedding()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        (**self).patch(window)
    }
}

impl<S: PointSource + ?Sized> PointSource for Box<S> {
    fn embedding(&self) -> Arc<Embedding> {
        (**self).embedding()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        (**self).patch(window)
    }
}

/// `ℤ^d` with its standard basis.
#[derive(Clone, Debug)]
pub struct IntegerLattice {
    embedding: Arc<Embedding>,
}

impl IntegerLattice {
    pub fn new(dim: usize) -> Self {
        IntegerLattice {
            embedding: Arc::new(Embedding::lattice(dim)),
        }
    }
}

impl PointSource for IntegerLattice {
    fn embedding(&self) -> Arc<Embedding> {
        self.embedding.clone()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        let d = self.embedding.dim();
        if window.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: window.dim(),
            });
        }
        if !window.is_bounded() {
            return Err(Error::InvalidInput("window must be bounded".into()));
        }
        let mut points = Vec::new();
        if !window.is_empty() {
            let lo: Vec<i64> = window.lo().iter().map(|x| x.ceil() as i64).collect();
            let hi: Vec<i64> = window.hi().iter().map(|x| x.floor() as i64).collect();
            if lo.iter().zip(&hi).all(|(a, b)| a <= b) {
                let mut c = lo.clone();
                'outer: loop {
                    points.push(ModulePoint::new(&c));
                    for j in 0..d {
                        if c[j] < hi[j] {
                            c[j] += 1;
                            continue 'outer;
                        }
                        c[j] = lo[j];
                    }
                    break;
                }
            }
        }
        PointPatch::new(self.embedding.clone(), points, window.clone(), 0.0)
    }
}

/// The points of `ℤ^d` in `window`.
pub fn integer_patch(window: &BoxWindow) -> Result<PointPatch> {
    IntegerLattice::new(window.dim()).patch(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_patch_counts() {
        assert_eq!(integer_patch(&BoxWindow::interval(-0.5, 3.0)).unwrap().len(), 4);
        let w = BoxWindow::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(integer_patch(&w).unwrap().len(), 6);
        assert!(integer_patch(&BoxWindow::interval(0.2, 0.8)).unwrap().is_empty());
    }

    #[test]
    fn finite_patch_refuses_larger_windows() {
        let p = integer_patch(&BoxWindow::interval(0.0, 10.0)).unwrap();
        assert_eq!(PointSource::patch(&p, &BoxWindow::interval(2.0, 5.0)).unwrap().len(), 4);
        assert!(matches!(
            PointSource::patch(&p, &BoxWindow::interval(-1.0, 5.0)),
            Err(Error::NotExhaustive(_))
        ));
    }
}
