use std::sync::Arc;

use super::source::PointSource;
use crate::error::{Error, Result};
use crate::group::{BoxWindow, Embedding, PointPatch};

/// `{(a, b) : a ∈ A, b ∈ B}` over the direct sum of the two modules.
pub fn product_set(a: &PointPatch, b: &PointPatch) -> Result<PointPatch> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("product factors must be nonempty".into()));
    }
    let e = Arc::new(Embedding::product(a.embedding(), b.embedding()));
    let mut points = Vec::with_capacity(a.len() * b.len());
    for p in a.points() {
        for q in b.points() {
            points.push(p.concat(q));
        }
    }
    PointPatch::new(
        e,
        points,
        BoxWindow::product(a.window(), b.window()),
        a.core_margin().max(b.core_margin()),
    )
}

/// Product of two sources, one per block of axes.
pub struct ProductSource<A, B> {
    a: A,
    b: B,
    embedding: Arc<Embedding>,
}

impl<A: PointSource, B: PointSource> ProductSource<A, B> {
    pub fn new(a: A, b: B) -> Self {
        let embedding = Arc::new(Embedding::product(&a.embedding(), &b.embedding()));
        ProductSource { a, b, embedding }
    }
}

impl<A: PointSource, B: PointSource> PointSource for ProductSource<A, B> {
    fn embedding(&self) -> Arc<Embedding> {
        self.embedding.clone()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        let da = self.a.dim();
        let d = self.embedding.dim();
        if window.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: window.dim(),
            });
        }
        let pa = self.a.patch(&window.axes(0..da))?;
        let pb = self.b.patch(&window.axes(da..d))?;
        if pa.is_empty() || pb.is_empty() {
            return PointPatch::new(self.embedding.clone(), Vec::new(), window.clone(), 0.0);
        }
        let mut p = product_set(&pa, &pb)?;
        if p.window() != window {
            p = p.restrict(window)?;
        }
        Ok(p)
    }
}
