//! Exact representation of finitely generated groups `[M] ≃ ℤ^k` inside `ℝ^d`.
//!
//! Points are stored as integer coordinate vectors relative to a module basis.
//! Real positions are always derived through an [`Embedding`], so set
//! equality, deduplication and symmetric differences stay exact.

mod io;
mod span;
mod window;

use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::index::PointIndex;

pub use io::{parse_pointset, read_pointset, write_pointset, PointSetFile};
pub use span::{span_rank, IntegerSpan};
pub use window::BoxWindow;

/// Integer coordinates of an element of `[M]` in a fixed module basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModulePoint(SmallVec<[i64; 4]>);

impl ModulePoint {
    pub fn new(coords: &[i64]) -> Self {
        ModulePoint(SmallVec::from_slice(coords))
    }

    pub fn zero(rank: usize) -> Self {
        ModulePoint(SmallVec::from_elem(0, rank))
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn checked_add(&self, other: &ModulePoint) -> Option<ModulePoint> {
        debug_assert_eq!(self.rank(), other.rank());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b))
            .collect::<Option<SmallVec<_>>>()
            .map(ModulePoint)
    }

    pub fn checked_sub(&self, other: &ModulePoint) -> Option<ModulePoint> {
        debug_assert_eq!(self.rank(), other.rank());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<SmallVec<_>>>()
            .map(ModulePoint)
    }

    /// Coordinates of `(self, other)` in the direct sum of the two modules.
    pub fn concat(&self, other: &ModulePoint) -> ModulePoint {
        let mut c = self.0.clone();
        c.extend_from_slice(&other.0);
        ModulePoint(c)
    }

    /// Image under an integer matrix acting on coordinate columns
    /// (`rows[i]` gives output coordinate `i`).
    pub fn transform(&self, rows: &[Vec<i64>]) -> ModulePoint {
        ModulePoint(
            rows.iter()
                .map(|row| row.iter().zip(&self.0).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }
}

impl From<Vec<i64>> for ModulePoint {
    fn from(v: Vec<i64>) -> Self {
        ModulePoint(SmallVec::from_vec(v))
    }
}

impl<'a> Add<&'a ModulePoint> for &'a ModulePoint {
    type Output = ModulePoint;
    fn add(self, rhs: &ModulePoint) -> ModulePoint {
        ModulePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a ModulePoint> for &'a ModulePoint {
    type Output = ModulePoint;
    fn sub(self, rhs: &ModulePoint) -> ModulePoint {
        ModulePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &ModulePoint {
    type Output = ModulePoint;
    fn neg(self) -> ModulePoint {
        ModulePoint(self.0.iter().map(|a| -a).collect())
    }
}

/// Sends basis coordinates to real positions: physical space `ℝ^d` and,
/// for cut-and-project data, an internal space `ℝ^m` (the star map).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    rank: usize,
    dim: usize,
    /// `rank × dim`, row `i` is the image of basis vector `i`.
    physical: Vec<f64>,
    internal_dim: usize,
    internal: Option<Vec<f64>>,
}

impl Embedding {
    pub fn new(physical: Vec<Vec<f64>>) -> Result<Self> {
        let (rank, dim, flat) = flatten(physical)?;
        Ok(Embedding {
            rank,
            dim,
            physical: flat,
            internal_dim: 0,
            internal: None,
        })
    }

    pub fn with_internal(physical: Vec<Vec<f64>>, internal: Vec<Vec<f64>>) -> Result<Self> {
        let mut e = Embedding::new(physical)?;
        let (rank, m, flat) = flatten(internal)?;
        if rank != e.rank {
            return Err(Error::RankMismatch {
                expected: e.rank,
                got: rank,
            });
        }
        e.internal_dim = m;
        e.internal = Some(flat);
        Ok(e)
    }

    /// Standard basis of `ℤ^d` in `ℝ^d`.
    pub fn lattice(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Embedding::new(rows).expect("identity basis is well formed")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn internal_dim(&self) -> Option<usize> {
        self.internal.as_ref().map(|_| self.internal_dim)
    }

    pub fn physical_image(&self, i: usize) -> &[f64] {
        &self.physical[i * self.dim..(i + 1) * self.dim]
    }

    pub fn internal_image(&self, i: usize) -> Option<&[f64]> {
        let m = self.internal_dim;
        self.internal.as_ref().map(|v| &v[i * m..(i + 1) * m])
    }

    pub fn physical_images(&self) -> Vec<Vec<f64>> {
        (0..self.rank)
            .map(|i| self.physical_image(i).to_vec())
            .collect()
    }

    pub fn internal_images(&self) -> Option<Vec<Vec<f64>>> {
        self.internal.as_ref()?;
        Some(
            (0..self.rank)
                .map(|i| self.internal_image(i).unwrap().to_vec())
                .collect(),
        )
    }

    pub(crate) fn position_into(&self, coords: &[i64], out: &mut [f64]) {
        combine(&self.physical, self.dim, coords, out);
    }

    /// Physical position of `p`.
    pub fn embed(&self, p: &ModulePoint) -> Result<Vec<f64>> {
        self.check_rank(p)?;
        let mut out = vec![0.0; self.dim];
        self.position_into(p.coords(), &mut out);
        Ok(out)
    }

    /// Internal (star) position of `p`, if this embedding carries one.
    pub fn star(&self, p: &ModulePoint) -> Result<Option<Vec<f64>>> {
        self.check_rank(p)?;
        Ok(self.internal.as_ref().map(|imgs| {
            let mut out = vec![0.0; self.internal_dim];
            combine(imgs, self.internal_dim, p.coords(), &mut out);
            out
        }))
    }

    pub fn check_rank(&self, p: &ModulePoint) -> Result<()> {
        if p.rank() != self.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                got: p.rank(),
            });
        }
        Ok(())
    }

    /// Block-diagonal embedding of the direct sum `[A] ⊕ [B]` in `ℝ^{dA+dB}`.
    pub fn product(a: &Embedding, b: &Embedding) -> Embedding {
        let dim = a.dim + b.dim;
        let mut physical = Vec::with_capacity((a.rank + b.rank) * dim);
        for i in 0..a.rank {
            physical.extend_from_slice(a.physical_image(i));
            physical.extend(std::iter::repeat(0.0).take(b.dim));
        }
        for i in 0..b.rank {
            physical.extend(std::iter::repeat(0.0).take(a.dim));
            physical.extend_from_slice(b.physical_image(i));
        }
        let (internal_dim, internal) = match (&a.internal, &b.internal) {
            (Some(_), Some(_)) => {
                let m = a.internal_dim + b.internal_dim;
                let mut v = Vec::with_capacity((a.rank + b.rank) * m);
                for i in 0..a.rank {
                    v.extend_from_slice(a.internal_image(i).unwrap());
                    v.extend(std::iter::repeat(0.0).take(b.internal_dim));
                }
                for i in 0..b.rank {
                    v.extend(std::iter::repeat(0.0).take(a.internal_dim));
                    v.extend_from_slice(b.internal_image(i).unwrap());
                }
                (m, Some(v))
            }
            _ => (0, None),
        };
        Embedding {
            rank: a.rank + b.rank,
            dim,
            physical,
            internal_dim,
            internal,
        }
    }
}

fn flatten(rows: Vec<Vec<f64>>) -> Result<(usize, usize, Vec<f64>)> {
    let rank = rows.len();
    let dim = rows.first().map_or(0, Vec::len);
    if rank == 0 || dim == 0 {
        return Err(Error::DegenerateEmbedding(
            "embedding needs at least one basis vector of positive dimension".into(),
        ));
    }
    let mut flat = Vec::with_capacity(rank * dim);
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateEmbedding("non-finite basis image".into()));
        }
        flat.extend(row);
    }
    Ok((rank, dim, flat))
}

#[inline]
fn combine(images: &[f64], dim: usize, coords: &[i64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &c) in coords.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let c = c as f64;
        for (o, v) in out.iter_mut().zip(&images[i * dim..(i + 1) * dim]) {
            *o += c * v;
        }
    }
}

/// Physical position of `p` under `e`.
pub fn embed(p: &ModulePoint, e: &Embedding) -> Result<Vec<f64>> {
    e.embed(p)
}

/// A finite set of module points together with the box it covers exhaustively.
#[derive(Clone, Debug)]
pub struct PointPatch {
    embedding: Arc<Embedding>,
    /// Sorted lexicographically, no duplicates.
    points: Vec<ModulePoint>,
    /// Cached positions, `points.len() × dim`.
    positions: Vec<f64>,
    window: BoxWindow,
    core_margin: f64,
}

impl PointPatch {
    pub fn new(
        embedding: Arc<Embedding>,
        mut points: Vec<ModulePoint>,
        window: BoxWindow,
        core_margin: f64,
    ) -> Result<Self> {
        if window.dim() != embedding.dim() {
            return Err(Error::DimensionMismatch {
                expected: embedding.dim(),
                got: window.dim(),
            });
        }
        if !(core_margin >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "core margin must be nonnegative, got {core_margin}"
            )));
        }
        for p in &points {
            embedding.check_rank(p)?;
        }
        points.sort_unstable();
        points.dedup();
        let dim = embedding.dim();
        let mut positions = vec![0.0; points.len() * dim];
        for (p, out) in points.iter().zip(positions.chunks_exact_mut(dim)) {
            embedding.position_into(p.coords(), out);
            if !window.contains(out) {
                return Err(Error::InvalidInput(format!(
                    "point {:?} at {:?} lies outside the patch window",
                    p.coords(),
                    out
                )));
            }
        }
        Ok(PointPatch {
            embedding,
            points,
            positions,
            window,
            core_margin,
        })
    }

    pub fn embedding(&self) -> &Arc<Embedding> {
        &self.embedding
    }

    pub fn points(&self) -> &[ModulePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &ModulePoint {
        &self.points[i]
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim())
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn core_margin(&self) -> f64 {
        self.core_margin
    }

    pub fn with_core_margin(mut self, margin: f64) -> Self {
        self.core_margin = margin.max(0.0);
        self
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn rank(&self) -> usize {
        self.embedding.rank()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact membership by coordinates.
    pub fn contains(&self, p: &ModulePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn index_of(&self, p: &ModulePoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Window shrunk by the patch's core margin plus `extra`.
    pub fn core(&self, extra: f64) -> BoxWindow {
        self.window.shrink(self.core_margin + extra)
    }

    /// Indices of points lying in [`core`](Self::core).
    pub fn core_indices(&self, extra: f64) -> Vec<usize> {
        let core = self.core(extra);
        (0..self.len())
            .filter(|&i| core.contains(self.position(i)))
            .collect()
    }

    /// The points of this patch lying in `window`. Exhaustive when `window`
    /// lies inside the patch window.
    pub fn restrict(&self, window: &BoxWindow) -> Result<PointPatch> {
        let pts = (0..self.len())
            .filter(|&i| window.contains(self.position(i)))
            .map(|i| self.points[i].clone())
            .collect();
        PointPatch::new(
            self.embedding.clone(),
            pts,
            window.clone(),
            self.core_margin,
        )
    }

    /// Translate every point by the module element `t`.
    pub fn translate(&self, t: &ModulePoint) -> Result<PointPatch> {
        let shift = self.embedding.embed(t)?;
        let pts = self
            .points
            .iter()
            .map(|p| {
                p.checked_add(t)
                    .ok_or_else(|| Error::InvalidInput("coordinate overflow in translation".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        PointPatch::new(
            self.embedding.clone(),
            pts,
            self.window.translate(&shift),
            self.core_margin,
        )
    }

    /// Same coordinates under another embedding of the same rank; the window
    /// becomes the bounding box of the new positions.
    pub fn reembed(&self, embedding: Arc<Embedding>) -> Result<PointPatch> {
        if embedding.rank() != self.rank() {
            return Err(Error::RankMismatch {
                expected: self.rank(),
                got: embedding.rank(),
            });
        }
        let dim = embedding.dim();
        let mut pos = vec![0.0; dim];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in &self.points {
            embedding.position_into(p.coords(), &mut pos);
            for k in 0..dim {
                lo[k] = lo[k].min(pos[k]);
                hi[k] = hi[k].max(pos[k]);
            }
        }
        let window = if self.is_empty() {
            BoxWindow::empty(dim)
        } else {
            BoxWindow::new(lo, hi)?
        };
        PointPatch::new(embedding, self.points.clone(), window, 0.0)
    }
}

/// `(M − M) ∩ B_radius` over all pairs of the patch, deduplicated and sorted.
///
/// Fails when the core (window shrunk by `radius`) is empty, since the
/// restriction then says nothing about the underlying set.
pub fn difference_set(patch: &PointPatch, radius: f64) -> Result<Vec<ModulePoint>> {
    if patch.core(radius).is_empty() {
        return Err(Error::EmptyCore {
            margin: patch.core_margin() + radius,
        });
    }
    let index = PointIndex::new(patch, radius.max(1.0));
    let mut out = rustc_hash::FxHashSet::default();
    for i in 0..patch.len() {
        let x = patch.point(i);
        index.for_each_within(patch.position(i), radius, |j| {
            out.insert(patch.point(j) - x);
        });
    }
    let mut out: Vec<_> = out.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cut_and_project, fibonacci_scheme, integer_patch};
    use proptest::prelude::*;

    const TAU: f64 = 1.618_033_988_749_895;

    fn fib_basis() -> Embedding {
        Embedding::new(vec![vec![1.0], vec![TAU]]).unwrap()
    }

    #[test]
    fn embed_examples() {
        let e = fib_basis();
        assert_eq!(embed(&ModulePoint::new(&[0, 0]), &e).unwrap(), vec![0.0]);
        let x = embed(&ModulePoint::new(&[1, 1]), &e).unwrap()[0];
        assert!((x - 2.618_033_988_749_895).abs() < 1e-15);
        let x = embed(&ModulePoint::new(&[5, -3]), &e).unwrap()[0];
        assert!((x - (5.0 - 3.0 * TAU)).abs() < 1e-15);
        assert!((x - 0.145_898_033_750_315).abs() < 1e-12);
    }

    #[test]
    fn embed_rejects_rank_mismatch() {
        let e = fib_basis();
        assert!(matches!(
            embed(&ModulePoint::new(&[1, 2, 3]), &e),
            Err(Error::RankMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn patch_rejects_points_outside_window() {
        let e = Arc::new(fib_basis());
        let r = PointPatch::new(
            e,
            vec![ModulePoint::new(&[4, 0])],
            BoxWindow::interval(0.0, 3.0),
            0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn patch_dedupes_and_sorts() {
        let e = Arc::new(fib_basis());
        let p = PointPatch::new(
            e,
            vec![
                ModulePoint::new(&[1, 0]),
                ModulePoint::new(&[0, 0]),
                ModulePoint::new(&[1, 0]),
            ],
            BoxWindow::interval(0.0, 3.0),
            0.0,
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.point(0), &ModulePoint::new(&[0, 0]));
    }

    #[test]
    fn fibonacci_difference_set_radius_three() {
        let patch = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(0.0, 10.0)).unwrap();
        let d = difference_set(&patch, 3.0).unwrap();
        let mut pos: Vec<f64> = d
            .iter()
            .map(|v| patch.embedding().embed(v).unwrap()[0])
            .collect();
        pos.sort_by(f64::total_cmp);
        let expected = [-1.0 - TAU, -TAU, -1.0, 0.0, 1.0, TAU, 1.0 + TAU];
        assert_eq!(pos.len(), expected.len());
        for (a, b) in pos.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let mut expected_coords = vec![
            ModulePoint::new(&[0, 0]),
            ModulePoint::new(&[1, 0]),
            ModulePoint::new(&[-1, 0]),
            ModulePoint::new(&[0, 1]),
            ModulePoint::new(&[0, -1]),
            ModulePoint::new(&[1, 1]),
            ModulePoint::new(&[-1, -1]),
        ];
        expected_coords.sort();
        assert_eq!(d, expected_coords);
    }

    #[test]
    fn single_point_difference_set_is_zero() {
        let e = Arc::new(fib_basis());
        let p = PointPatch::new(
            e,
            vec![ModulePoint::new(&[2, 1])],
            BoxWindow::interval(0.0, 10.0),
            0.0,
        )
        .unwrap();
        assert_eq!(difference_set(&p, 4.0).unwrap(), vec![ModulePoint::zero(2)]);
    }

    #[test]
    fn lattice_difference_set() {
        let p = integer_patch(&BoxWindow::interval(0.0, 100.0)).unwrap();
        let d = difference_set(&p, 2.0).unwrap();
        let got: Vec<i64> = d.iter().map(|v| v.coords()[0]).collect();
        assert_eq!(got, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn difference_set_rejects_empty_core() {
        let p = integer_patch(&BoxWindow::interval(0.0, 4.0)).unwrap();
        assert!(matches!(
            difference_set(&p, 2.5),
            Err(Error::EmptyCore { .. })
        ));
    }

    proptest! {
        #[test]
        fn embedding_is_additive(a in proptest::collection::vec(-10_000i64..10_000, 2),
                                 b in proptest::collection::vec(-10_000i64..10_000, 2)) {
            let e = fib_basis();
            let (a, b) = (ModulePoint::from(a), ModulePoint::from(b));
            let lhs = e.embed(&a).unwrap()[0] + e.embed(&b).unwrap()[0];
            let rhs = e.embed(&(&a + &b)).unwrap()[0];
            let scale = (a.coords().iter().chain(b.coords()).map(|c| c.abs()).sum::<i64>() as f64) * TAU;
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * scale.max(1.0));
        }

        #[test]
        fn difference_set_is_symmetric_and_monotone(hi in 20.0f64..80.0, extra in 0.0f64..40.0, r in 0.5f64..6.0) {
            let s = fibonacci_scheme();
            let small = cut_and_project(&s, &BoxWindow::interval(-hi, hi)).unwrap();
            let large = cut_and_project(&s, &BoxWindow::interval(-hi - extra, hi + extra)).unwrap();
            let d = difference_set(&small, r).unwrap();
            prop_assert!(d.binary_search(&ModulePoint::zero(2)).is_ok());
            for v in &d {
                prop_assert!(d.binary_search(&-v).is_ok());
            }
            let dl = difference_set(&large, r).unwrap();
            for v in &d {
                prop_assert!(dl.binary_search(v).is_ok());
            }
        }
    }
}
