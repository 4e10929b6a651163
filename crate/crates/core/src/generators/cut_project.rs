use std::sync::Arc;

use nalgebra::DMatrix;

use super::TAU;
use crate::error::{Error, Result};
use crate::group::{BoxWindow, Embedding, ModulePoint, PointPatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WindowBoundary {
    #[default]
    Closed,
    /// Interior only; boundary points of the internal window are dropped.
    Open,
}

/// A lattice `ℤ^k ↪ ℝ^d × ℝ^m` with an acceptance window in the internal
/// factor.
#[derive(Clone, Debug)]
pub struct CutProjectScheme {
    embedding: Arc<Embedding>,
    window_internal: BoxWindow,
    boundary: WindowBoundary,
    /// Inverse of the combined `(d+m) × k` matrix, row `j` gives coordinate `j`.
    inverse: DMatrix<f64>,
}

impl CutProjectScheme {
    pub fn new(embedding: Embedding, window_internal: BoxWindow) -> Result<Self> {
        let m = embedding.internal_dim().ok_or_else(|| {
            Error::DegenerateEmbedding("cut-and-project needs internal images".into())
        })?;
        let (k, d) = (embedding.rank(), embedding.dim());
        if k != d + m {
            return Err(Error::Unsupported(format!(
                "rank {k} must equal physical plus internal dimension {}",
                d + m
            )));
        }
        if window_internal.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: window_internal.dim(),
            });
        }
        if !window_internal.is_bounded() || (0..m).any(|a| window_internal.extent(a) <= 0.0) {
            return Err(Error::InvalidInput(
                "internal window must be bounded with nonempty interior".into(),
            ));
        }
        let combined = DMatrix::from_fn(k, k, |r, c| {
            if r < d {
                embedding.physical_image(c)[r]
            } else {
                embedding.internal_image(c).unwrap()[r - d]
            }
        });
        let scale = combined.amax().max(1.0);
        let svd = combined.clone().svd(false, false);
        if svd.singular_values.min() <= 1e-12 * scale {
            return Err(Error::DegenerateEmbedding(
                "combined physical and internal images are linearly dependent".into(),
            ));
        }
        let inverse = combined
            .try_inverse()
            .ok_or_else(|| Error::DegenerateEmbedding("combined matrix is singular".into()))?;
        Ok(CutProjectScheme {
            embedding: Arc::new(embedding),
            window_internal,
            boundary: WindowBoundary::Closed,
            inverse,
        })
    }

    pub fn with_boundary(mut self, boundary: WindowBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn embedding(&self) -> &Arc<Embedding> {
        &self.embedding
    }

    pub fn window_internal(&self) -> &BoxWindow {
        &self.window_internal
    }

    pub fn boundary(&self) -> WindowBoundary {
        self.boundary
    }

    fn accepts(&self, star: &[f64]) -> bool {
        match self.boundary {
            WindowBoundary::Closed => self.window_internal.contains(star),
            WindowBoundary::Open => star
                .iter()
                .zip(self.window_internal.lo().iter().zip(self.window_internal.hi()))
                .all(|(v, (a, b))| a < v && v < b),
        }
    }
}

/// Model set `{(a,b) : a + bτ, a − b/τ ∈ [0,1]}`, with `[M] = ℤ[τ]`.
pub fn fibonacci_scheme() -> CutProjectScheme {
    let e = Embedding::with_internal(vec![vec![1.0], vec![TAU]], vec![vec![1.0], vec![-1.0 / TAU]])
        .expect("Fibonacci basis is well formed");
    CutProjectScheme::new(e, BoxWindow::interval(0.0, 1.0)).expect("Fibonacci scheme is valid")
}

/// Every lattice point with physical position in `physical_window` and
/// internal position in the acceptance window.
///
/// All coordinates but the last are bounded through the inverse of the
/// combined embedding over the corners of the product box; the last one is
/// then solved for directly from the linear constraints.
pub fn cut_and_project(s: &CutProjectScheme, physical_window: &BoxWindow) -> Result<PointPatch> {
    let e = &s.embedding;
    let (k, d) = (e.rank(), e.dim());
    if physical_window.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: physical_window.dim(),
        });
    }
    if !physical_window.is_bounded() {
        return Err(Error::InvalidInput("physical window must be bounded".into()));
    }
    if physical_window.is_empty() {
        return PointPatch::new(e.clone(), Vec::new(), physical_window.clone(), 0.0);
    }
    let full = BoxWindow::product(physical_window, &s.window_internal);
    let corners = full.corners();
    let slack = 1e-9;
    let bounds: Vec<(i64, i64)> = (0..k)
        .map(|j| {
            let vals = corners.iter().map(|z| {
                (0..k).map(|r| s.inverse[(j, r)] * z[r]).sum::<f64>()
            });
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            let pad = slack * lo.abs().max(hi.abs()).max(1.0);
            ((lo - pad).floor() as i64, (hi + pad).ceil() as i64)
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            (0..k)
                .map(|c| {
                    if r < d {
                        e.physical_image(c)[r]
                    } else {
                        e.internal_image(c).unwrap()[r - d]
                    }
                })
                .collect()
        })
        .collect();
    let (lo_all, hi_all) = (full.lo(), full.hi());
    let last = k - 1;

    let mut points = Vec::new();
    let mut coords: Vec<i64> = bounds[..last].iter().map(|b| b.0).collect();
    let mut pos = vec![0.0; d];
    let mut star = vec![0.0; k - d];
    loop {
        // interval of the last coordinate satisfying every row constraint
        let (mut lo, mut hi) = (bounds[last].0 as f64, bounds[last].1 as f64);
        for (r, row) in rows.iter().enumerate() {
            let base: f64 = row[..last].iter().zip(&coords).map(|(a, &c)| a * c as f64).sum();
            let a = row[last];
            if a.abs() < 1e-300 {
                if base < lo_all[r] - slack || base > hi_all[r] + slack {
                    lo = 1.0;
                    hi = 0.0;
                }
                continue;
            }
            let (u, v) = ((lo_all[r] - base) / a, (hi_all[r] - base) / a);
            lo = lo.max(u.min(v));
            hi = hi.min(u.max(v));
        }
        if lo <= hi + 1.0 {
            let pad = slack * lo.abs().max(hi.abs()).max(1.0);
            let (c0, c1) = ((lo - pad).floor() as i64, (hi + pad).ceil() as i64);
            for c in c0.max(bounds[last].0)..=c1.min(bounds[last].1) {
                let mut full_coords = coords.clone();
                full_coords.push(c);
                e.position_into(&full_coords, &mut pos);
                if !physical_window.contains(&pos) {
                    continue;
                }
                let p = ModulePoint::from(full_coords);
                for (o, v) in star.iter_mut().zip(e.star(&p)?.unwrap()) {
                    *o = v;
                }
                if s.accepts(&star) {
                    points.push(p);
                }
            }
        }
        // odometer over the leading coordinates
        let mut j = 0;
        loop {
            if j == last {
                return PointPatch::new(e.clone(), points, physical_window.clone(), 0.0);
            }
            if coords[j] < bounds[j].1 {
                coords[j] += 1;
                break;
            }
            coords[j] = bounds[j].0;
            j += 1;
        }
    }
}
