//! Spatial lookup over the positions of a patch: sorted order in d = 1,
//! a uniform bucket grid in d = 2, brute force otherwise.

use crate::group::PointPatch;

/// Relative tolerance under which two distances count as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PointIndex {
    dim: usize,
    positions: Vec<f64>,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    /// `(position, index)` sorted by position.
    Line(Vec<(f64, u32)>),
    Grid(Grid),
    Brute,
}

#[derive(Clone, Debug)]
struct Grid {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: bucket `b` holds `items[start[b]..start[b + 1]]`.
    start: Vec<u32>,
    items: Vec<u32>,
}

impl PointIndex {
    /// Index over the patch positions. `cell` is the bucket size in d = 2
    /// (ignored otherwise); it is enlarged if the grid would be too fine.
    pub fn new(patch: &PointPatch, cell: f64) -> Self {
        let positions: Vec<f64> = patch.positions().flatten().copied().collect();
        Self::from_positions(patch.dim(), positions, cell)
    }

    pub fn from_positions(dim: usize, positions: Vec<f64>, cell: f64) -> Self {
        assert!(dim > 0 && positions.len() % dim == 0);
        let n = positions.len() / dim;
        let kind = match dim {
            1 => {
                let mut v: Vec<(f64, u32)> = positions
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| (x, i as u32))
                    .collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                Kind::Line(v)
            }
            2 if n > 0 => Kind::Grid(Grid::build(&positions, cell)),
            _ => Kind::Brute,
        };
        PointIndex {
            dim,
            positions,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    fn dist2(&self, i: usize, x: &[f64]) -> f64 {
        self.position(i)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Calls `f(i)` for every point within distance `r` of `x` (inclusive).
    pub fn for_each_within(&self, x: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let r2 = r * r;
        match &self.kind {
            Kind::Line(v) => {
                let lo = v.partition_point(|p| p.0 < x[0] - r);
                for &(p, i) in &v[lo..] {
                    if p > x[0] + r {
                        break;
                    }
                    f(i as usize);
                }
            }
            Kind::Grid(g) => {
                let (cx0, cy0) = g.cell_of(x[0] - r, x[1] - r);
                let (cx1, cy1) = g.cell_of(x[0] + r, x[1] + r);
                for cy in cy0..=cy1 {
                    for cx in cx0..=cx1 {
                        for &i in g.bucket(cx, cy) {
                            if self.dist2(i as usize, x) <= r2 {
                                f(i as usize);
                            }
                        }
                    }
                }
            }
            Kind::Brute => {
                for i in 0..self.len() {
                    if self.dist2(i, x) <= r2 {
                        f(i);
                    }
                }
            }
        }
    }

    /// Nearest point to `x`, skipping `exclude`. Distances equal up to
    /// [`TIE_TOL`] are broken toward the smaller index (patch points are in
    /// lexicographic coordinate order, so this is the smallest coords).
    pub fn nearest_excluding(&self, x: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let consider = |best: &mut Option<(usize, f64)>, i: usize, d: f64| {
            if Some(i) == exclude {
                return;
            }
            *best = match *best {
                None => Some((i, d)),
                Some((j, e)) => {
                    let tol = TIE_TOL * d.max(e).max(1.0);
                    if d < e - tol || ((d - e).abs() <= tol && i < j) {
                        Some((i, d))
                    } else {
                        Some((j, e))
                    }
                }
            };
        };
        match &self.kind {
            Kind::Line(v) => {
                let k = v.partition_point(|p| p.0 < x[0]);
                // walk outward on both sides until past the best distance
                let mut lo = k;
                let mut hi = k;
                let mut bound = f64::INFINITY;
                loop {
                    let left = lo.checked_sub(1).map(|l| (l, x[0] - v[l].0));
                    let right = (hi < v.len()).then(|| (hi, v[hi].0 - x[0]));
                    let next = match (left, right) {
                        (Some(a), Some(b)) => {
                            if a.1 <= b.1 {
                                lo -= 1;
                                a
                            } else {
                                hi += 1;
                                b
                            }
                        }
                        (Some(a), None) => {
                            lo -= 1;
                            a
                        }
                        (None, Some(b)) => {
                            hi += 1;
                            b
                        }
                        (None, None) => break,
                    };
                    if next.1 > bound + TIE_TOL * bound.max(1.0) {
                        break;
                    }
                    let i = v[next.0].1 as usize;
                    if Some(i) != exclude {
                        bound = bound.min(next.1);
                    }
                    consider(&mut best, i, next.1);
                }
            }
            Kind::Grid(g) => {
                let (cx, cy) = g.cell_of(x[0], x[1]);
                let max_ring = g.nx.max(g.ny) as i64 + 1;
                for ring in 0..=max_ring {
                    for (bx, by) in ring_cells(cx as i64, cy as i64, ring) {
                        if bx < 0 || by < 0 || bx as usize >= g.nx || by as usize >= g.ny {
                            continue;
                        }
                        for &i in g.bucket(bx as usize, by as usize) {
                            let d = self.dist2(i as usize, x).sqrt();
                            consider(&mut best, i as usize, d);
                        }
                    }
                    if let Some((_, d)) = best {
                        // every point outside this ring is farther than ring·cell
                        let reach = ring as f64 * g.cell;
                        if reach > d + TIE_TOL * d.max(1.0) {
                            break;
                        }
                    }
                }
            }
            Kind::Brute => {
                for i in 0..self.len() {
                    consider(&mut best, i, self.dist2(i, x).sqrt());
                }
            }
        }
        best
    }

    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.nearest_excluding(x, None)
    }
}

impl Grid {
    fn build(positions: &[f64], cell: f64) -> Grid {
        let n = positions.len() / 2;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in positions.chunks_exact(2) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
        let budget = (4 * n).max(1024) as f64;
        loop {
            let nx = ((hi[0] - lo[0]) / cell).floor() + 1.0;
            let ny = ((hi[1] - lo[1]) / cell).floor() + 1.0;
            if nx * ny <= budget {
                break;
            }
            cell *= 2.0;
        }
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut g = Grid {
            origin: lo,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: vec![0; n],
        };
        let buckets: Vec<usize> = positions
            .chunks_exact(2)
            .map(|p| {
                let (cx, cy) = g.cell_of(p[0], p[1]);
                cy * nx + cx
            })
            .collect();
        for &b in &buckets {
            g.start[b + 1] += 1;
        }
        for b in 0..nx * ny {
            g.start[b + 1] += g.start[b];
        }
        let mut fill = g.start.clone();
        for (i, &b) in buckets.iter().enumerate() {
            g.items[fill[b] as usize] = i as u32;
            fill[b] += 1;
        }
        g
    }

    /// Bucket of a point, clamped to the grid.
    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let c = |v: f64, o: f64, n: usize| {
            let k = ((v - o) / self.cell).floor();
            if k < 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        (c(x, self.origin[0], self.nx), c(y, self.origin[1], self.ny))
    }

    fn bucket(&self, cx: usize, cy: usize) -> &[u32] {
        let b = cy * self.nx + cx;
        &self.items[self.start[b] as usize..self.start[b + 1] as usize]
    }
}

/// Cells at Chebyshev distance exactly `ring` from `(cx, cy)`.
fn ring_cells(cx: i64, cy: i64, ring: i64) -> impl Iterator<Item = (i64, i64)> {
    let r = ring;
    (-r..=r).flat_map(move |dy| {
        let edge = dy.abs() == r;
        let xs: Vec<i64> = if edge {
            (-r..=r).collect()
        } else {
            vec![-r, r]
        };
        xs.into_iter().map(move |dx| (cx + dx, cy + dy))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_nearest(pos: &[f64], dim: usize, x: &[f64]) -> f64 {
        pos.chunks_exact(dim)
            .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn tie_breaks_to_smaller_index() {
        let idx = PointIndex::from_positions(1, vec![2.0, 0.0], 1.0);
        assert_eq!(idx.nearest(&[1.0]).unwrap().0, 0);
        let idx = PointIndex::from_positions(1, vec![0.0, 2.0], 1.0);
        assert_eq!(idx.nearest(&[1.0]).unwrap().0, 0);
    }

    #[test]
    fn excluding_self() {
        let idx = PointIndex::from_positions(2, vec![0.0, 0.0, 3.0, 4.0, 10.0, 0.0], 0.5);
        let (j, d) = idx.nearest_excluding(&[0.0, 0.0], Some(0)).unwrap();
        assert_eq!(j, 1);
        assert!((d - 5.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nearest_matches_brute_force(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60),
            q in (-80.0f64..80.0, -80.0f64..80.0),
            cell in 0.1f64..20.0,
        ) {
            let flat: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
            let q = [q.0, q.1];
            let idx = PointIndex::from_positions(2, flat.clone(), cell);
            let (_, d) = idx.nearest(&q).unwrap();
            prop_assert!((d - brute_nearest(&flat, 2, &q)).abs() < 1e-9);
            let line: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let idx = PointIndex::from_positions(1, line.clone(), cell);
            let (_, d) = idx.nearest(&q[..1]).unwrap();
            prop_assert!((d - brute_nearest(&line, 1, &q[..1])).abs() < 1e-9);
        }

        #[test]
        fn within_matches_brute_force(
            pts in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 0..60),
            q in (-25.0f64..25.0, -25.0f64..25.0),
            r in 0.0f64..15.0,
            cell in 0.1f64..10.0,
        ) {
            let flat: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
            let idx = PointIndex::from_positions(2, flat, cell);
            let mut got = Vec::new();
            idx.for_each_within(&[q.0, q.1], r, |i| got.push(i));
            got.sort_unstable();
            let want: Vec<usize> = pts
                .iter()
                .enumerate()
                .filter(|(_, p)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2) <= r * r)
                .map(|(i, _)| i)
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}
