use super::ModulePoint;

/// Row-echelon basis of an integer span, grown one vector at a time with
/// unimodular (extended-gcd) row operations.
#[derive(Clone, Debug, Default)]
pub struct IntegerSpan {
    /// Each row has a pivot column strictly greater than the previous row's.
    rows: Vec<(usize, Vec<i128>)>,
}

impl IntegerSpan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, v: &[i64]) {
        if self.rows.len() == v.len() {
            return;
        }
        let mut v: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        let mut r = 0;
        while let Some(col) = v.iter().position(|&x| x != 0) {
            while r < self.rows.len() && self.rows[r].0 < col {
                r += 1;
            }
            if r == self.rows.len() || self.rows[r].0 > col {
                reduce_content(&mut v);
                self.rows.insert(r, (col, v));
                return;
            }
            // Same pivot column: replace (row, v) by (gcd row, v with zero at col).
            let row = &mut self.rows[r].1;
            let (a, b) = (row[col], v[col]);
            let (g, s, t) = ext_gcd(a, b);
            let (ua, ub) = (a / g, b / g);
            for k in 0..row.len() {
                let (x, y) = (row[k], v[k]);
                row[k] = s * x + t * y;
                v[k] = ua * y - ub * x;
            }
            debug_assert_eq!(v[col], 0);
            reduce_content(row);
            reduce_content(&mut v);
            r += 1;
        }
    }
}

// Only the rank is tracked, so rows may be rescaled freely.
fn reduce_content(v: &mut [i128]) {
    let g = v.iter().fold(0i128, |g, &x| gcd(g, x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(g, s, t)` with `s·a + t·b = g = gcd(a, b) > 0`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Rank of the integer span of `points`.
pub fn span_rank<'a>(points: impl IntoIterator<Item = &'a ModulePoint>) -> usize {
    let mut span = IntegerSpan::new();
    for p in points {
        span.insert(p.coords());
    }
    span.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mp(c: &[i64]) -> ModulePoint {
        ModulePoint::new(c)
    }

    #[test]
    fn zero_has_rank_zero() {
        assert_eq!(span_rank(&[mp(&[0, 0])]), 0);
    }

    #[test]
    fn dependent_vectors() {
        let pts = [mp(&[2, 4, 6]), mp(&[1, 2, 3]), mp(&[3, 6, 9])];
        assert_eq!(span_rank(&pts), 1);
        let pts = [mp(&[2, 0]), mp(&[3, 0]), mp(&[0, 5])];
        assert_eq!(span_rank(&pts), 2);
    }

    #[test]
    fn ext_gcd_identity() {
        for (a, b) in [(12, 18), (-7, 3), (0, 5), (5, 0), (-4, -6)] {
            let (g, s, t) = ext_gcd(a, b);
            assert_eq!(s * a + t * b, g);
            assert_eq!(g, gcd(a, b));
        }
    }

    fn rank_f64(rows: &[[i64; 2]]) -> usize {
        // determinant / nonzero test for 2 columns
        let nonzero = rows.iter().any(|r| r[0] != 0 || r[1] != 0);
        if !nonzero {
            return 0;
        }
        for a in rows {
            for b in rows {
                if a[0] as i128 * b[1] as i128 - a[1] as i128 * b[0] as i128 != 0 {
                    return 2;
                }
            }
        }
        1
    }

    proptest! {
        #[test]
        fn rank_invariant_under_unimodular_change(
            rows in proptest::collection::vec([-50i64..50, -50i64..50], 1..8),
            ops in proptest::collection::vec((0usize..3, -3i64..=3), 1..6),
        ) {
            // random unimodular 2x2 matrix from elementary operations
            let mut u = [[1i64, 0], [0, 1]];
            for (kind, k) in ops {
                match kind {
                    0 => { u[0][0] += k * u[1][0]; u[0][1] += k * u[1][1]; }
                    1 => { u[1][0] += k * u[0][0]; u[1][1] += k * u[0][1]; }
                    _ => { u.swap(0, 1); }
                }
            }
            let pts: Vec<ModulePoint> = rows.iter().map(|r| mp(r)).collect();
            let moved: Vec<ModulePoint> = rows
                .iter()
                .map(|r| mp(&[u[0][0] * r[0] + u[0][1] * r[1], u[1][0] * r[0] + u[1][1] * r[1]]))
                .collect();
            prop_assert_eq!(span_rank(&pts), span_rank(&moved));
            prop_assert_eq!(span_rank(&pts), rank_f64(&rows));
        }
    }
}
