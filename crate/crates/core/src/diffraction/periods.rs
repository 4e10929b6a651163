use serde::{Deserialize, Serialize};

use super::spectrum::{density, in_region};
use super::vanhove::{Region, VanHoveSequence};
use crate::error::{Error, Result};
use crate::generators::PointSource;
use crate::group::{difference_set, ModulePoint, PointPatch};
use crate::numeric::{distance, norm};

/// Elements of `(t + M) △ M` found in `q`, with positions. Only elements at
/// least `|t|` inside the window of `q` are reliable.
pub fn symmetric_difference(q: &PointPatch, t: &ModulePoint) -> Result<Vec<(ModulePoint, Vec<f64>)>> {
    let e = q.embedding();
    let mut out = Vec::new();
    for i in 0..q.len() {
        let x = q.point(i);
        // x ∈ M but not in t + M
        if !q.contains(&(x - t)) {
            out.push((x.clone(), q.position(i).to_vec()));
        }
        // x + t ∈ t + M but not in M
        let y = x + t;
        if !q.contains(&y) {
            let pos = e.embed(&y)?;
            out.push((y, pos));
        }
    }
    Ok(out)
}

/// `card((t + M) △ M ∩ A)`, stopping once the count passes `limit`.
fn count_symdiff(
    q: &PointPatch,
    inside: &[usize],
    r: &Region,
    t: &ModulePoint,
    tp: &[f64],
    limit: usize,
) -> usize {
    let mut count = 0;
    // members of M ∩ A missing from t + M
    for &i in inside {
        if !q.contains(&(q.point(i) - t)) {
            count += 1;
            if count > limit {
                return count;
            }
        }
    }
    // members of (t + M) ∩ A missing from M
    let mut shifted = vec![0.0; q.dim()];
    for i in 0..q.len() {
        for (s, (a, b)) in shifted.iter_mut().zip(q.position(i).iter().zip(tp)) {
            *s = a + b;
        }
        if r.contains(&shifted) && !q.contains(&(q.point(i) + t)) {
            count += 1;
            if count > limit {
                return count;
            }
        }
    }
    count
}

/// Per-candidate traces of `card((t + M) △ M ∩ A_m) / vol(A_m)`. With a
/// cutoff, the last term is measured first and a candidate is abandoned as
/// soon as its density reaches the cutoff; its trace is then the single
/// lower bound found.
fn symdiff_traces<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    candidates: &[ModulePoint],
    cutoff: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    let e = src.embedding();
    let shifts = candidates
        .iter()
        .map(|t| e.embed(t))
        .collect::<Result<Vec<_>>>()?;
    let reach = shifts.iter().map(|p| norm(p)).fold(0.0, f64::max);
    let mut traces = vec![vec![0.0; seq.len()]; candidates.len()];
    let mut alive = vec![true; candidates.len()];
    for m in (0..seq.len()).rev() {
        let r = seq.region(m);
        let q = src.patch(&r.expanded_box(reach + 1.0))?;
        let inside = in_region(&q, seq, m);
        let vol = r.volume();
        let limit = cutoff.map_or(usize::MAX, |c| (c * vol).floor() as usize);
        for (c, t) in candidates.iter().enumerate() {
            if !alive[c] {
                continue;
            }
            let count = count_symdiff(&q, &inside, &r, t, &shifts[c], limit);
            traces[c][m] = count as f64 / vol;
            if count > limit {
                traces[c] = vec![count as f64 / vol];
                alive[c] = false;
            }
        }
        if let (Some(cut), true) = (cutoff, m + 1 == seq.len()) {
            // only the last term decides; earlier terms fill traces
            for (c, tr) in traces.iter().enumerate() {
                if alive[c] && tr[m] >= cut {
                    alive[c] = false;
                }
            }
        }
    }
    Ok(traces)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Period {
    pub t: ModulePoint,
    pub position: Vec<f64>,
    /// Last-term `dens((t + M) △ M)`.
    pub density: f64,
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlmostPeriodReport {
    pub epsilon: f64,
    pub density: f64,
    pub candidates: usize,
    /// Accepted `t`, sorted by position.
    pub periods: Vec<Period>,
    /// All candidates with their measured densities, sorted by position.
    /// Without a full scan, rejected densities are lower bounds `≥ ε`.
    pub scan: Vec<(Vec<f64>, f64)>,
    pub full_scan: bool,
    pub search_radius: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub radii: Vec<f64>,
}

impl AlmostPeriodReport {
    pub fn gap_ratio(&self) -> Option<f64> {
        (self.mean_gap > 0.0).then(|| self.max_gap / self.mean_gap)
    }
}

/// `P(ε)` restricted to `candidates` (0 is always added), measured exactly
/// on integer coordinates along `seq`.
pub fn almost_periods<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    eps: f64,
    candidates: &[ModulePoint],
) -> Result<AlmostPeriodReport> {
    almost_periods_with(src, seq, eps, candidates, true)
}

/// As [`almost_periods`]; without `full_scan` a rejected candidate is
/// abandoned once its density reaches `ε`.
pub fn almost_periods_with<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    eps: f64,
    candidates: &[ModulePoint],
    full_scan: bool,
) -> Result<AlmostPeriodReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let dens = density(src, seq)?.value;
    if eps >= 2.0 * dens {
        return Err(Error::EpsilonTooLarge {
            eps,
            limit: 2.0 * dens,
        });
    }
    let e = src.embedding();
    let mut cands: Vec<ModulePoint> = candidates.to_vec();
    cands.push(ModulePoint::zero(e.rank()));
    cands.sort_unstable();
    cands.dedup();
    for t in &cands {
        e.check_rank(t)?;
    }
    let traces = symdiff_traces(src, seq, &cands, (!full_scan).then_some(eps))?;
    let mut scan = Vec::with_capacity(cands.len());
    let mut periods = Vec::new();
    for (t, trace) in cands.into_iter().zip(traces) {
        let position = e.embed(&t)?;
        let d = *trace.last().unwrap();
        scan.push((position.clone(), d));
        if d < eps && trace.len() == seq.len() {
            periods.push(Period {
                t,
                position,
                density: d,
                trace,
            });
        }
    }
    let by_pos = |a: &[f64], b: &[f64]| a.partial_cmp(b).unwrap();
    scan.sort_by(|a, b| by_pos(&a.0, &b.0));
    periods.sort_by(|a, b| by_pos(&a.position, &b.position));
    let search_radius = scan.iter().map(|(p, _)| norm(p)).fold(0.0, f64::max);
    let (max_gap, mean_gap) = gaps(&periods, search_radius);
    Ok(AlmostPeriodReport {
        epsilon: eps,
        density: dens,
        candidates: scan.len(),
        periods,
        scan,
        full_scan,
        search_radius,
        max_gap,
        mean_gap,
        radii: seq.radii().to_vec(),
    })
}

/// Largest and mean spacing between accepted periods. In one dimension these
/// are consecutive gaps; otherwise the largest hole diameter over a sample
/// grid of the search ball and the mean nearest-neighbour distance.
fn gaps(periods: &[Period], search_radius: f64) -> (f64, f64) {
    if periods.len() < 2 {
        return (f64::INFINITY, 0.0);
    }
    if periods[0].position.len() == 1 {
        let xs: Vec<f64> = periods.iter().map(|p| p.position[0]).collect();
        let max = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let mean = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        return (max, mean);
    }
    let pts: Vec<&[f64]> = periods.iter().map(|p| p.position.as_slice()).collect();
    let nearest = |x: &[f64], skip: Option<usize>| {
        pts.iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, p)| distance(x, p))
            .fold(f64::INFINITY, f64::min)
    };
    let mean = (0..pts.len()).map(|i| nearest(pts[i], Some(i))).sum::<f64>() / pts.len() as f64;
    let steps = 40;
    let h = 2.0 * search_radius / steps as f64;
    let mut hole: f64 = 0.0;
    for a in 0..=steps {
        for b in 0..=steps {
            let x = [-search_radius + a as f64 * h, -search_radius + b as f64 * h];
            if norm(&x) <= search_radius {
                hole = hole.max(nearest(&x, None));
            }
        }
    }
    (2.0 * hole, mean)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PpVerdict {
    PurePointConsistent,
    Inconclusive,
    Failed,
}

impl PpVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PpVerdict::PurePointConsistent => "pure-point-consistent",
            PpVerdict::Inconclusive => "inconclusive",
            PpVerdict::Failed => "failed",
        }
    }
}

impl std::fmt::Display for PpVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpThresholds {
    /// Largest allowed max-gap / mean-gap ratio.
    pub gap_ratio: f64,
    /// Candidates are searched within this fraction of each radius.
    pub search_fraction: f64,
    /// Required share of volume-proportional growth of the period count.
    pub growth: f64,
}

impl Default for PpThresholds {
    fn default() -> Self {
        PpThresholds {
            gap_ratio: 20.0,
            search_fraction: 0.25,
            growth: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PpEntry {
    pub epsilon: f64,
    /// Periods found at the second-to-last and last radius.
    pub counts: [usize; 2],
    pub search_radii: [f64; 2],
    pub gap_ratio: Option<f64>,
    pub verdict: PpVerdict,
    pub reason: String,
    pub report: AlmostPeriodReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PpReport {
    pub verdict: PpVerdict,
    pub entries: Vec<PpEntry>,
    pub radii: Vec<f64>,
}

/// Relative density of `P(ε)` at finite scale: at the last two radii the
/// candidates are the differences within `search_fraction · L`; the last
/// scan must have a bounded gap ratio and more than the trivial period, and
/// the count must grow with the search volume.
pub fn pp_criterion<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    eps_list: &[f64],
    th: &PpThresholds,
) -> Result<PpReport> {
    if seq.len() < 2 {
        return Err(Error::InvalidInput("pp criterion needs two van Hove terms".into()));
    }
    if eps_list.is_empty() {
        return Err(Error::InvalidInput("no epsilon given".into()));
    }
    let n = seq.len();
    let d = seq.dim() as i32;
    let mut cands = Vec::new();
    let mut radii = [0.0; 2];
    for (slot, m) in [n - 2, n - 1].into_iter().enumerate() {
        let r = seq.region(m);
        let rad = th.search_fraction * seq.radii()[m];
        let p = src.patch(&r.expanded_box(rad))?;
        let e = p.embedding().clone();
        let mut c = Vec::new();
        for v in difference_set(&p, rad)? {
            if norm(&e.embed(&v)?) <= rad {
                c.push(v);
            }
        }
        cands.push(c);
        radii[slot] = rad;
    }
    let mut entries = Vec::new();
    for &eps in eps_list {
        let small = almost_periods_with(src, &seq.truncated(n - 1), eps, &cands[0], false)?;
        let big = almost_periods_with(src, seq, eps, &cands[1], false)?;
        let counts = [small.periods.len(), big.periods.len()];
        let ratio = big.gap_ratio();
        let need = th.growth * (radii[1] / radii[0]).powi(d);
        let (verdict, reason) = if counts[1] <= 1 {
            (PpVerdict::Failed, "only the trivial period".to_string())
        } else if ratio.map_or(true, |g| g > th.gap_ratio) {
            (
                PpVerdict::Failed,
                format!("gap ratio {:?} exceeds {}", ratio, th.gap_ratio),
            )
        } else if (counts[1] as f64) < need * counts[0].max(1) as f64 {
            (
                PpVerdict::Inconclusive,
                format!("period count grew {} -> {}, below {need:.3}x", counts[0], counts[1]),
            )
        } else {
            (PpVerdict::PurePointConsistent, String::new())
        };
        entries.push(PpEntry {
            epsilon: eps,
            counts,
            search_radii: radii,
            gap_ratio: ratio,
            verdict,
            reason,
            report: big,
        });
    }
    let verdict = if entries.iter().any(|e| e.verdict == PpVerdict::Failed) {
        PpVerdict::Failed
    } else if entries.iter().any(|e| e.verdict == PpVerdict::Inconclusive) {
        PpVerdict::Inconclusive
    } else {
        PpVerdict::PurePointConsistent
    };
    Ok(PpReport {
        verdict,
        entries,
        radii: seq.radii().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{fibonacci_scheme, IntegerLattice, TAU};

    fn seq(r: &[f64]) -> VanHoveSequence {
        VanHoveSequence::new(1, r.to_vec()).unwrap()
    }

    fn pt(a: i64, b: i64) -> ModulePoint {
        ModulePoint::new(&[a, b])
    }

    #[test]
    fn fibonacci_periods() {
        let s = seq(&[1000.0, 4000.0]);
        let r = almost_periods(&fibonacci_scheme(), &s, 0.35, &[pt(1, 1), pt(1, 0)]).unwrap();
        let find = |t: &ModulePoint| r.scan.iter().find(|(p, _)| (p[0] - t.coords()[0] as f64 - t.coords()[1] as f64 * TAU).abs() < 1e-9).unwrap().1;
        let want = 2.0 * (1.0 - 1.0 / TAU) / 5f64.sqrt();
        assert!((find(&pt(1, 1)) - want).abs() < 0.01 * want);
        assert!((find(&pt(1, 0)) - 2.0 / 5f64.sqrt()).abs() < 0.01);
        assert_eq!(find(&pt(0, 0)), 0.0);
        let accepted: Vec<&ModulePoint> = r.periods.iter().map(|p| &p.t).collect();
        assert_eq!(accepted, vec![&pt(0, 0), &pt(1, 1)]);
    }

    #[test]
    fn epsilon_bound_is_enforced() {
        let s = seq(&[100.0, 400.0]);
        assert!(matches!(
            almost_periods(&IntegerLattice::new(1), &s, 2.0, &[]),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn translation_does_not_change_counts() {
        let s = VanHoveSequence::centered(vec![0.37], vec![150.0]).unwrap();
        let base = crate::generators::cut_and_project(
            &fibonacci_scheme(),
            &crate::group::BoxWindow::interval(-400.0, 400.0),
        )
        .unwrap();
        let cands = [pt(1, 1), pt(2, 3), pt(-1, 2)];
        let a = almost_periods(&base, &s, 0.5, &cands).unwrap();
        for shift in [pt(3, -2), pt(-5, 8)] {
            let moved = base.translate(&shift).unwrap();
            let c = s.center()[0] + shift.coords()[0] as f64 + shift.coords()[1] as f64 * TAU;
            let s2 = VanHoveSequence::centered(vec![c], vec![150.0]).unwrap();
            let b = almost_periods(&moved, &s2, 0.5, &cands).unwrap();
            let da: Vec<f64> = a.scan.iter().map(|x| x.1).collect();
            let db: Vec<f64> = b.scan.iter().map(|x| x.1).collect();
            assert_eq!(da, db);
        }
    }

    #[test]
    fn lattice_is_pure_point_consistent() {
        let r = pp_criterion(
            &IntegerLattice::new(1),
            &seq(&[100.0, 400.0]),
            &[0.5],
            &PpThresholds::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, PpVerdict::PurePointConsistent);
        assert_eq!(r.entries[0].counts, [51, 201]);
        assert_eq!(r.entries[0].gap_ratio, Some(1.0));
    }

    #[test]
    fn fibonacci_is_pure_point_consistent() {
        let r = pp_criterion(
            &fibonacci_scheme(),
            &seq(&[250.0, 1000.0]),
            &[0.1, 0.2, 0.35],
            &PpThresholds::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, PpVerdict::PurePointConsistent, "{:?}", r.entries.iter().map(|e| (&e.counts, e.gap_ratio, &e.reason)).collect::<Vec<_>>());
        for e in &r.entries {
            assert!(e.report.periods.iter().all(|p| p.density < e.epsilon));
        }
    }
}
