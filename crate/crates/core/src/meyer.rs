//! Finite-scale evidence for the Delone, FLC and Meyer properties.
//!
//! Nothing here proves anything about an infinite set. Each statistic is
//! computed exactly on a patch (respecting its core), and [`meyer_verdict`]
//! compares the statistics across increasing scales.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{BoxWindow, Embedding, ModulePoint, PointPatch};
use crate::index::{PointIndex, TIE_TOL};

/// Sample pitch for covering radii in d ≥ 2.
pub const COVER_RESOLUTION: f64 = 0.05;

/// Half the minimum distance between two core points.
pub fn packing_radius(p: &PointPatch) -> Result<f64> {
    let core = p.core_indices(0.0);
    if core.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: core.len(),
        });
    }
    let min = if p.dim() == 1 {
        let mut x: Vec<f64> = core.iter().map(|&i| p.position(i)[0]).collect();
        x.sort_by(f64::total_cmp);
        x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    } else {
        let flat: Vec<f64> = core.iter().flat_map(|&i| p.position(i)).copied().collect();
        let idx = PointIndex::from_positions(p.dim(), flat, 1.0);
        (0..core.len())
            .filter_map(|i| idx.nearest_excluding(idx.position(i), Some(i)).map(|r| r.1))
            .fold(f64::INFINITY, f64::min)
    };
    Ok(0.5 * min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringRadius {
    pub value: f64,
    /// The window edge, not the point set, limited the estimate.
    pub truncated: bool,
}

/// Largest distance from a point of the core to the nearest patch point.
///
/// In d = 1 this is half the largest gap between consecutive core points.
/// In higher dimension the core is sampled on a grid of pitch
/// [`COVER_RESOLUTION`]; samples closer to the window edge than to their
/// nearest point are only upper bounds and do not enter the value.
pub fn covering_radius(p: &PointPatch) -> Result<CoveringRadius> {
    let core = p.core(0.0);
    if core.is_empty() {
        return Err(Error::EmptyCore {
            margin: p.core_margin(),
        });
    }
    if p.dim() == 1 {
        return Ok(covering_1d(p, &core));
    }
    covering_grid(p, &core, COVER_RESOLUTION)
}

fn covering_1d(p: &PointPatch, core: &BoxWindow) -> CoveringRadius {
    let (lo, hi) = (core.lo()[0], core.hi()[0]);
    let mut x: Vec<f64> = p
        .positions()
        .map(|x| x[0])
        .filter(|&x| lo <= x && x <= hi)
        .collect();
    x.sort_by(f64::total_cmp);
    match x.len() {
        0 => CoveringRadius {
            value: hi - lo,
            truncated: true,
        },
        1 => CoveringRadius {
            value: (x[0] - lo).max(hi - x[0]),
            truncated: true,
        },
        _ => {
            let gap = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            let edge = (x[0] - lo).max(hi - x[x.len() - 1]);
            CoveringRadius {
                value: 0.5 * gap,
                truncated: edge > gap,
            }
        }
    }
}

fn covering_grid(p: &PointPatch, core: &BoxWindow, pitch: f64) -> Result<CoveringRadius> {
    if p.dim() != 2 {
        return Err(Error::Unsupported(
            "covering radius sampling is implemented for d ≤ 2".into(),
        ));
    }
    if p.is_empty() {
        let half = (0.5 * core.extent(0)).hypot(0.5 * core.extent(1));
        return Ok(CoveringRadius {
            value: half,
            truncated: true,
        });
    }
    let idx = PointIndex::new(p, 2.0);
    let win = p.window();
    let nx = (core.extent(0) / pitch).floor() as usize + 1;
    let ny = (core.extent(1) / pitch).floor() as usize + 1;
    let mut certified: f64 = 0.0;
    let mut uncertain_depth: f64 = 0.0;
    let mut uncertain_value: f64 = 0.0;
    // Samples are visited in blocks; each block gathers the points near it
    // once and falls back to a full search only when that is inconclusive.
    const BLOCK: usize = 20;
    let reach = 3.0;
    let mut cand: Vec<[f64; 2]> = Vec::new();
    for by in (0..ny).step_by(BLOCK) {
        for bx in (0..nx).step_by(BLOCK) {
            let x0 = core.lo()[0] + bx as f64 * pitch;
            let y0 = core.lo()[1] + by as f64 * pitch;
            let side = BLOCK as f64 * pitch;
            let center = [x0 + 0.5 * side, y0 + 0.5 * side];
            let half_diag = side * std::f64::consts::FRAC_1_SQRT_2;
            cand.clear();
            idx.for_each_within(&center, half_diag + reach, |i| {
                let q = idx.position(i);
                cand.push([q[0], q[1]]);
            });
            for iy in by..(by + BLOCK).min(ny) {
                let y = core.lo()[1] + iy as f64 * pitch;
                for ix in bx..(bx + BLOCK).min(nx) {
                    let x = core.lo()[0] + ix as f64 * pitch;
                    let mut d2 = f64::INFINITY;
                    for q in &cand {
                        let e = (q[0] - x) * (q[0] - x) + (q[1] - y) * (q[1] - y);
                        d2 = d2.min(e);
                    }
                    let mut d = d2.sqrt();
                    if d > reach {
                        d = idx.nearest(&[x, y]).map_or(f64::INFINITY, |r| r.1);
                    }
                    let edge = (x - win.lo()[0])
                        .min(win.hi()[0] - x)
                        .min(y - win.lo()[1])
                        .min(win.hi()[1] - y);
                    if d <= edge {
                        certified = certified.max(d);
                    } else {
                        uncertain_depth = uncertain_depth.max(edge);
                        uncertain_value = uncertain_value.max(d);
                    }
                }
            }
        }
    }
    if certified == 0.0 && uncertain_value > 0.0 {
        return Ok(CoveringRadius {
            value: uncertain_value,
            truncated: true,
        });
    }
    Ok(CoveringRadius {
        value: certified,
        truncated: uncertain_depth > certified,
    })
}

/// Multiset of differences `y − x` with `x` in the core (shrunk by `radius`)
/// and `|y − x| ≤ radius`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Census {
    pub radius: f64,
    /// Sorted by coordinates.
    pub entries: Vec<(ModulePoint, u64)>,
    pub anchors: usize,
}

impl Census {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> Vec<ModulePoint> {
        self.entries.iter().map(|e| e.0.clone()).collect()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn count(&self, v: &ModulePoint) -> u64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(v))
            .map_or(0, |i| self.entries[i].1)
    }
}

pub fn flc_census(p: &PointPatch, radius: f64) -> Result<Census> {
    let anchors = p.core_indices(radius);
    if anchors.is_empty() {
        return Err(Error::EmptyCore {
            margin: p.core_margin() + radius,
        });
    }
    let idx = PointIndex::new(p, radius.max(1.0));
    let mut counts: FxHashMap<ModulePoint, u64> = FxHashMap::default();
    for &i in &anchors {
        let x = p.point(i);
        idx.for_each_within(p.position(i), radius, |j| {
            *counts.entry(p.point(j) - x).or_insert(0) += 1;
        });
    }
    let mut entries: Vec<_> = counts.into_iter().collect();
    entries.sort_unstable();
    Ok(Census {
        radius,
        entries,
        anchors: anchors.len(),
    })
}

/// Default number of anchor points `y` for differences `x − y`.
pub const DEFAULT_ANCHORS: usize = 512;

/// Greedy residues `S` with `v − s ∈ M` for the sampled differences `v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LagariasCover {
    /// Sorted by coordinates.
    pub residues: Vec<ModulePoint>,
    pub search_radius: f64,
    pub anchors: usize,
    pub differences: usize,
    pub max_residue: f64,
}

impl LagariasCover {
    pub fn size(&self) -> usize {
        self.residues.len()
    }
}

/// Anchors `y` evenly spaced in position order (d = 1) or coordinate order.
fn anchor_indices(p: &PointPatch, max_anchors: usize) -> Vec<usize> {
    let order = position_order(p);
    let step = order.len().div_ceil(max_anchors.max(1)).max(1);
    order.into_iter().step_by(step).collect()
}

fn position_order(p: &PointPatch) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    if p.dim() == 1 {
        order.sort_by(|&i, &j| p.position(i)[0].total_cmp(&p.position(j)[0]).then(i.cmp(&j)));
    }
    order
}

/// Differences `v = x − y` (y an anchor, x any patch point) whose position
/// lies in the window shrunk by `search_radius` are each assigned the
/// nearest patch point `z` (ties to the smallest coordinates), and
/// `s = v − z` is recorded. Fails when some `|s|` exceeds `search_radius`.
pub fn lagarias_cover(p: &PointPatch, search_radius: f64) -> Result<LagariasCover> {
    lagarias_cover_with(p, search_radius, DEFAULT_ANCHORS)
}

pub fn lagarias_cover_with(
    p: &PointPatch,
    search_radius: f64,
    max_anchors: usize,
) -> Result<LagariasCover> {
    if !(search_radius > 0.0) {
        return Err(Error::InvalidInput("search radius must be positive".into()));
    }
    let region = p.core(search_radius);
    if region.is_empty() || p.core_indices(search_radius).is_empty() {
        return Err(Error::EmptyCore {
            margin: p.core_margin() + search_radius,
        });
    }
    let anchors = anchor_indices(p, max_anchors);
    let mut residues: FxHashSet<ModulePoint> = FxHashSet::default();
    let mut differences = 0usize;
    let mut max_residue: f64 = 0.0;
    let mut record = |v: ModulePoint, z: &ModulePoint, dist: f64| -> Result<()> {
        if dist > search_radius {
            return Err(Error::CoverFailed {
                distance: dist,
                radius: search_radius,
            });
        }
        max_residue = max_residue.max(dist);
        residues.insert(&v - z);
        Ok(())
    };

    if p.dim() == 1 {
        let order = position_order(p);
        let xs: Vec<f64> = order.iter().map(|&i| p.position(i)[0]).collect();
        let (lo, hi) = (region.lo()[0], region.hi()[0]);
        for &y in &anchors {
            let py = p.position(y)[0];
            let yp = p.point(y);
            // v increases with x, so the nearest-point pointer only moves right
            let mut j = 0usize;
            for (k, &xi) in order.iter().enumerate() {
                let v = xs[k] - py;
                if v < lo {
                    continue;
                }
                if v > hi {
                    break;
                }
                while j + 1 < xs.len() && xs[j + 1] <= v {
                    j += 1;
                }
                let mut best = j;
                let mut bd = (v - xs[j]).abs();
                if j + 1 < xs.len() {
                    let d = (xs[j + 1] - v).abs();
                    let tol = TIE_TOL * d.max(bd).max(1.0);
                    if d < bd - tol
                        || ((d - bd).abs() <= tol && p.point(order[j + 1]) < p.point(order[best]))
                    {
                        best = j + 1;
                        bd = d;
                    }
                }
                differences += 1;
                record(p.point(xi) - yp, p.point(order[best]), bd)?;
            }
        }
    } else {
        let idx = PointIndex::new(p, 2.0);
        let mut v_pos = vec![0.0; p.dim()];
        for &y in &anchors {
            let py = p.position(y);
            let yp = p.point(y);
            for x in 0..p.len() {
                for ((o, a), b) in v_pos.iter_mut().zip(p.position(x)).zip(py) {
                    *o = a - b;
                }
                if !region.contains(&v_pos) {
                    continue;
                }
                let (z, d) = idx.nearest(&v_pos).expect("patch is nonempty");
                differences += 1;
                record(p.point(x) - yp, p.point(z), d)?;
            }
        }
    }
    let mut residues: Vec<ModulePoint> = residues.into_iter().collect();
    residues.sort_unstable();
    Ok(LagariasCover {
        residues,
        search_radius,
        anchors: anchors.len(),
        differences,
        max_residue,
    })
}

/// Outcome of re-checking a cover against the patch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverAudit {
    pub checked: usize,
    /// Differences `v` with no `s ∈ S` such that `v − s` is in the patch.
    pub uncovered: Vec<ModulePoint>,
}

/// Exact membership check `v − s ∈ patch` over the same differences that
/// built the cover, using any residue in `S`.
pub fn audit_cover(p: &PointPatch, cover: &LagariasCover, max_anchors: usize) -> CoverAudit {
    let region = p.core(cover.search_radius);
    let members: FxHashSet<&ModulePoint> = p.points().iter().collect();
    let mut checked = 0;
    let mut uncovered = Vec::new();
    for y in anchor_indices(p, max_anchors) {
        let py = p.position(y);
        for x in 0..p.len() {
            let inside = p
                .position(x)
                .iter()
                .zip(py)
                .zip(region.lo().iter().zip(region.hi()))
                .all(|((a, b), (lo, hi))| *lo <= a - b && a - b <= *hi);
            if !inside {
                continue;
            }
            checked += 1;
            let v = p.point(x) - p.point(y);
            if !cover.residues.iter().any(|s| members.contains(&(&v - s))) {
                uncovered.push(v);
            }
        }
    }
    CoverAudit { checked, uncovered }
}

/// Minimum distance between the positions of distinct elements.
pub fn min_separation(points: &[ModulePoint], e: &Embedding) -> Result<Option<f64>> {
    if points.len() < 2 {
        return Ok(None);
    }
    let flat: Vec<f64> = points
        .iter()
        .map(|v| e.embed(v))
        .collect::<Result<Vec<_>>>()?
        .concat();
    if e.dim() == 1 {
        let mut x = flat;
        x.sort_by(f64::total_cmp);
        return Ok(Some(
            x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
        ));
    }
    let idx = PointIndex::from_positions(e.dim(), flat, 0.5);
    Ok((0..idx.len())
        .filter_map(|i| idx.nearest_excluding(idx.position(i), Some(i)).map(|r| r.1))
        .reduce(f64::min))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MeyerConsistent,
    FailedRelativeDensity,
    FailedUniformDiscreteness,
    FailedFlc,
    FailedLagariasTrend,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::MeyerConsistent => "meyer-consistent",
            Verdict::FailedRelativeDensity => "failed-relative-density",
            Verdict::FailedUniformDiscreteness => "failed-uniform-discreteness",
            Verdict::FailedFlc => "failed-flc",
            Verdict::FailedLagariasTrend => "failed-lagarias-trend",
        }
    }

    pub fn is_consistent(self) -> bool {
        self == Verdict::MeyerConsistent
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeyerThresholds {
    /// Margin and bound for the Lagarias residues.
    pub search_radius: f64,
    pub census_radius: f64,
    pub max_anchors: usize,
    /// Largest allowed ratio of the last to the first covering radius.
    pub covering_growth: f64,
    /// Smallest allowed ratio of the last to the first packing radius.
    pub packing_floor: f64,
}

impl Default for MeyerThresholds {
    fn default() -> Self {
        MeyerThresholds {
            search_radius: 2.0,
            census_radius: 3.0,
            max_anchors: DEFAULT_ANCHORS,
            covering_growth: 2.0,
            packing_floor: 0.5,
        }
    }
}

/// Statistics of one patch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeyerReport {
    pub scale: f64,
    pub points: usize,
    pub packing_radius: f64,
    pub covering_radius: f64,
    pub covering_truncated: bool,
    pub flc_census_size: usize,
    pub flc_census_total: u64,
    pub cover_set: Option<Vec<ModulePoint>>,
    pub s_size: Option<usize>,
    pub max_residue: Option<f64>,
    /// Verdict from this scale alone (trends need several scales).
    pub verdict: Verdict,
    #[serde(skip)]
    pub census: Option<Census>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrendReport {
    pub reports: Vec<MeyerReport>,
    pub verdict: Verdict,
    pub reason: String,
}

pub fn meyer_report(p: &PointPatch, scale: f64, t: &MeyerThresholds) -> Result<MeyerReport> {
    let packing = packing_radius(p)?;
    let covering = covering_radius(p)?;
    let census = flc_census(p, t.census_radius)?;
    let cover = match lagarias_cover_with(p, t.search_radius, t.max_anchors) {
        Ok(c) => Some(c),
        Err(Error::CoverFailed { .. }) => None,
        Err(e) => return Err(e),
    };
    let verdict = if covering.truncated || !covering.value.is_finite() {
        Verdict::FailedRelativeDensity
    } else if !(packing > 0.0) {
        Verdict::FailedUniformDiscreteness
    } else if cover.is_none() {
        Verdict::FailedLagariasTrend
    } else {
        Verdict::MeyerConsistent
    };
    Ok(MeyerReport {
        scale,
        points: p.len(),
        packing_radius: packing,
        covering_radius: covering.value,
        covering_truncated: covering.truncated,
        flc_census_size: census.size(),
        flc_census_total: census.total(),
        s_size: cover.as_ref().map(LagariasCover::size),
        max_residue: cover.as_ref().map(|c| c.max_residue),
        cover_set: cover.map(|c| c.residues),
        verdict,
        census: Some(census),
    })
}

/// Trend verdict over patches of strictly increasing scale.
///
/// Checks, in order: covering radius bounded (no truncation, bounded
/// growth), packing radius bounded below, census support identical at the
/// top two scales, and `|S|` identical at the top two scales.
pub fn meyer_verdict(patches: &[(f64, PointPatch)], t: &MeyerThresholds) -> Result<TrendReport> {
    if patches.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 scales, got {}",
            patches.len()
        )));
    }
    if patches.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::InvalidInput("scales must be strictly increasing".into()));
    }
    let reports = patches
        .iter()
        .map(|(s, p)| meyer_report(p, *s, t))
        .collect::<Result<Vec<_>>>()?;
    let (verdict, reason) = trend(&reports, t);
    Ok(TrendReport {
        reports,
        verdict,
        reason,
    })
}

fn trend(r: &[MeyerReport], t: &MeyerThresholds) -> (Verdict, String) {
    let first = &r[0];
    let last = &r[r.len() - 1];
    let prev = &r[r.len() - 2];
    if let Some(x) = r.iter().find(|x| x.covering_truncated) {
        return (
            Verdict::FailedRelativeDensity,
            format!("covering radius truncated by the window at scale {}", x.scale),
        );
    }
    if last.covering_radius > t.covering_growth * first.covering_radius {
        return (
            Verdict::FailedRelativeDensity,
            format!(
                "covering radius grew from {} to {}",
                first.covering_radius, last.covering_radius
            ),
        );
    }
    if r.iter().any(|x| !(x.packing_radius > 0.0))
        || last.packing_radius < t.packing_floor * first.packing_radius
    {
        return (
            Verdict::FailedUniformDiscreteness,
            format!(
                "packing radius fell from {} to {}",
                first.packing_radius, last.packing_radius
            ),
        );
    }
    let support = |x: &MeyerReport| x.census.as_ref().map(Census::support);
    if support(prev) != support(last) {
        return (
            Verdict::FailedFlc,
            format!(
                "census support changed between scales {} and {} ({} vs {} differences)",
                prev.scale, last.scale, prev.flc_census_size, last.flc_census_size
            ),
        );
    }
    if let Some(x) = r.iter().find(|x| x.s_size.is_none()) {
        return (
            Verdict::FailedLagariasTrend,
            format!("no cover within the search radius at scale {}", x.scale),
        );
    }
    if prev.s_size != last.s_size {
        return (
            Verdict::FailedLagariasTrend,
            format!(
                "|S| changed from {} to {} between scales {} and {}",
                prev.s_size.unwrap(),
                last.s_size.unwrap(),
                prev.scale,
                last.scale
            ),
        );
    }
    (
        Verdict::MeyerConsistent,
        format!(
            "census support ({}) and |S| ({}) stable over the top two scales",
            last.flc_census_size,
            last.s_size.unwrap()
        ),
    )
}
