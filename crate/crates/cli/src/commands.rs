use serde::Serialize;

use meyer_core::deformation::{
    apply_hom, classify, fit_linear, remark3_check, DeformedSource, LinearFit, Remark3, Tiedness,
    ZHom,
};
use meyer_core::diffraction::{
    autocorrelation, density, peak_scan, pp_criterion, transfer_check, Autocorrelation, Estimate,
    Peak, PpReport, PpVerdict, TransferOptions, TransferReport, VanHoveSequence,
};
use meyer_core::generators::PointSource;
use meyer_core::group::write_pointset;
use meyer_core::meyer::{meyer_verdict, MeyerReport, TrendReport, Verdict};
use meyer_core::{span_rank, BoxWindow, Error, PointPatch};

use crate::output::OutputDir;
use crate::setup::Loaded;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

pub struct Ctx {
    pub command: &'static str,
    pub loaded: Loaded,
    pub hash: String,
    pub out: OutputDir,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    scales: Vec<f64>,
    vanhove_radii: &'a [f64],
    passed: bool,
    result: T,
}

impl Ctx {
    fn report<T: Serialize>(&self, passed: bool, result: T) -> Result<Status, CliError> {
        let env = Envelope {
            command: self.command,
            config_hash: &self.hash,
            scales: self.loaded.patches.iter().map(|p| p.0).collect(),
            vanhove_radii: &self.loaded.cfg.diffraction.vanhove,
            passed,
            result,
        };
        self.out.write_json("report.json", &env)?;
        Ok(Status::from(passed))
    }

    fn tie_tol(&self) -> f64 {
        self.loaded.cfg.thresholds.tie_tolerance
    }

    fn fits(&self, f: &ZHom) -> Result<Vec<LinearFit>, CliError> {
        self.loaded
            .patches
            .iter()
            .map(|(_, p)| Ok(fit_linear(p, f)?))
            .collect()
    }
}

/// Multi-scale tiedness, with residual growth reported rather than raised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Classification {
    Tied,
    Untied,
    NotApplicable,
    ResidualGrowth,
}

fn classification(fits: &[LinearFit], tol: f64) -> Result<Classification, CliError> {
    match classify(fits, tol) {
        Ok(Tiedness::Tied) => Ok(Classification::Tied),
        Ok(Tiedness::Untied) => Ok(Classification::Untied),
        Ok(Tiedness::NotApplicable) => Ok(Classification::NotApplicable),
        Err(Error::ResidualGrowth { .. }) => Ok(Classification::ResidualGrowth),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct FitSummary {
    scale: f64,
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    #[serde(rename = "det_F")]
    det_f: Option<f64>,
    residual_sup: f64,
    tiedness_index: Option<f64>,
    singular_values: Vec<f64>,
    sample_size: usize,
}

fn summarize(scale: f64, fit: &LinearFit) -> FitSummary {
    FitSummary {
        scale,
        f: fit.f.clone(),
        det_f: fit.det_f,
        residual_sup: fit.residual_sup,
        tiedness_index: fit.tiedness_index(),
        singular_values: fit.singular_values.clone(),
        sample_size: fit.sample_size,
    }
}

fn deformed_source(ctx: &Ctx, f: &ZHom, fit: &LinearFit) -> Result<DeformedSource<Box<dyn PointSource>>, CliError> {
    Ok(DeformedSource::new(ctx.loaded.source(), f.clone(), fit)?)
}

/// The analysed set and its averaging sequence: `M` over `A_m`, or `f(M)`
/// over `F(A_m)`.
fn target(ctx: &Ctx) -> Result<(Box<dyn PointSource>, VanHoveSequence), CliError> {
    let seq = ctx.loaded.vanhove()?;
    if !ctx.loaded.cfg.diffraction.deformed {
        return Ok((ctx.loaded.source(), seq));
    }
    let f = ctx.loaded.hom()?;
    let fit = fit_linear(ctx.loaded.top(), &f)?;
    let fa = seq.transformed(&fit.f)?;
    Ok((Box::new(deformed_source(ctx, &f, &fit)?), fa))
}

fn pointset_name(i: usize, scale: f64) -> String {
    format!("pointsets/{i:02}-{}.pts", crate::output::fmt_real(scale))
}

pub fn generate(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct Entry {
        scale: f64,
        points: usize,
        window_lo: Vec<f64>,
        window_hi: Vec<f64>,
        span_rank: usize,
        file: String,
    }
    let mut entries = Vec::new();
    for (i, (s, p)) in ctx.loaded.patches.iter().enumerate() {
        let name = pointset_name(i, *s);
        ctx.out.write(&name, write_pointset(p).as_bytes())?;
        entries.push(Entry {
            scale: *s,
            points: p.len(),
            window_lo: p.window().lo().to_vec(),
            window_hi: p.window().hi().to_vec(),
            span_rank: span_rank(p.points()),
            file: name,
        });
    }
    ctx.report(true, entries)
}

pub fn certify(ctx: &Ctx) -> Result<Status, CliError> {
    let t = ctx.loaded.cfg.thresholds.meyer();
    let r: TrendReport = meyer_verdict(&ctx.loaded.patches, &t)?;
    let rows: Vec<Vec<f64>> = r
        .reports
        .iter()
        .map(|x| {
            vec![
                x.scale,
                x.points as f64,
                x.packing_radius,
                x.covering_radius,
                x.flc_census_size as f64,
                x.s_size.map_or(f64::NAN, |s| s as f64),
            ]
        })
        .collect();
    ctx.out.write_tsv(
        "certify.tsv",
        &["scale", "points", "packing_radius", "covering_radius", "census_size", "s_size"],
        &rows,
    )?;
    let ok = r.verdict.is_consistent();
    ctx.report(ok, certificate(r))
}

/// One record per scale plus the trend.
#[derive(Serialize)]
struct Certificate {
    records: Vec<MeyerReport>,
    trend: Trend,
}

#[derive(Serialize)]
struct Trend {
    verdict: Verdict,
    reason: String,
}

fn certificate(r: TrendReport) -> Certificate {
    Certificate {
        records: r.reports,
        trend: Trend {
            verdict: r.verdict,
            reason: r.reason,
        },
    }
}

pub fn fit(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct FitReport {
        #[serde(rename = "F")]
        f: Vec<Vec<f64>>,
        #[serde(rename = "det_F")]
        det_f: Option<f64>,
        residual_sup: f64,
        tied: bool,
        injective_on_patch: bool,
        classification: Classification,
        scales: Vec<FitSummary>,
        remark3: Remark3,
    }
    let f = ctx.loaded.hom()?;
    let fits = ctx.fits(&f)?;
    let class = classification(&fits, ctx.tie_tol())?;
    let top = fits.last().unwrap();
    let remark3 = remark3_check(ctx.loaded.top(), &f, top)?;
    let injective = apply_hom(ctx.loaded.top(), &f)?.injective_on_patch;
    let scales = ctx
        .loaded
        .patches
        .iter()
        .zip(&fits)
        .map(|((s, _), fit)| summarize(*s, fit))
        .collect();
    ctx.report(
        true,
        FitReport {
            f: top.f.clone(),
            det_f: top.det_f,
            residual_sup: top.residual_sup,
            tied: class == Classification::Tied,
            injective_on_patch: injective,
            classification: class,
            scales,
            remark3,
        },
    )
}

pub fn deform(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct Entry {
        scale: f64,
        points: usize,
        injective_on_patch: bool,
        file: String,
    }
    let f = ctx.loaded.hom()?;
    let mut entries = Vec::new();
    for (i, (s, p)) in ctx.loaded.patches.iter().enumerate() {
        let img = apply_hom(p, &f)?;
        let name = pointset_name(i, *s);
        ctx.out.write(&name, write_pointset(&img.patch).as_bytes())?;
        entries.push(Entry {
            scale: *s,
            points: img.patch.len(),
            injective_on_patch: img.injective_on_patch,
            file: name,
        });
    }
    ctx.report(true, entries)
}

pub fn diffract(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct DiffractReport {
        deformed: bool,
        density: Estimate,
        autocorr: Autocorrelation,
        peaks: Vec<Peak>,
        peak_counts: Vec<usize>,
        consistent: bool,
    }
    let d = &ctx.loaded.cfg.diffraction;
    let (src, seq) = target(ctx)?;
    let dens = density(&src, &seq)?;
    let ac = autocorrelation(&src, &seq, d.autocorr_radius)?;
    let (peaks, counts) = if src.dim() == 1 {
        let scan = peak_scan(&src, &seq, d.kmax, ctx.loaded.cfg.thresholds.peak_floor)?;
        let rows: Vec<Vec<f64>> = scan.spectrum.iter().map(|&(k, i)| vec![k, i]).collect();
        ctx.out.write_tsv("spectrum.tsv", &["k", "intensity"], &rows)?;
        let rows: Vec<Vec<f64>> = scan.peaks.iter().map(|p| vec![p.k, p.intensity]).collect();
        ctx.out.write_tsv("peaks.tsv", &["k", "intensity"], &rows)?;
        (scan.peaks, scan.counts)
    } else {
        (Vec::new(), Vec::new())
    };
    let rows: Vec<Vec<f64>> = ac
        .entries
        .iter()
        .map(|e| e.position.iter().copied().chain([e.frequency]).collect())
        .collect();
    let header: Vec<&str> = ["x", "y"][..src.dim()].iter().copied().chain(["frequency"]).collect();
    ctx.out.write_tsv("autocorr.tsv", &header, &rows)?;
    let zero = ac.entries.iter().find(|e| e.v.is_zero()).map_or(0.0, |e| e.frequency);
    let consistent = zero == dens.value && ac.entries.iter().all(|e| e.frequency <= dens.value);
    ctx.report(
        consistent,
        DiffractReport {
            deformed: ctx.loaded.cfg.diffraction.deformed,
            density: dens,
            autocorr: ac,
            peaks,
            peak_counts: counts,
            consistent,
        },
    )
}

fn write_period_scans(ctx: &Ctx, prefix: &str, r: &PpReport) -> Result<(), CliError> {
    for (i, e) in r.entries.iter().enumerate() {
        let rows: Vec<Vec<f64>> = e
            .report
            .scan
            .iter()
            .map(|(p, d)| {
                p.iter()
                    .copied()
                    .chain([*d, f64::from(u8::from(*d < e.epsilon))])
                    .collect()
            })
            .collect();
        let dim = e.report.scan.first().map_or(1, |s| s.0.len());
        let header: Vec<&str> = ["t", "t_y"][..dim]
            .iter()
            .copied()
            .chain(["density", "accepted"])
            .collect();
        ctx.out.write_tsv(&format!("{prefix}periods-{i}.tsv"), &header, &rows)?;
    }
    Ok(())
}

pub fn almostperiods(ctx: &Ctx) -> Result<Status, CliError> {
    let (src, seq) = target(ctx)?;
    let cfg = &ctx.loaded.cfg;
    let r = pp_criterion(&src, &seq, &cfg.diffraction.epsilons, &cfg.thresholds.pp())?;
    write_period_scans(ctx, "", &r)?;
    let ok = r.verdict != PpVerdict::Failed;
    ctx.report(ok, r)
}

fn transfer_options(ctx: &Ctx) -> TransferOptions {
    let cfg = &ctx.loaded.cfg;
    TransferOptions {
        tie_tol: cfg.thresholds.tie_tolerance,
        search_fraction: cfg.thresholds.search_fraction,
        max_samples: cfg.diffraction.max_samples,
    }
}

fn transfers(ctx: &Ctx, f: &ZHom, fit: &LinearFit) -> Result<Vec<TransferReport>, CliError> {
    let seq = ctx.loaded.vanhove()?;
    let src = ctx.loaded.source();
    let opts = transfer_options(ctx);
    ctx.loaded
        .cfg
        .diffraction
        .epsilons
        .iter()
        .map(|&eps| Ok(transfer_check(&src, f, fit, &seq, eps, &opts)?))
        .collect()
}

pub fn transfer(ctx: &Ctx) -> Result<Status, CliError> {
    let f = ctx.loaded.hom()?;
    let fit = fit_linear(ctx.loaded.top(), &f)?;
    let reports = transfers(ctx, &f, &fit)?;
    let rows: Vec<Vec<f64>> = reports
        .iter()
        .flat_map(|r| {
            r.samples.iter().map(move |s| {
                let mut row = vec![r.epsilon];
                row.extend(&s.position);
                row.extend([s.base_density, s.deformed_density, s.bound]);
                row
            })
        })
        .collect();
    let dim = ctx.loaded.top().dim();
    let header: Vec<&str> = ["epsilon"]
        .into_iter()
        .chain(["t", "t_y"][..dim].iter().copied())
        .chain(["base_density", "deformed_density", "bound"])
        .collect();
    ctx.out.write_tsv("transfer.tsv", &header, &rows)?;
    let ok = reports.iter().all(|r| r.passed);
    ctx.report(ok, reports)
}

/// Patches of `f(M)` at the configured scales.
fn image_patches(ctx: &Ctx, f: &ZHom, fit: &LinearFit) -> Result<Vec<(f64, PointPatch)>, CliError> {
    if ctx.loaded.is_generated() {
        let src = deformed_source(ctx, f, fit)?;
        let d = f.target_dim();
        ctx.loaded
            .patches
            .iter()
            .map(|(s, _)| Ok((*s, src.patch(&BoxWindow::cube(&vec![0.0; d], *s))?)))
            .collect()
    } else {
        ctx.loaded
            .patches
            .iter()
            .map(|(s, p)| Ok((*s, apply_hom(p, f)?.patch)))
            .collect()
    }
}

pub fn thm2_suite(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct Suite {
        classification: Classification,
        fits: Vec<FitSummary>,
        status: &'static str,
        source: Certificate,
        #[serde(skip_serializing_if = "Option::is_none")]
        image: Option<Certificate>,
    }
    let t = ctx.loaded.cfg.thresholds.meyer();
    let f = ctx.loaded.hom()?;
    let fits = ctx.fits(&f)?;
    let class = classification(&fits, ctx.tie_tol())?;
    let source = meyer_verdict(&ctx.loaded.patches, &t)?;
    let summaries = ctx
        .loaded
        .patches
        .iter()
        .zip(&fits)
        .map(|((s, _), fit)| summarize(*s, fit))
        .collect();
    let (status, image, ok) = match class {
        Classification::Tied => ("tied map, claim skipped", None, true),
        Classification::NotApplicable => ("target dimension differs, claim skipped", None, true),
        Classification::ResidualGrowth => ("no linear approximation", None, false),
        Classification::Untied if !source.verdict.is_consistent() => {
            ("source not Meyer-consistent, claim skipped", None, true)
        }
        Classification::Untied => {
            let r = meyer_verdict(&image_patches(ctx, &f, fits.last().unwrap())?, &t)?;
            let ok = r.verdict.is_consistent();
            let status = if ok { "image Meyer-consistent" } else { "image not Meyer-consistent" };
            (status, Some(certificate(r)), ok)
        }
    };
    ctx.report(
        ok,
        Suite {
            classification: class,
            fits: summaries,
            status,
            source: certificate(source),
            image,
        },
    )
}

pub fn thm3_suite(ctx: &Ctx) -> Result<Status, CliError> {
    #[derive(Serialize)]
    struct Suite {
        classification: Classification,
        status: &'static str,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        transfer: Vec<TransferReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        source_pp: Option<PpReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        image_pp: Option<PpReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        peaks: Option<[usize; 2]>,
    }
    let cfg = &ctx.loaded.cfg;
    let f = ctx.loaded.hom()?;
    let fits = ctx.fits(&f)?;
    let class = classification(&fits, ctx.tie_tol())?;
    let skip = |status, ok| {
        ctx.report(
            ok,
            Suite {
                classification: class,
                status,
                transfer: Vec::new(),
                source_pp: None,
                image_pp: None,
                peaks: None,
            },
        )
    };
    match class {
        Classification::Tied => return skip("tied map, claim skipped", true),
        Classification::NotApplicable => return skip("target dimension differs, claim skipped", true),
        Classification::ResidualGrowth => return skip("no linear approximation", false),
        Classification::Untied => {}
    }
    let fit = fits.last().unwrap();
    let img = apply_hom(ctx.loaded.top(), &f)?;
    if !img.injective_on_patch {
        return skip("not injective, claim skipped", true);
    }
    let transfer = transfers(ctx, &f, fit)?;
    let seq = ctx.loaded.vanhove()?;
    let fa = seq.transformed(&fit.f)?;
    let src = ctx.loaded.source();
    let image = deformed_source(ctx, &f, fit)?;
    let source_pp = pp_criterion(&src, &seq, &cfg.diffraction.epsilons, &cfg.thresholds.pp())?;
    let image_eps: Vec<f64> = cfg
        .diffraction
        .epsilons
        .iter()
        .map(|e| e / fit.det_f.unwrap().abs())
        .collect();
    let image_pp = pp_criterion(&image, &fa, &image_eps, &cfg.thresholds.pp())?;
    write_period_scans(ctx, "source-", &source_pp)?;
    write_period_scans(ctx, "image-", &image_pp)?;
    let peaks = if src.dim() == 1 {
        let floor = cfg.thresholds.peak_floor;
        let a = peak_scan(&src, &seq, cfg.diffraction.kmax, floor)?.peaks.len();
        let b = peak_scan(&image, &fa, cfg.diffraction.kmax, floor)?.peaks.len();
        Some([a, b])
    } else {
        None
    };
    let transferred = transfer.iter().all(|r| r.passed);
    let pp_ok = source_pp.verdict != PpVerdict::PurePointConsistent
        || image_pp.verdict == PpVerdict::PurePointConsistent;
    let ok = transferred && pp_ok;
    let status = match (transferred, pp_ok) {
        (true, true) => "transfer holds",
        (false, _) => "transfer failed",
        (true, false) => "image not pure-point-consistent",
    };
    ctx.report(
        ok,
        Suite {
            classification: class,
            status,
            transfer,
            source_pp: Some(source_pp),
            image_pp: Some(image_pp),
            peaks,
        },
    )
}
