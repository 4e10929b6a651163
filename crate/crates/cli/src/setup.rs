use std::sync::Arc;

use meyer_core::deformation::{tied_map_product, ZHom};
use meyer_core::diffraction::VanHoveSequence;
use meyer_core::generators::{
    aba_aaaa_rule, cut_and_project, fibonacci_rule, fibonacci_scheme, integer_patch, product_set,
    substitute, IntegerLattice, PointSource, SubstitutionRule,
};
use meyer_core::group::read_pointset;
use meyer_core::{BoxWindow, Embedding, PointPatch};

use crate::config::{ExperimentConfig, GeneratorKind, HomConfig, HomKind};
use crate::expr::eval;
use crate::CliError;

pub fn rule(cfg: &ExperimentConfig) -> SubstitutionRule {
    match cfg.generator.rule.as_deref() {
        Some("fibonacci") => fibonacci_rule(),
        _ => aba_aaaa_rule(),
    }
}

fn seed(cfg: &ExperimentConfig, r: &SubstitutionRule) -> Result<usize, CliError> {
    let c = cfg.generator.seed.unwrap_or(r.alphabet()[0]);
    r.letter(c)
        .ok_or_else(|| CliError::Invalid(format!("seed {c:?} is not a letter of the rule")))
}

fn dim(cfg: &ExperimentConfig) -> usize {
    cfg.generator.dim.unwrap_or(1)
}

/// The generated patches, one per scale, with the scale each stands for.
pub fn patches(cfg: &ExperimentConfig) -> Result<Vec<(f64, PointPatch)>, CliError> {
    let g = &cfg.generator;
    let out = match g.kind {
        GeneratorKind::Fibonacci => g
            .scales
            .iter()
            .map(|&s| Ok((s, cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(-s, s))?)))
            .collect::<Result<_, CliError>>()?,
        GeneratorKind::Integers => g
            .scales
            .iter()
            .map(|&s| Ok((s, integer_patch(&BoxWindow::cube(&vec![0.0; dim(cfg)], s))?)))
            .collect::<Result<_, CliError>>()?,
        GeneratorKind::Substitution => {
            let r = rule(cfg);
            let a = seed(cfg, &r)?;
            g.levels
                .iter()
                .map(|&n| Ok((r.expansion().powi(n as i32), substitute(&r, a, n)?)))
                .collect::<Result<_, CliError>>()?
        }
        GeneratorKind::Product => {
            // substitution level n on [0, λ^n] times Fibonacci on the
            // centered window of the same length
            let r = rule(cfg);
            let a = seed(cfg, &r)?;
            g.levels
                .iter()
                .map(|&n| {
                    let l = r.expansion().powi(n as i32);
                    let x = substitute(&r, a, n)?;
                    let y = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(-l / 2.0, l / 2.0))?;
                    Ok((l, product_set(&x, &y)?))
                })
                .collect::<Result<_, CliError>>()?
        }
        GeneratorKind::File => {
            let path = g.path.as_ref().unwrap();
            let p = read_pointset(path)
                .map_err(|e| CliError::Invalid(format!("cannot read point set {}: {e}", path.display())))?
                .into_patch()?;
            let w = p.window();
            let s = (0..p.dim()).map(|i| w.extent(i) / 2.0).fold(0.0, f64::max);
            vec![(s, p)]
        }
    };
    Ok(out)
}

/// A config with its patches generated once.
pub struct Loaded {
    pub cfg: ExperimentConfig,
    pub patches: Vec<(f64, PointPatch)>,
}

impl Loaded {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, CliError> {
        let patches = patches(&cfg)?;
        Ok(Loaded { cfg, patches })
    }

    /// Whether the source is the whole infinite set rather than a patch.
    pub fn is_generated(&self) -> bool {
        matches!(
            self.cfg.generator.kind,
            GeneratorKind::Fibonacci | GeneratorKind::Integers
        )
    }

    pub fn top(&self) -> &PointPatch {
        &self.patches.last().unwrap().1
    }

    pub fn embedding(&self) -> Arc<Embedding> {
        self.top().embedding().clone()
    }

    /// The set as a point source for averaging: the generator itself when
    /// it is infinite, else the largest patch.
    pub fn source(&self) -> Box<dyn PointSource> {
        match self.cfg.generator.kind {
            GeneratorKind::Fibonacci => Box::new(fibonacci_scheme()),
            GeneratorKind::Integers => Box::new(IntegerLattice::new(dim(&self.cfg))),
            _ => Box::new(self.top().clone()),
        }
    }

    pub fn hom(&self) -> Result<ZHom, CliError> {
        let h = self
            .cfg
            .hom
            .as_ref()
            .ok_or_else(|| CliError::Invalid("this command needs a [hom] section".into()))?;
        hom(&self.cfg, h, &self.embedding())
    }

    pub fn vanhove(&self) -> Result<VanHoveSequence, CliError> {
        let radii = self.cfg.diffraction.vanhove.clone();
        let d = self.top().dim();
        let center = match &self.cfg.diffraction.center {
            Some(c) => c.clone(),
            None if self.is_generated() => vec![0.0; d],
            None => self.top().window().center(),
        };
        if center.len() != d {
            return Err(CliError::Invalid(format!(
                "diffraction.center has {} coordinates, the set lives in dimension {d}",
                center.len()
            )));
        }
        Ok(VanHoveSequence::centered(center, radii)?)
    }
}

pub fn hom(cfg: &ExperimentConfig, h: &HomConfig, e: &Embedding) -> Result<ZHom, CliError> {
    let f = match h.kind {
        HomKind::Identity => ZHom::identity(e),
        HomKind::Star => ZHom::star(e)?,
        HomKind::Images => {
            let rows = h
                .images
                .iter()
                .map(|r| r.iter().map(|x| eval(x)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            ZHom::new(rows)?
        }
        HomKind::ProductTied => {
            if cfg.generator.kind != GeneratorKind::Product {
                return Err(CliError::Invalid(
                    "hom kind \"product-tied\" needs generator kind \"product\"".into(),
                ));
            }
            tied_map_product(&[
                ZHom::identity(rule(cfg).embedding()),
                ZHom::star(fibonacci_scheme().embedding())?,
            ])?
        }
    };
    if f.source_rank() != e.rank() {
        return Err(CliError::Invalid(format!(
            "hom has {} basis images but the set has rank {}",
            f.source_rank(),
            e.rank()
        )));
    }
    Ok(match &h.scale {
        Some(s) => f.scaled(eval(s)?),
        None => f,
    })
}

