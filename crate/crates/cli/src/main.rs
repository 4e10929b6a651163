mod commands;
mod config;
mod expr;
mod output;
mod setup;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Ctx, Status};
use crate::config::ExperimentConfig;
use crate::output::OutputDir;
use crate::setup::Loaded;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Core(#[from] meyer_core::Error),
}

#[derive(Parser)]
#[command(name = "meyer", version, about = "Meyer sets, their deformations and their diffraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured patches as point-set files.
    Generate(Common),
    /// Multi-scale Meyer certificate.
    Certify(Common),
    /// Apply the hom to every patch.
    Deform(Common),
    /// Linear fit and tiedness of the hom.
    Fit(Common),
    /// Density, autocorrelation and Bragg peaks.
    Diffract(Common),
    /// Almost periods and the pure-point criterion.
    Almostperiods(Common),
    /// Almost-period transfer through the hom.
    Transfer(Common),
    /// Untied image of a Meyer set is Meyer.
    #[command(name = "thm2-suite")]
    Thm2Suite(Common),
    /// Untied image keeps pure-point diffraction.
    #[command(name = "thm3-suite")]
    Thm3Suite(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Point-set file to analyse instead of the configured generator.
    #[arg(long = "set", value_name = "FILE")]
    pointset: Option<PathBuf>,
    /// Override a config value, e.g. `diffraction.kmax=3`.
    #[arg(long, value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// TOML file whose [hom] table replaces the config's.
    #[arg(long)]
    hom: Option<PathBuf>,
    #[arg(long)]
    kmax: Option<f64>,
    /// Van Hove radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    vanhove: Option<Vec<f64>>,
    /// Epsilons, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Output root; also `MEYER_OUT`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Same as `diffraction.deformed = true`.
    #[arg(long)]
    deformed: bool,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Generate(c) => ("generate", c),
            Command::Certify(c) => ("certify", c),
            Command::Deform(c) => ("deform", c),
            Command::Fit(c) => ("fit", c),
            Command::Diffract(c) => ("diffract", c),
            Command::Almostperiods(c) => ("almostperiods", c),
            Command::Transfer(c) => ("transfer", c),
            Command::Thm2Suite(c) => ("thm2-suite", c),
            Command::Thm3Suite(c) => ("thm3-suite", c),
        }
    }
}

fn parse_scalar(s: &str) -> toml::Value {
    // anything TOML accepts as a value, else a bare string
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

fn apply_param(root: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("--param {item:?}: expected KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().unwrap();
    let mut t = root;
    for p in parents {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| CliError::Invalid(format!("--param {key}: {p} is not a table")))?;
    }
    t.insert(last.to_string(), parse_scalar(value.trim()));
    Ok(())
}

fn read_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn build_config(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut t = read_table(&c.config)?;
    // a relative point-set path in the config is relative to the config file
    if let Some(toml::Value::String(p)) = t.get_mut("generator").and_then(|g| g.get_mut("path")) {
        if Path::new(p).is_relative() {
            let base = c.config.parent().unwrap_or(Path::new(""));
            *p = base.join(&*p).to_string_lossy().into_owned();
        }
    }
    if let Some(f) = &c.pointset {
        let mut g = toml::Table::new();
        g.insert("kind".into(), "file".into());
        g.insert("path".into(), f.to_string_lossy().into_owned().into());
        t.insert("generator".into(), g.into());
    }
    if let Some(h) = &c.hom {
        let mut ht = read_table(h)?;
        let hom = ht
            .remove("hom")
            .ok_or_else(|| CliError::Invalid(format!("{} has no [hom] table", h.display())))?;
        t.insert("hom".into(), hom);
    }
    for s in &c.param {
        apply_param(&mut t, s)?;
    }
    let mut cfg = ExperimentConfig::parse(&toml::to_string(&t).unwrap())?;
    if let Some(k) = c.kmax {
        cfg.diffraction.kmax = k;
    }
    if let Some(v) = &c.vanhove {
        cfg.diffraction.vanhove = v.clone();
    }
    if let Some(e) = &c.eps {
        cfg.diffraction.epsilons = e.clone();
    }
    cfg.diffraction.deformed |= c.deformed;
    cfg.validate()?;
    Ok(cfg)
}

fn output_root(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.out
        .clone()
        .or_else(|| std::env::var_os("MEYER_OUT").map(PathBuf::from))
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cmd: &Command) -> Result<Status, CliError> {
    let (name, common) = cmd.parts();
    let cfg = build_config(common)?;
    let hash = cfg.hash();
    let out = OutputDir::create(&output_root(common, &cfg), name, &hash)?;
    let mut saved = cfg.clone();
    saved.output = Default::default();
    out.write("config.toml", saved.to_toml().as_bytes())?;
    let ctx = Ctx {
        command: name,
        loaded: Loaded::new(cfg)?,
        hash,
        out,
    };
    let status = match cmd {
        Command::Generate(_) => commands::generate(&ctx),
        Command::Certify(_) => commands::certify(&ctx),
        Command::Deform(_) => commands::deform(&ctx),
        Command::Fit(_) => commands::fit(&ctx),
        Command::Diffract(_) => commands::diffract(&ctx),
        Command::Almostperiods(_) => commands::almostperiods(&ctx),
        Command::Transfer(_) => commands::transfer(&ctx),
        Command::Thm2Suite(_) => commands::thm2_suite(&ctx),
        Command::Thm3Suite(_) => commands::thm3_suite(&ctx),
    }?;
    println!("{}", ctx.out.path().join("report.json").display());
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("meyer: {e}");
            ExitCode::from(2)
        }
    }
}
