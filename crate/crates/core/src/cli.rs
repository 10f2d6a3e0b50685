//! The `slaglab` command line. The binary only calls [`main`].

use crate::config::Config;
use crate::error::{Error, Result};
use crate::report::{self, SweepReport};
use crate::sweep::{self, Lab};
use crate::symplectic::{angle_criterion, characteristic_angles, PlanePairSpec};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming the neck tabulation cache directory.
pub const CACHE_ENV: &str = "SLAGLAB_CACHE";
pub const DEFAULT_ALPHAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_ALPHA: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "slaglab", version, about = "Lawlor-neck desingularization lab")]
pub struct Cli {
    /// JSON run configuration; defaults apply to absent fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Quadrature tolerance of the neck tabulation.
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Mesh level L: icosphere level L and 16·2^(L-1) axial cells.
    #[arg(long, global = true)]
    pub mesh_level: Option<usize>,
    /// Directory for written artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Characteristic angles of a plane pair given as JSON (`-` reads stdin).
    Angles { input: PathBuf },
    /// Residuals, angles and decay fits of the configured Lawlor neck.
    Neck,
    /// Glue the surface at one α and write its JSON description.
    Build {
        #[arg(long)]
        alpha: f64,
    },
    /// Every acceptance check at one α.
    Verify {
        #[arg(long)]
        alpha: f64,
    },
    /// Neumann eigenpairs and eigenfunction fields at one α, as CSV plus mesh JSON.
    Spectrum {
        #[arg(long)]
        alpha: f64,
    },
    /// Acceptance checks over an α list, with CSV tables and log-log figures.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Re-render a saved sweep or verify report.
    Report { input: PathBuf },
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::NonLagrangianInput { .. }
        | Error::InvalidParameters(_) => EXIT_INPUT,
        Error::AlphaTooLarge { .. } => EXIT_ALPHA,
        _ => EXIT_RUNTIME,
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(t) = cli.quad_tol {
        cfg.quad_tol = t;
    }
    if let Some(l) = cli.mesh_level {
        if !(1..=5).contains(&l) {
            return Err(Error::Config(format!("mesh level {l} outside 1..=5")));
        }
        cfg.sphere_level = l;
        cfg.axial_cells = 16 << (l - 1);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("slaglab-out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn emit<T: Serialize>(cli: &Cli, value: &T, table: impl FnOnce() -> String) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", table());
    }
    Ok(())
}

fn lab(cli: &Cli) -> Result<Lab> {
    let cache = cache_dir();
    Lab::new(&load_config(cli)?, cache.as_deref())
}

pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Angles { input } => angles(cli, input),
        Command::Neck => {
            let lab = lab(cli)?;
            let r = sweep::measure_neck(&lab)?;
            emit(cli, &r, || {
                format!(
                    "a = {:?}\nR0 = {:.6}  C0 = {:.6}\nSL residual {:.3e}\nomega residual {:.3e}\nmetric error {:.3e}\n\
                     angles {:?}\nangle sum {:.12} (pi = {:.12})\ngradient decay slope {:.4} (R² {:.4})\n\
                     value decay slope {:.4} (R² {:.4})\n",
                    r.a,
                    r.r0,
                    r.c0,
                    r.sl_residual,
                    r.omega_residual,
                    r.metric_error,
                    r.angles,
                    r.angle_sum,
                    std::f64::consts::PI,
                    r.grad_fit.slope,
                    r.grad_fit.r2,
                    r.value_fit.slope,
                    r.value_fit.r2
                )
            })?;
            Ok(0)
        }
        Command::Build { alpha } => {
            let lab = lab(cli)?;
            let surf = lab.surface(*alpha)?;
            let desc = lab.describe(&surf, cache_dir().as_deref());
            let text = serde_json::to_string_pretty(&desc)?;
            match &cli.out_dir {
                Some(_) => {
                    let path = out_dir(cli)?.join(format!("surface_alpha{alpha}.json"));
                    std::fs::write(&path, text)?;
                    eprintln!("wrote {}", path.display());
                }
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Verify { alpha } => sweep_command(cli, &[*alpha], "verify"),
        Command::Sweep { alphas } => {
            let alphas = alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            sweep_command(cli, &alphas, "sweep")
        }
        Command::Spectrum { alpha } => spectrum(cli, *alpha),
        Command::Report { input } => {
            let text = std::fs::read_to_string(input)?;
            let r: SweepReport = serde_json::from_str(&text)?;
            if cli.out_dir.is_some() {
                write_artifacts(&out_dir(cli)?, &r, "report")?;
            }
            emit(cli, &r, || report::render_table(&r))?;
            Ok(if r.all_passed() { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize)]
struct AnglesOut {
    angles: Vec<f64>,
    raw: Vec<f64>,
    sum: f64,
    normal_form: bool,
    is_special: bool,
    satisfies_criterion: bool,
    multiple_of_pi: Option<i64>,
}

fn angles(cli: &Cli, input: &Path) -> Result<u8> {
    let pair: PlanePairSpec = serde_json::from_str(&read_input(input)?)?;
    let (p1, p2) = pair.planes()?;
    let ca = characteristic_angles(&p1, &p2)?;
    let crit = angle_criterion(&ca.angles, 1e-9);
    let out = AnglesOut {
        angles: ca.angles.clone(),
        raw: ca.raw.clone(),
        sum: ca.sum,
        normal_form: ca.eq2_form,
        is_special: crit.is_special,
        satisfies_criterion: crit.satisfies,
        multiple_of_pi: crit.multiple,
    };
    emit(cli, &out, || {
        let pis: Vec<String> = out
            .angles
            .iter()
            .map(|a| format!("{:.9}π", a / std::f64::consts::PI))
            .collect();
        format!(
            "angles {}\nsum {:.12} = {:.9}π\ncriterion (sum = π): {}\n",
            pis.join(", "),
            out.sum,
            out.sum / std::f64::consts::PI,
            if out.satisfies_criterion {
                "satisfied"
            } else {
                "not satisfied"
            }
        )
    })?;
    Ok(0)
}

fn sweep_command(cli: &Cli, alphas: &[f64], stem: &str) -> Result<u8> {
    let lab = lab(cli)?;
    let r = report::run_sweep(&lab, alphas)?;
    let dir = out_dir(cli)?;
    write_artifacts(&dir, &r, stem)?;
    emit(cli, &r, || report::render_table(&r))?;
    if !r.failures.is_empty() {
        eprintln!("partial results written to {}", dir.display());
        return Ok(EXIT_RUNTIME);
    }
    Ok(if r.all_passed() { 0 } else { EXIT_CHECK_FAILED })
}

/// `<stem>.json`, `<stem>_points.csv`, `<stem>_checks.csv` and one SVG per slope check.
pub fn write_artifacts(dir: &Path, r: &SweepReport, stem: &str) -> Result<()> {
    std::fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(r)?,
    )?;
    std::fs::write(
        dir.join(format!("{stem}_points.csv")),
        report::points_csv(&r.points),
    )?;
    std::fs::write(
        dir.join(format!("{stem}_checks.csv")),
        report::checks_csv(&r.checks),
    )?;
    for c in &r.checks {
        if c.slope.is_some() {
            if let Some(svg) = report::slope_svg(c) {
                std::fs::write(dir.join(format!("{}.svg", c.name)), svg)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumOut {
    alpha: f64,
    nodes: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    krylov_dim: usize,
    fields_csv: String,
    mesh_json: String,
}

fn spectrum(cli: &Cli, alpha: f64) -> Result<u8> {
    let lab = lab(cli)?;
    let surf = lab.surface(alpha)?;
    let (mesh, sys, sp, fields) = sweep::spectral_pipeline(&lab, &surf)?;
    let dir = out_dir(cli)?;
    let csv_path = dir.join(format!("spectrum_alpha{alpha}.csv"));
    let mesh_path = dir.join(format!("mesh_alpha{alpha}.json"));
    let mut csv = String::from("node,layer,zone");
    for k in 0..sp.pairs.len() {
        csv.push_str(&format!(",phi{k}"));
    }
    csv.push_str(",s,sigma,s_bar,v,v_e,theta,psi1\n");
    for i in 0..sys.n() {
        let mut row = format!("{i},{},{:?}", mesh.layer_of(i), mesh.zone_of_node(i));
        for p in &sp.pairs {
            row.push_str(&format!(",{:.12e}", p.vector[i]));
        }
        for v in [
            fields.s[i],
            fields.sigma[i],
            fields.s_bar[i],
            fields.v_boundary[i],
            fields.v_e[i],
            fields.theta[i],
            fields.psi1[i],
        ] {
            row.push_str(&format!(",{v:.12e}"));
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&mesh_path, mesh.to_json()?)?;
    let out = SpectrumOut {
        alpha,
        nodes: sys.n(),
        eigenvalues: sp.values(),
        residuals: sp.pairs.iter().map(|p| p.residual).collect(),
        krylov_dim: sp.krylov_dim,
        fields_csv: csv_path.display().to_string(),
        mesh_json: mesh_path.display().to_string(),
    };
    emit(cli, &out, || {
        let mut s = format!("α = {alpha}: {} nodes\n", out.nodes);
        for (k, (v, r)) in out.eigenvalues.iter().zip(&out.residuals).enumerate() {
            s.push_str(&format!("nu{k} = {v:.10e}   residual {r:.2e}\n"));
        }
        s.push_str(&format!(
            "fields: {}\nmesh:   {}\n",
            out.fields_csv, out.mesh_json
        ));
        s
    })?;
    Ok(0)
}
