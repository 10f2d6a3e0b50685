//! Acceptance checks over an α-sweep, and their CSV, SVG, text and JSON renderings.

use crate::error::{Error, Result};
use crate::lawlor::{match_angles, LawlorNeck, LawlorParams};
use crate::spectral::{self, apply_operator, neumann_eigs};
use crate::sweep::{fit_loglog, measure_neck, measure_point, Lab, LogFit, NeckReport, PointReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

/// Fits with a coefficient of determination below this are not judged.
pub const MIN_R2: f64 = 0.9;
/// Fewest α values a slope check accepts.
pub const MIN_SLOPE_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    InsufficientPoints,
    NotEvaluated,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inconclusive => "inconclusive",
            Status::InsufficientPoints => "insufficient points",
            Status::NotEvaluated => "not evaluated",
        }
    }

    /// Whether the check produced a verdict that counts toward the exit code.
    pub fn evaluated(self) -> bool {
        !matches!(self, Status::InsufficientPoints | Status::NotEvaluated)
    }
}

/// How the compared value relates to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// `|value - target| ≤ tolerance`.
    Near,
}

impl Relation {
    fn holds(self, value: f64, target: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= target,
            Relation::AtLeast => value >= target,
            Relation::Near => (value - target).abs() <= tolerance,
        }
    }

    fn describe(self, target: f64, tolerance: f64) -> String {
        match self {
            Relation::AtMost => format!("<= {target:.4e}"),
            Relation::AtLeast => format!(">= {target:.4e}"),
            Relation::Near => format!("{target:.4} +- {tolerance}"),
        }
    }
}

/// One acceptance check. Slope checks compare `slope`, the others `measured`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub measured: Option<f64>,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub relation: Relation,
    pub target: f64,
    pub tolerance: f64,
    pub status: Status,
    /// `(x, y)` pairs behind a slope fit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
}

impl Check {
    fn new(criterion: u8, name: &str, relation: Relation, target: f64, tolerance: f64) -> Self {
        Self {
            criterion,
            name: name.to_string(),
            measured: None,
            slope: None,
            r2: None,
            relation,
            target,
            tolerance,
            status: Status::NotEvaluated,
            points: Vec::new(),
        }
    }

    fn judge(mut self, value: Option<f64>) -> Self {
        self.measured = value;
        self.status = match value {
            None => Status::NotEvaluated,
            Some(v) if self.relation.holds(v, self.target, self.tolerance) => Status::Pass,
            Some(_) => Status::Fail,
        };
        self
    }

    fn fit(mut self, x: &[f64], y: Option<Vec<f64>>, min_points: usize) -> Self {
        let Some(y) = y else { return self };
        self.points = x.iter().zip(&y).map(|(a, b)| [*a, *b]).collect();
        if x.len() < min_points {
            self.status = Status::InsufficientPoints;
            return self;
        }
        let Some(LogFit { slope, r2, .. }) = fit_loglog(x, &y) else {
            self.status = Status::Fail;
            return self;
        };
        self.slope = Some(slope);
        self.r2 = Some(r2);
        self.status = if r2 < MIN_R2 {
            Status::Inconclusive
        } else if self.relation.holds(slope, self.target, self.tolerance) {
            Status::Pass
        } else {
            Status::Fail
        };
        self
    }

    /// `max / min` of a positive series; needs two values.
    fn spread(mut self, y: Option<Vec<f64>>) -> Self {
        let Some(y) = y else { return self };
        if y.len() < 2 {
            self.status = Status::InsufficientPoints;
            return self;
        }
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        self.judge(Some(ratio))
    }

    pub fn compared(&self) -> Option<f64> {
        self.slope.or(self.measured)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// α-independent solver and inverse-problem checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest relative error of the three first nonzero eigenvalues of the unit sphere against 2.
    pub sphere_error: f64,
    /// Relative error of the first nonzero Neumann eigenvalue of a flat cylinder against `(π/L)²`.
    pub cylinder_error: f64,
    /// Largest difference between `a = (1, 2, 3)` and the parameters recovered from its angles.
    pub round_trip_error: f64,
    /// Relative residual of `M (L u - a) + K u` on a flat shell.
    pub flat_operator_error: f64,
}

pub fn measure_validation() -> Result<ValidationReport> {
    let sphere = spectral::assemble(&spectral::sphere_mesh(3))?;
    let sp = neumann_eigs(&sphere, 5)?;
    let sphere_error = sp.pairs[1..4]
        .iter()
        .map(|p| (p.value - 2.0).abs() / 2.0)
        .fold(0.0, f64::max);

    let length = 4.0;
    let cyl = spectral::assemble(&spectral::cylinder_mesh(length, 96, 64))?;
    let cp = neumann_eigs(&cyl, 4)?;
    let exact = (std::f64::consts::PI / length).powi(2);
    let cylinder_error = (cp.pairs[1].value - exact).abs() / exact;

    let a = vec![1.0, 2.0, 3.0];
    let targets = LawlorNeck::new(LawlorParams::new(a.clone())?, 1e-12)?.coordinate_angles();
    let found = match_angles(&targets, 1e-9)?;
    let scale = found.min_a();
    let round_trip_error = found
        .a()
        .iter()
        .zip(&a)
        .map(|(f, t)| (f / scale - t).abs())
        .fold(0.0, f64::max);

    let shell = spectral::shell_mesh(0.25, 1.0, 2, 6);
    let sys = spectral::assemble(&shell)?;
    let n = sys.n();
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lap_ve: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a_const = 0.7;
    let lu = apply_operator(&sys, &shell, &vec![0.0; n], &lap_ve, &u, a_const, 0.0)?;
    let shifted: Vec<f64> = lu.iter().map(|v| v - a_const).collect();
    let ku = sys.stiffness.matvec(&u);
    let mr = sys.mass.matvec(&shifted);
    let num = mr
        .iter()
        .zip(&ku)
        .map(|(p, q)| (p + q).abs())
        .fold(0.0, f64::max);
    let den = ku.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(ValidationReport {
        sphere_error,
        cylinder_error,
        round_trip_error,
        flat_operator_error: num / den,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
    pub n: usize,
    pub beta: f64,
    pub sphere_level: usize,
    pub axial_cells: usize,
    pub quad_tol: f64,
    pub volume_tol: f64,
    pub eig_tol: f64,
    pub geometry_only: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointFailure {
    pub alpha: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub alphas: Vec<f64>,
    pub metadata: Metadata,
    pub checks: Vec<Check>,
    pub neck: NeckReport,
    pub validation: ValidationReport,
    pub points: Vec<PointReport>,
    /// α values whose pipeline failed; their checks are evaluated without them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<PointFailure>,
}

impl SweepReport {
    /// True when every evaluated check passed and no point failed.
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
            && self
                .checks
                .iter()
                .filter(|c| c.status.evaluated())
                .all(Check::passed)
    }

    pub fn criterion_checks(&self, criterion: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.criterion == criterion)
    }
}

/// Sorted copy of `alphas`, largest first. Rejects repeats and values the
/// gluing cannot take before any work is done.
pub fn prepare_alphas(lab: &Lab, alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(Error::Config("no α values given".into()));
    }
    let mut v = alphas.to_vec();
    for &a in &v {
        lab.glue_config(a)?;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("α values must be distinct".into()));
    }
    Ok(v)
}

/// Measure every α (in parallel), the neck and the solver validations, then
/// evaluate the acceptance checks. Point failures are recorded, not raised.
pub fn run_sweep(lab: &Lab, alphas: &[f64]) -> Result<SweepReport> {
    let start = Instant::now();
    let alphas = prepare_alphas(lab, alphas)?;
    let neck = measure_neck(lab)?;
    let validation = measure_validation()?;
    let results: Vec<Result<PointReport>> =
        alphas.par_iter().map(|&a| measure_point(lab, a)).collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (a, r) in alphas.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push(PointFailure {
                alpha: *a,
                error: e.to_string(),
            }),
        }
    }
    let cfg = &lab.config;
    let checks = evaluate(cfg.n(), cfg.beta, &neck, &validation, &points);
    let metadata = Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        n: cfg.n(),
        beta: cfg.beta,
        sphere_level: cfg.sphere_level,
        axial_cells: cfg.axial_cells,
        quad_tol: cfg.quad_tol,
        volume_tol: crate::geometry::VOLUME_TOL,
        eig_tol: spectral::lanczos::EIG_TOL,
        geometry_only: cfg.geometry_only,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(SweepReport {
        alphas: points.iter().map(|p| p.alpha).collect(),
        metadata,
        checks,
        neck,
        validation,
        points,
        failures,
    })
}

fn fold_max(v: impl Iterator<Item = f64>) -> Option<f64> {
    v.fold(None, |m, x| Some(m.map_or(x, |y: f64| y.max(x))))
}

/// Every acceptance check, in criterion order, evaluated on the given measurements.
pub fn evaluate(
    n: usize,
    beta: f64,
    neck: &NeckReport,
    val: &ValidationReport,
    points: &[PointReport],
) -> Vec<Check> {
    use Relation::*;
    let nf = n as f64;
    let alphas: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    let per = |f: &dyn Fn(&PointReport) -> f64| -> Option<Vec<f64>> {
        if points.is_empty() {
            None
        } else {
            Some(points.iter().map(f).collect())
        }
    };
    let spec_per = |f: &dyn Fn(&crate::sweep::SpectralReport) -> f64| -> Option<Vec<f64>> {
        if points.is_empty() {
            return None;
        }
        points.iter().map(|p| p.spectral.as_ref().map(f)).collect()
    };
    let max_of = |v: Option<Vec<f64>>| v.and_then(|v| fold_max(v.into_iter()));
    let slope = |c: Check, y: Option<Vec<f64>>| c.fit(&alphas, y, MIN_SLOPE_POINTS);
    let decay = |mut c: Check, fit: &LogFit, pts: &[[f64; 2]]| {
        c.points = pts.to_vec();
        c.slope = Some(fit.slope);
        c.r2 = Some(fit.r2);
        c.status = if fit.r2 < MIN_R2 {
            Status::Inconclusive
        } else if c.relation.holds(fit.slope, c.target, c.tolerance) {
            Status::Pass
        } else {
            Status::Fail
        };
        c
    };
    let holder_target = -beta * (1.0 + 1.0 / nf) - 0.2;

    vec![
        Check::new(1, "neck_sl_residual", AtMost, 1e-8, 0.0).judge(Some(neck.sl_residual)),
        Check::new(1, "neck_omega_residual", AtMost, 1e-8, 0.0).judge(Some(neck.omega_residual)),
        Check::new(2, "neck_metric_formula", AtMost, 1e-6, 0.0).judge(Some(neck.metric_error)),
        Check::new(3, "asymptotic_angle_sum", Near, std::f64::consts::PI, 1e-6)
            .judge(Some(neck.angle_sum)),
        decay(
            Check::new(4, "decay_gradient_exponent", Near, -(nf - 1.0), 0.1),
            &neck.grad_fit,
            &neck.grad_fit_points,
        ),
        decay(
            Check::new(4, "decay_value_exponent", Near, -(nf - 2.0), 0.1),
            &neck.value_fit,
            &neck.value_fit_points,
        ),
        Check::new(5, "angle_round_trip", AtMost, 1e-5, 0.0).judge(Some(val.round_trip_error)),
        Check::new(6, "overlap_position", AtMost, 1e-9, 0.0)
            .judge(max_of(per(&|p| p.overlap_position))),
        Check::new(6, "overlap_tangent", AtMost, 1e-9, 0.0)
            .judge(max_of(per(&|p| p.overlap_derivative))),
        Check::new(6, "omega_transition", AtMost, 1e-8, 0.0)
            .judge(max_of(per(&|p| p.omega_transition))),
        Check::new(6, "exactness_mismatches", AtMost, 0.0, 0.0)
            .judge(max_of(per(&|p| p.exactness_mismatches as f64))),
        slope(
            Check::new(7, "sin_transition_slope", AtLeast, 0.9, 0.0),
            per(&|p| p.sup_sin_transition),
        ),
        slope(
            Check::new(
                7,
                "weighted_residual_slope",
                AtLeast,
                3.0 - 2.0 * beta - 2.0 * beta / nf - 0.3,
                0.0,
            ),
            per(&|p| p.residual_weighted_sup),
        ),
        slope(
            Check::new(8, "neck_volume_slope", Near, nf, 0.3),
            per(&|p| p.volume_neck),
        ),
        Check::new(8, "total_volume_spread", AtMost, 1.1, 0.0).spread(per(&|p| p.volume_total)),
        Check::new(9, "nu0", AtMost, 1e-10, 0.0).judge(max_of(spec_per(&|s| s.nu[0].abs()))),
        slope(
            Check::new(9, "nu1_slope", Near, nf - 2.0, 0.25),
            spec_per(&|s| s.nu[1]),
        ),
        Check::new(9, "nu1_below_rayleigh", AtMost, 1.0, 0.0)
            .judge(max_of(spec_per(&|s| s.nu[1] / s.rayleigh_bound))),
        Check::new(9, "nu2_lower", AtLeast, 1.0, 0.0)
            .judge(spec_per(&|s| s.nu[2]).and_then(|v| v.into_iter().reduce(f64::min))),
        Check::new(9, "nu2_spread", AtMost, 2.0, 0.0).spread(spec_per(&|s| s.nu[2])),
        Check::new(9, "sphere_eigenvalue", AtMost, 0.02, 0.0).judge(Some(val.sphere_error)),
        Check::new(9, "cylinder_eigenvalue", AtMost, 0.02, 0.0).judge(Some(val.cylinder_error)),
        slope(
            Check::new(
                10,
                "eigenfunction_gap_slope",
                AtLeast,
                (nf - 2.0) / 2.0 - 0.2,
                0.0,
            ),
            spec_per(&|s| s.sup_s_bar_minus_s),
        ),
        Check::new(10, "sigma_pairing_spread", AtMost, 2.0, 0.0)
            .spread(spec_per(&|s| s.sigma_s.abs())),
        Check::new(11, "psi1_integral", AtMost, 1e-8, 0.0)
            .judge(max_of(spec_per(&|s| s.psi1_integral.abs()))),
        Check::new(11, "psi1_pairing_spread", AtMost, 2.0, 0.0)
            .spread(spec_per(&|s| s.psi1_s.abs())),
        Check::new(11, "flat_operator", AtMost, 1e-8, 0.0).judge(Some(val.flat_operator_error)),
        Check::new(12, "weight_gradient_spread", AtMost, 1.5, 0.0)
            .spread(per(&|p| p.weight.grad_scaled)),
        Check::new(12, "weight_linear_lower_bound", AtLeast, 0.0, 0.0).judge(
            per(&|p| p.weight.min_ratio)
                .and_then(|v| v.into_iter().reduce(f64::min))
                .map(|v| v - 1e-12),
        ),
        Check::new(12, "weight_linear_ratio_spread", AtMost, 1.5, 0.0)
            .spread(per(&|p| p.weight.min_ratio)),
        Check::new(12, "weight_inverse_integral_spread", AtMost, 1.5, 0.0)
            .spread(per(&|p| p.weight_inverse_integral)),
        slope(
            Check::new(12, "weight_holder_slope", AtLeast, holder_target, 0.0),
            per(&|p| p.weight.holder_rho),
        ),
        slope(
            Check::new(
                12,
                "weight_square_holder_slope",
                AtLeast,
                holder_target,
                0.0,
            ),
            per(&|p| p.weight.holder_rho2),
        ),
        slope(
            Check::new(12, "weight_power_holder_slope", AtLeast, holder_target, 0.0),
            per(&|p| p.weight.holder_rho_beta),
        ),
    ]
}

/// Per-α table with fixed column order and 12 significant digits; timings are left out.
pub fn points_csv(points: &[PointReport]) -> String {
    let mut out = String::new();
    let header = [
        "alpha",
        "epsilon",
        "delta",
        "overlap_position",
        "overlap_derivative",
        "omega_transition",
        "exactness_mismatches",
        "sup_sin_transition",
        "min_cos_transition",
        "holder_sin_transition",
        "sup_mean_curvature",
        "residual_weighted_sup",
        "volume_total",
        "volume_neck",
        "weight_grad_scaled",
        "weight_min_ratio",
        "weight_holder_rho",
        "weight_holder_rho2",
        "weight_holder_rho_beta",
        "weight_inverse_integral",
        "nu0",
        "nu1",
        "nu2",
        "rayleigh_bound",
        "sigma_s",
        "sup_s_bar_minus_s",
        "psi1_s",
        "psi1_integral",
    ];
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points {
        let s = p.spectral.as_ref();
        let sv = |f: &dyn Fn(&crate::sweep::SpectralReport) -> f64| s.map(f);
        let row: Vec<Option<f64>> = vec![
            Some(p.alpha),
            Some(p.epsilon),
            Some(p.delta),
            Some(p.overlap_position),
            Some(p.overlap_derivative),
            Some(p.omega_transition),
            Some(p.exactness_mismatches as f64),
            Some(p.sup_sin_transition),
            Some(p.min_cos_transition),
            Some(p.holder_sin_transition),
            Some(p.sup_mean_curvature),
            Some(p.residual_weighted_sup),
            Some(p.volume_total),
            Some(p.volume_neck),
            Some(p.weight.grad_scaled),
            Some(p.weight.min_ratio),
            Some(p.weight.holder_rho),
            Some(p.weight.holder_rho2),
            Some(p.weight.holder_rho_beta),
            Some(p.weight_inverse_integral),
            sv(&|s| s.nu[0]),
            sv(&|s| s.nu[1]),
            sv(&|s| s.nu[2]),
            sv(&|s| s.rayleigh_bound),
            sv(&|s| s.sigma_s),
            sv(&|s| s.sup_s_bar_minus_s),
            sv(&|s| s.psi1_s),
            sv(&|s| s.psi1_integral),
        ];
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map(|x| format!("{x:.12e}")).unwrap_or_default())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut out =
        String::from("criterion,name,measured,slope,r2,relation,target,tolerance,status\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:?},{:.12e},{:.12e},{}",
            c.criterion,
            c.name,
            opt(c.measured),
            opt(c.slope),
            opt(c.r2),
            c.relation,
            c.target,
            c.tolerance,
            c.status.label()
        );
    }
    out
}

/// Human-readable table; one row per entry of `checks`, in the same order as the JSON.
pub fn render_table(report: &SweepReport) -> String {
    let mut out = String::new();
    let alphas: Vec<String> = report.alphas.iter().map(|a| format!("{a}")).collect();
    let _ = writeln!(
        out,
        "alphas: {}   config {}",
        alphas.join(", "),
        &report.metadata.config_hash[..12]
    );
    let _ = writeln!(
        out,
        "{:<3} {:<32} {:>13} {:>8} {:>20}  {}",
        "#", "check", "value", "r2", "target", "status"
    );
    for c in &report.checks {
        let value = c
            .compared()
            .map(|v| format!("{v:.4e}"))
            .unwrap_or_else(|| "-".into());
        let r2 =
            c.r2.map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<3} {:<32} {:>13} {:>8} {:>20}  {}",
            c.criterion,
            c.name,
            value,
            r2,
            c.relation.describe(c.target, c.tolerance),
            c.status.label()
        );
    }
    for f in &report.failures {
        let _ = writeln!(out, "point α = {} failed: {}", f.alpha, f.error);
    }
    out
}

/// Self-contained log-log scatter of `check.points` with its least-squares line.
pub fn slope_svg(check: &Check) -> Option<String> {
    let pts: Vec<(f64, f64)> = check
        .points
        .iter()
        .filter(|p| p[0] > 0.0 && p[1] > 0.0)
        .map(|p| (p[0].log10(), p[1].log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (w, h, m) = (480.0, 360.0, 56.0);
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.08 * (hi - lo).max(1e-3);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        w / 2.0,
        check.name
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 x</text>"#,
        w / 2.0,
        h - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">log10 y</text>"#,
        h / 2.0,
        h / 2.0
    );
    for v in [x0, x1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            sx(v),
            h - m + 16.0
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            m - 4.0,
            sy(v) + 4.0
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
            sx(x),
            sy(y)
        );
    }
    let xs: Vec<f64> = check.points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = check.points.iter().map(|p| p[1]).collect();
    if let Some(fit) = fit_loglog(&xs, &ys) {
        let line = |x: f64| fit.slope * x + fit.intercept / std::f64::consts::LN_10;
        let (ax, bx) = (
            pts.first().expect("points").0,
            pts.last().expect("points").0,
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson"/>"#,
            sx(ax),
            sy(line(ax)),
            sx(bx),
            sy(line(bx))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">slope {:.3}  R² {:.3}</text>"#,
            w - m,
            m - 8.0,
            fit.slope,
            fit.r2
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}
