//! Per-α measurement pipeline shared by the CLI commands and the report.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{self, SampleGrid};
use crate::gluing::exterior::ExteriorPiece;
use crate::gluing::{self, select_parameters_with, GluedSurface, Region};
use crate::lawlor::{End, LawlorNeck, LawlorParams};
use crate::sampling;
use crate::spectral::{self, mesh::dot, SurfaceMesh};
use crate::symplectic::{
    angle_criterion, characteristic_angles, real_gram_schmidt, LagrangianPlane,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

/// The α-independent ingredients of a run.
#[derive(Debug, Clone)]
pub struct Lab {
    pub config: Config,
    pub neck: Arc<LawlorNeck>,
    pub c0: f64,
    pub k: f64,
    pub pieces: [ExteriorPiece; 2],
}

impl Lab {
    /// Build the neck (through the cache directory when given), measure `C₀`
    /// and set up the exterior pieces on the asymptotic planes.
    pub fn new(config: &Config, cache: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let params = LawlorParams::new(config.a.clone())?;
        let neck = Arc::new(LawlorNeck::cached(params, config.quad_tol, cache)?);
        let c0 = neck.measure_c0()?;
        let (p1, p2) = neck.asymptotic_planes();
        let pieces = [
            ExteriorPiece {
                plane: p1,
                f: config.exterior_polynomial(0),
                outer_radius: config.outer_radius,
            },
            ExteriorPiece {
                plane: p2,
                f: config.exterior_polynomial(1),
                outer_radius: config.outer_radius,
            },
        ];
        let k = config.curvature_constant(&pieces);
        Ok(Self {
            config: config.clone(),
            neck,
            c0,
            k,
            pieces,
        })
    }

    /// Gluing parameters at `alpha`; fails with `AlphaTooLarge` outside the admissible range.
    pub fn glue_config(&self, alpha: f64) -> Result<gluing::GlueConfig> {
        select_parameters_with(
            alpha,
            self.k,
            self.c0,
            self.neck.r0(),
            self.config.n(),
            self.config.alpha_ceiling,
            self.config.beta,
        )
    }

    pub fn surface(&self, alpha: f64) -> Result<GluedSurface> {
        let cfg = self.glue_config(alpha)?;
        gluing::build_surface(&self.pieces[0], &self.pieces[1], self.neck.clone(), &cfg)
    }

    pub fn grid(&self) -> SampleGrid {
        SampleGrid::new(
            self.config.n(),
            self.config.sample_dirs,
            self.config.samples_per_zone,
        )
    }
}

/// JSON description of a glued surface: enough to rebuild it with the same config.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceDescription {
    pub config: Config,
    pub config_hash: String,
    pub glue: gluing::GlueConfig,
    /// Unitary frames of the two graph charts as `[re, im]` entries, row-major.
    pub frames: [Vec<Vec<[f64; 2]>>; 2],
    /// Neck tabulation file when a cache directory is in use.
    pub neck_cache: Option<String>,
    pub neck_a: Vec<f64>,
    pub exterior: [gluing::exterior::Polynomial; 2],
    pub lambda_core: f64,
    pub lambda_overlap: f64,
}

impl Lab {
    pub fn describe(&self, surf: &GluedSurface, cache: Option<&Path>) -> SurfaceDescription {
        let frame = |m: &DMatrix<crate::symplectic::C64>| {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect()
        };
        SurfaceDescription {
            config: self.config.clone(),
            config_hash: self.config.hash(),
            glue: surf.cfg.clone(),
            frames: [frame(&surf.frames[0]), frame(&surf.frames[1])],
            neck_cache: cache.map(|d| {
                crate::lawlor::cache_path(d, &self.neck.params, self.config.quad_tol)
                    .display()
                    .to_string()
            }),
            neck_a: self.neck.params.a().to_vec(),
            exterior: surf.f.clone(),
            lambda_core: surf.lambda_core,
            lambda_overlap: surf.lambda_overlap,
        }
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fit `ln y = slope ln x + intercept`. `None` with fewer than two usable points.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LogFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LogFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// α-independent diagnostics of the neck.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeckReport {
    pub a: Vec<f64>,
    pub r0: f64,
    pub c0: f64,
    pub theta_inf: Vec<f64>,
    /// Largest `|Im dz|` over the `(λ, μ)` grid.
    pub sl_residual: f64,
    /// Largest relative `|ω(u, v)|` over the same grid.
    pub omega_residual: f64,
    /// Largest relative Frobenius error of the closed-form metric against a
    /// central-difference Gram matrix.
    pub metric_error: f64,
    pub angles: Vec<f64>,
    pub angle_sum: f64,
    pub grad_fit: LogFit,
    pub value_fit: LogFit,
    /// `(radius, sup)` pairs behind the two fits.
    pub grad_fit_points: Vec<[f64; 2]>,
    pub value_fit_points: Vec<[f64; 2]>,
    /// Largest `|∂g/∂s^k| / ((2/n)(2/A)^{n/2} |s|^{1-n})`.
    pub grad_bound_ratio: f64,
}

/// `(λ, μ)` grid of the neck checks: `lambdas` values in `[-span, span]` times
/// the vertices of an icosphere (n = 3) or random directions.
pub fn neck_grid(n: usize, lambdas: usize, span: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let l: Vec<f64> = (0..lambdas)
        .map(|i| -span + 2.0 * span * i as f64 / (lambdas - 1) as f64)
        .collect();
    let dirs = if n == 3 {
        spectral::icosphere(3)
            .0
            .iter()
            .map(|v| v.to_vec())
            .collect()
    } else {
        sampling::directions(n, 642, 3)
    };
    (l, dirs)
}

/// Tangent plane of the neck at `(λ, μ)`.
pub fn tangent_plane(neck: &LawlorNeck, lambda: f64, mu: &[f64]) -> Result<LagrangianPlane> {
    let q = real_gram_schmidt(&neck.tangent_frame(lambda, mu))
        .ok_or_else(|| Error::NoConvergence("degenerate neck frame".into()))?;
    Ok(LagrangianPlane::from_unitary(DMatrix::from_columns(&q)))
}

/// Central-difference Gram matrix of the neck embedding in the chart of
/// [`LawlorNeck::induced_metric`].
pub fn finite_difference_metric(
    neck: &LawlorNeck,
    lambda: f64,
    mu: &[f64],
    h: f64,
) -> DMatrix<f64> {
    let n = neck.n();
    let tau = crate::lawlor::sphere_tangent_basis(mu);
    let point = |l: f64, dir: Option<(usize, f64)>| {
        let m: Vec<f64> = match dir {
            None => mu.to_vec(),
            Some((i, t)) => {
                let v: Vec<f64> = mu.iter().zip(&tau[i]).map(|(a, b)| a + t * b).collect();
                let nv = sampling::norm(&v);
                v.iter().map(|c| c / nv).collect()
            }
        };
        neck.embed(l, &m)
    };
    let mut cols = Vec::with_capacity(n);
    let diff = |p: Vec<f64>, m: Vec<f64>| {
        p.iter()
            .zip(&m)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect::<Vec<f64>>()
    };
    cols.push(diff(point(lambda + h, None), point(lambda - h, None)));
    for i in 0..n - 1 {
        cols.push(diff(
            point(lambda, Some((i, h))),
            point(lambda, Some((i, -h))),
        ));
    }
    DMatrix::from_fn(n, n, |i, j| dot(&cols[i], &cols[j]))
}

pub fn measure_neck(lab: &Lab) -> Result<NeckReport> {
    let neck = &lab.neck;
    let n = neck.n();
    let (lambdas, dirs) = neck_grid(n, 64, 8.0);
    let mut sl: f64 = 0.0;
    let mut om: f64 = 0.0;
    for &l in &lambdas {
        for mu in &dirs {
            let fr = neck.tangent_frame(l, mu);
            sl = sl.max(geometry::frame_calibration(&fr)?.im.abs());
            for i in 0..n {
                for j in i + 1..n {
                    om = om.max((fr[i].dotc(&fr[j]).im / (fr[i].norm() * fr[j].norm())).abs());
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut metric_error: f64 = 0.0;
    for _ in 0..1000 {
        let l = rng.gen_range(-4.0..4.0);
        let mu = sampling::directions(n, 1, rng.gen())[0].clone();
        let g = neck.induced_metric(l, &mu);
        let fd = finite_difference_metric(neck, l, &mu, 1e-5);
        metric_error = metric_error.max((&g - &fd).norm() / g.norm());
    }
    let big = 1e6;
    let mut e1 = vec![0.0; n];
    e1[1] = 1.0;
    let pa = tangent_plane(neck, big, &e1)?;
    let pb = tangent_plane(neck, -big, &e1)?;
    let pair = characteristic_angles(&pa, &pb)?;
    let crit = angle_criterion(&pair.angles, 1e-6);
    let r0 = neck.r0();
    let radii = sampling::geomspace(2.0 * r0, 20.0 * r0, 12);
    let gdirs = sampling::directions(n, 24, 9);
    let graph = neck.asymptotic_graph(End::One, &radii, &gdirs)?;
    let mut gsup = vec![0.0f64; radii.len()];
    let mut vsup = vec![0.0f64; radii.len()];
    let amin = neck.params.min_a();
    let bound_c = (2.0 / n as f64) * (2.0 / amin).powf(n as f64 / 2.0);
    let mut ratio: f64 = 0.0;
    for (i, s) in graph.samples.iter().enumerate() {
        let ri = i / gdirs.len();
        gsup[ri] = gsup[ri].max(s.grad_norm());
        vsup[ri] = vsup[ri].max(s.g.abs());
        let b = bound_c * s.radius().powf(1.0 - n as f64);
        ratio = ratio.max(s.grad.iter().map(|d| d.abs()).fold(0.0, f64::max) / b);
    }
    let no_fit = || Error::NoConvergence("decay fit".into());
    Ok(NeckReport {
        a: neck.params.a().to_vec(),
        r0,
        c0: lab.c0,
        theta_inf: neck.theta_inf.clone(),
        sl_residual: sl,
        omega_residual: om,
        metric_error,
        angles: pair.angles.clone(),
        angle_sum: crit.sum,
        grad_fit: fit_loglog(&radii, &gsup).ok_or_else(no_fit)?,
        value_fit: fit_loglog(&radii, &vsup).ok_or_else(no_fit)?,
        grad_fit_points: radii.iter().zip(&gsup).map(|(r, g)| [*r, *g]).collect(),
        value_fit_points: radii.iter().zip(&vsup).map(|(r, g)| [*r, *g]).collect(),
        grad_bound_ratio: ratio,
    })
}

/// Everything measured at one α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub overlap_position: f64,
    pub overlap_derivative: f64,
    pub omega_transition: f64,
    pub exactness_mismatches: usize,
    pub sup_sin_transition: f64,
    pub min_cos_transition: f64,
    pub holder_sin_transition: f64,
    pub sup_mean_curvature: f64,
    pub metric_deviation: f64,
    pub min_metric_det: f64,
    pub max_metric_det: f64,
    pub residual_weighted_sup: f64,
    pub residual_sup_exterior: f64,
    pub volume_total: f64,
    pub volume_neck: f64,
    pub displacement_potential: f64,
    pub displacement_normal: f64,
    pub annulus: gluing::AnnulusBounds,
    pub hessian: gluing::HessianBounds,
    pub cutoff_grad_scaled: f64,
    pub weight: gluing::weight::WeightSurvey,
    pub weight_inverse_integral: f64,
    pub spectral: Option<SpectralReport>,
    /// Wall-clock seconds; excluded from CSV output.
    pub seconds: f64,
}

/// Spectral diagnostics at one α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub nodes: usize,
    pub mesh_volume: f64,
    pub nu: Vec<f64>,
    pub eig_residual: f64,
    pub rayleigh_bound: f64,
    pub sigma_s: f64,
    pub sup_s_bar_minus_s: f64,
    pub psi1_s: f64,
    pub psi1_s_weighted: f64,
    pub psi1_integral: f64,
    pub boundary_v_integral: f64,
    /// Largest `|⟨ψ₁, u⟩_nodal - ⟨ψ₁, u⟩_weak|` relative to `|u|` over random `u`.
    pub green_consistency: f64,
}

pub fn measure_point(lab: &Lab, alpha: f64) -> Result<PointReport> {
    let start = Instant::now();
    let surf = lab.surface(alpha)?;
    let grid = lab.grid();
    let n = surf.n;
    let eps = surf.epsilon();
    let mut overlap = (0.0f64, 0.0f64);
    for w in grid.dirs.iter().take(16) {
        for i in 0..=8 {
            let l = surf.lambda_core + (surf.lambda_overlap - surf.lambda_core) * i as f64 / 8.0;
            let mu = surf.core_mu(l, w);
            for lam in [l, -l] {
                let (p, d) = surf.overlap_gap(lam, &mu)?;
                overlap = (overlap.0.max(p), overlap.1.max(d));
            }
        }
    }
    let tpts = grid.transition_points(&surf);
    let mut omega: f64 = 0.0;
    for p in &tpts {
        omega = omega.max(surf.omega_residual(p)?);
    }
    let exact = gluing::exactness_mismatches(&surf, &grid.dirs, 6)?;
    let stats = geometry::transition_stats(&surf, &grid, lab.config.beta)?;
    let weight = surf.weight();
    let res = geometry::residual(&surf, &weight, &grid)?;
    let vol_total = geometry::volume(&surf, Region::All)?;
    let vol_neck = geometry::volume(&surf, Region::NeckTotal)?;
    let disp = geometry::transition_displacement(&surf, &grid)?;
    let annulus = gluing::annulus_bounds(&surf, &grid.dirs, 5)?;
    let hessian = gluing::hessian_bounds(&surf, &grid.dirs, 5)?;
    let cutoff_grad_scaled = {
        let d = surf.delta();
        (0..=400)
            .map(|i| d * surf.cutoff.jet(0.5 * d + 0.5 * d * i as f64 / 400.0).0[1].abs())
            .fold(0.0, f64::max)
    };
    let p = (n - 1) as i32;
    let inv = geometry::integrate(&surf, Region::All, 0, 1e-3, |_, x| {
        weight.value(sampling::norm(x)).powi(-p)
    })?;
    let spectral = if lab.config.geometry_only {
        None
    } else {
        Some(measure_spectrum(lab, &surf)?)
    };
    Ok(PointReport {
        alpha,
        epsilon: eps,
        delta: surf.delta(),
        overlap_position: overlap.0,
        overlap_derivative: overlap.1,
        omega_transition: omega,
        exactness_mismatches: exact,
        sup_sin_transition: stats.sup_sin,
        min_cos_transition: stats.min_cos,
        holder_sin_transition: stats.holder_sin,
        sup_mean_curvature: stats.sup_mean_curvature,
        metric_deviation: stats.metric_dev,
        min_metric_det: stats.min_det,
        max_metric_det: stats.max_det,
        residual_weighted_sup: res.weighted_sup,
        residual_sup_exterior: res.sup_exterior,
        volume_total: vol_total.value,
        volume_neck: vol_neck.value,
        displacement_potential: disp.potential,
        displacement_normal: disp.normal,
        annulus,
        hessian,
        cutoff_grad_scaled,
        weight: weight.survey(600, surf.outer_radius),
        weight_inverse_integral: inv.value,
        spectral,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mesh, assemble and solve, then build the eigenfunction fields.
pub fn spectral_pipeline(
    lab: &Lab,
    surf: &GluedSurface,
) -> Result<(
    SurfaceMesh,
    spectral::SpectralSystem,
    spectral::Spectrum,
    spectral::EigenFields,
)> {
    let mesh = spectral::build_mesh(surf, lab.config.resolution())?;
    let sys = spectral::assemble(&mesh.mesh)?;
    let sp = spectral::neumann_eigs(&sys, 4)?;
    let fields = spectral::eigen_fields(&sys, &sp, surf, &mesh, &surf.weight())?;
    Ok((mesh, sys, sp, fields))
}

pub fn measure_spectrum(lab: &Lab, surf: &GluedSurface) -> Result<SpectralReport> {
    let (mesh, sys, sp, fields) = spectral_pipeline(lab, surf)?;
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let mut green: f64 = 0.0;
    for _ in 0..10 {
        let u: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nodal = sys.inner(&u, &fields.psi1);
        let weak = fields.psi1_pairing(&u);
        let scale = sys.inner(&u, &u).sqrt() * sys.inner(&fields.psi1, &fields.psi1).sqrt();
        green = green.max((nodal - weak).abs() / scale);
    }
    Ok(SpectralReport {
        nodes: sys.n(),
        mesh_volume: sys.volume,
        nu: sp.values(),
        eig_residual: sp.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
        rayleigh_bound: spectral::rayleigh_test_bound(surf, &mesh, &sys),
        sigma_s: fields.sigma_s,
        sup_s_bar_minus_s: fields.sup_s_bar_minus_s,
        psi1_s: fields.psi1_s,
        psi1_s_weighted: fields.psi1_s_weighted,
        psi1_integral: fields.psi1_integral,
        boundary_v_integral: fields.boundary_v_integral,
        green_consistency: green,
    })
}
