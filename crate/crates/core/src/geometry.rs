//! Calibrated-geometry diagnostics on the glued surface.
//!
//! Conventions: the Lagrangian angle is defined by `e^{iθ} = dz(e_1, .., e_n)`
//! on an oriented orthonormal tangent frame, so `sin θ` and `cos θ` are the
//! pairings of `Im dz` and `Re dz` with the volume form. The mean curvature is
//! `H = J ∇θ`.

use crate::error::{Error, Result};
use crate::gluing::{ChartPoint, GluedSurface, Region, WeightFunction, Zone};
use crate::lawlor::End;
use crate::quadrature::{GaussRule, SphereRule};
use crate::symplectic::{real_gram_schmidt, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// `det_C(I + i H)` as `(re, im)`.
pub fn hl_pullback(hess: &DMatrix<f64>) -> (f64, f64) {
    let n = hess.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        C64::new(if i == j { 1.0 } else { 0.0 }, hess[(i, j)])
    });
    let d = m.determinant();
    (d.re, d.im)
}

/// `dz` of the orthonormalized frame.
pub fn frame_calibration(frame: &[DVector<C64>]) -> Result<C64> {
    let q = real_gram_schmidt(frame)
        .ok_or_else(|| Error::ChartDomainError("degenerate tangent frame".into()))?;
    Ok(DMatrix::from_columns(&q).determinant())
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSample {
    pub point: Vec<f64>,
    pub re_dz: f64,
    pub im_dz: f64,
    pub theta: f64,
    pub mean_curvature: Vec<f64>,
}

/// Calibration `e^{iθ}` at a chart point.
///
/// Graph charts use `phase · det(I + iHess) / |det(I + iHess)|`; the neck chart
/// orthonormalizes its frame.
pub fn calibration(surf: &GluedSurface, p: &ChartPoint) -> Result<C64> {
    surf.check_domain(p)?;
    match p {
        ChartPoint::Graph { sheet, x } => {
            let j = surf.sheet_jet(*sheet, x, false)?;
            Ok(graph_calibration(surf, *sheet, &j.hess))
        }
        ChartPoint::Neck { .. } => {
            let fr = surf.tangent_frame(p)?;
            Ok(frame_calibration(&fr)? * surf.orientation(p))
        }
    }
}

pub fn graph_calibration(surf: &GluedSurface, sheet: End, hess: &DMatrix<f64>) -> C64 {
    let (re, im) = hl_pullback(hess);
    let z = C64::new(re, im);
    surf.frame_phase(sheet) * (z / z.norm())
}

/// Frame-based calibration on any chart (the reference route).
pub fn calibration_by_frame(surf: &GluedSurface, p: &ChartPoint) -> Result<C64> {
    surf.check_domain(p)?;
    let fr = surf.tangent_frame(p)?;
    Ok(frame_calibration(&fr)? * surf.orientation(p))
}

pub fn lagrangian_angle(surf: &GluedSurface, p: &ChartPoint) -> Result<CalibrationSample> {
    let z = calibration(surf, p)?;
    Ok(CalibrationSample {
        point: surf.embed(p)?,
        re_dz: z.re,
        im_dz: z.im,
        theta: z.im.atan2(z.re),
        mean_curvature: mean_curvature(surf, p)?,
    })
}

fn wrap(d: f64) -> f64 {
    let t = std::f64::consts::TAU;
    d - t * (d / t).round()
}

/// Mean curvature vector `J ∇θ` in real ambient coordinates, with `∇θ` from
/// centered differences of the angle in chart coordinates.
pub fn mean_curvature(surf: &GluedSurface, p: &ChartPoint) -> Result<Vec<f64>> {
    surf.check_domain(p)?;
    let n = surf.n;
    let frame = surf.tangent_frame(p)?;
    let mut dtheta = vec![0.0; n];
    match p {
        ChartPoint::Graph { sheet, x } => {
            let r = crate::sampling::norm(x);
            let h = 1e-4 * r.min(surf.delta());
            let zone = surf.zone_of(p);
            for j in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let tp =
                    graph_calibration(surf, *sheet, &surf.zone_jet(*sheet, &xp, zone, false)?.hess);
                let tm =
                    graph_calibration(surf, *sheet, &surf.zone_jet(*sheet, &xm, zone, false)?.hess);
                dtheta[j] = wrap(tp.im.atan2(tp.re) - tm.im.atan2(tm.re)) / (2.0 * h);
            }
        }
        ChartPoint::Neck { lambda, mu } => {
            let h = 1e-4;
            let at = |l: f64, m: Vec<f64>| -> Result<f64> {
                let q = ChartPoint::Neck { lambda: l, mu: m };
                let fr = surf.tangent_frame(&q)?;
                let z = frame_calibration(&fr)? * surf.orientation(&q);
                Ok(z.im.atan2(z.re))
            };
            dtheta[0] = wrap(at(lambda + h, mu.clone())? - at(lambda - h, mu.clone())?) / (2.0 * h);
            for (i, tau) in crate::lawlor::sphere_tangent_basis(mu).iter().enumerate() {
                let shift = |s: f64| {
                    let v: Vec<f64> = mu.iter().zip(tau).map(|(a, b)| a + s * b).collect();
                    let nv = crate::sampling::norm(&v);
                    v.iter().map(|c| c / nv).collect::<Vec<_>>()
                };
                dtheta[i + 1] = wrap(at(*lambda, shift(h))? - at(*lambda, shift(-h))?) / (2.0 * h);
            }
        }
    }
    let g = DMatrix::from_fn(n, n, |i, j| frame[i].dotc(&frame[j]).re);
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::ChartDomainError("singular metric".into()))?;
    let coef = &ginv * DVector::from_column_slice(&dtheta);
    let mut grad = DVector::<C64>::zeros(n);
    for i in 0..n {
        grad += &frame[i] * C64::new(coef[i], 0.0);
    }
    let h = grad * C64::new(0.0, 1.0);
    let mut out = vec![0.0; 2 * n];
    for k in 0..n {
        out[k] = h[k].re;
        out[n + k] = h[k].im;
    }
    Ok(out)
}

/// Volume density `sqrt(det g)` of a graph chart with Hessian `hess`.
pub fn graph_density(hess: &DMatrix<f64>) -> f64 {
    let n = hess.nrows();
    (DMatrix::identity(n, n) + hess * hess).determinant().sqrt()
}

/// A volume or integral with its two-level refinement estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral {
    pub value: f64,
    pub coarse: f64,
    pub error: f64,
}

/// Quadrature points of one zone at refinement `level`: `(chart point, weight)`.
/// The weight includes the Jacobian of the chart parametrization but not the
/// metric density.
pub fn zone_points(
    surf: &GluedSurface,
    zone: Zone,
    sheet: End,
    level: usize,
) -> Result<Vec<(ChartPoint, f64)>> {
    if zone == Zone::Transition {
        zone_points_with(surf, zone, sheet, 8, 4 << level, 6 + 2 * level)
    } else {
        zone_points_with(surf, zone, sheet, 8 << level, 1, 6 + 2 * level)
    }
}

/// Tensor rule with `panels` composite Gauss panels of `m_r` nodes in the
/// radial variable and a sphere rule of order `m_s`.
pub fn zone_points_with(
    surf: &GluedSurface,
    zone: Zone,
    sheet: End,
    m_r: usize,
    panels: usize,
    m_s: usize,
) -> Result<Vec<(ChartPoint, f64)>> {
    let n = surf.n;
    let sph = SphereRule::new(n, m_s);
    let gl = GaussRule::legendre(m_r);
    let composite = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..panels)
            .flat_map(|k| {
                let a = lo + (hi - lo) * k as f64 / panels as f64;
                let b = lo + (hi - lo) * (k + 1) as f64 / panels as f64;
                gl.mapped(a, b)
            })
            .collect()
    };
    let d = surf.delta();
    let mut tasks: Vec<(ChartPoint, f64)> = Vec::new();
    match zone {
        Zone::NeckCore => {
            if sheet == End::Two {
                return Ok(tasks);
            }
            let lc = surf.lambda_core;
            for half in [-1.0, 1.0] {
                for (l, wl) in composite(0.0, lc) {
                    for (mu, wm) in sph.points.iter().zip(&sph.weights) {
                        tasks.push((
                            ChartPoint::Neck {
                                lambda: half * l,
                                mu: mu.clone(),
                            },
                            wl * wm,
                        ));
                    }
                }
            }
        }
        _ => {
            for (w, ww) in sph.points.iter().zip(&sph.weights) {
                let (lo, hi) = match zone {
                    Zone::Exterior => (d, surf.outer_radius),
                    Zone::Transition => (0.5 * d, d),
                    _ => (surf.core_radius(w), 0.5 * d),
                };
                for (u, wu) in composite(lo.ln(), hi.ln()) {
                    let r = u.exp();
                    let x: Vec<f64> = w.iter().map(|c| c * r).collect();
                    tasks.push((ChartPoint::Graph { sheet, x }, ww * wu * r.powi(n as i32)));
                }
            }
        }
    }
    Ok(tasks)
}

pub fn density(surf: &GluedSurface, p: &ChartPoint, zone: Zone) -> Result<f64> {
    match p {
        ChartPoint::Neck { lambda, mu } => {
            let g = surf.neck.induced_metric(*lambda, mu);
            Ok(surf.epsilon().powi(surf.n as i32) * g.determinant().sqrt())
        }
        ChartPoint::Graph { sheet, x } => {
            let j = surf.zone_jet(*sheet, x, zone, false)?;
            Ok(graph_density(&j.hess))
        }
    }
}

/// `∫_region f dVol` at one quadrature level.
pub fn integrate_level<F>(surf: &GluedSurface, region: Region, level: usize, f: &F) -> Result<f64>
where
    F: Fn(&ChartPoint, &[f64]) -> f64 + Sync,
{
    let mut total = 0.0;
    for zone in [
        Zone::Exterior,
        Zone::Transition,
        Zone::NeckGraph,
        Zone::NeckCore,
    ] {
        if !region.contains(zone) {
            continue;
        }
        for sheet in [End::One, End::Two] {
            let pts = zone_points(surf, zone, sheet, level)?;
            let parts: Result<Vec<f64>> = pts
                .par_iter()
                .map(|(p, w)| {
                    let dens = density(surf, p, zone)?;
                    let x = surf.embed(p)?;
                    Ok(w * dens * f(p, &x))
                })
                .collect();
            total += parts?.iter().sum::<f64>();
        }
    }
    Ok(total)
}

/// `∫_region f dVol` with a two-level convergence certificate.
pub fn integrate<F>(
    surf: &GluedSurface,
    region: Region,
    level: usize,
    rel_tol: f64,
    f: F,
) -> Result<Integral>
where
    F: Fn(&ChartPoint, &[f64]) -> f64 + Sync,
{
    let coarse = integrate_level(surf, region, level, &f)?;
    let fine = integrate_level(surf, region, level + 1, &f)?;
    let error = (fine - coarse).abs();
    if error > rel_tol * fine.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::QuadratureNonConvergence {
            estimate: error,
            tol: rel_tol * fine.abs(),
        });
    }
    Ok(Integral {
        value: fine,
        coarse,
        error,
    })
}

/// Relative agreement required between the two quadrature levels of [`volume`].
pub const VOLUME_TOL: f64 = 1e-6;

pub fn volume(surf: &GluedSurface, region: Region) -> Result<Integral> {
    integrate(surf, region, 0, VOLUME_TOL, |_, _| 1.0)
}

/// Sample points covering every zone of the surface.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub dirs: Vec<Vec<f64>>,
    pub per_zone: usize,
}

impl SampleGrid {
    pub fn new(n: usize, dirs: usize, per_zone: usize) -> Self {
        Self {
            dirs: crate::sampling::directions(n, dirs, 11),
            per_zone,
        }
    }

    /// `(zone, chart point)` pairs.
    pub fn points(&self, surf: &GluedSurface) -> Vec<(Zone, ChartPoint)> {
        let d = surf.delta();
        let m = self.per_zone;
        let mut out = Vec::new();
        for sheet in [End::One, End::Two] {
            for w in &self.dirs {
                let rc = surf.core_radius(w);
                for i in 0..m {
                    let t = (i as f64 + 0.5) / m as f64;
                    for (zone, lo, hi) in [
                        (Zone::NeckGraph, rc, 0.5 * d),
                        (Zone::Transition, 0.5 * d, d),
                        (Zone::Exterior, d, surf.outer_radius),
                    ] {
                        let r = lo * (hi / lo).powf(t);
                        out.push((
                            zone,
                            ChartPoint::Graph {
                                sheet,
                                x: w.iter().map(|c| c * r).collect(),
                            },
                        ));
                    }
                }
            }
        }
        for i in 0..m {
            let l = -surf.lambda_core + 2.0 * surf.lambda_core * (i as f64 + 0.5) / m as f64;
            for w in &self.dirs {
                out.push((
                    Zone::NeckCore,
                    ChartPoint::Neck {
                        lambda: l,
                        mu: w.clone(),
                    },
                ));
            }
        }
        out
    }

    /// Points of the transition annuli only, ordered by sheet, direction and radius.
    pub fn transition_points(&self, surf: &GluedSurface) -> Vec<ChartPoint> {
        let d = surf.delta();
        let mut out = Vec::new();
        for sheet in [End::One, End::Two] {
            for w in &self.dirs {
                for i in 0..=self.per_zone {
                    let r = 0.5 * d + 0.5 * d * i as f64 / self.per_zone as f64;
                    out.push(ChartPoint::Graph {
                        sheet,
                        x: w.iter().map(|c| c * r).collect(),
                    });
                }
            }
        }
        out
    }
}

/// How far the transition graphs move away from the exterior pieces.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionDisplacement {
    /// `sup |η (g_ε - f)|`, the change of the graphing potential.
    pub potential: f64,
    /// `sup |∇(η (g_ε - f))|`, the normal distance between the graphs.
    pub normal: f64,
}

pub fn transition_displacement(
    surf: &GluedSurface,
    grid: &SampleGrid,
) -> Result<TransitionDisplacement> {
    let mut out = TransitionDisplacement {
        potential: 0.0,
        normal: 0.0,
    };
    for p in grid.transition_points(surf) {
        let ChartPoint::Graph { sheet, x } = &p else {
            continue;
        };
        let f = &surf.f[sheet.index()];
        let blend = surf.blend_jet(*sheet, x, true)?;
        let (fv, fg) = if f.is_zero() {
            (0.0, DVector::zeros(surf.n))
        } else {
            (f.value(x), f.grad(x))
        };
        out.potential = out.potential.max((blend.value - fv).abs());
        out.normal = out.normal.max((&blend.grad - fg).norm());
    }
    Ok(out)
}

/// One sample of the residual `E = sin θ`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualSample {
    pub zone: Zone,
    pub radius: f64,
    pub e: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualField {
    pub samples: Vec<ResidualSample>,
    /// `sup |ρ² E|` over all samples.
    pub weighted_sup: f64,
    pub sup_transition: f64,
    pub sup_neck: f64,
    pub sup_exterior: f64,
}

pub fn residual(
    surf: &GluedSurface,
    weight: &WeightFunction,
    grid: &SampleGrid,
) -> Result<ResidualField> {
    let pts = grid.points(surf);
    let samples: Result<Vec<ResidualSample>> = pts
        .par_iter()
        .map(|(zone, p)| {
            let z = calibration(surf, p)?;
            let x = surf.embed(p)?;
            let r = crate::sampling::norm(&x);
            Ok(ResidualSample {
                zone: *zone,
                radius: r,
                e: z.im,
                rho: weight.value(r),
            })
        })
        .collect();
    let samples = samples?;
    let sup = |f: &dyn Fn(&ResidualSample) -> bool| {
        samples
            .iter()
            .filter(|s| f(s))
            .map(|s| s.e.abs())
            .fold(0.0, f64::max)
    };
    Ok(ResidualField {
        weighted_sup: samples
            .iter()
            .map(|s| (s.rho * s.rho * s.e).abs())
            .fold(0.0, f64::max),
        sup_transition: sup(&|s| s.zone == Zone::Transition),
        sup_neck: sup(&|s| matches!(s.zone, Zone::NeckGraph | Zone::NeckCore)),
        sup_exterior: sup(&|s| s.zone == Zone::Exterior),
        samples,
    })
}

/// Transition-zone diagnostics of the angle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionAngleStats {
    pub sup_sin: f64,
    pub min_cos: f64,
    pub sup_mean_curvature: f64,
    /// Sampled `sup |sin θ(x) - sin θ(y)| / |X - Y|^β`.
    pub holder_sin: f64,
    /// Largest `|g - I|` (operator norm) of the graph metric.
    pub metric_dev: f64,
    pub min_det: f64,
    pub max_det: f64,
}

pub fn transition_stats(
    surf: &GluedSurface,
    grid: &SampleGrid,
    beta: f64,
) -> Result<TransitionAngleStats> {
    let pts = grid.transition_points(surf);
    let data: Result<Vec<(Vec<f64>, f64, f64, f64, f64, f64)>> = pts
        .par_iter()
        .map(|p| {
            let ChartPoint::Graph { sheet, x } = p else {
                unreachable!()
            };
            let j = surf.zone_jet(*sheet, x, Zone::Transition, false)?;
            let z = graph_calibration(surf, *sheet, &j.hess);
            let h = mean_curvature(surf, p)?;
            let g = DMatrix::identity(surf.n, surf.n) + &j.hess * &j.hess;
            let dev = (&g - DMatrix::identity(surf.n, surf.n))
                .symmetric_eigenvalues()
                .amax();
            Ok((
                surf.embed(p)?,
                z.im,
                z.re,
                crate::sampling::norm(&h),
                dev,
                g.determinant(),
            ))
        })
        .collect();
    let data = data?;
    let mut holder: f64 = 0.0;
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            let dx: f64 = data[i]
                .0
                .iter()
                .zip(&data[j].0)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dx > 0.0 {
                holder = holder.max((data[i].1 - data[j].1).abs() / dx.powf(beta));
            }
        }
    }
    Ok(TransitionAngleStats {
        sup_sin: data.iter().map(|d| d.1.abs()).fold(0.0, f64::max),
        min_cos: data.iter().map(|d| d.2.abs()).fold(f64::INFINITY, f64::min),
        sup_mean_curvature: data.iter().map(|d| d.3).fold(0.0, f64::max),
        holder_sin: holder,
        metric_dev: data.iter().map(|d| d.4).fold(0.0, f64::max),
        min_det: data.iter().map(|d| d.5).fold(f64::INFINITY, f64::min),
        max_det: data.iter().map(|d| d.5).fold(0.0, f64::max),
    })
}

/// Largest ratio of the neck volume density to that of the cone metric
/// `2 dλ² + 2 λ² g_S` over sampled `|λ| ≥ A^{-1/2}`.
pub fn cone_comparison(neck: &crate::lawlor::LawlorNeck, dirs: &[Vec<f64>]) -> f64 {
    let n = neck.n();
    let l0 = 1.0 / neck.params.min_a().sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let l = l0 * 1.15f64.powi(i);
        for sgn in [-1.0, 1.0] {
            for mu in dirs {
                let g = neck.induced_metric(sgn * l, mu);
                let vol0 = 2f64.powf(n as f64 / 2.0) * l.powi(n as i32 - 1);
                worst = worst.max(g.determinant().sqrt() / vol0);
            }
        }
    }
    worst
}
