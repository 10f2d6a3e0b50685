//! Gluing a rescaled Lawlor neck into a pair of intersecting special
//! Lagrangian pieces.
//!
//! The glued surface is `M'_1 ∪ T_1 ∪ N' ∪ T_2 ∪ M'_2`. Over each plane the
//! surface is the gradient graph of
//!
//! ```text
//! F_i = f_i                    for |x| ≥ δ        (exterior)
//! F_i = (1 - η) f_i + η g_ε    for δ/2 ≤ |x| ≤ δ  (transition)
//! F_i = g_ε                    for |x| ≤ δ/2      (neck, graph part)
//! ```
//!
//! and near the origin it is the rescaled neck `ε N_a` in its own chart.

pub mod cutoff;
pub mod exterior;
pub mod weight;

pub use cutoff::Cutoff;
pub use exterior::{ExteriorPiece, Monomial, Polynomial};
pub use weight::WeightFunction;

use crate::error::{Error, Result};
use crate::lawlor::{End, GraphJet, LawlorNeck};
use crate::symplectic::{characteristic_angles, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_ALPHA_CEILING: f64 = 0.25;
pub const ALPHA_FLOOR: f64 = 1e-3;

/// Gluing parameters for one value of `α`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlueConfig {
    pub n: usize,
    pub alpha: f64,
    pub k: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// `ε = c_match α^{1+1/n}`.
    pub c_match: f64,
    pub c0: f64,
    pub r0: f64,
    pub beta: f64,
    pub r_weight: f64,
    pub a_weight: f64,
    pub b_weight: f64,
    pub alpha_ceiling: f64,
}

/// Choose `δ = α/K` and the largest admissible `ε = α^{1+1/n} / (2 K C_0^{1/n})`.
pub fn select_parameters(alpha: f64, k: f64, c0: f64, r0: f64, n: usize) -> Result<GlueConfig> {
    select_parameters_with(alpha, k, c0, r0, n, DEFAULT_ALPHA_CEILING, 0.1)
}

pub fn select_parameters_with(
    alpha: f64,
    k: f64,
    c0: f64,
    r0: f64,
    n: usize,
    ceiling: f64,
    beta: f64,
) -> Result<GlueConfig> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha > ceiling {
        return Err(Error::AlphaTooLarge {
            alpha,
            reason: format!("admissible range is (0, {ceiling}]"),
        });
    }
    if alpha < ALPHA_FLOOR {
        return Err(Error::AlphaTooLarge {
            alpha,
            reason: format!(
                "values below {ALPHA_FLOOR} collapse the neck scale in double precision"
            ),
        });
    }
    if !(k > 0.0 && c0 > 0.0 && r0 > 0.0) {
        return Err(Error::ParameterInconsistency(
            "K, C0 and R0 must be positive".into(),
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::ParameterInconsistency(
            "beta must lie in (0, 1)".into(),
        ));
    }
    let nf = n as f64;
    let delta = alpha / k;
    let c_match = 1.0 / (2.0 * k * c0.powf(1.0 / nf));
    let epsilon = c_match * alpha.powf(1.0 + 1.0 / nf);
    if epsilon * r0 > 0.5 * delta {
        return Err(Error::AlphaTooLarge {
            alpha,
            reason: format!(
                "neck radius εR0 = {:.3e} exceeds δ/2 = {:.3e}",
                epsilon * r0,
                0.5 * delta
            ),
        });
    }
    Ok(GlueConfig {
        n,
        alpha,
        k,
        delta,
        epsilon,
        c_match,
        c0,
        r0,
        beta,
        r_weight: 1.0,
        a_weight: 2.0 * r0,
        b_weight: 1.0,
        alpha_ceiling: ceiling,
    })
}

/// Zones of the glued surface, one per chart formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
pub enum Zone {
    Exterior,
    Transition,
    NeckGraph,
    NeckCore,
}

/// Region selectors for integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Exterior,
    Transition,
    /// `N'`: everything inside `|x| ≤ δ/2`.
    NeckCore,
    /// `T_1 ∪ N' ∪ T_2`.
    NeckTotal,
    All,
}

impl Region {
    pub fn contains(self, zone: Zone) -> bool {
        match self {
            Region::Exterior => zone == Zone::Exterior,
            Region::Transition => zone == Zone::Transition,
            Region::NeckCore => matches!(zone, Zone::NeckGraph | Zone::NeckCore),
            Region::NeckTotal => zone != Zone::Exterior,
            Region::All => true,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exterior" => Region::Exterior,
            "transition" => Region::Transition,
            "neck-core" => Region::NeckCore,
            "neck-total" => Region::NeckTotal,
            "all" => Region::All,
            _ => return None,
        })
    }
}

/// A point of the glued surface in one of its charts.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartPoint {
    /// Plane coordinates `x` of the graph over sheet `sheet`.
    Graph { sheet: End, x: Vec<f64> },
    /// Neck parameters `(λ, μ)` of the rescaled Lawlor neck.
    Neck { lambda: f64, mu: Vec<f64> },
}

/// Axial layer of the cylinder parametrization `[-1, 1] x S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LayerKind {
    Core {
        lambda: f64,
    },
    /// Log-interpolation fraction between the core boundary and `δ/2`.
    NeckGraph {
        sheet: End,
        tau: f64,
    },
    Radial {
        sheet: End,
        r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Layer {
    pub t: f64,
    pub kind: LayerKind,
    pub zone: Zone,
}

/// Cells per zone on one sheet of the cylinder.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LayerPlan {
    pub core: usize,
    pub neck_graph: usize,
    pub transition: usize,
    pub exterior: usize,
}

/// The glued approximate solution `M̄_α`.
#[derive(Debug, Clone)]
pub struct GluedSurface {
    pub n: usize,
    pub cfg: GlueConfig,
    pub neck: Arc<LawlorNeck>,
    pub f: [exterior::Polynomial; 2],
    pub outer_radius: f64,
    /// Unitary frames of the graph charts.
    pub frames: [DMatrix<C64>; 2],
    /// Unitary map carrying the neck's asymptotic planes to the exterior planes.
    pub q: DMatrix<C64>,
    pub cutoff: Cutoff,
    /// `|λ|` of the boundary between the neck chart and the neck graph zone.
    pub lambda_core: f64,
    /// Largest `|λ|` covered by the neck chart.
    pub lambda_overlap: f64,
    core_factors: Vec<f64>,
    orient: [f64; 2],
    neck_orient: f64,
}

fn sheet_index(s: End) -> usize {
    s.index()
}

/// Glue `ε N_a` into the pieces `ext1`, `ext2`.
pub fn build_surface(
    ext1: &ExteriorPiece,
    ext2: &ExteriorPiece,
    neck: Arc<LawlorNeck>,
    cfg: &GlueConfig,
) -> Result<GluedSurface> {
    let n = neck.n();
    if ext1.plane.dim() != n || ext2.plane.dim() != n || cfg.n != n {
        return Err(Error::ParameterInconsistency(
            "dimensions of neck, pieces and config differ".into(),
        ));
    }
    ext1.f.validate(n)?;
    ext2.f.validate(n)?;
    if (ext1.outer_radius - ext2.outer_radius).abs() > 0.0 {
        return Err(Error::ParameterInconsistency(
            "exterior pieces must share the outer radius".into(),
        ));
    }
    let outer = ext1.outer_radius;
    if (cfg.r0 - neck.r0()).abs() > 1e-12 * neck.r0() {
        return Err(Error::ParameterInconsistency(
            "config R0 differs from the neck".into(),
        ));
    }
    if cfg.delta >= 0.5 * outer {
        return Err(Error::ParameterInconsistency(format!(
            "δ = {} must be below half the outer radius {}",
            cfg.delta, outer
        )));
    }
    let (p1, p2) = neck.asymptotic_planes();
    let ca_neck = characteristic_angles(&p1, &p2)?;
    let ca_ext = characteristic_angles(&ext1.plane, &ext2.plane)?;
    let gap = ca_neck
        .angles
        .iter()
        .zip(&ca_ext.angles)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if gap > 1e-6 || ca_neck.frame_on_second != ca_ext.frame_on_second {
        return Err(Error::PlaneMismatch { gap });
    }
    let q = &ca_ext.frame * ca_neck.frame.adjoint();
    let frames = [&q * neck.end_frame(End::One), &q * neck.end_frame(End::Two)];
    let orient = [
        frames[0].determinant().re.signum(),
        frames[1].determinant().re.signum(),
    ];
    let eps = cfg.epsilon;
    let r0 = neck.r0();
    let lambda_core = solve_increasing(|l| min_of(&neck.radial_factors(l)) - r0, 0.0)?;
    let core_factors = neck.radial_factors(lambda_core);
    if eps * max_of(&core_factors) >= 0.5 * cfg.delta {
        return Err(Error::ParameterInconsistency(
            "neck core does not fit inside δ/2".into(),
        ));
    }
    let lambda_overlap = solve_increasing(
        |l| max_of(&neck.radial_factors(l)) - 0.5 * cfg.delta / eps,
        lambda_core,
    )?;
    let mut surf = GluedSurface {
        n,
        cfg: cfg.clone(),
        neck,
        f: [ext1.f.clone(), ext2.f.clone()],
        outer_radius: outer,
        frames,
        q,
        cutoff: Cutoff::new(cfg.delta),
        lambda_core,
        lambda_overlap,
        core_factors,
        orient,
        neck_orient: 1.0,
    };
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let frame = surf.tangent_frame(&ChartPoint::Neck {
        lambda: 0.0,
        mu: e1,
    })?;
    let q = crate::symplectic::real_gram_schmidt(&frame)
        .ok_or_else(|| Error::ParameterInconsistency("degenerate neck frame".into()))?;
    surf.neck_orient = DMatrix::from_columns(&q).determinant().re.signum();
    Ok(surf)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Root of an increasing function on `[lo, ∞)` by bracketing and bisection.
fn solve_increasing<F: Fn(f64) -> f64>(f: F, lo: f64) -> Result<f64> {
    let mut a = lo;
    if f(a) >= 0.0 {
        return Ok(a);
    }
    let mut b = lo.max(0.5) * 2.0;
    while f(b) < 0.0 {
        a = b;
        b *= 2.0;
        if b > 1e12 {
            return Err(Error::NoConvergence("radius bracket".into()));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn complex_of(x: &[f64], y: &DVector<f64>) -> DVector<C64> {
    DVector::from_fn(x.len(), |k, _| C64::new(x[k], y[k]))
}

fn to_real(z: &DVector<C64>) -> Vec<f64> {
    let n = z.len();
    let mut v = vec![0.0; 2 * n];
    for k in 0..n {
        v[k] = z[k].re;
        v[n + k] = z[k].im;
    }
    v
}

impl GluedSurface {
    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon
    }

    /// Radial weight of this surface built from its configuration.
    pub fn weight(&self) -> WeightFunction {
        let c = &self.cfg;
        WeightFunction::new(c.r_weight, c.epsilon, c.beta, c.a_weight, c.b_weight)
    }

    pub fn delta(&self) -> f64 {
        self.cfg.delta
    }

    /// Radius of the neck-chart boundary in direction `ω`.
    pub fn core_radius(&self, omega: &[f64]) -> f64 {
        let s: f64 = omega
            .iter()
            .zip(&self.core_factors)
            .map(|(w, d)| (w / d).powi(2))
            .sum();
        self.cfg.epsilon / s.sqrt()
    }

    /// Neck parameter `μ` sitting over direction `ω` at height `λ`.
    pub fn core_mu(&self, lambda: f64, omega: &[f64]) -> Vec<f64> {
        let d = self.neck.radial_factors(lambda.abs());
        let v: Vec<f64> = omega.iter().zip(&d).map(|(w, dk)| w / dk).collect();
        let nv = crate::sampling::norm(&v);
        v.iter().map(|c| c / nv).collect()
    }

    pub fn zone_of_radius(&self, r: f64) -> Zone {
        if r >= self.cfg.delta {
            Zone::Exterior
        } else if r > 0.5 * self.cfg.delta {
            Zone::Transition
        } else {
            Zone::NeckGraph
        }
    }

    pub fn zone_of(&self, p: &ChartPoint) -> Zone {
        match p {
            ChartPoint::Neck { lambda, .. } if lambda.abs() <= self.lambda_core => Zone::NeckCore,
            ChartPoint::Neck { .. } => Zone::NeckGraph,
            ChartPoint::Graph { x, .. } => self.zone_of_radius(crate::sampling::norm(x)),
        }
    }

    pub fn check_domain(&self, p: &ChartPoint) -> Result<()> {
        match p {
            ChartPoint::Neck { lambda, mu } => {
                let nm = crate::sampling::norm(mu);
                if mu.len() != self.n || (nm - 1.0).abs() > 1e-9 {
                    return Err(Error::ChartDomainError(
                        "μ must be a unit vector in R^n".into(),
                    ));
                }
                if lambda.abs() > self.lambda_overlap * (1.0 + 1e-12) {
                    return Err(Error::ChartDomainError(format!(
                        "|λ| = {} beyond the neck chart ({})",
                        lambda.abs(),
                        self.lambda_overlap
                    )));
                }
            }
            ChartPoint::Graph { x, .. } => {
                if x.len() != self.n {
                    return Err(Error::ChartDomainError("wrong coordinate dimension".into()));
                }
                let r = crate::sampling::norm(x);
                if r > self.outer_radius * (1.0 + 1e-12) {
                    return Err(Error::ChartDomainError(format!(
                        "|x| = {r} outside the outer disk"
                    )));
                }
                if r == 0.0
                    || r < self.core_radius(&x.iter().map(|c| c / r).collect::<Vec<_>>())
                        * (1.0 - 1e-9)
                {
                    return Err(Error::ChartDomainError(format!(
                        "|x| = {r} inside the neck core"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Jet of `g_ε(x) = ε² g(x/ε)`. The value is only computed when requested.
    pub fn g_eps_jet(&self, sheet: End, x: &[f64], with_value: bool) -> Result<GraphJet> {
        let eps = self.cfg.epsilon;
        let s: Vec<f64> = x.iter().map(|c| c / eps).collect();
        let (grad, hess) = self.neck.graph_derivatives(sheet, &s)?;
        let value = if with_value {
            eps * eps * self.neck.graph_value(sheet, &s)?
        } else {
            f64::NAN
        };
        Ok(GraphJet {
            value,
            grad: grad * eps,
            hess,
        })
    }

    fn f_jet(&self, sheet: End, x: &[f64]) -> GraphJet {
        let f = &self.f[sheet_index(sheet)];
        if f.is_zero() {
            return GraphJet {
                value: 0.0,
                grad: DVector::zeros(self.n),
                hess: DMatrix::zeros(self.n, self.n),
            };
        }
        GraphJet {
            value: f.value(x),
            grad: f.grad(x),
            hess: f.hess(x),
        }
    }

    /// `(1 - η) f + η g_ε` and its first two derivatives.
    pub fn blend_jet(&self, sheet: End, x: &[f64], with_value: bool) -> Result<GraphJet> {
        let f = self.f_jet(sheet, x);
        let g = self.g_eps_jet(sheet, x, true)?;
        let eta = self.cutoff.eval(x);
        let e = eta.value;
        let flat = eta.grad.iter().chain(eta.hess.iter()).all(|v| *v == 0.0);
        if flat && (e == 0.0 || e == 1.0) {
            // Pass the plateau jet through untouched so signed zeros survive.
            return Ok(if e == 0.0 { f } else { g });
        }
        let dv = g.value - f.value;
        let dg = &g.grad - &f.grad;
        let value = if with_value {
            (1.0 - e) * f.value + e * g.value
        } else {
            f64::NAN
        };
        let grad = &f.grad * (1.0 - e) + &g.grad * e + &eta.grad * dv;
        let cross = &eta.grad * dg.transpose();
        let hess = &f.hess * (1.0 - e) + &g.hess * e + &cross + cross.transpose() + &eta.hess * dv;
        Ok(GraphJet { value, grad, hess })
    }

    /// Graph jet on a sheet using the formula of the requested zone.
    pub fn zone_jet(
        &self,
        sheet: End,
        x: &[f64],
        zone: Zone,
        with_value: bool,
    ) -> Result<GraphJet> {
        match zone {
            Zone::Exterior => Ok(self.f_jet(sheet, x)),
            Zone::Transition => self.blend_jet(sheet, x, with_value),
            Zone::NeckGraph | Zone::NeckCore => self.g_eps_jet(sheet, x, with_value),
        }
    }

    /// Graph jet of `F_i` at `x`, choosing the zone from `|x|`.
    pub fn sheet_jet(&self, sheet: End, x: &[f64], with_value: bool) -> Result<GraphJet> {
        self.zone_jet(
            sheet,
            x,
            self.zone_of_radius(crate::sampling::norm(x)),
            with_value,
        )
    }

    /// Complex ambient coordinates of a chart point.
    pub fn embed_complex(&self, p: &ChartPoint) -> Result<DVector<C64>> {
        match p {
            ChartPoint::Neck { lambda, mu } => {
                let z = self.neck.embed_complex(*lambda, mu);
                Ok(&self.q * z * C64::new(self.cfg.epsilon, 0.0))
            }
            ChartPoint::Graph { sheet, x } => {
                let j = self.sheet_jet(*sheet, x, false)?;
                Ok(&self.frames[sheet_index(*sheet)] * complex_of(x, &j.grad))
            }
        }
    }

    pub fn embed(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        Ok(to_real(&self.embed_complex(p)?))
    }

    /// Chart partials as complex vectors. Graph charts use `∂/∂x_j`; the
    /// neck chart uses `(∂_λ, ∂_{τ_1}, ..)`.
    pub fn tangent_frame(&self, p: &ChartPoint) -> Result<Vec<DVector<C64>>> {
        match p {
            ChartPoint::Neck { lambda, mu } => {
                let e = C64::new(self.cfg.epsilon, 0.0);
                Ok(self
                    .neck
                    .tangent_frame(*lambda, mu)
                    .into_iter()
                    .map(|v| &self.q * v * e)
                    .collect())
            }
            ChartPoint::Graph { sheet, x } => {
                let j = self.sheet_jet(*sheet, x, false)?;
                Ok(self.graph_frame(*sheet, &j.hess))
            }
        }
    }

    pub fn graph_frame(&self, sheet: End, hess: &DMatrix<f64>) -> Vec<DVector<C64>> {
        let fr = &self.frames[sheet_index(sheet)];
        (0..self.n)
            .map(|j| {
                let col = DVector::from_fn(self.n, |k, _| {
                    C64::new(if k == j { 1.0 } else { 0.0 }, hess[(k, j)])
                });
                fr * col
            })
            .collect()
    }

    /// Orientation sign that makes the calibration positive on the chart.
    pub fn orientation(&self, p: &ChartPoint) -> f64 {
        match p {
            ChartPoint::Neck { .. } => self.neck_orient,
            ChartPoint::Graph { sheet, .. } => self.orient[sheet_index(*sheet)],
        }
    }

    /// Phase `det` of the graph frame of a sheet, times the orientation.
    pub fn frame_phase(&self, sheet: End) -> C64 {
        self.frames[sheet_index(sheet)].determinant() * self.orient[sheet_index(sheet)]
    }

    /// Plane coordinates of a neck-chart point over its end.
    pub fn neck_to_graph(&self, lambda: f64, mu: &[f64]) -> (End, Vec<f64>) {
        let sheet = if lambda >= 0.0 { End::One } else { End::Two };
        let (s, _) = self.neck.plane_coordinates(sheet, lambda, mu);
        (sheet, s.iter().map(|c| c * self.cfg.epsilon).collect())
    }

    /// Split of the axial cells of one sheet among the zones.
    pub fn layer_plan(&self, per_sheet: usize) -> Result<LayerPlan> {
        if per_sheet < 16 {
            return Err(Error::ResolutionInfeasible(format!(
                "{per_sheet} layers per sheet; need at least 16"
            )));
        }
        let core = (per_sheet / 8).max(4);
        let rest = per_sheet - core;
        let rc = self.cfg.epsilon * self.cfg.r0;
        let lens = [
            (0.5 * self.cfg.delta / rc).ln().max(0.1),
            2f64.ln(),
            (self.outer_radius / self.cfg.delta).ln(),
        ];
        let total: f64 = lens.iter().sum();
        let mut cells: Vec<usize> = lens
            .iter()
            .map(|l| ((l / total) * rest as f64).round().max(4.0) as usize)
            .collect();
        let used: usize = cells.iter().sum();
        if used > rest {
            let over = used - rest;
            if cells[2] < over + 4 {
                return Err(Error::ResolutionInfeasible(
                    "too few layers for the zone split".into(),
                ));
            }
            cells[2] -= over;
        } else {
            cells[2] += rest - used;
        }
        Ok(LayerPlan {
            core,
            neck_graph: cells[0],
            transition: cells[1],
            exterior: cells[2],
        })
    }

    /// Axial layers from the boundary of sheet 2 (`t = -1`) to the boundary of sheet 1 (`t = 1`).
    pub fn cylinder_layers(&self, per_sheet: usize) -> Result<Vec<Layer>> {
        let plan = self.layer_plan(per_sheet)?;
        let d = self.cfg.delta;
        let mut half: Vec<(LayerKind, Zone)> = Vec::new();
        for i in 1..=plan.core {
            let l = self.lambda_core * i as f64 / plan.core as f64;
            half.push((LayerKind::Core { lambda: l }, Zone::NeckCore));
        }
        for i in 1..=plan.neck_graph {
            half.push((
                LayerKind::NeckGraph {
                    sheet: End::One,
                    tau: i as f64 / plan.neck_graph as f64,
                },
                Zone::NeckGraph,
            ));
        }
        for i in 1..=plan.transition {
            let r = 0.5 * d * 2f64.powf(i as f64 / plan.transition as f64);
            let r = if i == plan.transition { d } else { r };
            half.push((LayerKind::Radial { sheet: End::One, r }, Zone::Transition));
        }
        for i in 1..=plan.exterior {
            let r = d * (self.outer_radius / d).powf(i as f64 / plan.exterior as f64);
            let r = if i == plan.exterior {
                self.outer_radius
            } else {
                r
            };
            half.push((LayerKind::Radial { sheet: End::One, r }, Zone::Exterior));
        }
        let mirror = |k: LayerKind| match k {
            LayerKind::Core { lambda } => LayerKind::Core { lambda: -lambda },
            LayerKind::NeckGraph { tau, .. } => LayerKind::NeckGraph {
                sheet: End::Two,
                tau,
            },
            LayerKind::Radial { r, .. } => LayerKind::Radial { sheet: End::Two, r },
        };
        let mut kinds: Vec<(LayerKind, Zone)> =
            half.iter().rev().map(|(k, z)| (mirror(*k), *z)).collect();
        kinds.push((LayerKind::Core { lambda: 0.0 }, Zone::NeckCore));
        kinds.extend(half.iter().copied());
        let m = kinds.len() - 1;
        Ok(kinds
            .into_iter()
            .enumerate()
            .map(|(i, (kind, zone))| Layer {
                t: -1.0 + 2.0 * i as f64 / m as f64,
                kind,
                zone,
            })
            .collect())
    }

    /// Chart point of the cylinder node over direction `ω` on a layer.
    pub fn layer_point(&self, kind: LayerKind, omega: &[f64]) -> ChartPoint {
        match kind {
            LayerKind::Core { lambda } => ChartPoint::Neck {
                lambda,
                mu: self.core_mu(lambda, omega),
            },
            LayerKind::NeckGraph { sheet, tau } => {
                let rc = self.core_radius(omega);
                let r = rc * (0.5 * self.cfg.delta / rc).powf(tau);
                ChartPoint::Graph {
                    sheet,
                    x: omega.iter().map(|w| w * r).collect(),
                }
            }
            LayerKind::Radial { sheet, r } => ChartPoint::Graph {
                sheet,
                x: omega.iter().map(|w| w * r).collect(),
            },
        }
    }

    /// Largest relative `|ω(u, v)|` over pairs of chart partials.
    pub fn omega_residual(&self, p: &ChartPoint) -> Result<f64> {
        let fr = self.tangent_frame(p)?;
        let mut worst = 0.0f64;
        for i in 0..fr.len() {
            for j in (i + 1)..fr.len() {
                let w = fr[i].dotc(&fr[j]).im / (fr[i].norm() * fr[j].norm());
                worst = worst.max(w.abs());
            }
        }
        Ok(worst)
    }

    /// Compare the neck chart with the graph chart at a neck point in the overlap.
    /// Returns the relative position gap and the relative gap of first derivatives.
    pub fn overlap_gap(&self, lambda: f64, mu: &[f64]) -> Result<(f64, f64)> {
        let pn = ChartPoint::Neck {
            lambda,
            mu: mu.to_vec(),
        };
        let xn = self.embed_complex(&pn)?;
        let (sheet, x) = self.neck_to_graph(lambda, mu);
        let pg = ChartPoint::Graph {
            sheet,
            x: x.clone(),
        };
        let xg = self.embed_complex(&pg)?;
        let scale = xn.norm().max(self.cfg.epsilon);
        let pos = (&xn - &xg).norm() / scale;
        let fr_n = self.tangent_frame(&pn)?;
        let fr_g = self.tangent_frame(&pg)?;
        let f = &self.frames[sheet_index(sheet)];
        let mut der = 0.0f64;
        for v in &fr_n {
            let w = f.adjoint() * v;
            let mut img = DVector::<C64>::zeros(self.n);
            for j in 0..self.n {
                img += &fr_g[j] * C64::new(w[j].re, 0.0);
            }
            der = der.max((v - img).norm() / v.norm());
        }
        Ok((pos, der))
    }
}

/// Sampled suprema of the Hessian bounds on the annulus `δ/2 ≤ |x| ≤ δ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HessianBounds {
    pub f_hess: f64,
    pub g_hess: f64,
    pub alpha: f64,
}

impl HessianBounds {
    pub fn holds(&self) -> bool {
        self.f_hess <= self.alpha && self.g_hess <= self.alpha
    }
}

pub fn hessian_bounds(
    surf: &GluedSurface,
    dirs: &[Vec<f64>],
    radial: usize,
) -> Result<HessianBounds> {
    let d = surf.cfg.delta;
    let mut fh: f64 = 0.0;
    let mut gh: f64 = 0.0;
    for sheet in [End::One, End::Two] {
        for i in 0..radial {
            let r = 0.5 * d + 0.5 * d * i as f64 / (radial - 1).max(1) as f64;
            for w in dirs {
                let x: Vec<f64> = w.iter().map(|c| c * r).collect();
                fh = fh.max(surf.f[sheet_index(sheet)].hess(&x).norm());
                gh = gh.max(surf.g_eps_jet(sheet, &x, false)?.hess.norm());
            }
        }
    }
    Ok(HessianBounds {
        f_hess: fh,
        g_hess: gh,
        alpha: surf.cfg.alpha,
    })
}

/// Sampled suprema on `Ann_δ = {δ/2 ≤ |x| ≤ δ}` of the graphing functions
/// and their derivatives, next to the thresholds they are compared against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnnulusBounds {
    pub f: f64,
    pub grad_f: f64,
    pub g: f64,
    pub grad_g: f64,
    pub third_g: f64,
    pub alpha: f64,
    pub k: f64,
}

impl AnnulusBounds {
    /// `(measured, threshold)` for each bound, in the order
    /// `|f|, |∇f|, |g_ε|, |∇g_ε|, |∇³g_ε|`.
    pub fn table(&self) -> [(&'static str, f64, f64); 5] {
        let (a, k) = (self.alpha, self.k);
        [
            ("f", self.f, a.powi(3) / (k * k)),
            ("grad_f", self.grad_f, a * a / k),
            ("g_eps", self.g, a.powi(3) / (4.0 * k * k)),
            ("grad_g_eps", self.grad_g, a * a / (2.0 * k)),
            ("third_g_eps", self.third_g, 2.0 * k),
        ]
    }

    pub fn holds(&self) -> bool {
        self.table().iter().all(|(_, m, t)| m <= t)
    }
}

pub fn annulus_bounds(
    surf: &GluedSurface,
    dirs: &[Vec<f64>],
    radial: usize,
) -> Result<AnnulusBounds> {
    let d = surf.cfg.delta;
    let eps = surf.cfg.epsilon;
    let mut b = AnnulusBounds {
        f: 0.0,
        grad_f: 0.0,
        g: 0.0,
        grad_g: 0.0,
        third_g: 0.0,
        alpha: surf.cfg.alpha,
        k: surf.cfg.k,
    };
    for sheet in [End::One, End::Two] {
        let f = &surf.f[sheet_index(sheet)];
        for i in 0..radial {
            let r = 0.5 * d + 0.5 * d * i as f64 / (radial - 1).max(1) as f64;
            for w in dirs {
                let x: Vec<f64> = w.iter().map(|c| c * r).collect();
                if !f.is_zero() {
                    b.f = b.f.max(f.value(&x).abs());
                    b.grad_f = b.grad_f.max(f.grad(&x).norm());
                }
                let g = surf.g_eps_jet(sheet, &x, true)?;
                b.g = b.g.max(g.value.abs());
                b.grad_g = b.grad_g.max(g.grad.norm());
                let s: Vec<f64> = x.iter().map(|c| c / eps).collect();
                b.third_g = b.third_g.max(surf.neck.graph_third_norm(sheet, &s)? / eps);
            }
        }
    }
    Ok(b)
}

/// Number of sampled points where the transition formula `(1 - η) f + η g_ε`
/// differs in any bit from the exterior formula (for `|x| ≥ δ`) or from
/// `g_ε` (for `|x| ≤ δ/2`), comparing value, gradient and Hessian.
pub fn exactness_mismatches(
    surf: &GluedSurface,
    dirs: &[Vec<f64>],
    radial: usize,
) -> Result<usize> {
    let d = surf.cfg.delta;
    let same = |a: &GraphJet, b: &GraphJet| {
        a.value.to_bits() == b.value.to_bits()
            && a.grad
                .iter()
                .zip(b.grad.iter())
                .all(|(p, q)| p.to_bits() == q.to_bits())
            && a.hess
                .iter()
                .zip(b.hess.iter())
                .all(|(p, q)| p.to_bits() == q.to_bits())
    };
    let mut bad = 0;
    for sheet in [End::One, End::Two] {
        for i in 0..radial {
            let t = i as f64 / (radial - 1).max(1) as f64;
            let outer = d * (surf.outer_radius / d).powf(t);
            for w in dirs {
                let lo = (0.25 * d).max(1.5 * surf.core_radius(w)).min(0.5 * d);
                let inner = 0.5 * d * (lo / (0.5 * d)).powf(t);
                let x: Vec<f64> = w.iter().map(|c| c * outer).collect();
                let blend = surf.blend_jet(sheet, &x, true)?;
                if !same(&blend, &surf.f_jet(sheet, &x)) {
                    bad += 1;
                }
                let x: Vec<f64> = w.iter().map(|c| c * inner).collect();
                if !same(
                    &surf.blend_jet(sheet, &x, true)?,
                    &surf.g_eps_jet(sheet, &x, true)?,
                ) {
                    bad += 1;
                }
            }
        }
    }
    Ok(bad)
}
