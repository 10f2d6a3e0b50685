//! Lawlor necks: the special Lagrangian cylinders `R x S^{n-1}` asymptotic to a
//! pair of transversal planes.
//!
//! The neck with parameters `a = (a_1, .., a_n)` is
//!
//! ```text
//! z_k(λ, μ) = μ_k sqrt(1/a_k + λ²) exp(i (π/2 δ_{1k} + θ_k(λ)))
//! θ_k(λ)    = ∫_0^λ -ds / ((1/a_k + s²) sqrt(P(s)))
//! P(s)      = (∏ (1 + a_k s²) - 1) / s²
//! ```
//!
//! The angle integrals are tabulated once on an adaptive grid. Evaluation at
//! an arbitrary `λ` adds a fixed Gauss-Legendre correction from the nearest
//! grid node, so every evaluation carries the tabulation accuracy.

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, GaussRule};
use crate::sampling;
use crate::symplectic::{characteristic_angles, LagrangianPlane, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawlorParams {
    a: Vec<f64>,
}

impl LawlorParams {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 3 {
            return Err(Error::InvalidParameters(format!(
                "dimension {} < 3",
                a.len()
            )));
        }
        if a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParameters(
                "every a_k must be positive and finite".into(),
            ));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `A = min a_k`.
    pub fn min_a(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inner validity radius of the asymptotic graphs, `sqrt(2/A)`.
    pub fn r0(&self) -> f64 {
        (2.0 / self.min_a()).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            a: self.a.iter().map(|x| x * c).collect(),
        }
    }

    /// Elementary symmetric polynomials `e_1..e_n` of `a`.
    fn elementary(&self) -> Vec<f64> {
        let n = self.n();
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        for &ak in &self.a {
            for j in (1..=n).rev() {
                e[j] += ak * e[j - 1];
            }
        }
        e[1..].to_vec()
    }
}

/// `P(a, λ)`, evaluated as `Σ_j e_j λ^{2(j-1)}` so that `λ = 0` needs no limit.
pub fn poly_p(params: &LawlorParams, lambda: f64) -> f64 {
    poly_from_elementary(&params.elementary(), lambda)
}

fn poly_from_elementary(e: &[f64], lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    e.iter().rev().fold(0.0, |acc, c| acc * l2 + c)
}

/// Analytic bound on `|θ_k(λ) - θ_k(∞)|` for `λ > 0`.
pub fn tail_bound(params: &LawlorParams, lambda: f64) -> f64 {
    let n = params.n() as f64;
    1.0 / (n * params.min_a().powf(n / 2.0) * lambda.powf(n))
}

/// Radius beyond which the analytic tail bound is below `tol`.
fn tail_radius(params: &LawlorParams, tol: f64) -> f64 {
    let n = params.n() as f64;
    (1.0 / (n * params.min_a().powf(n / 2.0) * tol)).powf(1.0 / n)
}

/// `θ_k(a, λ)` by adaptive quadrature to absolute accuracy `tol`.
pub fn theta(params: &LawlorParams, k: usize, lambda: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameters("tol must be positive".into()));
    }
    let e = params.elementary();
    let inv_a = 1.0 / params.a[k];
    let f = |s: f64| -1.0 / ((inv_a + s * s) * poly_from_elementary(&e, s).sqrt());
    let x = lambda.abs();
    let mut cuts = vec![0.0];
    let mut splits: Vec<f64> = params
        .a
        .iter()
        .map(|a| 1.0 / a.sqrt())
        .filter(|c| *c < x)
        .collect();
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    cuts.extend(splits);
    cuts.push(x);
    let share = tol / cuts.len() as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += adaptive(f, w[0], w[1], share, 4000)?.value;
        }
    }
    Ok(if lambda < 0.0 { -total } else { total })
}

/// Asymptotic values `θ_k(a) = lim θ_k(a, λ)` with total error at most `tol`.
pub fn theta_infinity(params: &LawlorParams, tol: f64) -> Result<Vec<f64>> {
    Ok(LawlorNeck::new(params.clone(), tol)?.theta_inf.clone())
}

/// Orthonormal basis of `μ^⊥ ⊂ R^n`, oriented so that `(μ, τ_1, .., τ_{n-1})`
/// is positive.
pub fn sphere_tangent_basis(mu: &[f64]) -> Vec<Vec<f64>> {
    let n = mu.len();
    let s = if mu[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = mu.to_vec();
    w[0] += s;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let mut out: Vec<Vec<f64>> = (1..n)
        .map(|j| {
            (0..n)
                .map(|i| (if i == j { 1.0 } else { 0.0 }) - 2.0 * w[i] * w[j] / ww)
                .collect()
        })
        .collect();
    if s < 0.0 {
        for x in out[0].iter_mut() {
            *x = -*x;
        }
    }
    out
}

/// Value, gradient and Hessian of a graphing function at one point.
#[derive(Debug, Clone)]
pub struct GraphJet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Which end of the neck: `One` is `λ → +∞`, asymptotic to the first plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
pub enum End {
    One,
    Two,
}

impl End {
    pub fn sign(self) -> f64 {
        match self {
            End::One => 1.0,
            End::Two => -1.0,
        }
    }
    pub fn index(self) -> usize {
        match self {
            End::One => 0,
            End::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NeckTable {
    version: u32,
    a: Vec<f64>,
    quadrature_tol: f64,
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    theta_inf: Vec<f64>,
    error_bound: f64,
}

const CACHE_VERSION: u32 = 1;

/// Tabulated Lawlor neck.
#[derive(Debug, Clone)]
pub struct LawlorNeck {
    pub params: LawlorParams,
    pub theta_inf: Vec<f64>,
    /// Requested absolute accuracy of the tabulation.
    pub quadrature_tol: f64,
    /// Accumulated error estimate of the table plus the analytic tail bound.
    pub error_bound: f64,
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    elem: Vec<f64>,
    inv_a: Vec<f64>,
    rule: GaussRule,
}

impl LawlorNeck {
    pub fn new(params: LawlorParams, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameters(
                "quadrature tolerance must be positive".into(),
            ));
        }
        let n = params.n();
        let elem = params.elementary();
        let inv_a: Vec<f64> = params.a.iter().map(|a| 1.0 / a).collect();
        let big = tail_radius(&params, 0.5 * tol);
        let grid = build_grid(&params, big);
        let share = 0.5 * tol / (grid.len() as f64 * n as f64);
        let mut values = vec![vec![0.0; n]; grid.len()];
        let mut err = 0.0;
        for j in 1..grid.len() {
            for k in 0..n {
                let ia = inv_a[k];
                let f = |s: f64| -1.0 / ((ia + s * s) * poly_from_elementary(&elem, s).sqrt());
                let q = adaptive(f, grid[j - 1], grid[j], share, 2000)?;
                values[j][k] = values[j - 1][k] + q.value;
                err += q.error;
            }
        }
        let mut neck = Self {
            params,
            theta_inf: vec![0.0; n],
            quadrature_tol: tol,
            error_bound: err,
            grid,
            values,
            elem,
            inv_a,
            rule: GaussRule::legendre(24),
        };
        let last = neck.values.last().expect("grid").clone();
        let lmax = *neck.grid.last().expect("grid");
        let tails = neck.tail_integrals(lmax, f64::INFINITY);
        neck.theta_inf = last.iter().zip(&tails).map(|(v, t)| v + t).collect();
        neck.error_bound += tail_bound(&neck.params, lmax);
        if neck.error_bound > tol {
            return Err(Error::QuadratureNonConvergence {
                estimate: neck.error_bound,
                tol,
            });
        }
        Ok(neck)
    }

    /// Load from the cache directory when a matching table exists, otherwise
    /// build it and write it there.
    pub fn cached(params: LawlorParams, tol: f64, dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Self::new(params, tol);
        };
        let path = cache_path(dir, &params, tol);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(table) = serde_json::from_str::<NeckTable>(&text) {
                if table.version == CACHE_VERSION
                    && table.a == params.a
                    && table.quadrature_tol == tol
                {
                    return Ok(Self::from_table(table));
                }
            }
        }
        let neck = Self::new(params, tol)?;
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, neck.to_json()?)?;
        Ok(neck)
    }

    fn from_table(t: NeckTable) -> Self {
        let params = LawlorParams { a: t.a };
        Self {
            elem: params.elementary(),
            inv_a: params.a.iter().map(|a| 1.0 / a).collect(),
            params,
            theta_inf: t.theta_inf,
            quadrature_tol: t.quadrature_tol,
            error_bound: t.error_bound,
            grid: t.grid,
            values: t.values,
            rule: GaussRule::legendre(24),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let t = NeckTable {
            version: CACHE_VERSION,
            a: self.params.a.clone(),
            quadrature_tol: self.quadrature_tol,
            grid: self.grid.clone(),
            values: self.values.clone(),
            theta_inf: self.theta_inf.clone(),
            error_bound: self.error_bound,
        };
        Ok(serde_json::to_string_pretty(&t)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: NeckTable = serde_json::from_str(text)?;
        if t.version != CACHE_VERSION {
            return Err(Error::Config(format!(
                "unsupported neck table version {}",
                t.version
            )));
        }
        LawlorParams::new(t.a.clone())?;
        Ok(Self::from_table(t))
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn r0(&self) -> f64 {
        self.params.r0()
    }

    pub fn poly_p(&self, lambda: f64) -> f64 {
        poly_from_elementary(&self.elem, lambda)
    }

    /// `dθ_k/dλ` for all k.
    pub fn dtheta(&self, lambda: f64) -> Vec<f64> {
        let sp = self.poly_p(lambda).sqrt();
        let l2 = lambda * lambda;
        self.inv_a
            .iter()
            .map(|ia| -1.0 / ((ia + l2) * sp))
            .collect()
    }

    fn tail_integrals(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.n();
        let mut acc = vec![0.0; n];
        let umin = if hi.is_finite() { lo / hi } else { 0.0 };
        for (u, w) in self.rule.mapped(umin, 1.0) {
            let s = lo / u;
            let jac = lo / (u * u);
            for (k, d) in self.dtheta(s).iter().enumerate() {
                acc[k] += w * d * jac;
            }
        }
        acc
    }

    /// `θ_k(λ)` for all k.
    pub fn theta_all(&self, lambda: f64) -> Vec<f64> {
        let x = lambda.abs();
        if x == 0.0 {
            return vec![0.0; self.n()];
        }
        let lmax = *self.grid.last().expect("grid");
        let mut out = if x >= lmax {
            let base = self.values.last().expect("grid");
            let t = self.tail_integrals(lmax, x);
            base.iter().zip(&t).map(|(b, t)| b + t).collect::<Vec<_>>()
        } else {
            let j = self.grid.partition_point(|g| *g <= x) - 1;
            let mut v = self.values[j].clone();
            if x > self.grid[j] {
                let half = 0.5 * (x - self.grid[j]);
                let mid = 0.5 * (x + self.grid[j]);
                for (t, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let s = mid + half * t;
                    let l2 = s * s;
                    let f = half * w / poly_from_elementary(&self.elem, s).sqrt();
                    for (vk, ia) in v.iter_mut().zip(&self.inv_a) {
                        *vk -= f / (ia + l2);
                    }
                }
            }
            v
        };
        if lambda < 0.0 {
            for v in out.iter_mut() {
                *v = -*v;
            }
        }
        out
    }

    pub fn theta(&self, k: usize, lambda: f64) -> f64 {
        self.theta_all(lambda)[k]
    }

    /// `θ_k(λ) - θ_k(∞)` for `λ ≥ 0`. Far out this is evaluated as the tail
    /// integral itself so that it keeps full relative accuracy.
    pub fn delta_all(&self, lambda: f64) -> Vec<f64> {
        let x = lambda.abs();
        if x >= 2.0 / self.params.min_a().sqrt() {
            return self
                .tail_integrals(x, f64::INFINITY)
                .iter()
                .map(|t| -t)
                .collect();
        }
        self.theta_all(x)
            .iter()
            .zip(&self.theta_inf)
            .map(|(t, i)| t - i)
            .collect()
    }

    /// Phases `π/2 δ_{1k} + θ_k(λ)`.
    fn phases(&self, lambda: f64) -> Vec<f64> {
        let mut p = self.theta_all(lambda);
        p[0] += PI / 2.0;
        p
    }

    /// Complex coordinates of the neck point `(λ, μ)`.
    pub fn embed_complex(&self, lambda: f64, mu: &[f64]) -> DVector<C64> {
        let ph = self.phases(lambda);
        DVector::from_fn(self.n(), |k, _| {
            let r = (self.inv_a[k] + lambda * lambda).sqrt();
            C64::from_polar(mu[k] * r, ph[k])
        })
    }

    /// Real coordinates `(x; y)` of the neck point.
    pub fn embed(&self, lambda: f64, mu: &[f64]) -> Vec<f64> {
        to_real(&self.embed_complex(lambda, mu))
    }

    /// Analytic partials: `∂_λ Ψ` and `∂_{μ^j} Ψ` treating `μ` as a point of `R^n`.
    pub fn partials(&self, lambda: f64, mu: &[f64]) -> (DVector<C64>, Vec<DVector<C64>>) {
        let n = self.n();
        let ph = self.phases(lambda);
        let dth = self.dtheta(lambda);
        let mut dl = DVector::zeros(n);
        let mut dm = Vec::with_capacity(n);
        for k in 0..n {
            let r = (self.inv_a[k] + lambda * lambda).sqrt();
            let e = C64::from_polar(1.0, ph[k]);
            dl[k] = e * C64::new(lambda / r, r * dth[k]) * mu[k];
            let mut col = DVector::zeros(n);
            col[k] = e * r;
            dm.push(col);
        }
        (dl, dm)
    }

    /// Tangent frame `(∂_λ, ∂_{τ_1}, .., ∂_{τ_{n-1}})` at `(λ, μ)`.
    pub fn tangent_frame(&self, lambda: f64, mu: &[f64]) -> Vec<DVector<C64>> {
        let (dl, dm) = self.partials(lambda, mu);
        let mut out = vec![dl];
        for tau in sphere_tangent_basis(mu) {
            let mut v = DVector::zeros(self.n());
            for (j, t) in tau.iter().enumerate() {
                v += &dm[j] * C64::new(*t, 0.0);
            }
            out.push(v);
        }
        out
    }

    /// Induced metric in the chart `(λ, τ-coordinates)`.
    pub fn induced_metric(&self, lambda: f64, mu: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let l2 = lambda * lambda;
        let mut g = DMatrix::zeros(n, n);
        let s: f64 = (0..n).map(|k| mu[k] * mu[k] / (self.inv_a[k] + l2)).sum();
        g[(0, 0)] = s * (l2 + 1.0 / self.poly_p(lambda));
        let tau = sphere_tangent_basis(mu);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                g[(i + 1, j + 1)] = (0..n)
                    .map(|k| (self.inv_a[k] + l2) * tau[i][k] * tau[j][k])
                    .sum();
            }
        }
        g
    }

    /// Unitary frame of the asymptotic plane of an end.
    pub fn end_frame(&self, end: End) -> DMatrix<C64> {
        let n = self.n();
        let mut u = DMatrix::zeros(n, n);
        for k in 0..n {
            let base = if k == 0 { PI / 2.0 } else { 0.0 };
            u[(k, k)] = C64::from_polar(1.0, base + end.sign() * self.theta_inf[k]);
        }
        u
    }

    /// The two asymptotic planes `(P_1, P_2)`.
    pub fn asymptotic_planes(&self) -> (LagrangianPlane, LagrangianPlane) {
        (
            LagrangianPlane::from_unitary(self.end_frame(End::One)),
            LagrangianPlane::from_unitary(self.end_frame(End::Two)),
        )
    }

    /// Angle between the asymptotic planes in each coordinate, `2|θ_k(a)|`.
    pub fn coordinate_angles(&self) -> Vec<f64> {
        self.theta_inf.iter().map(|t| 2.0 * t.abs()).collect()
    }

    /// `d_k(λ) = sqrt(1/a_k + λ²) cos(θ_k(λ) - θ_k(∞))` for `λ ≥ 0`.
    pub fn radial_factors(&self, lambda: f64) -> Vec<f64> {
        let del = self.delta_all(lambda);
        (0..self.n())
            .map(|k| (self.inv_a[k] + lambda * lambda).sqrt() * del[k].cos())
            .collect()
    }

    /// Coordinates `(s, t)` of a neck point in the frame of the asymptotic plane of `end`.
    pub fn plane_coordinates(&self, end: End, lambda: f64, mu: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = self.embed_complex(lambda, mu);
        let u = self.end_frame(end);
        let w = u.adjoint() * z;
        (
            w.iter().map(|c| c.re).collect(),
            w.iter().map(|c| c.im).collect(),
        )
    }

    /// Solve `Σ s_k² / d_k(λ)² = 1` for `λ ≥ 0`.
    pub fn invert_radius(&self, s: &[f64]) -> Result<f64> {
        let n = self.n();
        let s2: Vec<f64> = s.iter().map(|x| x * x).collect();
        let norm2: f64 = s2.iter().sum();
        let phi = |lam: f64| -> (f64, f64) {
            let del = self.delta_all(lam);
            let dth = self.dtheta(lam);
            let mut val = -1.0;
            let mut der = 0.0;
            for k in 0..n {
                let r2 = self.inv_a[k] + lam * lam;
                let (sd, cd) = del[k].sin_cos();
                let q = r2 * cd * cd;
                let dq = 2.0 * lam * cd * cd - 2.0 * r2 * cd * sd * dth[k];
                val += s2[k] / q;
                der -= s2[k] * dq / (q * q);
            }
            (val, der)
        };
        let (v0, _) = phi(0.0);
        if v0 <= 0.0 {
            return Err(Error::RadiusTooSmall {
                radius: norm2.sqrt(),
                r0: self.r0(),
            });
        }
        let mut lo = 0.0;
        let mut hi = 2.0 * norm2.sqrt() + 2.0;
        while phi(hi).0 > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut lam = norm2.sqrt().clamp(lo, hi);
        for _ in 0..200 {
            let (v, d) = phi(lam);
            if v.abs() <= 4e-16 {
                return Ok(lam);
            }
            if v > 0.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            let mut next = lam - v / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - lam).abs() <= 4e-16 * lam.max(1e-300) || hi - lo <= 4e-16 * hi {
                return Ok(next);
            }
            lam = next;
        }
        Err(Error::NoConvergence(format!(
            "radius inversion at |s| = {}",
            norm2.sqrt()
        )))
    }

    /// `∇g` of the graph over the asymptotic plane of `end` at `s`.
    pub fn graph_grad(&self, end: End, s: &[f64]) -> Result<DVector<f64>> {
        let lam = self.invert_radius(s)?;
        let del = self.delta_all(lam);
        Ok(DVector::from_fn(self.n(), |k, _| {
            end.sign() * s[k] * del[k].tan()
        }))
    }

    /// Gradient and Hessian of `g` at `s`.
    pub fn graph_derivatives(&self, end: End, s: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n();
        let lam = self.invert_radius(s)?;
        let del = self.delta_all(lam);
        let dth = self.dtheta(lam);
        let sp = self.poly_p(lam).sqrt();
        let mut t = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut dsum = 0.0;
        for k in 0..n {
            let r2 = self.inv_a[k] + lam * lam;
            let (sd, cd) = del[k].sin_cos();
            t[k] = sd / cd;
            c[k] = 1.0 / (r2 * cd * cd);
            let dc = -c[k] * c[k] * (2.0 * lam * cd * cd - 2.0 * r2 * cd * sd * dth[k]);
            dsum += s[k] * s[k] * dc;
        }
        let sg = end.sign();
        let grad = DVector::from_fn(n, |k, _| sg * s[k] * t[k]);
        let cs: Vec<f64> = (0..n).map(|k| c[k] * s[k]).collect();
        let coef = 2.0 / (sp * dsum);
        let hess = DMatrix::from_fn(n, n, |i, j| {
            sg * ((if i == j { t[i] } else { 0.0 }) + coef * cs[i] * cs[j])
        });
        Ok((grad, hess))
    }

    /// `g(s)`, normalized to vanish at infinity.
    ///
    /// Since the graph is Lagrangian, `g` is the integral of `Σ y_k dx_k` along
    /// any path to infinity. The path used is the neck curve `λ ↦ (λ, μ)` with
    /// `μ` fixed, on which `x_k = μ_k r_k cos Δ_k` and `y_k = ± μ_k r_k sin Δ_k`.
    pub fn graph_value(&self, end: End, s: &[f64]) -> Result<f64> {
        let lam = self.invert_radius(s)?;
        let d = self.radial_factors(lam);
        let mu2: Vec<f64> = s.iter().zip(&d).map(|(x, dk)| (x / dk).powi(2)).collect();
        let mut acc = 0.0;
        for (u, w) in self.rule.mapped(0.0, 1.0) {
            if u == 0.0 {
                continue;
            }
            let t = lam / u;
            let del = self.delta_all(t);
            let dth = self.dtheta(t);
            let mut h = 0.0;
            for k in 0..self.n() {
                let r = (self.inv_a[k] + t * t).sqrt();
                let (sd, cd) = del[k].sin_cos();
                h += mu2[k] * r * sd * (t / r * cd - r * sd * dth[k]);
            }
            acc += w * h * lam / (u * u);
        }
        Ok(-end.sign() * acc)
    }

    pub fn graph_jet(&self, end: End, s: &[f64]) -> Result<GraphJet> {
        let (grad, hess) = self.graph_derivatives(end, s)?;
        Ok(GraphJet {
            value: self.graph_value(end, s)?,
            grad,
            hess,
        })
    }

    /// Frobenius norm of the third derivative of `g`, by central differences of the Hessian.
    pub fn graph_third_norm(&self, end: End, s: &[f64]) -> Result<f64> {
        let n = self.n();
        let h = 1e-4 * sampling::norm(s);
        let mut acc = 0.0;
        for l in 0..n {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[l] += h;
            sm[l] -= h;
            let hp = self.graph_derivatives(end, &sp)?.1;
            let hm = self.graph_derivatives(end, &sm)?.1;
            acc += ((hp - hm) / (2.0 * h)).norm_squared();
        }
        Ok(acc.sqrt())
    }

    /// Sample the graph of an end on `radii x directions`.
    pub fn asymptotic_graph(
        &self,
        end: End,
        radii: &[f64],
        directions: &[Vec<f64>],
    ) -> Result<AsymptoticGraph> {
        let r0 = self.r0();
        let mut samples = Vec::with_capacity(radii.len() * directions.len());
        for &r in radii {
            if r < r0 {
                return Err(Error::RadiusTooSmall { radius: r, r0 });
            }
            for d in directions {
                let s: Vec<f64> = d.iter().map(|x| x * r).collect();
                let jet = self.graph_jet(end, &s)?;
                let third = self.graph_third_norm(end, &s)?;
                samples.push(GraphSample {
                    s,
                    g: jet.value,
                    grad: jet.grad.iter().copied().collect(),
                    hess_norm: jet.hess.norm(),
                    third_norm: third,
                });
            }
        }
        Ok(AsymptoticGraph { end, r0, samples })
    }

    /// Measured decay constant: the supremum over sampled `|p| ≥ R_0` of
    /// `(|g| + |p| |∇g| + |p|² |∇²g| + |p|³ |∇³g|) |p|^{n-2}`.
    pub fn measure_c0(&self) -> Result<f64> {
        let n = self.n();
        let radii = sampling::geomspace(self.r0(), 1e3 * self.r0(), 24);
        let dirs = sampling::directions(n, if n == 3 { 26 } else { 40 }, 7);
        let graph = self.asymptotic_graph(End::One, &radii, &dirs)?;
        Ok(graph
            .samples
            .iter()
            .map(|s| s.combined(n))
            .fold(0.0, f64::max))
    }
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

fn build_grid(params: &LawlorParams, big: f64) -> Vec<f64> {
    let amax = params.a.iter().copied().fold(0.0, f64::max);
    let h0 = 0.25 / amax.sqrt();
    let mut marks: Vec<f64> = params.a.iter().map(|a| 1.0 / a.sqrt()).collect();
    marks.sort_by(f64::total_cmp);
    let mut grid = vec![0.0];
    let mut x: f64 = 0.0;
    while x < big {
        let mut next = x + h0.max(0.3 * x);
        if let Some(m) = marks.iter().find(|m| **m > x * (1.0 + 1e-12) && **m < next) {
            next = *m;
        }
        x = next.min(big);
        grid.push(x);
    }
    grid
}

/// File holding the tabulation of `params` at `tol` inside `dir`.
pub fn cache_path(dir: &Path, params: &LawlorParams, tol: f64) -> PathBuf {
    let mut h = Sha256::new();
    h.update(format!("v{CACHE_VERSION}:{:?}:{tol:e}", params.a));
    let hex: String = h
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect();
    dir.join(format!("neck-{hex}.json"))
}

/// One sample of an asymptotic graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphSample {
    pub s: Vec<f64>,
    pub g: f64,
    pub grad: Vec<f64>,
    pub hess_norm: f64,
    pub third_norm: f64,
}

impl GraphSample {
    pub fn radius(&self) -> f64 {
        sampling::norm(&self.s)
    }
    pub fn grad_norm(&self) -> f64 {
        sampling::norm(&self.grad)
    }
    pub fn combined(&self, n: usize) -> f64 {
        let p = self.radius();
        (self.g.abs() + p * self.grad_norm() + p * p * self.hess_norm + p.powi(3) * self.third_norm)
            * p.powi(n as i32 - 2)
    }
}

/// Samples of the graphing function of one end.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticGraph {
    pub end: End,
    pub r0: f64,
    pub samples: Vec<GraphSample>,
}

/// Find `a` (with `min a_k = 1`) whose asymptotic planes make angle
/// `targets[k]` in coordinate `k`.
pub fn match_angles(targets: &[f64], tol: f64) -> Result<LawlorParams> {
    let n = targets.len();
    if n < 3 {
        return Err(Error::InfeasibleTargets(format!(
            "need at least 3 angles, got {n}"
        )));
    }
    if targets.iter().any(|t| !(*t > 0.0 && *t < PI)) {
        return Err(Error::InfeasibleTargets(
            "every angle must lie in (0, π)".into(),
        ));
    }
    let sum: f64 = targets.iter().sum();
    if (sum - PI).abs() > tol.max(1e-12) {
        return Err(Error::InfeasibleTargets(format!(
            "angles sum to {sum}, not π"
        )));
    }
    let qtol = (tol * 1e-3).clamp(1e-14, 1e-10);
    let eval = |x: &[f64]| -> Result<Vec<f64>> {
        let mut a = vec![1.0];
        a.extend(x.iter().map(|v| v.exp()));
        let neck = LawlorNeck::new(LawlorParams::new(a)?, qtol)?;
        Ok(neck
            .coordinate_angles()
            .iter()
            .zip(targets)
            .map(|(c, t)| c - t)
            .collect())
    };
    let m = n - 1;
    let mut x = vec![0.0; m];
    let mut r = eval(&x)?;
    let norm = |v: &[f64]| v.iter().map(|z| z * z).sum::<f64>().sqrt();
    for _ in 0..100 {
        if norm(&r) <= 0.1 * tol {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(n, m);
        for j in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = eval(&xp)?;
            let rm = eval(&xm)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let step = (&jt * &jac)
            .lu()
            .solve(&(-(&jt * rv)))
            .ok_or_else(|| Error::NoConvergence("singular Jacobian".into()))?;
        let mut t = 1.0;
        let base = norm(&r);
        loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a + t * b.clamp(-2.0, 2.0))
                .collect();
            let rt = eval(&trial)?;
            if norm(&rt) < base || t < 1e-4 {
                x = trial;
                r = rt;
                break;
            }
            t *= 0.5;
        }
    }
    if norm(&r) > tol {
        return Err(Error::NoConvergence(format!(
            "angle residual {:.3e}",
            norm(&r)
        )));
    }
    let mut a = vec![1.0];
    a.extend(x.iter().map(|v| v.exp()));
    let amin = a.iter().copied().fold(f64::INFINITY, f64::min);
    let params = LawlorParams::new(a.iter().map(|v| v / amin).collect())?;
    let neck = LawlorNeck::new(params.clone(), qtol)?;
    let (p1, p2) = neck.asymptotic_planes();
    let ca = characteristic_angles(&p1, &p2)?;
    let mut want = targets.to_vec();
    want.sort_by(|a, b| b.total_cmp(a));
    let gap = ca
        .angles
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if gap > tol {
        return Err(Error::NoConvergence(format!(
            "planes disagree with targets by {gap:.3e}"
        )));
    }
    Ok(params)
}
