use super::lanczos::Spectrum;
use super::mesh::{dot, SimplexMesh, SurfaceMesh};
use super::{Cholesky, SpectralSystem};
use crate::error::{Error, Result};
use crate::geometry;
use crate::gluing::cutoff::profile;
use crate::gluing::{GluedSurface, LayerKind, WeightFunction};
use crate::lawlor::End;
use nalgebra::DMatrix;
use serde::Serialize;

/// Collar width of the boundary extension, as a fraction of the outer radius.
pub const COLLAR_FRACTION: f64 = 0.2;

/// Nodal fields built from the low spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct EigenFields {
    pub nu: Vec<f64>,
    /// First nontrivial eigenfunction, positive on average over the sheet-1 boundary.
    #[serde(skip)]
    pub s: Vec<f64>,
    #[serde(skip)]
    pub sigma: Vec<f64>,
    #[serde(skip)]
    pub s_bar: Vec<f64>,
    /// Boundary function `v` at boundary nodes, zero elsewhere.
    #[serde(skip)]
    pub v_boundary: Vec<f64>,
    #[serde(skip)]
    pub v_e: Vec<f64>,
    /// Lagrangian angle at the nodes.
    #[serde(skip)]
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub psi0: Vec<f64>,
    /// Mass-inverted weak field of `ψ₁`; pairings should use [`EigenFields::psi1_pairing`].
    #[serde(skip)]
    pub psi1: Vec<f64>,
    /// `-K v_e - B v`, so that `⟨ψ₁, φ⟩ = φ · psi1_load`.
    #[serde(skip)]
    pub psi1_load: Vec<f64>,
    pub sigma_s: f64,
    pub psi1_s: f64,
    /// `⟨ψ₁, S⟩` with the weight `ρ²` applied to `ψ₁`.
    pub psi1_s_weighted: f64,
    pub psi1_integral: f64,
    pub boundary_v_integral: f64,
    pub sup_s_bar_minus_s: f64,
}

impl EigenFields {
    pub fn psi1_pairing(&self, phi: &[f64]) -> f64 {
        dot(phi, &self.psi1_load)
    }
}

/// Per-node sheet sign: +1 on sheet 1, -1 on sheet 2, 0 on the neck core.
fn sheet_sign(kind: LayerKind) -> f64 {
    match kind {
        LayerKind::Core { .. } => 0.0,
        LayerKind::NeckGraph { sheet, .. } | LayerKind::Radial { sheet, .. } => match sheet {
            End::One => 1.0,
            End::Two => -1.0,
        },
    }
}

/// The Rayleigh quotient of the test function that is `±1` on the exterior
/// pieces, `±(1 - η)` on the transition annuli and `0` on the neck, after
/// subtracting its mean. It bounds the discrete `ν₁` from above.
pub fn rayleigh_test_bound(surf: &GluedSurface, mesh: &SurfaceMesh, sys: &SpectralSystem) -> f64 {
    let u = test_function(surf, mesh);
    let mean = sys.integral(&u) / sys.volume;
    let u: Vec<f64> = u.iter().map(|x| x - mean).collect();
    sys.stiffness.quad_form(&u, &u) / sys.mass.quad_form(&u, &u)
}

/// Nodal values of the unnormalized test function of [`rayleigh_test_bound`].
pub fn test_function(surf: &GluedSurface, mesh: &SurfaceMesh) -> Vec<f64> {
    let nb = mesh.base_count();
    (0..mesh.mesh.node_count())
        .map(|i| {
            let kind = mesh.layers[i / nb].kind;
            match kind {
                LayerKind::Radial { r, .. } => sheet_sign(kind) * (1.0 - surf.cutoff.jet(r).0[0]),
                _ => 0.0,
            }
        })
        .collect()
}

/// Discrete harmonic interpolation between `+1` on `|x| ≥ δ` of sheet 1 and
/// `-1` on `|x| ≥ δ` of sheet 2.
pub fn harmonic_sigma(
    surf: &GluedSurface,
    mesh: &SurfaceMesh,
    sys: &SpectralSystem,
) -> Result<Vec<f64>> {
    let nb = mesh.base_count();
    let n = mesh.mesh.node_count();
    let mut fixed = vec![None; n];
    for (i, f) in fixed.iter_mut().enumerate() {
        if let LayerKind::Radial { r, .. } = mesh.layers[i / nb].kind {
            if r >= surf.delta() * (1.0 - 1e-12) {
                *f = Some(sheet_sign(mesh.layers[i / nb].kind));
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let (kff, coupling) = sys.stiffness.split(&free);
    let rhs: Vec<f64> = coupling
        .iter()
        .map(|row| {
            -row.iter()
                .map(|(j, v)| v * fixed[*j].expect("fixed node"))
                .sum::<f64>()
        })
        .collect();
    let sol = Cholesky::new(&kff)?.solve(&rhs);
    let mut sigma: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (p, &i) in free.iter().enumerate() {
        sigma[i] = sol[p];
    }
    Ok(sigma)
}

/// Intrinsic distance to the boundary along the axial mesh lines.
fn boundary_distance(mesh: &SurfaceMesh) -> Vec<f64> {
    let nb = mesh.base_count();
    let nl = mesh.layers.len();
    let x = &mesh.mesh.nodes;
    let mut d = vec![0.0; nl * nb];
    let dist = |a: usize, b: usize| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    for j in 0..nb {
        for l in 1..nl / 2 + 1 {
            let (i, prev) = (mesh.node(l, j), mesh.node(l - 1, j));
            d[i] = d[prev] + dist(i, prev);
        }
        for l in (nl / 2..nl - 1).rev() {
            let (i, prev) = (mesh.node(l, j), mesh.node(l + 1, j));
            let v = d[prev] + dist(i, prev);
            d[i] = if l == nl / 2 { d[i].min(v) } else { v };
        }
    }
    d
}

/// Boundary function `v = ±1/Vol(∂M_i)` and its collar extension `v_e = v s χ(s/w)`.
pub fn boundary_fields(
    surf: &GluedSurface,
    mesh: &SurfaceMesh,
    sys: &SpectralSystem,
) -> (Vec<f64>, Vec<f64>) {
    let nb = mesh.base_count();
    let area1 = sys.boundary_measure(1);
    let area2 = sys.boundary_measure(2);
    let v: Vec<f64> = sys
        .boundary_label
        .iter()
        .map(|l| match l {
            1 => 1.0 / area1,
            2 => -1.0 / area2,
            _ => 0.0,
        })
        .collect();
    let dist = boundary_distance(mesh);
    let w = COLLAR_FRACTION * surf.outer_radius;
    let nl = mesh.layers.len();
    let v_e = (0..mesh.mesh.node_count())
        .map(|i| {
            let l = i / nb;
            let side = if l >= nl / 2 {
                1.0 / area1
            } else {
                -1.0 / area2
            };
            side * dist[i] * profile(dist[i] / w).0[0]
        })
        .collect();
    (v, v_e)
}

/// Lagrangian angle at every mesh node.
pub fn nodal_angle(surf: &GluedSurface, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
    mesh.points
        .iter()
        .map(|p| {
            let z = geometry::calibration(surf, p)?;
            Ok(z.im.atan2(z.re))
        })
        .collect()
}

pub fn eigen_fields(
    sys: &SpectralSystem,
    spectrum: &Spectrum,
    surf: &GluedSurface,
    mesh: &SurfaceMesh,
    weight: &WeightFunction,
) -> Result<EigenFields> {
    if spectrum.pairs.len() < 3 {
        return Err(Error::InvalidParameters(
            "eigen fields need ν₀, ν₁ and ν₂".into(),
        ));
    }
    let n = sys.n();
    let mut s = spectrum.pairs[1].vector.clone();
    let (v, v_e) = boundary_fields(surf, mesh, sys);
    let side1: Vec<f64> = sys
        .boundary_label
        .iter()
        .map(|l| if *l == 1 { 1.0 } else { 0.0 })
        .collect();
    if sys.boundary_mass.quad_form(&side1, &s) < 0.0 {
        s.iter_mut().for_each(|x| *x = -*x);
    }
    let sigma = harmonic_sigma(surf, mesh, sys)?;
    let sigma_s = sys.inner(&sigma, &s);
    if sigma_s.abs() < 1e-8 {
        return Err(Error::DegenerateProjection(sigma_s));
    }
    let mean = sys.integral(&sigma) / sys.volume;
    let s_bar: Vec<f64> = sigma.iter().map(|x| (x - mean) / sigma_s).collect();
    let sup_diff = s_bar
        .iter()
        .zip(&s)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let kv = sys.stiffness.matvec(&v_e);
    let bv = sys.boundary_mass.matvec(&v);
    let load: Vec<f64> = kv.iter().zip(&bv).map(|(a, b)| -a - b).collect();
    let psi1 = sys.mass_solver()?.solve(&load);
    let theta = nodal_angle(surf, mesh)?;
    let psi0: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let rho2: Vec<f64> = mesh
        .mesh
        .nodes
        .iter()
        .map(|x| weight.value(crate::sampling::norm(x)).powi(2))
        .collect();
    let weighted: Vec<f64> = (0..n).map(|i| rho2[i] * psi1[i]).collect();
    let ones = vec![1.0; n];
    Ok(EigenFields {
        nu: spectrum.values(),
        psi1_s: dot(&s, &load),
        psi1_s_weighted: sys.inner(&weighted, &s),
        psi1_integral: dot(&ones, &load),
        boundary_v_integral: dot(&ones, &bv),
        sigma_s,
        sup_s_bar_minus_s: sup_diff,
        s,
        sigma,
        s_bar,
        v_boundary: v,
        v_e,
        theta,
        psi0,
        psi1,
        psi1_load: load,
    })
}

/// P1 gradient pairing `∫ f (∇a · ∇b) φ_i` per node, with `f` averaged per cell.
fn gradient_pairing(mesh: &SimplexMesh, f: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.node_count()];
    let d = mesh.dim;
    for cell in &mesh.cells {
        let e = mesh.edges(cell);
        let g = DMatrix::from_fn(d, d, |i, j| dot(&e[i], &e[j]));
        let Some(ginv) = g.clone().try_inverse() else {
            continue;
        };
        let vol = g.determinant().max(0.0).sqrt() / super::mesh::factorial(d);
        let da = nalgebra::DVector::from_fn(d, |i, _| a[cell[i + 1]] - a[cell[0]]);
        let db = nalgebra::DVector::from_fn(d, |i, _| b[cell[i + 1]] - b[cell[0]]);
        let gg = da.dot(&(&ginv * &db));
        let favg = cell.iter().map(|&i| f[i]).sum::<f64>() / (d + 1) as f64;
        let share = vol * favg * gg / (d + 1) as f64;
        for &i in cell {
            out[i] += share;
        }
    }
    out
}

/// Discrete linearized operator
/// `L u = -cos θ Δu - sin θ ⟨∇θ, ∇u⟩ + a cos θ - b Δv_e`
/// with `Δ` the nonnegative Laplacian and weak terms mass-inverted.
pub fn linearized_apply(
    sys: &SpectralSystem,
    mesh: &SimplexMesh,
    fields: &EigenFields,
    u: &[f64],
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    let lap_ve: Vec<f64> = fields.psi1.iter().map(|x| -x).collect();
    apply_operator(sys, mesh, &fields.theta, &lap_ve, u, a, b)
}

/// [`linearized_apply`] with explicit nodal angle `θ` and nodal `Δv_e`.
pub fn apply_operator(
    sys: &SpectralSystem,
    mesh: &SimplexMesh,
    theta: &[f64],
    lap_ve: &[f64],
    u: &[f64],
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    let n = sys.n();
    for len in [u.len(), theta.len(), lap_ve.len(), mesh.node_count()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let solver = sys.mass_solver()?;
    let lap = solver.solve(&sys.stiffness.matvec(u));
    let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let cross = if sin.iter().all(|s| *s == 0.0) {
        vec![0.0; n]
    } else {
        solver.solve(&gradient_pairing(mesh, &sin, theta, u))
    };
    Ok((0..n)
        .map(|i| {
            let c = theta[i].cos();
            -c * lap[i] - cross[i] + a * c - b * lap_ve[i]
        })
        .collect())
}
