use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slaglab::config::Config;
use slaglab::error::Error;
use slaglab::geometry::volume;
use slaglab::gluing::{GluedSurface, Region};
use slaglab::spectral::lanczos::EIG_TOL;
use slaglab::spectral::{
    apply_operator, assemble, build_mesh, cylinder_mesh, linearized_apply, neumann_eigs,
    rayleigh_test_bound, shell_mesh, sphere_mesh, EigenFields, Resolution, SimplexMesh,
    SpectralSystem, Spectrum, SurfaceMesh,
};
use slaglab::sweep::{spectral_pipeline, Lab};
use std::f64::consts::PI;
use std::sync::OnceLock;

struct Fixture {
    surf: GluedSurface,
    mesh: SurfaceMesh,
    sys: SpectralSystem,
    spectrum: Spectrum,
    fields: EigenFields,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let lab = Lab::new(&Config::default(), None).unwrap();
        let surf = lab.surface(0.1).unwrap();
        let (mesh, sys, spectrum, fields) = spectral_pipeline(&lab, &surf).unwrap();
        Fixture {
            surf,
            mesh,
            sys,
            spectrum,
            fields,
        }
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shell_volume_error(level: usize) -> f64 {
    let exact = 4.0 / 3.0 * PI * (1.0 - 0.125);
    (shell_mesh(0.5, 1.0, level, 8).volume() - exact).abs() / exact
}

#[test]
fn surface_mesh_shape() {
    let f = fixture();
    assert_eq!(f.mesh.base_count(), 642);
    assert_eq!(f.mesh.layers.len(), 65);
    assert_eq!(f.mesh.mesh.node_count(), 642 * 65);
    assert_eq!(f.sys.n(), f.mesh.mesh.node_count());
}

#[test]
fn shell_volume_converges() {
    let (coarse, fine) = (shell_volume_error(2), shell_volume_error(3));
    assert!(fine <= 0.01, "{fine}");
    assert!(coarse / fine >= 2.0, "{coarse} {fine}");
}

#[test]
fn assembled_matrices_are_consistent() {
    let m = shell_mesh(0.5, 1.0, 2, 4);
    let sys = assemble(&m).unwrap();
    let scale = sys.stiffness.norm_inf();
    assert!(sys
        .stiffness
        .row_sums()
        .iter()
        .all(|r| r.abs() <= 1e-12 * scale));
    let mass: f64 = sys.mass.row_sums().iter().sum();
    assert!((mass - m.volume()).abs() <= 1e-12 * m.volume());
    let outer = 4.0 * PI;
    assert!((sys.boundary_measure(1) - outer).abs() <= 0.02 * outer);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert!((sys.stiffness.quad_form(&u, &v) - sys.stiffness.quad_form(&v, &u)).abs() <= 1e-10);
    assert!(sys.stiffness.quad_form(&u, &u) > 0.0);
}

fn first_nonzero(m: &SimplexMesh) -> f64 {
    let sys = assemble(m).unwrap();
    neumann_eigs(&sys, 3).unwrap().pairs[1].value
}

#[test]
fn round_sphere_first_eigenvalue() {
    let nu = first_nonzero(&sphere_mesh(3));
    assert!((nu - 2.0).abs() <= 0.02 * 2.0, "{nu}");
}

#[test]
fn long_cylinder_first_eigenvalue() {
    let len = 4.0;
    let exact = (PI / len).powi(2);
    let nu = first_nonzero(&cylinder_mesh(len, 48, 64));
    assert!((nu - exact).abs() <= 0.02 * exact, "{nu} vs {exact}");
}

#[test]
fn low_spectrum_is_stable_under_refinement() {
    let f = fixture();
    let res = Resolution {
        sphere_level: 4,
        axial_cells: 128,
    };
    let fine = neumann_eigs(
        &assemble(&build_mesh(&f.surf, res).unwrap().mesh).unwrap(),
        3,
    )
    .unwrap();
    for k in [1, 2] {
        let (a, b) = (fine.pairs[k].value, f.spectrum.pairs[k].value);
        assert!((a - b).abs() <= 0.03 * b, "ν{k}: {a} vs {b}");
    }
}

#[test]
fn mesh_volume_tracks_the_surface() {
    let f = fixture();
    let geo = volume(&f.surf, Region::All).unwrap().value;
    let mesh = f.mesh.mesh.volume();
    assert!((mesh - geo).abs() <= 0.02 * geo, "{mesh} vs {geo}");
    assert!((f.sys.volume - mesh).abs() <= 1e-12 * mesh);
}

#[test]
fn eigenpairs_are_accurate_and_orthonormal() {
    let f = fixture();
    let p = &f.spectrum.pairs;
    assert!(p[0].value.abs() <= 1e-10);
    let c = p[0].vector[0];
    assert!(p[0].vector.iter().all(|x| (x - c).abs() <= 1e-8 * c.abs()));
    for i in 0..p.len() {
        assert!(p[i].residual <= EIG_TOL, "{}", p[i].residual);
        for j in 0..p.len() {
            let g = f.sys.inner(&p[i].vector, &p[j].vector);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() <= 1e-9, "({i},{j}) {g}");
        }
    }
    assert!(p.windows(2).all(|w| w[0].value <= w[1].value));
}

#[test]
fn eigenvalue_bounds() {
    let f = fixture();
    let (nu1, nu2) = (f.spectrum.pairs[1].value, f.spectrum.pairs[2].value);
    assert!(rayleigh_test_bound(&f.surf, &f.mesh, &f.sys) >= nu1 && nu1 >= 0.0);
    let s = &f.fields.s;
    let ss = f.sys.inner(s, s);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let mut u: Vec<f64> = (0..f.sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = f.sys.integral(&u) / f.sys.volume;
        u.iter_mut().for_each(|x| *x -= mean);
        let c = f.sys.inner(&u, s) / ss;
        u.iter_mut().zip(s).for_each(|(x, y)| *x -= c * y);
        let k = f.sys.stiffness.quad_form(&u, &u);
        let m = f.sys.mass.quad_form(&u, &u);
        assert!(k >= nu2 * m * (1.0 - 1e-6), "{} vs {nu2}", k / m);
    }
}

#[test]
fn normalized_sigma_and_boundary_data() {
    let f = fixture();
    let fl = &f.fields;
    assert!(f.sys.integral(&fl.s_bar).abs() <= 1e-10 * f.sys.volume);
    assert!((f.sys.inner(&fl.s_bar, &fl.s) - 1.0).abs() <= 1e-10);
    let ones = vec![1.0; f.sys.n()];
    let bv = f.sys.boundary_mass.quad_form(&ones, &fl.v_boundary);
    let scale = f.sys.boundary_mass.quad_form(
        &fl.v_boundary.iter().map(|x| x.abs()).collect::<Vec<_>>(),
        &ones,
    );
    assert!(bv.abs() <= 1e-10 * scale);
    assert!(fl.boundary_v_integral.abs() <= 1e-10 * scale);
    assert!(fl.psi1_integral.abs() <= 1e-8 * scale);
}

#[test]
fn green_identity_for_the_correction() {
    let f = fixture();
    let fl = &f.fields;
    let nu1 = f.spectrum.pairs[1].value;
    let expect =
        -nu1 * f.sys.inner(&fl.v_e, &fl.s) - f.sys.boundary_mass.quad_form(&fl.s, &fl.v_boundary);
    let scale = fl.psi1_load.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    assert!(
        (fl.psi1_s - expect).abs() <= 1e-8 * scale,
        "{} vs {expect}",
        fl.psi1_s
    );
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..5 {
        let u: Vec<f64> = (0..f.sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nodal = f.sys.inner(&u, &fl.psi1);
        let weak = fl.psi1_pairing(&u);
        let s = f.sys.inner(&u, &u).sqrt() * f.sys.inner(&fl.psi1, &fl.psi1).sqrt();
        assert!((nodal - weak).abs() <= 1e-8 * s);
    }
}

#[test]
fn operator_on_a_flat_shell() {
    let m = shell_mesh(0.5, 1.0, 2, 4);
    let sys = assemble(&m).unwrap();
    let n = sys.n();
    let zero = vec![0.0; n];
    let out = apply_operator(&sys, &m, &zero, &zero, &vec![3.0; n], 0.0, 0.0).unwrap();
    assert!(out.iter().all(|x| x.abs() <= 1e-9));
    let out = apply_operator(&sys, &m, &zero, &zero, &zero, 1.0, 0.0).unwrap();
    assert!(out.iter().all(|x| (x - 1.0).abs() <= 1e-12));
    let lap = vec![2.0; n];
    let out = apply_operator(&sys, &m, &zero, &lap, &zero, 0.0, 0.5).unwrap();
    assert!(out.iter().all(|x| (x + 1.0).abs() <= 1e-12));
}

/// `∫ sin θ ⟨∇θ, ∇u⟩ φ_i` with per-cell ambient gradients from the
/// pseudo-inverse of the edge matrix.
fn cross_load(m: &SimplexMesh, theta: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.node_count()];
    let d = m.dim;
    for cell in &m.cells {
        let e = m.edges(cell);
        let em = DMatrix::from_fn(d, e[0].len(), |i, j| e[i][j]);
        let Some(pinv) = (&em * em.transpose())
            .try_inverse()
            .map(|g| em.transpose() * g)
        else {
            continue;
        };
        let grad = |f: &[f64]| &pinv * DVector::from_fn(d, |i, _| f[cell[i + 1]] - f[cell[0]]);
        let g = grad(theta).dot(&grad(u));
        let s = cell.iter().map(|&i| theta[i].sin()).sum::<f64>() / (d + 1) as f64;
        let share = m.simplex_volume(cell) * s * g / (d + 1) as f64;
        for &i in cell {
            out[i] += share;
        }
    }
    out
}

#[test]
fn operator_on_the_first_eigenfunction() {
    let f = fixture();
    let fl = &f.fields;
    let nu1 = f.spectrum.pairs[1].value;
    let got = linearized_apply(&f.sys, &f.mesh.mesh, fl, &fl.s, 0.0, 0.0).unwrap();
    let cross = f
        .sys
        .mass_solver()
        .unwrap()
        .solve(&cross_load(&f.mesh.mesh, &fl.theta, &fl.s));
    let want: Vec<f64> = (0..f.sys.n())
        .map(|i| -nu1 * fl.theta[i].cos() * fl.s[i] - cross[i])
        .collect();
    let diff: Vec<f64> = got.iter().zip(&want).map(|(a, b)| a - b).collect();
    let err = f.sys.inner(&diff, &diff).sqrt();
    let size = f.sys.inner(&want, &want).sqrt();
    assert!(err <= 0.05 * size, "{err} vs {size}");
    let cos_part: f64 = (0..f.sys.n())
        .map(|i| (fl.theta[i].cos() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(cos_part <= 0.1);
    assert!(dot(&fl.theta, &fl.theta) > 0.0);
}

#[test]
fn operator_rejects_mismatched_lengths() {
    let f = fixture();
    let short = vec![0.0; 10];
    let r = linearized_apply(&f.sys, &f.mesh.mesh, &f.fields, &short, 0.0, 0.0);
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}
