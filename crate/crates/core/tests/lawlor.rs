use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slaglab::error::Error;
use slaglab::lawlor::{
    cache_path, match_angles, poly_p, sphere_tangent_basis, tail_bound, theta, theta_infinity, End,
    LawlorNeck, LawlorParams,
};
use slaglab::sampling::{directions, geomspace, norm};
use slaglab::sweep::fit_loglog;
use slaglab::symplectic::{characteristic_angles, real_gram_schmidt, LagrangianPlane, C64};
use std::f64::consts::PI;
use std::sync::OnceLock;

const TOL: f64 = 1e-12;

fn params(a: &[f64]) -> LawlorParams {
    LawlorParams::new(a.to_vec()).unwrap()
}

fn neck(a: &[f64]) -> LawlorNeck {
    LawlorNeck::new(params(a), TOL).unwrap()
}

fn symmetric_neck() -> &'static LawlorNeck {
    static N: OnceLock<LawlorNeck> = OnceLock::new();
    N.get_or_init(|| neck(&[1.0, 1.0, 1.0]))
}

fn skew_neck() -> &'static LawlorNeck {
    static N: OnceLock<LawlorNeck> = OnceLock::new();
    N.get_or_init(|| neck(&[1.0, 2.0, 3.0]))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l = norm(&v);
    v.iter().map(|x| x / l).collect()
}

/// Composite Simpson rule with one Richardson step, as an independent reference.
fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let rule = |m: usize| {
        let h = (hi - lo) / (2 * m) as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..2 * m {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let (c, fine) = (rule(panels), rule(2 * panels));
    fine + (fine - c) / 15.0
}

/// Reference integrand with `P` expanded by hand from its defining product.
fn reference_integrand(a: &[f64], k: usize, s: f64) -> f64 {
    let p = if s == 0.0 {
        a.iter().sum()
    } else {
        (a.iter().map(|ak| 1.0 + ak * s * s).product::<f64>() - 1.0) / (s * s)
    };
    -1.0 / ((1.0 / a[k] + s * s) * p.sqrt())
}

#[test]
fn polynomial_examples() {
    assert!((poly_p(&params(&[1.0, 1.0, 1.0]), 1.0) - 7.0).abs() < 1e-14);
    assert!((poly_p(&params(&[1.0, 2.0, 3.0]), 1.0) - 23.0).abs() < 1e-13);
    assert_eq!(poly_p(&params(&[1.0, 2.0, 3.0]), 0.0), 6.0);
}

#[test]
fn polynomial_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let a: Vec<f64> = (0..rng.gen_range(3..6))
            .map(|_| rng.gen_range(0.2..5.0))
            .collect();
        let p = params(&a);
        let n = a.len() as i32;
        let big_a = p.min_a();
        for l in geomspace(1e-3, 1e3, 60) {
            let bound = (big_a.powi(n) * l.powi(2 * n - 2)).min(n as f64 * big_a);
            assert!(poly_p(&p, l) >= bound * (1.0 - 1e-12), "a={a:?} λ={l}");
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(
        LawlorParams::new(vec![1.0, 1.0]),
        Err(Error::InvalidParameters(_))
    ));
    assert!(matches!(
        LawlorParams::new(vec![1.0, -1.0, 1.0]),
        Err(Error::InvalidParameters(_))
    ));
    assert!(theta(&params(&[1.0, 1.0, 1.0]), 0, 1.0, 0.0).is_err());
}

#[test]
fn angle_integral_basics() {
    let p = params(&[1.0, 1.0, 1.0]);
    for k in 0..3 {
        assert_eq!(theta(&p, k, 0.0, 1e-12).unwrap(), 0.0);
        let fwd = theta(&p, k, 2.0, 1e-12).unwrap();
        assert_eq!(fwd, -theta(&p, k, -2.0, 1e-12).unwrap());
        assert!(fwd < 0.0);
    }
}

#[test]
fn angle_integral_matches_simpson_reference() {
    for a in [[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]] {
        let p = params(&a);
        for k in 0..3 {
            for l in [0.3, 1.0, 4.0] {
                let reference = simpson(|s| reference_integrand(&a, k, s), 0.0, l, 4000);
                let got = theta(&p, k, l, 1e-12).unwrap();
                assert!(
                    (got - reference).abs() < 1e-11,
                    "a={a:?} k={k} λ={l}: {got} vs {reference}"
                );
            }
        }
    }
}

#[test]
fn tabulation_is_odd_and_decreasing() {
    let nk = skew_neck();
    let grid = nk.grid();
    for k in 0..3 {
        assert_eq!(nk.theta(k, 0.0), 0.0);
        for w in grid.windows(2) {
            assert!(nk.theta(k, w[1]) < nk.theta(k, w[0]));
        }
        for &l in grid.iter().step_by(7) {
            assert!((nk.theta(k, l) + nk.theta(k, -l)).abs() < 1e-15);
        }
    }
}

#[test]
fn asymptotic_angles_of_symmetric_neck() {
    let p = params(&[1.0, 1.0, 1.0]);
    let inf = theta_infinity(&p, 1e-12).unwrap();
    for t in &inf {
        assert!((t + PI / 6.0).abs() < 1e-11, "{t}");
    }
    let a = [1.0, 1.0, 1.0];
    let reference = simpson(
        |u| {
            if u >= 1.0 {
                0.0
            } else {
                reference_integrand(&a, 0, u / (1.0 - u)) / (1.0 - u).powi(2)
            }
        },
        0.0,
        1.0,
        20000,
    );
    assert!(
        (inf[0] - reference).abs() < 1e-10,
        "{} vs {reference}",
        inf[0]
    );
}

#[test]
fn asymptotic_angles_are_scale_invariant() {
    let base = theta_infinity(&params(&[1.0, 2.0, 3.0]), 1e-12).unwrap();
    for c in [0.5, 3.0, 17.0] {
        let scaled = theta_infinity(&params(&[c, 2.0 * c, 3.0 * c]), 1e-12).unwrap();
        for (x, y) in base.iter().zip(&scaled) {
            assert!((x - y).abs() < 1e-11);
        }
    }
    let sym = theta_infinity(&params(&[2.5, 2.5, 2.5]), 1e-12).unwrap();
    assert!((sym[0] - sym[1]).abs() < 1e-14 && (sym[1] - sym[2]).abs() < 1e-14);
}

#[test]
fn tail_bound_holds() {
    for nk in [symmetric_neck(), skew_neck()] {
        let r0 = nk.r0();
        for l in geomspace(r0, 100.0 * r0, 25) {
            for k in 0..3 {
                let gap = (nk.theta(k, l) - nk.theta_inf[k]).abs();
                assert!(gap <= tail_bound(&nk.params, l) + 1e-12, "λ={l} k={k}");
            }
        }
    }
}

#[test]
fn embedding_examples_at_the_waist() {
    let nk = symmetric_neck();
    let p = nk.embed(0.0, &[1.0, 0.0, 0.0]);
    let want = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    assert!(
        p.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-15),
        "{p:?}"
    );
    let p = nk.embed(0.0, &[0.0, 1.0, 0.0]);
    let want = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    assert!(
        p.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-15),
        "{p:?}"
    );
}

#[test]
fn embedding_norm_is_comparable_to_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for nk in [symmetric_neck(), skew_neck()] {
        let r0 = nk.r0();
        for l in geomspace(0.5 * r0, 200.0, 30) {
            for _ in 0..10 {
                let mu = unit(&mut rng, 3);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let p = norm(&nk.embed(sign * l, &mu));
                if p >= r0 {
                    assert!(
                        p >= l / 2f64.sqrt() * (1.0 - 1e-12)
                            && p <= 2f64.sqrt() * l * (1.0 + 1e-12)
                    );
                }
            }
        }
    }
}

#[test]
fn embedding_scales_with_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = [1.0, 2.0, 3.0];
    let base = skew_neck();
    for c in [0.25, 4.0] {
        let scaled = neck(&[c * a[0], c * a[1], c * a[2]]);
        for _ in 0..20 {
            let mu = unit(&mut rng, 3);
            let l = rng.gen_range(-6.0..6.0);
            let lhs = scaled.embed(l / c.sqrt(), &mu);
            let rhs: Vec<f64> = base.embed(l, &mu).iter().map(|x| x / c.sqrt()).collect();
            let err = lhs
                .iter()
                .zip(&rhs)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "c={c} λ={l}: {err:e}");
        }
    }
}

#[test]
fn neck_is_special_lagrangian() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for nk in [symmetric_neck(), skew_neck()] {
        for _ in 0..200 {
            let mu = unit(&mut rng, 3);
            let l = rng.gen_range(-8.0..8.0);
            let fr = nk.tangent_frame(l, &mu);
            for i in 0..3 {
                for j in i + 1..3 {
                    let w = fr[i].dotc(&fr[j]).im / (fr[i].norm() * fr[j].norm());
                    assert!(w.abs() <= 1e-8);
                }
            }
            let q = real_gram_schmidt(&fr).unwrap();
            let dz = DMatrix::from_columns(&q).determinant();
            assert!(dz.im.abs() <= 1e-8, "Im dz = {:e}", dz.im);
        }
    }
}

/// Derivative of the embedding along the great circle through `μ` in direction `τ`.
fn fd_partial(nk: &LawlorNeck, l: f64, mu: &[f64], dir: Option<&[f64]>, h: f64) -> Vec<f64> {
    let at = |t: f64| match dir {
        None => nk.embed(l + t, mu),
        Some(tau) => {
            let m: Vec<f64> = mu
                .iter()
                .zip(tau)
                .map(|(a, b)| a * t.cos() + b * t.sin())
                .collect();
            nk.embed(l, &m)
        }
    };
    at(h)
        .iter()
        .zip(at(-h))
        .map(|(p, q)| (p - q) / (2.0 * h))
        .collect()
}

#[test]
fn metric_matches_finite_differences() {
    let nk = symmetric_neck();
    let g = nk.induced_metric(0.0, &[1.0, 0.0, 0.0]);
    assert!((g[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
    assert!((g[(1, 1)] - 1.0).abs() < 1e-15 && (g[(2, 2)] - 1.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..3.0)).collect();
        let nk = neck(&a);
        let mu = unit(&mut rng, 3);
        let l = rng.gen_range(-3.0..3.0);
        let tau = sphere_tangent_basis(&mu);
        let mut cols = vec![fd_partial(&nk, l, &mu, None, 1e-5)];
        for t in &tau {
            cols.push(fd_partial(&nk, l, &mu, Some(t), 1e-5));
        }
        let fd = DMatrix::from_fn(3, 3, |i, j| {
            cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(p, q)| p * q)
                .sum::<f64>()
        });
        let g = nk.induced_metric(l, &mu);
        let rel = (&g - &fd).norm() / g.norm();
        assert!(rel < 1e-6, "a={a:?} λ={l}: {rel:e}");
    }
}

#[test]
fn graph_decay_rates() {
    let nk = skew_neck();
    let r0 = nk.r0();
    let radii = geomspace(2.0 * r0, 20.0 * r0, 8);
    let dirs = directions(3, 26, 3);
    let graph = nk.asymptotic_graph(End::One, &radii, &dirs).unwrap();
    let sup = |f: &dyn Fn(&slaglab::lawlor::GraphSample) -> f64| -> Vec<f64> {
        radii
            .iter()
            .map(|r| {
                graph
                    .samples
                    .iter()
                    .filter(|s| (s.radius() - r).abs() < 1e-9 * r)
                    .map(f)
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let grad = fit_loglog(&radii, &sup(&|s| s.grad_norm())).unwrap();
    let value = fit_loglog(&radii, &sup(&|s| s.g.abs())).unwrap();
    assert!((grad.slope + 2.0).abs() <= 0.1, "{grad:?}");
    assert!((value.slope + 1.0).abs() <= 0.1, "{value:?}");
    let c = (2.0 / 3.0) * (2.0 / nk.params.min_a()).powf(1.5);
    for s in &graph.samples {
        let bound = c / s.radius().powi(2);
        assert!(s.grad.iter().all(|d| d.abs() <= bound));
    }
}

#[test]
fn graph_reproduces_the_neck_end() {
    let nk = skew_neck();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for end in [End::One, End::Two] {
        let frame = nk.end_frame(end);
        for _ in 0..20 {
            let mu = unit(&mut rng, 3);
            let l = end.sign() * rng.gen_range(2.0..30.0);
            let (s, t) = nk.plane_coordinates(end, l, &mu);
            if norm(&s) < nk.r0() {
                continue;
            }
            let grad = nk.graph_grad(end, &s).unwrap();
            let err = grad
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-9 * norm(&s), "{err:e}");
            let z = DVector::from_fn(3, |k, _| C64::new(s[k], grad[k]));
            let back = &frame * z;
            let direct = nk.embed_complex(l, &mu);
            assert!((back - direct).norm() < 1e-9 * norm(&s));
        }
    }
}

#[test]
fn graph_value_is_a_potential() {
    let nk = skew_neck();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let w = unit(&mut rng, 3);
        let r = rng.gen_range(2.0..10.0) * nk.r0();
        let s: Vec<f64> = w.iter().map(|c| c * r).collect();
        let h = 1e-4 * r;
        for j in 0..3 {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp[j] += h;
            sm[j] -= h;
            let d = (nk.graph_value(End::One, &sp).unwrap()
                - nk.graph_value(End::One, &sm).unwrap())
                / (2.0 * h);
            let g = nk.graph_grad(End::One, &s).unwrap()[j];
            assert!((d - g).abs() < 1e-7 * (1.0 + g.abs()), "{d} vs {g}");
        }
    }
    let near = nk.graph_value(End::One, &[1e2, 0.0, 0.0]).unwrap();
    let far = nk.graph_value(End::One, &[1e4, 0.0, 0.0]).unwrap();
    assert!(far.abs() < 0.02 * near.abs(), "{near:e} {far:e}");
}

#[test]
fn third_derivative_holder_decay() {
    let nk = skew_neck();
    let beta = 0.1;
    let dirs = directions(3, 8, 17);
    let third = |s: &[f64]| -> Vec<f64> {
        let h = 1e-3 * norm(s);
        let mut out = Vec::new();
        for l in 0..3 {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[l] += h;
            sm[l] -= h;
            let d = (nk.graph_derivatives(End::One, &sp).unwrap().1
                - nk.graph_derivatives(End::One, &sm).unwrap().1)
                / (2.0 * h);
            out.extend(d.iter().copied());
        }
        out
    };
    let radii = geomspace(4.0 * nk.r0(), 40.0 * nk.r0(), 6);
    let mut sups = Vec::new();
    for &r in &radii {
        let pts: Vec<Vec<f64>> = dirs
            .iter()
            .flat_map(|w| [1.0, 1.3].map(|f| w.iter().map(|c| c * r * f).collect::<Vec<f64>>()))
            .collect();
        let vals: Vec<Vec<f64>> = pts.iter().map(|p| third(p)).collect();
        let mut sup: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dx = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let dv = vals[i]
                    .iter()
                    .zip(&vals[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                sup = sup.max(dv / dx.powf(beta));
            }
        }
        sups.push(sup);
    }
    let fit = fit_loglog(&radii, &sups).unwrap();
    assert!(fit.slope <= -(3.0 + 1.0 + beta) + 0.2, "{fit:?}");
}

#[test]
fn asymptotic_graph_rejects_small_radii() {
    let nk = skew_neck();
    let r = 0.5 * nk.r0();
    assert!(matches!(
        nk.asymptotic_graph(End::One, &[r], &[vec![1.0, 0.0, 0.0]]),
        Err(Error::RadiusTooSmall { .. })
    ));
}

/// Tangent plane at a far point of one end, as a stand-in for the asymptotic plane.
fn far_plane(nk: &LawlorNeck, lambda: f64) -> LagrangianPlane {
    let mu = [0.6, 0.64, 0.48];
    let q = real_gram_schmidt(&nk.tangent_frame(lambda, &mu)).unwrap();
    LagrangianPlane::from_unitary(DMatrix::from_columns(&q))
}

#[test]
fn symmetric_neck_satisfies_the_angle_criterion() {
    let nk = symmetric_neck();
    let ca = characteristic_angles(&far_plane(nk, 1e6), &far_plane(nk, -1e6)).unwrap();
    assert!((ca.sum - PI).abs() < 1e-6, "{:?}", ca.angles);
    assert!(
        (ca.angles[0] - ca.angles[1]).abs() < 1e-6 && (ca.angles[1] - ca.angles[2]).abs() < 1e-6
    );
    let (p1, p2) = nk.asymptotic_planes();
    let exact = characteristic_angles(&p1, &p2).unwrap();
    assert!((exact.sum - PI).abs() < 1e-10);
}

#[test]
fn matching_recovers_parameters() {
    let target = skew_neck().coordinate_angles();
    let a = match_angles(&target, 1e-9).unwrap();
    let want = [1.0, 2.0, 3.0];
    for (x, y) in a.a().iter().zip(&want) {
        assert!((x - y).abs() < 1e-6 * y, "{:?}", a.a());
    }
    let again = neck(a.a()).coordinate_angles();
    assert!(again.iter().zip(&target).all(|(x, y)| (x - y).abs() < 1e-9));
}

#[test]
fn matching_rejects_infeasible_targets() {
    assert!(matches!(
        match_angles(&[1.0, 1.0, 1.0], 1e-9),
        Err(Error::InfeasibleTargets(_))
    ));
    assert!(matches!(
        match_angles(&[PI, 0.0, 0.0], 1e-9),
        Err(Error::InfeasibleTargets(_))
    ));
    assert!(matches!(
        match_angles(&[PI / 2.0, PI / 2.0], 1e-9),
        Err(Error::InfeasibleTargets(_))
    ));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = params(&[1.0, 2.0, 3.0]);
    let path = cache_path(dir.path(), &p, 1e-10);
    assert!(!path.exists());
    let built = LawlorNeck::cached(p.clone(), 1e-10, Some(dir.path())).unwrap();
    assert!(path.exists());
    let loaded = LawlorNeck::cached(p, 1e-10, Some(dir.path())).unwrap();
    assert_eq!(built.theta_inf, loaded.theta_inf);
    assert_eq!(built.grid(), loaded.grid());
    let back = LawlorNeck::from_json(&built.to_json().unwrap()).unwrap();
    for l in [0.0, 0.7, 3.0, 50.0] {
        assert_eq!(back.theta_all(l), built.theta_all(l));
    }
}
