use nalgebra::DMatrix;
use slaglab::config::Config;
use slaglab::error::Error;
use slaglab::geometry::{transition_displacement, transition_stats, SampleGrid};
use slaglab::gluing::exterior::{ExteriorPiece, Monomial};
use slaglab::gluing::{
    annulus_bounds, build_surface, exactness_mismatches, hessian_bounds, select_parameters,
    ChartPoint, Cutoff, GluedSurface,
};
use slaglab::lawlor::End;
use slaglab::sampling::{directions, geomspace, norm};
use slaglab::sweep::{fit_loglog, Lab};
use slaglab::symplectic::LagrangianPlane;
use std::f64::consts::PI;
use std::sync::OnceLock;

const SWEEP: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn lab() -> &'static Lab {
    static L: OnceLock<Lab> = OnceLock::new();
    L.get_or_init(|| Lab::new(&Config::default(), None).unwrap())
}

fn perturbed_lab() -> &'static Lab {
    static L: OnceLock<Lab> = OnceLock::new();
    L.get_or_init(|| {
        let mut cfg = Config::default();
        cfg.exterior = [
            vec![
                Monomial {
                    coef: 0.3,
                    powers: vec![3, 0, 0],
                },
                Monomial {
                    coef: 0.2,
                    powers: vec![1, 1, 1],
                },
            ],
            vec![Monomial {
                coef: -0.25,
                powers: vec![0, 2, 1],
            }],
        ];
        Lab::new(&cfg, None).unwrap()
    })
}

fn surface() -> &'static GluedSurface {
    static S: OnceLock<GluedSurface> = OnceLock::new();
    S.get_or_init(|| lab().surface(0.1).unwrap())
}

#[test]
fn parameter_selection() {
    let lab = lab();
    let r0 = lab.neck.r0();
    let cfg = select_parameters(0.1, 1.0, lab.c0, r0, 3).unwrap();
    assert_eq!(cfg.delta, 0.1);
    let eps_max = 0.1f64.powf(4.0 / 3.0) / (2.0 * lab.c0.cbrt());
    assert!((cfg.epsilon - eps_max).abs() <= 1e-15 * eps_max);
    assert!(cfg.epsilon * r0 <= 0.5 * cfg.delta);
    let cfg = select_parameters(0.12, 2.5, lab.c0, r0, 3).unwrap();
    assert_eq!(cfg.delta, 0.12 / 2.5);
    assert!(matches!(
        select_parameters(0.3, 1.0, lab.c0, r0, 3),
        Err(Error::AlphaTooLarge { .. })
    ));
    assert!(matches!(
        select_parameters(5e-4, 1.0, lab.c0, r0, 3),
        Err(Error::AlphaTooLarge { .. })
    ));
    assert!(matches!(
        select_parameters(0.2, 1.0, 1e-9, r0, 3),
        Err(Error::AlphaTooLarge { .. })
    ));
}

#[test]
fn hessian_bounds_on_the_annulus() {
    let dirs = directions(3, 100, 2);
    for alpha in SWEEP {
        let surf = lab().surface(alpha).unwrap();
        let hb = hessian_bounds(&surf, &dirs, 50).unwrap();
        assert!(hb.holds(), "α={alpha}: {hb:?}");
        let eps = surf.epsilon();
        for w in dirs.iter().take(20) {
            let x: Vec<f64> = w.iter().map(|c| c * 0.5 * surf.delta()).collect();
            let h = surf.g_eps_jet(End::One, &x, false).unwrap().hess.norm();
            let bound = lab().c0 * eps.powi(3) / norm(&x).powi(3);
            assert!(h <= bound && bound <= alpha * (1.0 + 1e-12), "{h} {bound}");
        }
    }
    let surf = perturbed_lab().surface(0.1).unwrap();
    assert!(hessian_bounds(&surf, &dirs, 50).unwrap().holds());
}

#[test]
fn cutoff_plateaus_and_scaling() {
    let mut scaled = Vec::new();
    let mut consts = Vec::new();
    for delta in geomspace(0.01, 0.2, 6) {
        let c = Cutoff::new(delta);
        assert_eq!(c.eval(&[0.25 * delta, 0.0, 0.0]).value, 1.0);
        assert_eq!(c.eval(&[0.0, 2.0 * delta, 0.0]).value, 0.0);
        let j = c.jet(0.5 * delta);
        assert!(j.0[0] == 1.0 && j.0[1] == 0.0);
        let sup = (0..=1000)
            .map(|i| delta * c.jet(delta * (0.5 + 0.5 * i as f64 / 1000.0)).0[1].abs())
            .fold(0.0, f64::max);
        scaled.push(sup);
        consts.push(c.profile_constant(3));
    }
    for v in scaled.iter().chain(&consts) {
        assert!(v.is_finite() && *v > 0.0);
    }
    for w in scaled.windows(2).chain(consts.windows(2)) {
        assert!((w[0] - w[1]).abs() <= 1e-9 * w[0], "{scaled:?} {consts:?}");
    }
}

#[test]
fn cutoff_derivatives_match_differences() {
    let c = Cutoff::new(0.1);
    for i in 1..20 {
        let r = 0.05 + 0.05 * i as f64 / 20.0;
        let h = 1e-6;
        let j = c.jet(r);
        let d1 = (c.jet(r + h).0[0] - c.jet(r - h).0[0]) / (2.0 * h);
        let d2 = (c.jet(r + h).0[1] - c.jet(r - h).0[1]) / (2.0 * h);
        let d3 = (c.jet(r + h).0[2] - c.jet(r - h).0[2]) / (2.0 * h);
        assert!((d1 - j.0[1]).abs() < 1e-6 * (1.0 + j.0[1].abs()));
        assert!((d2 - j.0[2]).abs() < 1e-5 * (1.0 + j.0[2].abs()));
        assert!((d3 - j.0[3]).abs() < 1e-4 * (1.0 + j.0[3].abs()));
    }
}

#[test]
fn charts_agree_on_overlaps() {
    let surf = surface();
    let dirs = directions(3, 24, 4);
    let mut worst = (0.0f64, 0.0f64);
    for w in &dirs {
        for i in 0..=10 {
            let l = surf.lambda_core + (surf.lambda_overlap - surf.lambda_core) * i as f64 / 10.0;
            let mu = surf.core_mu(l, w);
            for lam in [l, -l] {
                let (p, d) = surf.overlap_gap(lam, &mu).unwrap();
                worst = (worst.0.max(p), worst.1.max(d));
            }
        }
    }
    assert!(worst.0 <= 1e-9 && worst.1 <= 1e-6, "{worst:?}");
}

#[test]
fn flat_transition_is_cutoff_times_neck_graph() {
    let surf = surface();
    let d = surf.delta();
    for w in directions(3, 12, 6) {
        for i in 0..=8 {
            let r = 0.5 * d + 0.5 * d * i as f64 / 8.0;
            let x: Vec<f64> = w.iter().map(|c| c * r).collect();
            for sheet in [End::One, End::Two] {
                let blend = surf.blend_jet(sheet, &x, true).unwrap();
                let g = surf.g_eps_jet(sheet, &x, true).unwrap();
                let eta = surf.cutoff.eval(&x);
                let value = eta.value * g.value;
                let grad = &g.grad * eta.value + &eta.grad * g.value;
                let outer = &eta.grad * g.grad.transpose();
                let hess = &g.hess * eta.value + &outer + outer.transpose() + &eta.hess * g.value;
                let scale = g.hess.norm().max(1e-300);
                assert!((blend.value - value).abs() <= 1e-14 * value.abs().max(1e-300));
                assert!((&blend.grad - grad).norm() <= 1e-14 * g.grad.norm());
                assert!((&blend.hess - hess).norm() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn surface_is_exact_away_from_the_transition() {
    let dirs = directions(3, 20, 8);
    assert_eq!(exactness_mismatches(surface(), &dirs, 8).unwrap(), 0);
    let surf = perturbed_lab().surface(0.05).unwrap();
    assert_eq!(exactness_mismatches(&surf, &dirs, 8).unwrap(), 0);
}

#[test]
fn transition_displacement_is_cubic() {
    let grid = SampleGrid::new(3, 24, 8);
    let mut pot = Vec::new();
    let mut normal = Vec::new();
    for alpha in SWEEP {
        let surf = lab().surface(alpha).unwrap();
        let d = transition_displacement(&surf, &grid).unwrap();
        let k = surf.cfg.k;
        assert!(d.potential <= alpha.powi(3) / (4.0 * k * k));
        pot.push(d.potential);
        normal.push(d.normal);
    }
    let fit = fit_loglog(&SWEEP, &pot).unwrap();
    assert!(fit.slope >= 2.7, "{fit:?}");
    assert!(normal.windows(2).all(|w| w[1] < w[0]), "{normal:?}");
}

#[test]
fn weight_plateaus_and_monotonicity() {
    let surf = surface();
    let w = surf.weight();
    let eps = surf.epsilon();
    let c = &surf.cfg;
    assert_eq!(w.value(0.5 * eps * c.a_weight), c.r_weight * eps);
    assert_eq!(w.value(eps * c.a_weight), c.r_weight * eps);
    assert_eq!(w.value(eps.powf(c.beta) * c.b_weight), c.r_weight);
    assert_eq!(w.value(0.99), c.r_weight);
    let radii = geomspace(0.5 * w.inner_radius(), 2.0 * w.outer_radius().min(0.5), 400);
    for pair in radii.windows(2) {
        assert!(w.value(pair[1]) >= w.value(pair[0]));
    }
    for &r in radii.iter().step_by(13) {
        let h = 1e-6 * r;
        let fd = (w.value(r + h) - w.value(r - h)) / (2.0 * h);
        assert!(
            (fd - w.derivative(r)).abs() <= 1e-5 * (1.0 + w.derivative(r).abs()),
            "r={r}"
        );
    }
}

#[test]
fn every_chart_is_lagrangian() {
    for surf in [surface(), &perturbed_lab().surface(0.1).unwrap()] {
        let grid = SampleGrid::new(3, 20, 6);
        let mut worst: f64 = 0.0;
        for (_, p) in grid.points(surf) {
            worst = worst.max(surf.omega_residual(&p).unwrap());
        }
        for p in grid.transition_points(surf) {
            worst = worst.max(surf.omega_residual(&p).unwrap());
        }
        assert!(worst <= 1e-8, "{worst:e}");
    }
}

#[test]
fn transition_metric_is_near_euclidean() {
    let grid = SampleGrid::new(3, 24, 8);
    for alpha in SWEEP {
        let st = transition_stats(&lab().surface(alpha).unwrap(), &grid, 0.1).unwrap();
        assert!(st.metric_dev <= 1.0, "{st:?}");
        assert!(st.min_det >= 0.5 && st.max_det <= 2.0, "{st:?}");
    }
}

#[test]
fn annulus_bounds_hold() {
    let dirs = directions(3, 24, 9);
    for alpha in SWEEP {
        let b = annulus_bounds(&lab().surface(alpha).unwrap(), &dirs, 5).unwrap();
        assert!(b.holds(), "α={alpha}: {:?}", b.table());
        let b = annulus_bounds(&perturbed_lab().surface(alpha).unwrap(), &dirs, 5).unwrap();
        assert!(b.holds(), "perturbed α={alpha}: {:?}", b.table());
        assert!(b.f > 0.0 && b.grad_f > 0.0);
    }
}

#[test]
fn rescaled_graph_matches_the_rescaled_neck() {
    let surf = surface();
    let nk = &surf.neck;
    let eps = surf.epsilon();
    let frame_mu = [0.36, 0.48, 0.8];
    for end in [End::One, End::Two] {
        for l in geomspace(3.0, 0.9 * surf.lambda_overlap, 6) {
            let (s, t) = nk.plane_coordinates(end, end.sign() * l, &frame_mu);
            if norm(&s) < 2.0 * nk.r0() {
                continue;
            }
            let x: Vec<f64> = s.iter().map(|c| c * eps).collect();
            let jet = surf.g_eps_jet(end, &x, true).unwrap();
            for k in 0..3 {
                assert!((jet.grad[k] - eps * t[k]).abs() <= 1e-10 * eps * norm(&t));
            }
            let h = 1e-4 * norm(&x);
            for k in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (surf.g_eps_jet(end, &xp, true).unwrap().value
                    - surf.g_eps_jet(end, &xm, true).unwrap().value)
                    / (2.0 * h);
                assert!(
                    (fd - jet.grad[k]).abs() <= 1e-7 * jet.grad.norm(),
                    "{fd} vs {}",
                    jet.grad[k]
                );
            }
            let direct = eps * eps * nk.graph_value(end, &s).unwrap();
            assert!((jet.value - direct).abs() <= 1e-12 * direct.abs());
        }
    }
}

#[test]
fn embedding_outside_delta_is_the_exterior_graph() {
    let surf = surface();
    for w in directions(3, 10, 12) {
        let x: Vec<f64> = w.iter().map(|c| c * 0.5).collect();
        let p = surf
            .embed(&ChartPoint::Graph {
                sheet: End::One,
                x: x.clone(),
            })
            .unwrap();
        let want = surf.frames[0].map(|z| z)
            * nalgebra::DVector::from_fn(3, |k, _| slaglab::symplectic::C64::new(x[k], 0.0));
        for k in 0..3 {
            assert!((p[k] - want[k].re).abs() < 1e-15 && (p[3 + k] - want[k].im).abs() < 1e-15);
        }
    }
}

#[test]
fn mismatched_planes_are_rejected() {
    let lab = lab();
    let cfg = lab.glue_config(0.1).unwrap();
    let ext1 = ExteriorPiece::flat(LagrangianPlane::standard(3), 1.0);
    let ext2 = ExteriorPiece::flat(
        LagrangianPlane::with_phases(&[PI / 2.0, PI / 4.0, PI / 4.0]),
        1.0,
    );
    let err = build_surface(&ext1, &ext2, lab.neck.clone(), &cfg).unwrap_err();
    assert!(matches!(err, Error::PlaneMismatch { .. }), "{err}");
    let twisted =
        ExteriorPiece::flat(
            lab.pieces[1].plane.transformed(&DMatrix::from_diagonal(
                &nalgebra::DVector::from_element(3, slaglab::symplectic::C64::from_polar(1.0, 0.3)),
            )),
            1.0,
        );
    assert!(build_surface(&lab.pieces[0], &twisted, lab.neck.clone(), &cfg).is_err());
}

#[test]
fn matching_planes_in_a_rotated_frame_glue() {
    let lab = lab();
    let cfg = lab.glue_config(0.1).unwrap();
    let ext1 = ExteriorPiece::flat(LagrangianPlane::standard(3), 1.0);
    let ext2 = ExteriorPiece::flat(LagrangianPlane::with_phases(&[PI / 3.0; 3]), 1.0);
    let surf = build_surface(&ext1, &ext2, lab.neck.clone(), &cfg).unwrap();
    let (p, d) = surf
        .overlap_gap(
            0.5 * (surf.lambda_core + surf.lambda_overlap),
            &[0.6, 0.0, 0.8],
        )
        .unwrap();
    assert!(p <= 1e-9 && d <= 1e-6);
}
