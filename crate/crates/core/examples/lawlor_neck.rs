use slaglab::lawlor::{match_angles, End, LawlorNeck, LawlorParams};
use slaglab::sweep::fit_loglog;

fn main() -> slaglab::Result<()> {
    let neck = LawlorNeck::new(LawlorParams::new(vec![1.0, 2.0, 3.0])?, 1e-12)?;
    println!("R0 = {:.6}", neck.r0());
    println!("theta_k(inf) = {:?}", neck.theta_all(f64::INFINITY));
    println!("coordinate angles = {:?}", neck.coordinate_angles());

    // The far ends are graphs over their planes; the potential decays like r^{2-n}.
    let mu = [0.6, 0.0, 0.8];
    let radii: Vec<f64> = (0..6).map(|k| 2.0 * neck.r0() * 1.6f64.powi(k)).collect();
    let mut grad = Vec::new();
    let mut value = Vec::new();
    for r in &radii {
        let s: Vec<f64> = mu.iter().map(|m| m * r).collect();
        grad.push(neck.graph_grad(End::One, &s)?.norm());
        value.push(neck.graph_value(End::One, &s)?.abs());
    }
    let g = fit_loglog(&radii, &grad).unwrap();
    let v = fit_loglog(&radii, &value).unwrap();
    println!("|grad g| slope {:.3}, |g| slope {:.3}", g.slope, v.slope);

    let back = match_angles(&neck.coordinate_angles(), 1e-12)?;
    let scale = back.a()[0];
    let a: Vec<f64> = back.a().iter().map(|x| x / scale).collect();
    println!("recovered a up to scale: {a:?}");
    Ok(())
}
