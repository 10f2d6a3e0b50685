//! Lagrangian angle and residual on the glued surface at one α.

use slaglab::config::Config;
use slaglab::geometry::{residual, transition_stats, volume};
use slaglab::gluing::Region;
use slaglab::sweep::Lab;

fn main() -> slaglab::Result<()> {
    let alpha = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.1);
    let lab = Lab::new(&Config::default(), None)?;
    let surf = lab.surface(alpha)?;
    let grid = lab.grid();

    let st = transition_stats(&surf, &grid, lab.config.beta)?;
    println!("sup |sin θ| on the transition   {:.4e}", st.sup_sin);
    println!("min cos θ                       {:.6}", st.min_cos);
    println!(
        "sup |H|                         {:.4e}",
        st.sup_mean_curvature
    );

    let r = residual(&surf, &surf.weight(), &grid)?;
    println!(
        "residual sup: exterior {:.1e}  transition {:.4e}  neck {:.1e}  weighted {:.4e}",
        r.sup_exterior, r.sup_transition, r.sup_neck, r.weighted_sup
    );

    for region in [
        Region::Exterior,
        Region::Transition,
        Region::NeckTotal,
        Region::All,
    ] {
        let v = volume(&surf, region)?;
        println!("volume {region:?}: {:.8} (± {:.1e})", v.value, v.error);
    }
    Ok(())
}
