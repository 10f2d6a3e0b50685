use slaglab::config::Config;
use slaglab::spectral::{assemble, neumann_eigs, rayleigh_test_bound, sphere_mesh};
use slaglab::sweep::{spectral_pipeline, Lab};

fn main() -> slaglab::Result<()> {
    let sphere = assemble(&sphere_mesh(3))?;
    let sp = neumann_eigs(&sphere, 5)?;
    println!("unit sphere: {:?} (exact 0, 2, 2, 2, 6)", sp.values());

    let lab = Lab::new(&Config::default(), None)?;
    let surf = lab.surface(0.1)?;
    let (mesh, sys, sp, fields) = spectral_pipeline(&lab, &surf)?;
    println!("glued surface at alpha 0.1: {} nodes", sys.n());
    for p in &sp.pairs {
        println!("  nu = {:.8e}  residual {:.1e}", p.value, p.residual);
    }
    println!(
        "Rayleigh bound for nu1: {:.6e}",
        rayleigh_test_bound(&surf, &mesh, &sys)
    );
    println!("<sigma, S> = {:.6}", fields.sigma_s);
    println!("sup |S_bar - S| = {:.4}", fields.sup_s_bar_minus_s);
    println!(
        "<psi1, S> = {:.6}, integral of psi1 = {:.1e}",
        fields.psi1_s, fields.psi1_integral
    );
    Ok(())
}
