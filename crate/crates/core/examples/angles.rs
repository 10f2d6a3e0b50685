//! Characteristic angles of a pair of Lagrangian planes in C^3.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slaglab::symplectic::{
    angle_criterion, characteristic_angles, random_unitary, LagrangianPlane,
};
use std::f64::consts::PI;

fn main() -> slaglab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = random_unitary(3, &mut rng);
    for phases in [
        [2.0 * PI / 3.0, PI / 6.0, PI / 6.0],
        [PI / 2.0; 3],
        [1.9, 0.8, 0.3],
    ] {
        // Hide the normal form behind a common unitary change of frame.
        let p1 = LagrangianPlane::standard(3).transformed(&u);
        let p2 = LagrangianPlane::with_phases(&phases).transformed(&u);
        let ca = characteristic_angles(&p1, &p2)?;
        let crit = angle_criterion(&ca.angles, 1e-9);
        let shown: Vec<String> = ca
            .angles
            .iter()
            .map(|t| format!("{:.6}π", t / PI))
            .collect();
        println!(
            "angles [{}]  sum {:.6}π  special: {}  sum = π: {}",
            shown.join(", "),
            ca.sum / PI,
            crit.is_special,
            crit.satisfies
        );
    }
    Ok(())
}
