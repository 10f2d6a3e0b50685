//! Deterministic point sets used by diagnostics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Quasi-uniform unit vectors in `R^n`. Spherical Fibonacci points for
/// `n = 3`, seeded Gaussian directions otherwise.
pub fn directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64 + 0.3;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv > 0.1 && nv <= 1.0 {
                break v.iter().map(|x| x / nv).collect();
            }
        })
        .collect()
}

/// `count` points spaced geometrically on `[lo, hi]`.
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
