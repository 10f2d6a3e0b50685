use super::{mesh::dot, Cholesky, SpectralSystem};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: f64,
    /// Mass-normalized eigenvector.
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// `‖Kx - νMx‖_∞ / (‖K‖_∞ ‖x‖_∞)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub shift: f64,
    pub krylov_dim: usize,
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Relative residual tolerance for accepted eigenpairs.
pub const EIG_TOL: f64 = 1e-8;

/// Smallest `count` eigenpairs of `K x = ν M x`.
///
/// Block Lanczos on the operator `(K + sM)^{-1} M`, which is self-adjoint in
/// the `M` inner product, with full reorthogonalization and Rayleigh–Ritz on
/// the Krylov basis. The block size is at least 4 so that eigenvalues of
/// moderate multiplicity are resolved. The basis grows until every requested
/// pair meets [`EIG_TOL`].
pub fn neumann_eigs(sys: &SpectralSystem, count: usize) -> Result<Spectrum> {
    let n = sys.n();
    if count < 3 || count > n {
        return Err(Error::InvalidParameters(format!(
            "eigenpair count {count} must be in [3, {n}]"
        )));
    }
    let shift = 1.0;
    let chol = Cholesky::new(&sys.stiffness.combine(1.0, &sys.mass, shift))?;
    let knorm = sys.stiffness.norm_inf().max(f64::MIN_POSITIVE);
    let block = count.max(4).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let start: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut m = (6 * block).min(n);
    let mut worst = f64::INFINITY;
    loop {
        let (pairs, res) = krylov(sys, &chol, &start, m, count, shift, knorm);
        worst = res.min(worst);
        if res <= EIG_TOL {
            return Ok(Spectrum {
                pairs,
                shift,
                krylov_dim: m,
            });
        }
        if m == n || m >= 1200 {
            return Err(Error::EigenNonConvergence { residual: worst });
        }
        m = (2 * m).min(n);
    }
}

fn krylov(
    sys: &SpectralSystem,
    chol: &Cholesky,
    start: &[Vec<f64>],
    m: usize,
    count: usize,
    shift: f64,
    knorm: f64,
) -> (Vec<EigenPair>, f64) {
    let n = sys.n();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut aq: Vec<Vec<f64>> = Vec::with_capacity(m);
    // M-orthonormalize `w` against the basis and append it; false if it is dependent.
    let push = |w: &mut Vec<f64>, q: &mut Vec<Vec<f64>>, mq: &mut Vec<Vec<f64>>| -> bool {
        let before = sys.mass.quad_form(w, w).sqrt();
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(mq.iter()) {
                let c = dot(w, mqi);
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let mw = sys.mass.matvec(w);
        let nw = dot(w, &mw).sqrt();
        if !(nw > 1e-10 * before) {
            return false;
        }
        q.push(w.iter().map(|x| x / nw).collect());
        mq.push(mw.iter().map(|x| x / nw).collect());
        true
    };
    for s in start {
        let mut w = s.clone();
        push(&mut w, &mut q, &mut mq);
    }
    let mut next = 0;
    while q.len() < m && next < q.len() {
        let w = chol.solve(&mq[next]);
        aq.push(w.clone());
        let mut w = w;
        push(&mut w, &mut q, &mut mq);
        next += 1;
    }
    while aq.len() < q.len() {
        aq.push(chol.solve(&mq[aq.len()]));
    }
    let k = q.len();
    let mut h = DMatrix::from_fn(k, k, |i, j| dot(&mq[i], &aq[j]));
    h = (&h + h.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut pairs = Vec::with_capacity(count);
    let mut worst: f64 = 0.0;
    for &idx in order.iter().take(count.min(k)) {
        let theta = eig.eigenvalues[idx];
        let mut x = vec![0.0; n];
        for (i, qi) in q.iter().enumerate() {
            let c = eig.eigenvectors[(i, idx)];
            for (xk, qk) in x.iter_mut().zip(qi) {
                *xk += c * qk;
            }
        }
        let nx = sys.mass.quad_form(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let value = 1.0 / theta - shift;
        let kx = sys.stiffness.matvec(&x);
        let mx = sys.mass.matvec(&x);
        let r = kx
            .iter()
            .zip(&mx)
            .map(|(a, b)| (a - value * b).abs())
            .fold(0.0, f64::max);
        let xmax = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let residual = r / (knorm * xmax);
        worst = worst.max(residual);
        pairs.push(EigenPair {
            value,
            vector: x,
            residual,
        });
    }
    if pairs.len() < count {
        worst = f64::INFINITY;
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    (pairs, worst)
}

#[cfg(test)]
mod tests {
    use super::super::{assemble, cylinder_mesh, sphere_mesh};
    use super::*;

    #[test]
    fn sphere_first_eigenvalue() {
        let s = assemble(&sphere_mesh(3)).unwrap();
        let sp = neumann_eigs(&s, 5).unwrap();
        assert!(sp.pairs[0].value.abs() < 1e-10);
        for p in &sp.pairs[1..4] {
            assert!((p.value - 2.0).abs() < 0.04, "{}", p.value);
        }
    }

    #[test]
    fn cylinder_first_eigenvalue() {
        let l = 4.0;
        let s = assemble(&cylinder_mesh(l, 96, 64)).unwrap();
        let sp = neumann_eigs(&s, 4).unwrap();
        let exact = (std::f64::consts::PI / l).powi(2);
        assert!(
            (sp.pairs[1].value - exact).abs() < 0.02 * exact,
            "{}",
            sp.pairs[1].value
        );
    }
}
