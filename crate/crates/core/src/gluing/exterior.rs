use crate::error::{Error, Result};
use crate::symplectic::LagrangianPlane;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// One monomial `coef · ∏ x_j^{powers_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Polynomial graphing function with every term of total degree at least 3,
/// so that `f`, `∇f` and `∇²f` vanish at the origin.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

fn dpow(x: f64, p: u32, d: u32) -> f64 {
    if d > p {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..d {
        c *= (p - i) as f64;
    }
    c * x.powi((p - d) as i32)
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            if t.powers.len() != n {
                return Err(Error::Config(format!(
                    "monomial has {} exponents, expected {n}",
                    t.powers.len()
                )));
            }
            if t.powers.iter().sum::<u32>() < 3 {
                return Err(Error::Config(
                    "exterior graph terms must have total degree ≥ 3".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    /// Partial derivative of a single monomial with multi-index `orders`.
    fn term_partial(t: &Monomial, x: &[f64], orders: &[u32]) -> f64 {
        let mut v = t.coef;
        for (j, &p) in t.powers.iter().enumerate() {
            v *= dpow(x[j], p, orders[j]);
        }
        v
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let z = vec![0; x.len()];
        self.terms
            .iter()
            .map(|t| Self::term_partial(t, x, &z))
            .sum()
    }

    pub fn grad(&self, x: &[f64]) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |i, _| {
            let mut o = vec![0; n];
            o[i] = 1;
            self.terms
                .iter()
                .map(|t| Self::term_partial(t, x, &o))
                .sum()
        })
    }

    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| {
            let mut o = vec![0; n];
            o[i] += 1;
            o[j] += 1;
            self.terms
                .iter()
                .map(|t| Self::term_partial(t, x, &o))
                .sum()
        })
    }

    /// Frobenius norm of the third derivative tensor.
    pub fn third_norm(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut o = vec![0; n];
                    o[i] += 1;
                    o[j] += 1;
                    o[k] += 1;
                    let v: f64 = self
                        .terms
                        .iter()
                        .map(|t| Self::term_partial(t, x, &o))
                        .sum();
                    acc += v * v;
                }
            }
        }
        acc.sqrt()
    }
}

/// A special Lagrangian piece near the intersection point: the graph of `∇f`
/// over a plane, restricted to the disk of radius `outer_radius`.
///
/// The polynomial is written in the coordinates of the frame the gluing
/// assigns to the sheet (the asymptotic frame of the neck carried to this plane).
#[derive(Debug, Clone)]
pub struct ExteriorPiece {
    pub plane: LagrangianPlane,
    pub f: Polynomial,
    pub outer_radius: f64,
}

impl ExteriorPiece {
    pub fn flat(plane: LagrangianPlane, outer_radius: f64) -> Self {
        Self {
            plane,
            f: Polynomial::zero(),
            outer_radius,
        }
    }

    /// Smallest `K` with `|f| + δ|∇f| + δ²|∇²f| + δ³|∇³f| ≤ K δ³` on sampled
    /// points of `B_δ` for `δ ≤ delta0`. Zero for the flat piece.
    pub fn measure_k(&self, delta0: f64, dirs: &[Vec<f64>]) -> f64 {
        if self.f.is_zero() {
            return 0.0;
        }
        let mut k: f64 = 0.0;
        for i in 1..=12 {
            let delta = delta0 * i as f64 / 12.0;
            let mut sup = [0.0f64; 4];
            for d in dirs {
                for j in 1..=8 {
                    let x: Vec<f64> = d.iter().map(|c| c * delta * j as f64 / 8.0).collect();
                    sup[0] = sup[0].max(self.f.value(&x).abs());
                    sup[1] = sup[1].max(self.f.grad(&x).norm());
                    sup[2] = sup[2].max(self.f.hess(&x).norm());
                    sup[3] = sup[3].max(self.f.third_norm(&x));
                }
            }
            let lhs = sup[0] + delta * sup[1] + delta.powi(2) * sup[2] + delta.powi(3) * sup[3];
            k = k.max(lhs / delta.powi(3));
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_derivatives() {
        let p = Polynomial {
            terms: vec![Monomial {
                coef: 2.0,
                powers: vec![2, 1, 0],
            }],
        };
        let x = [1.5, -0.5, 3.0];
        assert!((p.value(&x) - 2.0 * 2.25 * -0.5).abs() < 1e-15);
        assert!((p.grad(&x)[0] - 2.0 * 2.0 * 1.5 * -0.5).abs() < 1e-15);
        assert!((p.hess(&x)[(0, 1)] - 2.0 * 2.0 * 1.5).abs() < 1e-15);
        assert!((p.third_norm(&x) - (3.0f64 * 16.0).sqrt()).abs() < 1e-12);
        assert!(Polynomial {
            terms: vec![Monomial {
                coef: 1.0,
                powers: vec![2, 0, 0]
            }]
        }
        .validate(3)
        .is_err());
    }
}
