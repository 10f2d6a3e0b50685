//! The radial cutoff `η(x) = χ(|x|/δ)`, equal to 1 on `B_{δ/2}` and 0 outside `B_δ`.

use nalgebra::{DMatrix, DVector};

/// Truncated Taylor jet `(f, f', f'', f''')` of a univariate function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3(pub [f64; 4]);

impl Jet3 {
    pub fn constant(c: f64) -> Self {
        Jet3([c, 0.0, 0.0, 0.0])
    }
    pub fn variable(x: f64) -> Self {
        Jet3([x, 1.0, 0.0, 0.0])
    }
    pub fn add(self, o: Self) -> Self {
        Jet3([0, 1, 2, 3].map(|i| self.0[i] + o.0[i]))
    }
    pub fn scale(self, c: f64) -> Self {
        Jet3(self.0.map(|v| v * c))
    }
    pub fn mul(self, o: Self) -> Self {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        Jet3([
            a0 * b0,
            a1 * b0 + a0 * b1,
            a2 * b0 + 2.0 * a1 * b1 + a0 * b2,
            a3 * b0 + 3.0 * a2 * b1 + 3.0 * a1 * b2 + a0 * b3,
        ])
    }
    /// Compose with an outer function given by its derivatives `(g, g', g'', g''')` at `self.0[0]`.
    pub fn compose(self, g: [f64; 4]) -> Self {
        let [_, u1, u2, u3] = self.0;
        Jet3([
            g[0],
            g[1] * u1,
            g[2] * u1 * u1 + g[1] * u2,
            g[3] * u1.powi(3) + 3.0 * g[2] * u1 * u2 + g[1] * u3,
        ])
    }
    pub fn recip(self) -> Self {
        let x = self.0[0];
        self.compose([1.0 / x, -1.0 / x.powi(2), 2.0 / x.powi(3), -6.0 / x.powi(4)])
    }
    pub fn exp(self) -> Self {
        let e = self.0[0].exp();
        self.compose([e; 4])
    }
}

/// `e^{-1/t}` for `t > 0`, zero otherwise.
fn psi(t: Jet3) -> Jet3 {
    if t.0[0] <= 0.0 {
        return Jet3::constant(0.0);
    }
    t.recip().scale(-1.0).exp()
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: Jet3) -> Jet3 {
    if t.0[0] <= 0.0 {
        return Jet3::constant(0.0);
    }
    if t.0[0] >= 1.0 {
        return Jet3::constant(1.0);
    }
    let a = psi(t);
    let b = psi(Jet3::constant(1.0).add(t.scale(-1.0)));
    // Near the ends one factor underflows; the quotient would leave rounding noise in the derivatives.
    if b.0[0] == 0.0 {
        return Jet3::constant(1.0);
    }
    if a.0[0] == 0.0 {
        return Jet3::constant(0.0);
    }
    a.mul(a.add(b).recip())
}

/// Profile `χ(u)`: 1 for `u ≤ 1/2`, 0 for `u ≥ 1`.
pub fn profile(u: f64) -> Jet3 {
    smooth_step(Jet3::variable(u).scale(-2.0).add(Jet3::constant(2.0)))
}

/// Derivatives of a radial function `h(|x|)` in Cartesian form.
#[derive(Debug, Clone)]
pub struct RadialDerivatives {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Evaluate `x ↦ h(|x|)` from the radial jet `h` at `r = |x|`.
pub fn radial(x: &[f64], h: Jet3) -> RadialDerivatives {
    let n = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 || (h.0[1] == 0.0 && h.0[2] == 0.0) {
        return RadialDerivatives {
            value: h.0[0],
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        };
    }
    let u = DVector::from_iterator(n, x.iter().map(|v| v / r));
    let grad = &u * h.0[1];
    let uu = &u * u.transpose();
    let hess = &uu * h.0[2] + (DMatrix::identity(n, n) - &uu) * (h.0[1] / r);
    RadialDerivatives {
        value: h.0[0],
        grad,
        hess,
    }
}

/// Frobenius norm of the third derivative tensor of `x ↦ h(|x|)`.
pub fn radial_third_norm(x: &[f64], h: Jet3) -> f64 {
    let n = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [_, h1, h2, h3] = h.0;
    let a = h3 - 3.0 * h2 / r + 3.0 * h1 / (r * r);
    let b = h2 / r - h1 / (r * r);
    let u: Vec<f64> = x.iter().map(|v| v / r).collect();
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t =
                    a * u[i] * u[j] * u[k] + b * (d(i, j) * u[k] + d(i, k) * u[j] + d(j, k) * u[i]);
                acc += t * t;
            }
        }
    }
    acc.sqrt()
}

/// The cutoff `η` at scale `δ`.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub delta: f64,
}

impl Cutoff {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    /// Radial jet of `η` in `r`.
    pub fn jet(&self, r: f64) -> Jet3 {
        let j = profile(r / self.delta);
        let s = 1.0 / self.delta;
        Jet3([j.0[0], j.0[1] * s, j.0[2] * s * s, j.0[3] * s * s * s])
    }

    pub fn eval(&self, x: &[f64]) -> RadialDerivatives {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        radial(x, self.jet(r))
    }

    /// `|η| + δ|∇η| + δ²|∇²η| + δ³|∇³η|` at `x`.
    pub fn scaled_bound(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let j = self.jet(r);
        let d = self.eval(x);
        let t = radial_third_norm(x, j);
        d.value.abs()
            + self.delta * d.grad.norm()
            + self.delta.powi(2) * d.hess.norm()
            + self.delta.powi(3) * t
    }

    /// Sampled supremum of [`Cutoff::scaled_bound`] along a ray.
    pub fn profile_constant(&self, n: usize) -> f64 {
        (1..400)
            .map(|i| {
                let mut x = vec![0.0; n];
                x[0] = self.delta * (0.45 + 0.6 * i as f64 / 400.0);
                self.scaled_bound(&x)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus() {
        let c = Cutoff::new(0.1);
        assert_eq!(c.eval(&[0.025, 0.0, 0.0]).value, 1.0);
        assert_eq!(c.eval(&[0.2, 0.0, 0.0]).value, 0.0);
        let mid = c.eval(&[0.075, 0.0, 0.0]).value;
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let h = 1e-4;
        let u = 0.71;
        let j = profile(u);
        for d in 1..4 {
            let lower = |x: f64| profile(x).0[d - 1];
            let fd = (lower(u + h) - lower(u - h)) / (2.0 * h);
            assert!(
                (fd - j.0[d]).abs() < 1e-5 * (1.0 + j.0[d].abs()),
                "order {d}"
            );
        }
    }
}
