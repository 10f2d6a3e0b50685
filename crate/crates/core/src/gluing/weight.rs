use serde::{Deserialize, Serialize};

/// Ramp `6u⁵ - 15u⁴ + 10u³` clamped to `[0, 1]`, and its antiderivative.
fn ramp(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    let p = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    let ip = u.powi(4) * (2.5 + u * (-3.0 + u));
    (p, ip)
}

/// Weight `ρ` as a function of the ambient radius `r = |X|`.
///
/// `ρ = Rε` for `r ≤ εa`, `ρ = R` for `r ≥ ε^β b`. In between `log ρ` is an
/// increasing function of `log r` whose slope is a plateau profile with
/// quintic ramps of width `w` at both joints.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightFunction {
    pub r_weight: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub a_inner: f64,
    pub b_outer: f64,
    l1: f64,
    l2: f64,
    w: f64,
    slope: f64,
}

impl WeightFunction {
    pub fn new(r_weight: f64, epsilon: f64, beta: f64, a_inner: f64, b_outer: f64) -> Self {
        let l1 = (epsilon * a_inner).ln();
        let l2 = (epsilon.powf(beta) * b_outer).ln();
        let w = 0.25 * (l2 - l1);
        let slope = -epsilon.ln() / ((l2 - l1) - w);
        Self {
            r_weight,
            epsilon,
            beta,
            a_inner,
            b_outer,
            l1,
            l2,
            w,
            slope,
        }
    }

    pub fn inner_radius(&self) -> f64 {
        self.l1.exp()
    }

    pub fn outer_radius(&self) -> f64 {
        self.l2.exp()
    }

    /// `(ψ(L), ∫_{L1}^{L} ψ)` for the plateau profile.
    fn plateau(&self, l: f64) -> (f64, f64) {
        if l <= self.l1 {
            return (0.0, 0.0);
        }
        let w = self.w;
        let rise = ramp((l - self.l1) / w);
        let mut val = rise.0;
        let mut int = w * rise.1;
        if l > self.l1 + w {
            let flat_end = (self.l2 - w).min(l);
            int += flat_end - (self.l1 + w);
            val = 1.0;
        }
        if l > self.l2 - w {
            let u = ((l - (self.l2 - w)) / w).min(1.0);
            let fall = ramp(1.0 - u);
            val = fall.0;
            int += w * (0.5 - ramp(1.0 - u).1);
        }
        (val, int)
    }

    /// `ρ(r)`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 || r.ln() <= self.l1 {
            return self.r_weight * self.epsilon;
        }
        if r.ln() >= self.l2 {
            return self.r_weight;
        }
        let (_, int) = self.plateau(r.ln());
        self.r_weight * self.epsilon * (self.slope * int).exp()
    }

    /// `dρ/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let l = r.ln();
        if l <= self.l1 || l >= self.l2 {
            return 0.0;
        }
        self.value(r) * self.slope * self.plateau(l).0 / r
    }
}

/// Sampled surrogates of the weight bounds along a radial ray.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightSurvey {
    pub epsilon: f64,
    pub beta: f64,
    /// `sup |dρ/dr| · ε^β`.
    pub grad_scaled: f64,
    /// `min ρ(r)/r` over the interpolation annulus.
    pub min_ratio: f64,
    /// Difference-quotient seminorms `[ρ]_β`, `[ρ²]_β` and `[ρ^β]_β`.
    pub holder_rho: f64,
    pub holder_rho2: f64,
    pub holder_rho_beta: f64,
}

impl WeightFunction {
    /// Survey `ρ` on `samples` log-spaced radii from a quarter of the inner
    /// radius to `r_max`. Radial distance stands in for surface distance.
    pub fn survey(&self, samples: usize, r_max: f64) -> WeightSurvey {
        let r = crate::sampling::geomspace(0.25 * self.inner_radius(), r_max, samples);
        let rho: Vec<f64> = r.iter().map(|&x| self.value(x)).collect();
        let grad = r
            .iter()
            .map(|&x| self.derivative(x).abs())
            .fold(0.0, f64::max);
        let min_ratio = r
            .iter()
            .zip(&rho)
            .filter(|(x, _)| **x >= self.inner_radius() && **x <= self.outer_radius())
            .map(|(x, p)| p / x)
            .fold(f64::INFINITY, f64::min);
        let seminorm = |h: &dyn Fn(f64) -> f64| {
            let v: Vec<f64> = rho.iter().map(|&p| h(p)).collect();
            let mut sup: f64 = 0.0;
            for i in 0..r.len() {
                for j in i + 1..r.len() {
                    sup = sup.max((v[j] - v[i]).abs() / (r[j] - r[i]).powf(self.beta));
                }
            }
            sup
        };
        WeightSurvey {
            epsilon: self.epsilon,
            beta: self.beta,
            grad_scaled: grad * self.epsilon.powf(self.beta),
            min_ratio,
            holder_rho: seminorm(&|p| p),
            holder_rho2: seminorm(&|p| p * p),
            holder_rho_beta: seminorm(&|p| p.powf(self.beta)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_monotone() {
        let w = WeightFunction::new(1.0, 0.01, 0.1, 2.8, 1.0);
        assert_eq!(w.value(0.01), 0.01);
        assert_eq!(w.value(0.9), 1.0);
        let top = w.value(w.outer_radius() * (1.0 - 1e-9));
        assert!((top - 1.0).abs() < 1e-6, "{top}");
        let mut prev = 0.0;
        for i in 0..500 {
            let r = w.inner_radius() * (w.outer_radius() / w.inner_radius()).powf(i as f64 / 499.0);
            let v = w.value(r);
            assert!(v >= prev);
            prev = v;
            let h = 1e-6 * r;
            let fd = (w.value(r + h) - w.value(r - h)) / (2.0 * h);
            assert!((fd - w.derivative(r)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
