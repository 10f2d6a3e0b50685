//! Lagrangian planes in `C^n` and their characteristic angles.
//!
//! A Lagrangian plane is stored as an `n x n` unitary matrix whose columns are
//! a real-orthonormal basis written in complex coordinates `z = x + i y`. Real
//! vectors of length `2n` use the layout `(x_1..x_n, y_1..y_n)`.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type C64 = Complex<f64>;

/// Smallest angle accepted before a pair is declared non-transversal.
pub const TRANSVERSAL_TOL: f64 = 1e-8;
/// Relative symplectic residual above which input is rejected.
pub const LAGRANGIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LagrangianPlane {
    basis: DMatrix<C64>,
}

impl LagrangianPlane {
    /// The real plane `R^n`.
    pub fn standard(n: usize) -> Self {
        Self {
            basis: DMatrix::identity(n, n),
        }
    }

    /// The plane `diag(e^{i phi_k}) R^n`.
    pub fn with_phases(phases: &[f64]) -> Self {
        let n = phases.len();
        let mut b = DMatrix::zeros(n, n);
        for (k, p) in phases.iter().enumerate() {
            b[(k, k)] = C64::from_polar(1.0, *p);
        }
        Self { basis: b }
    }

    /// Build from `n` real vectors of length `2n`.
    pub fn from_real_basis(vectors: &[Vec<f64>]) -> Result<Self> {
        let n = vectors.len();
        if n == 0 || vectors.iter().any(|v| v.len() != 2 * n) {
            return Err(Error::Config(format!(
                "a plane needs n vectors of length 2n, got {} vectors",
                n
            )));
        }
        let cols: Vec<DVector<C64>> = vectors
            .iter()
            .map(|v| DVector::from_fn(n, |k, _| C64::new(v[k], v[n + k])))
            .collect();
        Self::from_columns(cols)
    }

    /// Build from complex column vectors spanning the plane.
    pub fn from_columns(cols: Vec<DVector<C64>>) -> Result<Self> {
        let n = cols.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let w = cols[i].dotc(&cols[j]).im;
                let scale = cols[i].norm() * cols[j].norm();
                worst = worst.max(w.abs() / scale.max(f64::MIN_POSITIVE));
            }
        }
        if worst > LAGRANGIAN_TOL || !worst.is_finite() {
            return Err(Error::NonLagrangianInput { residual: worst });
        }
        let q = real_gram_schmidt(&cols).ok_or(Error::NonLagrangianInput {
            residual: f64::INFINITY,
        })?;
        Ok(Self {
            basis: DMatrix::from_columns(&q),
        })
    }

    /// Wrap a unitary matrix without checks.
    pub fn from_unitary(basis: DMatrix<C64>) -> Self {
        Self { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn unitary(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn real_basis(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let mut v = vec![0.0; 2 * n];
                for k in 0..n {
                    v[k] = self.basis[(k, j)].re;
                    v[n + k] = self.basis[(k, j)].im;
                }
                v
            })
            .collect()
    }

    /// Image under a unitary map of `C^n`.
    pub fn transformed(&self, u: &DMatrix<C64>) -> Self {
        Self {
            basis: u * &self.basis,
        }
    }

    /// `dz_1 ^ ... ^ dz_n` on the stored basis (a unit complex number).
    pub fn phase(&self) -> C64 {
        self.basis.determinant()
    }

    /// Largest `|omega(e_i, e_j)|` over the stored basis.
    pub fn symplectic_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(self.basis.column(i).dotc(&self.basis.column(j)).im.abs());
            }
        }
        worst
    }
}

/// Gram-Schmidt with respect to the real inner product `Re <u, v>`.
pub fn real_gram_schmidt(cols: &[DVector<C64>]) -> Option<Vec<DVector<C64>>> {
    let mut out: Vec<DVector<C64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &out {
                let p = q.dotc(&v).re;
                v -= q * C64::new(p, 0.0);
            }
        }
        let nv = v.norm();
        if nv < 1e-14 * c.norm().max(1e-300) {
            return None;
        }
        out.push(v / C64::new(nv, 0.0));
    }
    Some(out)
}

/// Characteristic angles of an ordered pair of Lagrangian planes.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicAngles {
    /// Normal form: the representative (θ or π-θ) with the smaller sum, sorted descending.
    pub angles: Vec<f64>,
    /// Angles of the ordered pair in `[0, π)`, in frame order.
    pub raw: Vec<f64>,
    pub sum: f64,
    /// True when the normal form has `θ_1 ≥ π/2` and the rest below `π/2`.
    pub eq2_form: bool,
    /// True when the normal form uses `π - θ`; the frame then spans the second plane.
    pub frame_on_second: bool,
    #[serde(skip)]
    pub frame: DMatrix<C64>,
}

impl CharacteristicAngles {
    /// Plane spanned by the frame vectors.
    pub fn base_plane(&self) -> LagrangianPlane {
        LagrangianPlane::from_unitary(self.frame.clone())
    }

    /// Plane spanned by `cos θ_k E_k + sin θ_k J E_k`.
    pub fn rotated_plane(&self) -> LagrangianPlane {
        let n = self.angles.len();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::from_polar(1.0, self.angles[i])
            } else {
                C64::new(0.0, 0.0)
            }
        });
        LagrangianPlane::from_unitary(&self.frame * d)
    }
}

/// Compute the characteristic angles of `(p1, p2)`.
pub fn characteristic_angles(
    p1: &LagrangianPlane,
    p2: &LagrangianPlane,
) -> Result<CharacteristicAngles> {
    let n = p1.dim();
    if p2.dim() != n {
        return Err(Error::Config("planes of different dimension".into()));
    }
    for p in [p1, p2] {
        let r = p.symplectic_residual();
        if r > LAGRANGIAN_TOL {
            return Err(Error::NonLagrangianInput { residual: r });
        }
    }
    let v1 = p1.unitary();
    let w = v1.adjoint() * p2.unitary();
    let s = &w * w.transpose();
    let (o, phases) = simultaneous_diagonalize(&s)?;
    let raw: Vec<f64> = phases
        .iter()
        .map(|z| {
            let t = 0.5 * z.arg();
            if t < 0.0 {
                t + PI
            } else {
                t
            }
        })
        .map(|t| if t >= PI { t - PI } else { t })
        .collect();
    let min_gap = raw
        .iter()
        .map(|t| t.min(PI - t))
        .fold(f64::INFINITY, f64::min);
    if min_gap < TRANSVERSAL_TOL {
        return Err(Error::NotTransversal { min_angle: min_gap });
    }
    let oc = o.map(|x| C64::new(x, 0.0));
    let frame = v1 * oc;
    let sum_raw: f64 = raw.iter().sum();
    let sum_alt = n as f64 * PI - sum_raw;
    let use_alt = sum_alt < sum_raw - 1e-12;
    let mut items: Vec<(f64, DVector<C64>)> = (0..n)
        .map(|k| {
            let col = frame.column(k).into_owned();
            if use_alt {
                (PI - raw[k], col * C64::from_polar(1.0, raw[k]))
            } else {
                (raw[k], col)
            }
        })
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let angles: Vec<f64> = items.iter().map(|x| x.0).collect();
    let frame = DMatrix::from_columns(&items.iter().map(|x| x.1.clone()).collect::<Vec<_>>());
    let sum = angles.iter().sum();
    let eq2_form = angles[0] >= PI / 2.0 && angles[1..].iter().all(|t| *t < PI / 2.0);
    Ok(CharacteristicAngles {
        angles,
        raw,
        sum,
        eq2_form,
        frame_on_second: use_alt,
        frame,
    })
}

/// Diagonalize a complex symmetric unitary matrix by a real orthogonal matrix.
fn simultaneous_diagonalize(s: &DMatrix<C64>) -> Result<(DMatrix<f64>, Vec<C64>)> {
    let n = s.nrows();
    let a = s.map(|z| z.re);
    let b = s.map(|z| z.im);
    let mut best: Option<(f64, DMatrix<f64>, Vec<C64>)> = None;
    for c in [
        0.618_033_988_749_894_8,
        -1.414_213_562_373_095,
        2.718_281_828_459_045,
        0.1,
    ] {
        let m = &a + &b * c;
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let o = eig.eigenvectors;
        let oc = o.map(|x| C64::new(x, 0.0));
        let d = oc.transpose() * s * &oc;
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        let diag = (0..n).map(|i| d[(i, i)]).collect();
        if off < 1e-10 {
            return Ok((o, diag));
        }
        if best.as_ref().is_none_or(|bst| off < bst.0) {
            best = Some((off, o, diag));
        }
    }
    let (off, o, diag) = best.expect("at least one attempt");
    if off < 1e-6 {
        Ok((o, diag))
    } else {
        Err(Error::NotTransversal { min_angle: 0.0 })
    }
}

/// Outcome of the special-Lagrangian angle test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngleCriterion {
    pub sum: f64,
    /// The sum is an integer multiple of π.
    pub is_special: bool,
    /// The sum equals π.
    pub satisfies: bool,
    pub multiple: Option<i64>,
}

pub fn angle_criterion(angles: &[f64], tol: f64) -> AngleCriterion {
    let sum: f64 = angles.iter().sum();
    let m = (sum / PI).round();
    let is_special = m >= 1.0 && (sum - m * PI).abs() <= tol;
    AngleCriterion {
        sum,
        is_special,
        satisfies: (sum - PI).abs() <= tol,
        multiple: is_special.then_some(m as i64),
    }
}

/// Haar-like random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    loop {
        let cols: Vec<DVector<C64>> = (0..n)
            .map(|_| DVector::from_fn(n, |_, _| C64::new(gauss(rng), gauss(rng))))
            .collect();
        let mut out: Vec<DVector<C64>> = Vec::new();
        let mut ok = true;
        for c in cols {
            let mut v = c;
            for _ in 0..2 {
                for q in &out {
                    let p = q.dotc(&v);
                    v -= q * p;
                }
            }
            let nv = v.norm();
            if nv < 1e-8 {
                ok = false;
                break;
            }
            out.push(v / C64::new(nv, 0.0));
        }
        if ok {
            return DMatrix::from_columns(&out);
        }
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// JSON form of an ordered plane pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanePairSpec {
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
}

impl PlanePairSpec {
    pub fn planes(&self) -> Result<(LagrangianPlane, LagrangianPlane)> {
        Ok((
            LagrangianPlane::from_real_basis(&self.p1)?,
            LagrangianPlane::from_real_basis(&self.p2)?,
        ))
    }
}

/// Round to 12 significant digits for reporting.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lawlor_type_example() {
        let p1 = LagrangianPlane::standard(3);
        let p2 = LagrangianPlane::with_phases(&[2.0 * PI / 3.0, PI / 6.0, PI / 6.0]);
        let ca = characteristic_angles(&p1, &p2).unwrap();
        assert!((ca.angles[0] - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!((ca.angles[1] - PI / 6.0).abs() < 1e-12);
        assert!(ca.eq2_form);
        assert!(angle_criterion(&ca.angles, 1e-10).satisfies);
    }

    #[test]
    fn j_rotation_is_not_special() {
        let p1 = LagrangianPlane::standard(3);
        let p2 = LagrangianPlane::with_phases(&[PI / 2.0; 3]);
        let ca = characteristic_angles(&p1, &p2).unwrap();
        let c = angle_criterion(&ca.angles, 1e-10);
        assert!((ca.sum - 1.5 * PI).abs() < 1e-12);
        assert!(!c.is_special && !c.satisfies);
    }

    #[test]
    fn coincident_planes_rejected() {
        let p = LagrangianPlane::standard(2);
        assert!(matches!(
            characteristic_angles(&p, &p),
            Err(Error::NotTransversal { .. })
        ));
    }

    #[test]
    fn non_lagrangian_rejected() {
        let v = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]];
        assert!(matches!(
            LagrangianPlane::from_real_basis(&v),
            Err(Error::NonLagrangianInput { .. })
        ));
    }
}
