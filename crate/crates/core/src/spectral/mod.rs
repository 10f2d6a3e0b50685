//! Neumann spectrum of the glued surface with first-order finite elements.
//!
//! Cells are flat simplices spanned by the embedded nodes (the secant metric),
//! so the same assembly serves the glued surface and the validation meshes.

pub mod fields;
pub mod lanczos;
pub mod mesh;

use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use mesh::factorial;
use nalgebra::DMatrix;
use std::sync::{Arc, OnceLock};

pub use fields::{
    apply_operator, eigen_fields, linearized_apply, rayleigh_test_bound, EigenFields,
};
pub use lanczos::{neumann_eigs, EigenPair, Spectrum};
pub use mesh::{
    build_mesh, cylinder_mesh, icosphere, shell_mesh, sphere_mesh, Resolution, SimplexMesh,
    SurfaceMesh,
};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Square matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *data.last_mut().expect("entry") += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .map(|k| self.data[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[self.indptr[i]..self.indptr[i + 1]].iter().sum())
            .collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[self.indptr[i]..self.indptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        mesh::dot(x, &self.matvec(y))
    }

    /// `a·self + b·other` (same sparsity not required).
    pub fn combine(&self, a: f64, other: &Csr, b: f64) -> Csr {
        let mut t = self.triplets(a);
        t.extend(other.triplets(b));
        Csr::from_triplets(self.n, t)
    }

    fn triplets(&self, scale: f64) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.data.len());
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                t.push((i, self.indices[k], scale * self.data[k]));
            }
        }
        t
    }

    /// Principal submatrix on `keep` (in the given order) and the coupling
    /// block to the remaining columns, as `(sub, rest)` with `rest` in full
    /// column numbering.
    pub fn split(&self, keep: &[usize]) -> (Csr, Vec<Vec<(usize, f64)>>) {
        let mut pos = vec![usize::MAX; self.n];
        for (p, &i) in keep.iter().enumerate() {
            pos[i] = p;
        }
        let mut t = Vec::new();
        let mut rest = vec![Vec::new(); keep.len()];
        for (p, &i) in keep.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                if pos[j] != usize::MAX {
                    t.push((p, pos[j], self.data[k]));
                } else {
                    rest[p].push((j, self.data[k]));
                }
            }
        }
        (Csr::from_triplets(keep.len(), t), rest)
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite [`Csr`],
/// ordered by METIS nested dissection.
pub struct Cholesky {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    n: usize,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky")
            .field("n", &self.n)
            .field("nnz", &self.values.len())
            .finish()
    }
}

/// Fill-reducing permutation `(forward, inverse)` of the off-diagonal graph of `a`.
fn nested_dissection(a: &Csr) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = a.n;
    if n < 2 {
        return Ok(((0..n).collect(), (0..n).collect()));
    }
    let mut xadj = Vec::with_capacity(n + 1);
    let mut adj = Vec::with_capacity(a.indices.len());
    xadj.push(0i32);
    for i in 0..n {
        adj.extend(
            a.indices[a.indptr[i]..a.indptr[i + 1]]
                .iter()
                .filter(|j| **j != i)
                .map(|j| *j as i32),
        );
        xadj.push(adj.len() as i32);
    }
    let mut nv = n as i32;
    let (mut perm, mut iperm) = (vec![0i32; n], vec![0i32; n]);
    // SAFETY: xadj/adj describe a valid symmetric CSR graph of nv vertices and
    // perm/iperm hold nv entries each; null weights and options select defaults.
    let rc = unsafe {
        metis_sys::METIS_NodeND(
            &mut nv,
            xadj.as_mut_ptr(),
            adj.as_mut_ptr(),
            std::ptr::null_mut(),
            std::ptr::null_mut(),
            perm.as_mut_ptr(),
            iperm.as_mut_ptr(),
        )
    };
    if rc != metis_sys::rstatus_et_METIS_OK {
        return Err(Error::Factorization(format!(
            "METIS ordering failed with status {rc}"
        )));
    }
    Ok((
        perm.iter().map(|x| *x as usize).collect(),
        iperm.iter().map(|x| *x as usize).collect(),
    ))
}

impl Cholesky {
    pub fn new(a: &Csr) -> Result<Self> {
        let fail = |e: &dyn std::fmt::Debug| Error::Factorization(format!("{e:?}"));
        let mut t = Vec::with_capacity(a.data.len());
        for i in 0..a.n {
            for k in a.indptr[i]..a.indptr[i + 1] {
                t.push(Triplet::new(i, a.indices[k], a.data[k]));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &t)
            .map_err(|e| fail(&e))?;
        drop(t);
        let (fwd, inv) = nested_dissection(a)?;
        let symbolic = factorize_symbolic_cholesky(
            m.symbolic(),
            Side::Lower,
            SymmetricOrdering::Custom(PermRef::new_checked(&fwd, &inv, a.n)),
            CholeskySymbolicParams::default(),
        )
        .map_err(|e| fail(&e))?;
        let mut values = Vec::new();
        values
            .try_reserve_exact(symbolic.len_val())
            .map_err(|e| fail(&e))?;
        values.resize(symbolic.len_val(), 0.0);
        let mut buf = MemBuffer::try_new(
            symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
        )
        .map_err(|e| fail(&e))?;
        symbolic
            .factorize_numeric_llt::<f64>(
                &mut values,
                m.as_ref(),
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| fail(&e))?;
        Ok(Self {
            symbolic,
            values,
            n: a.n,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        x.col(0).iter().copied().collect()
    }
}

/// Stiffness, mass and boundary-mass matrices of a mesh.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub stiffness: Csr,
    pub mass: Csr,
    /// Mass matrix of the boundary facets (zero rows off the boundary).
    pub boundary_mass: Csr,
    /// Boundary label of every node (0 for interior nodes).
    pub boundary_label: Vec<u8>,
    pub volume: f64,
    mass_factor: OnceLock<Arc<Cholesky>>,
}

impl SpectralSystem {
    pub fn n(&self) -> usize {
        self.stiffness.n
    }

    /// `∫ u v` in the mass inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.quad_form(u, v)
    }

    /// `∫ u`.
    pub fn integral(&self, u: &[f64]) -> f64 {
        mesh::dot(&self.mass.row_sums(), u)
    }

    /// Cached Cholesky factor of the mass matrix.
    pub fn mass_solver(&self) -> Result<Arc<Cholesky>> {
        if let Some(f) = self.mass_factor.get() {
            return Ok(f.clone());
        }
        let f = Arc::new(Cholesky::new(&self.mass)?);
        Ok(self.mass_factor.get_or_init(|| f).clone())
    }

    pub fn boundary_measure(&self, label: u8) -> f64 {
        let rs = self.boundary_mass.row_sums();
        rs.iter()
            .zip(&self.boundary_label)
            .filter(|(_, l)| **l == label)
            .map(|(v, _)| v)
            .sum()
    }
}

/// Local stiffness and mass of one simplex with the secant metric.
fn local_matrices(m: &SimplexMesh, cell: &[usize], id: usize) -> Result<(DMatrix<f64>, f64)> {
    let e = m.edges(cell);
    let d = e.len();
    let g = DMatrix::from_fn(d, d, |i, j| mesh::dot(&e[i], &e[j]));
    let scale = (0..d).map(|i| g[(i, i)]).fold(0.0, f64::max);
    let det = g.determinant();
    if !(det > 1e-14 * scale.powi(d as i32)) {
        return Err(Error::SingularMetric { cell: id });
    }
    let ginv = g.try_inverse().ok_or(Error::SingularMetric { cell: id })?;
    let vol = det.sqrt() / factorial(d);
    let mut dm = DMatrix::zeros(d, d + 1);
    for i in 0..d {
        dm[(i, 0)] = -1.0;
        dm[(i, i + 1)] = 1.0;
    }
    let k = dm.transpose() * ginv * &dm * vol;
    Ok((k, vol))
}

/// Assemble the P1 stiffness and mass matrices and the boundary mass.
pub fn assemble(m: &SimplexMesh) -> Result<SpectralSystem> {
    let n = m.node_count();
    let d = m.dim;
    let per = (d + 1) * (d + 1);
    let mut kt = Vec::with_capacity(m.cells.len() * per);
    let mut mt = Vec::with_capacity(m.cells.len() * per);
    let mut volume = 0.0;
    let mass_coef = 1.0 / ((d + 1) * (d + 2)) as f64;
    for (id, cell) in m.cells.iter().enumerate() {
        let (k, vol) = local_matrices(m, cell, id)?;
        volume += vol;
        for a in 0..=d {
            for b in 0..=d {
                kt.push((cell[a], cell[b], k[(a, b)]));
                let w = if a == b { 2.0 } else { 1.0 };
                mt.push((cell[a], cell[b], vol * mass_coef * w));
            }
        }
    }
    let mut bt = Vec::new();
    let mut label = vec![0u8; n];
    let bc = 1.0 / (d * (d + 1)) as f64;
    for (facet, l) in &m.boundary {
        let vol = m.simplex_volume(facet);
        for &a in facet {
            label[a] = *l;
            for &b in facet {
                bt.push((a, b, vol * bc * if a == b { 2.0 } else { 1.0 }));
            }
        }
    }
    Ok(SpectralSystem {
        stiffness: Csr::from_triplets(n, kt),
        mass: Csr::from_triplets(n, mt),
        boundary_mass: Csr::from_triplets(n, bt),
        boundary_label: label,
        volume,
        mass_factor: OnceLock::new(),
    })
}
