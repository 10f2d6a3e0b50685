use crate::error::{Error, Result};
use crate::gluing::{ChartPoint, GluedSurface, Layer, Zone};
use serde::Serialize;
use std::collections::HashMap;

/// A simplicial complex embedded in `R^N`.
#[derive(Debug, Clone, Serialize)]
pub struct SimplexMesh {
    /// Intrinsic dimension `d` of the cells.
    pub dim: usize,
    /// Ambient coordinates, one row per node.
    pub nodes: Vec<Vec<f64>>,
    /// `d + 1` node indices per cell.
    pub cells: Vec<Vec<usize>>,
    /// Boundary facets (`d` node indices each) with their component label.
    pub boundary: Vec<(Vec<usize>, u8)>,
}

impl SimplexMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    /// Edge vectors `X_i - X_0` of a simplex.
    pub fn edges(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        let x0 = &self.nodes[idx[0]];
        idx[1..]
            .iter()
            .map(|&i| self.nodes[i].iter().zip(x0).map(|(a, b)| a - b).collect())
            .collect()
    }

    /// Volume of a simplex given by node indices, from the Gram determinant of its edges.
    pub fn simplex_volume(&self, idx: &[usize]) -> f64 {
        let e = self.edges(idx);
        let k = e.len();
        let g = nalgebra::DMatrix::from_fn(k, k, |i, j| dot(&e[i], &e[j]));
        g.determinant().max(0.0).sqrt() / factorial(k)
    }

    pub fn volume(&self) -> f64 {
        self.cells.iter().map(|c| self.simplex_volume(c)).sum()
    }

    /// Total measure of the boundary facets with a given label.
    pub fn boundary_volume(&self, label: u8) -> f64 {
        self.boundary
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(f, _)| self.simplex_volume(f))
            .sum()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Icosahedral subdivision of the unit sphere `S^2`: vertices and triangles.
/// Level `l` has `10·4^l + 2` vertices.
pub fn icosphere(level: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalize3(*v))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Extrude a base complex through `layers` copies (node `(l, j)` has index
/// `l·base_nodes + j`). Each prism `σ × [l, l+1]` is split by the staircase rule
/// over the globally sorted base vertices, which makes the split conforming.
/// Returns cells and the two cap facet lists (bottom labeled 2, top labeled 1).
pub fn extrude(
    base_nodes: usize,
    base_cells: &[Vec<usize>],
    layers: usize,
) -> (Vec<Vec<usize>>, Vec<(Vec<usize>, u8)>) {
    let mut cells = Vec::with_capacity(
        base_cells.len() * (layers - 1) * base_cells.first().map_or(0, Vec::len),
    );
    for l in 0..layers - 1 {
        let lo = l * base_nodes;
        let hi = (l + 1) * base_nodes;
        for c in base_cells {
            let mut v = c.clone();
            v.sort_unstable();
            for j in 0..v.len() {
                let mut s: Vec<usize> = v[..=j].iter().map(|&i| lo + i).collect();
                s.extend(v[j..].iter().map(|&i| hi + i));
                cells.push(s);
            }
        }
    }
    let top = (layers - 1) * base_nodes;
    let mut boundary = Vec::with_capacity(2 * base_cells.len());
    for c in base_cells {
        boundary.push((c.clone(), 2));
        boundary.push((c.iter().map(|&i| top + i).collect(), 1));
    }
    (cells, boundary)
}

/// Icosphere mesh of the unit `S^2` in `R^3` (no boundary).
pub fn sphere_mesh(level: usize) -> SimplexMesh {
    let (v, f) = icosphere(level);
    SimplexMesh {
        dim: 2,
        nodes: v.iter().map(|p| p.to_vec()).collect(),
        cells: f.iter().map(|c| c.to_vec()).collect(),
        boundary: Vec::new(),
    }
}

/// Flat cylinder `[0, length] × S^1` (unit circle) in `R^3`.
pub fn cylinder_mesh(length: f64, segments: usize, layers: usize) -> SimplexMesh {
    let base: Vec<Vec<usize>> = (0..segments).map(|j| vec![j, (j + 1) % segments]).collect();
    let (cells, boundary) = extrude(segments, &base, layers + 1);
    let mut nodes = Vec::with_capacity(segments * (layers + 1));
    for l in 0..=layers {
        let z = length * l as f64 / layers as f64;
        for j in 0..segments {
            let a = std::f64::consts::TAU * j as f64 / segments as f64;
            nodes.push(vec![a.cos(), a.sin(), z]);
        }
    }
    SimplexMesh {
        dim: 2,
        nodes,
        cells,
        boundary,
    }
}

/// Flat spherical shell `r_in ≤ |x| ≤ r_out` in `R^3` with geometric radial
/// layers. The inner sphere is boundary label 2, the outer sphere label 1.
pub fn shell_mesh(r_in: f64, r_out: f64, sphere_level: usize, layers: usize) -> SimplexMesh {
    let (v, f) = icosphere(sphere_level);
    let base: Vec<Vec<usize>> = f.iter().map(|c| c.to_vec()).collect();
    let (cells, boundary) = extrude(v.len(), &base, layers + 1);
    let mut nodes = Vec::with_capacity(v.len() * (layers + 1));
    for l in 0..=layers {
        let r = r_in * (r_out / r_in).powf(l as f64 / layers as f64);
        nodes.extend(
            v.iter()
                .map(|p| p.iter().map(|c| c * r).collect::<Vec<f64>>()),
        );
    }
    SimplexMesh {
        dim: 3,
        nodes,
        cells,
        boundary,
    }
}

/// Mesh resolution of the glued surface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resolution {
    pub sphere_level: usize,
    /// Number of axial cells from one boundary to the other.
    pub axial_cells: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            sphere_level: 3,
            axial_cells: 64,
        }
    }
}

/// Product mesh of the glued surface over `[-1, 1] × S^{n-1}`.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceMesh {
    pub mesh: SimplexMesh,
    pub resolution: Resolution,
    /// Points of the base sphere.
    pub directions: Vec<Vec<f64>>,
    pub layers: Vec<Layer>,
    /// Chart point of every node.
    #[serde(skip)]
    pub points: Vec<ChartPoint>,
}

impl SurfaceMesh {
    pub fn base_count(&self) -> usize {
        self.directions.len()
    }

    pub fn node(&self, layer: usize, dir: usize) -> usize {
        layer * self.directions.len() + dir
    }

    pub fn zone_of_node(&self, i: usize) -> Zone {
        self.layers[i / self.directions.len()].zone
    }

    /// Layer index of a node.
    pub fn layer_of(&self, i: usize) -> usize {
        i / self.directions.len()
    }

    /// Mesh as JSON: `{"dim", "nodes", "cells", "boundary": [{"facet", "label"}], "layers"}`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Facet<'a> {
            facet: &'a [usize],
            label: u8,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            dim: usize,
            nodes: &'a [Vec<f64>],
            cells: &'a [Vec<usize>],
            boundary: Vec<Facet<'a>>,
            layer_t: Vec<f64>,
            layer_zone: Vec<Zone>,
        }
        let doc = Doc {
            dim: self.mesh.dim,
            nodes: &self.mesh.nodes,
            cells: &self.mesh.cells,
            boundary: self
                .mesh
                .boundary
                .iter()
                .map(|(f, l)| Facet {
                    facet: f,
                    label: *l,
                })
                .collect(),
            layer_t: self.layers.iter().map(|l| l.t).collect(),
            layer_zone: self.layers.iter().map(|l| l.zone).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Mesh the glued surface. Only `n = 3` is supported (icosphere base).
pub fn build_mesh(surf: &GluedSurface, res: Resolution) -> Result<SurfaceMesh> {
    if surf.n != 3 {
        return Err(Error::ResolutionInfeasible(format!(
            "product meshing needs n = 3, got {}",
            surf.n
        )));
    }
    if res.axial_cells % 2 != 0 || res.sphere_level > 5 {
        return Err(Error::ResolutionInfeasible(format!(
            "axial cells must be even and sphere level at most 5 (got {}, {})",
            res.axial_cells, res.sphere_level
        )));
    }
    let layers = surf.cylinder_layers(res.axial_cells / 2)?;
    let (verts, faces) = icosphere(res.sphere_level);
    let dirs: Vec<Vec<f64>> = verts.iter().map(|v| v.to_vec()).collect();
    let base: Vec<Vec<usize>> = faces.iter().map(|f| f.to_vec()).collect();
    let (cells, boundary) = extrude(dirs.len(), &base, layers.len());
    let mut points = Vec::with_capacity(layers.len() * dirs.len());
    for l in &layers {
        for w in &dirs {
            points.push(surf.layer_point(l.kind, w));
        }
    }
    let nodes: Result<Vec<Vec<f64>>> = points.iter().map(|p| surf.embed(p)).collect();
    let mesh = SimplexMesh {
        dim: 3,
        nodes: nodes?,
        cells,
        boundary,
    };
    Ok(SurfaceMesh {
        mesh,
        resolution: res,
        directions: dirs,
        layers,
        points,
    })
}
