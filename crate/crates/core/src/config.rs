//! Run configuration: a versioned JSON document with a content hash.

use crate::error::{Error, Result};
use crate::gluing::exterior::{ExteriorPiece, Monomial, Polynomial};
use crate::gluing::DEFAULT_ALPHA_CEILING;
use crate::spectral::Resolution;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything that determines the numbers a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema_version: u32,
    /// Lawlor parameters; `n` is their count.
    pub a: Vec<f64>,
    pub beta: f64,
    /// Curvature constant of the exterior pieces. Measured from the pieces when absent.
    pub k: Option<f64>,
    pub alpha_ceiling: f64,
    pub outer_radius: f64,
    /// Extra polynomial terms of the two exterior graphing functions.
    pub exterior: [Vec<Monomial>; 2],
    pub quad_tol: f64,
    pub sphere_level: usize,
    pub axial_cells: usize,
    /// Sample directions for pointwise geometry checks.
    pub sample_dirs: usize,
    /// Radial samples per zone for pointwise geometry checks.
    pub samples_per_zone: usize,
    /// Skip meshing and eigenvalues.
    pub geometry_only: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            a: vec![1.0, 1.0, 1.0],
            beta: 0.1,
            k: None,
            alpha_ceiling: DEFAULT_ALPHA_CEILING,
            outer_radius: 1.0,
            exterior: [Vec::new(), Vec::new()],
            quad_tol: 1e-12,
            sphere_level: 3,
            axial_cells: 64,
            sample_dirs: 40,
            samples_per_zone: 12,
            geometry_only: false,
        }
    }
}

impl Config {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n() < 3 {
            return Err(Error::Config(
                "need at least three Lawlor parameters".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!(
                "β = {} must lie in (0, 1)",
                self.beta
            )));
        }
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("K = {k} must be positive")));
            }
        }
        if !(self.quad_tol > 0.0 && self.quad_tol < 1e-3) {
            return Err(Error::Config(format!(
                "quadrature tolerance {} out of range",
                self.quad_tol
            )));
        }
        if !(self.outer_radius > 0.0) {
            return Err(Error::Config("outer radius must be positive".into()));
        }
        for terms in &self.exterior {
            Polynomial {
                terms: terms.clone(),
            }
            .validate(self.n())?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical (compact, field-ordered) JSON encoding.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolution(&self) -> Resolution {
        Resolution {
            sphere_level: self.sphere_level,
            axial_cells: self.axial_cells,
        }
    }

    pub fn exterior_polynomial(&self, sheet: usize) -> Polynomial {
        Polynomial {
            terms: self.exterior[sheet].clone(),
        }
    }

    /// `K` from the config, or measured from the pieces with a floor of 1.
    pub fn curvature_constant(&self, pieces: &[ExteriorPiece; 2]) -> f64 {
        self.k.unwrap_or_else(|| {
            let dirs = crate::sampling::directions(self.n(), 24, 5);
            let delta0 = 0.5 * self.outer_radius;
            pieces
                .iter()
                .map(|p| p.measure_k(delta0, &dirs))
                .fold(1.0, f64::max)
        })
    }
}
