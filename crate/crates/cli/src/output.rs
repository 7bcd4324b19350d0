//! CSV and JSON writers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use eddm_core::ensemble::Discretization;

use crate::runner::{Expectation, ReferenceKey};

pub const RUN_COLUMNS: [&str; 14] = [
    "scenario",
    "h",
    "j",
    "iterations",
    "err_us_l2",
    "err_us_h1",
    "err_ps_l2",
    "err_phid_l2",
    "err_ud_l2",
    "err_ud_div",
    "t_assemble_ms",
    "t_factor_ms",
    "t_solve_ms",
    "converged",
];

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StokesPoint {
    x: f64,
    y: f64,
    ux: f64,
    uy: f64,
    p: f64,
}

#[derive(Serialize)]
struct DarcyPoint {
    x: f64,
    y: f64,
    ux: f64,
    uy: f64,
    phi: f64,
}

/// Expected fields: Stokes values at mesh vertices, Darcy values at triangle centroids.
pub fn write_expectation(dir: &Path, disc: &Discretization, e: &Expectation) -> Result<[PathBuf; 2]> {
    let st = &disc.stokes;
    let mut vertex_tri = vec![None; st.mesh.n_vertices()];
    for (t, tri) in st.mesh.triangles.iter().enumerate() {
        for (k, &v) in tri.iter().enumerate() {
            vertex_tri[v].get_or_insert((t, k));
        }
    }
    let srows: Vec<StokesPoint> = st
        .mesh
        .vertices
        .iter()
        .zip(&vertex_tri)
        .filter_map(|(pt, vt)| {
            let (t, k) = (*vt)?;
            let mut bary = [0.0; 3];
            bary[k] = 1.0;
            let (u, _) = st.velocity_at(&e.stokes, t, &bary);
            Some(StokesPoint { x: pt[0], y: pt[1], ux: u[0], uy: u[1], p: st.pressure_at(&e.stokes, t, &bary) })
        })
        .collect();
    let da = &disc.darcy;
    let c = [1.0 / 3.0; 3];
    let drows: Vec<DarcyPoint> = (0..da.mesh.n_triangles())
        .map(|t| {
            let pt = da.mesh.map_point(t, &c);
            let u = da.velocity_at(&e.darcy, t, &c);
            DarcyPoint { x: pt[0], y: pt[1], ux: u[0], uy: u[1], phi: da.head(&e.darcy, t) }
        })
        .collect();
    let ps = dir.join("mc_expectation_stokes.csv");
    let pd = dir.join("mc_expectation_darcy.csv");
    write_csv(&ps, &srows)?;
    write_csv(&pd, &drows)?;
    Ok([ps, pd])
}

#[derive(Serialize, serde::Deserialize)]
struct CachedReference {
    key: ReferenceKey,
    expectation: Expectation,
}

/// JSON cache of reference expectations under `dir`, one file per seed and mesh.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    pub dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, key: &ReferenceKey) -> PathBuf {
        self.dir.join(format!("reference_seed{}_n{}.json", key.seed, key.h_inv))
    }

    /// Cached expectation, if present and computed with exactly `key`.
    pub fn load(&self, key: &ReferenceKey) -> Option<Expectation> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let cached: CachedReference = serde_json::from_str(&text).ok()?;
        (cached.key == *key).then_some(cached.expectation)
    }

    pub fn store(&self, key: &ReferenceKey, e: &Expectation) -> Result<()> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.path(key);
        let body = serde_json::to_string(&CachedReference { key: key.clone(), expectation: e.clone() })?;
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }
}
