//! Binary ensemble files and CSV export.
//!
//! Layout: 8-byte magic, little-endian `u64` header length, JSON header,
//! then displacement and velocity as little-endian `f64` in
//! realization/coordinate/time order.

use super::Ensemble;
use crate::basis::Naming;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"STLGENS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleHeader {
    pub system: String,
    pub n_real: usize,
    pub coords: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub naming: Naming,
    pub spatial_grid: Option<Vec<f64>>,
}

pub fn save_ensemble(ens: &Ensemble, path: &Path) -> Result<()> {
    ens.validate()?;
    let header = EnsembleHeader {
        system: ens.system.clone(),
        n_real: ens.n_real,
        coords: ens.coords,
        n_steps: ens.n_steps,
        dt: ens.dt,
        naming: ens.naming.clone(),
        spatial_grid: ens.spatial_grid.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    write(MAGIC)?;
    write(&(json.len() as u64).to_le_bytes())?;
    write(&json)?;
    for x in ens.displacement.iter().chain(&ens.velocity) {
        write(&x.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::Schema(format!("{} is not an ensemble file", path.display())));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|e| Error::io(path, e))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 30 {
        return Err(Error::Schema("ensemble header too large".into()));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|e| Error::io(path, e))?;
    let h: EnsembleHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Schema(format!("bad ensemble header: {e}")))?;
    let n = h
        .n_real
        .checked_mul(h.coords)
        .and_then(|x| x.checked_mul(h.n_steps))
        .ok_or_else(|| Error::Schema("ensemble shape overflows".into()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != 16 * n {
        return Err(Error::Schema(format!(
            "ensemble body has {} bytes, expected {}",
            body.len(),
            16 * n
        )));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let (d, v) = vals.split_at(n);
    let ens = Ensemble {
        system: h.system,
        dt: h.dt,
        n_steps: h.n_steps,
        n_real: h.n_real,
        coords: h.coords,
        displacement: d.to_vec(),
        velocity: v.to_vec(),
        spatial_grid: h.spatial_grid,
        naming: h.naming,
    };
    ens.validate()?;
    Ok(ens)
}

/// Long-format CSV: `real,coord,t,u,u_t`. `realizations` limits the export.
pub fn export_csv(ens: &Ensemble, path: &Path, realizations: Option<usize>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let n = realizations.unwrap_or(ens.n_real).min(ens.n_real);
    let mut out = String::from("real,coord,t,u,u_t\n");
    for r in 0..n {
        for c in 0..ens.coords {
            let (p, v) = (ens.pos(r, c), ens.vel(r, c));
            for t in 0..ens.n_steps {
                out.push_str(&format!("{r},{c},{},{},{}\n", t as f64 * ens.dt, p[t], v[t]));
            }
            w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
            out.clear();
        }
    }
    if n == 0 {
        w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
