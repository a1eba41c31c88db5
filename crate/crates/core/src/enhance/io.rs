//! `.rsh` files: an 8-byte little-endian header length, a JSON manifest,
//! then the node values followed by every cached cell table as float64 blobs.
//! Caches are recomputed on load and must agree bit for bit.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tables::Tables;
use super::{provenance_hash, Convention, FieldId, RoughSheet};
use crate::error::{Error, Result};
use crate::grid::{expect_eof, read_f64s, read_header_block, write_f64s, Grid1D, Grid2D, SheetSample};

pub const RSH_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    alpha: f64,
    beta: f64,
    convention: Convention,
    g1: Vec<f64>,
    g2: Vec<f64>,
    fields: Vec<String>,
    zeroed: Vec<FieldId>,
    provenance: String,
    /// Blob names and lengths in payload order.
    blobs: Vec<(String, usize)>,
}

fn cache_blobs(t: &Tables) -> Vec<(&'static str, &[f64])> {
    vec![
        ("d1", &t.d1),
        ("d2", &t.d2),
        ("xs", &t.xs),
        ("xt", &t.xt),
        ("xc", &t.xc),
        ("m.x", &t.m[0]),
        ("m.w", &t.m[1]),
        ("pre.x", &t.pre[0]),
        ("pre.w", &t.pre[1]),
        ("cp.x", &t.cp[0]),
        ("cp.w", &t.cp[1]),
    ]
}

pub fn write_roughsheet(x: &RoughSheet, w: &mut impl Write) -> Result<()> {
    let mut blobs: Vec<(String, &[f64])> = vec![("x".into(), x.x.values())];
    for (name, v) in cache_blobs(&x.t) {
        blobs.push((format!("t.{name}"), v));
    }
    for (name, v) in cache_blobs(&x.tt) {
        blobs.push((format!("tt.{name}"), v));
    }
    let g = x.grid();
    let m = Manifest {
        format: "rsh".into(),
        version: RSH_VERSION,
        alpha: x.alpha,
        beta: x.beta,
        convention: x.convention,
        g1: g.g1.points().to_vec(),
        g2: g.g2.points().to_vec(),
        fields: FieldId::all().iter().map(|f| f.to_string()).collect(),
        zeroed: x.zeroed.iter().copied().collect(),
        provenance: x.provenance.clone(),
        blobs: blobs.iter().map(|(n, v)| (n.clone(), v.len())).collect(),
    };
    let h = serde_json::to_vec(&m)?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    for (_, v) in blobs {
        write_f64s(w, v)?;
    }
    Ok(())
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.to_bits() == q.to_bits())
}

pub fn read_roughsheet(r: &mut impl Read) -> Result<RoughSheet> {
    let h = read_header_block(r)?;
    let m: Manifest = serde_json::from_slice(&h)?;
    if m.format != "rsh" {
        return Err(Error::Format(format!("unexpected format tag {:?}", m.format)));
    }
    if m.version != RSH_VERSION {
        return Err(Error::Version { found: m.version, expected: RSH_VERSION });
    }
    let grid = Grid2D::new(Grid1D::new(m.g1)?, Grid1D::new(m.g2)?);
    let (n1, n2) = grid.shape();
    let mut stored = Vec::with_capacity(m.blobs.len());
    for (name, len) in &m.blobs {
        stored.push((name.clone(), read_f64s(r, *len)?));
    }
    expect_eof(r)?;
    let xs = match stored.first() {
        Some((name, v)) if name == "x" && v.len() == n1 * n2 => v.clone(),
        _ => return Err(Error::Corrupt("node values missing or misshapen".into())),
    };
    let sample = SheetSample::from_values(grid, xs)?;
    if provenance_hash(&sample) != m.provenance {
        return Err(Error::Corrupt("provenance hash does not match node values".into()));
    }
    let opts = super::EnhanceOptions { alpha: m.alpha, beta: m.beta, convention: m.convention };
    let mut out = super::enhance_smooth_with(&sample, &opts)?;
    let mut expect: Vec<(String, &[f64])> = Vec::new();
    for (name, v) in cache_blobs(&out.t) {
        expect.push((format!("t.{name}"), v));
    }
    for (name, v) in cache_blobs(&out.tt) {
        expect.push((format!("tt.{name}"), v));
    }
    if stored.len() != expect.len() + 1 {
        return Err(Error::Corrupt(format!("expected {} blobs, found {}", expect.len() + 1, stored.len())));
    }
    for ((sn, sv), (en, ev)) in stored[1..].iter().zip(&expect) {
        if sn != en || !same_bits(sv, ev) {
            return Err(Error::Corrupt(format!("cached table {sn} disagrees with its recomputation")));
        }
    }
    out.zeroed = m.zeroed.into_iter().collect::<BTreeSet<_>>();
    Ok(out)
}

pub fn save_roughsheet(x: &RoughSheet, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_roughsheet(x, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_roughsheet(path: impl AsRef<Path>) -> Result<RoughSheet> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_roughsheet(&mut f)
}
