//! Field snapshot files.
//!
//! Layout: the 16-byte magic [`MAGIC`], one line of JSON header terminated by
//! `\n`, then for each field listed in the header its values as row-major
//! little-endian `f64` (first index fastest). Only interior values are stored.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::{Grid1D, Grid3D, Stagger};
use super::state::{State1D, State3D};

pub const MAGIC: &[u8; 16] = b"THINFLOWSNAPv001";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    /// `"1d"` or `"3d"`.
    pub kind: String,
    /// Cell counts `[n]` or `[n1, n2, n3]`.
    pub dims: Vec<usize>,
    pub spacings: Vec<f64>,
    pub eps: Option<f64>,
    pub t: f64,
    pub fields: Vec<FieldInfo>,
    #[serde(default)]
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub data: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.header
            .fields
            .iter()
            .position(|f| f.name == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_string(&self.header)?;
        let n: usize = self.data.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(16 + header.len() + 1 + 8 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(header.as_bytes());
        out.push(b'\n');
        for field in &self.data {
            for x in field {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |reason: &str| Error::Snapshot {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < 17 || &bytes[..16] != MAGIC {
            return Err(fail("bad magic"));
        }
        let nl = bytes[16..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| fail("unterminated header"))?;
        let header: SnapshotHeader = serde_json::from_slice(&bytes[16..16 + nl])?;
        let mut cursor = 16 + nl + 1;
        let mut data = Vec::with_capacity(header.fields.len());
        for f in &header.fields {
            let count: usize = f.shape.iter().product();
            let end = cursor + 8 * count;
            if end > bytes.len() {
                return Err(fail(&format!("field `{}` truncated", f.name)));
            }
            let values = bytes[cursor..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            data.push(values);
            cursor = end;
        }
        if cursor != bytes.len() {
            return Err(fail("trailing bytes after last field"));
        }
        Ok(Self { header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::decode(&bytes, path)
    }

    pub fn from_state1d(s: &State1D, digest: &str) -> Self {
        let n = s.grid.n();
        Self {
            header: SnapshotHeader {
                kind: "1d".into(),
                dims: vec![n],
                spacings: vec![s.grid.dy()],
                eps: None,
                t: s.t,
                fields: vec![
                    FieldInfo {
                        name: "rho".into(),
                        shape: vec![n],
                    },
                    FieldInfo {
                        name: "u".into(),
                        shape: vec![n],
                    },
                ],
                digest: digest.to_string(),
            },
            data: vec![s.rho.clone(), s.u.clone()],
        }
    }

    pub fn to_state1d(&self) -> Result<State1D> {
        let bad = |r: &str| Error::Snapshot {
            path: PathBuf::new(),
            reason: r.to_string(),
        };
        if self.header.kind != "1d" || self.header.dims.len() != 1 {
            return Err(bad("not a 1D snapshot"));
        }
        let grid = Grid1D::new(self.header.dims[0])?;
        let rho = self
            .field("rho")
            .ok_or_else(|| bad("missing rho"))?
            .to_vec();
        let u = self.field("u").ok_or_else(|| bad("missing u"))?.to_vec();
        let mut s = State1D::new(grid, rho, u, self.header.t)?;
        s.t = self.header.t;
        Ok(s)
    }

    pub fn from_state3d(s: &State3D, digest: &str) -> Self {
        let g = &s.grid;
        let parts = [
            ("rho", Stagger::Cell, &s.rho),
            ("u1", Stagger::Face1, &s.u1),
            ("u2", Stagger::Face2, &s.u2),
            ("u3", Stagger::Face3, &s.u3),
        ];
        let fields = parts
            .iter()
            .map(|(name, st, _)| FieldInfo {
                name: name.to_string(),
                shape: g.extents(*st).to_vec(),
            })
            .collect();
        let data = parts.iter().map(|(_, st, d)| g.pack(*st, d)).collect();
        Self {
            header: SnapshotHeader {
                kind: "3d".into(),
                dims: vec![g.n1(), g.n2(), g.n3()],
                spacings: vec![g.dx1(), g.dx2(), g.dx3()],
                eps: Some(g.eps()),
                t: s.t,
                fields,
                digest: digest.to_string(),
            },
            data,
        }
    }

    pub fn to_state3d(&self) -> Result<State3D> {
        let bad = |r: &str| Error::Snapshot {
            path: PathBuf::new(),
            reason: r.to_string(),
        };
        let h = &self.header;
        if h.kind != "3d" || h.dims.len() != 3 {
            return Err(bad("not a 3D snapshot"));
        }
        let eps = h.eps.ok_or_else(|| bad("3D snapshot without eps"))?;
        if h.dims[0] != h.dims[1] {
            return Err(bad("cross-section must be square (n1 = n2)"));
        }
        let grid = Grid3D::new(eps, h.dims[0], h.dims[2])?;
        let get = |name: &str, st: Stagger| -> Result<Vec<f64>> {
            let dense = self
                .field(name)
                .ok_or_else(|| bad(&format!("missing {name}")))?;
            grid.unpack(st, dense)
        };
        let mut s = State3D {
            grid,
            rho: get("rho", Stagger::Cell)?,
            u1: get("u1", Stagger::Face1)?,
            u2: get("u2", Stagger::Face2)?,
            u3: get("u3", Stagger::Face3)?,
            t: h.t,
        };
        s.check_wall_compatible()?;
        s.fill_ghosts();
        Ok(s)
    }
}

/// Writes to a sibling temporary file, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
