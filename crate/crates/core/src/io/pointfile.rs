//! Self-contained point files.
//!
//! Layout (all lengths in bytes):
//!
//! ```text
//! FEMCONT-POINT <version>\n
//! <one line of JSON metadata>\n
//! MESH <len>\n<mesh text>
//! DATA <len>\n<f64 arrays, little endian, in the order listed in the metadata>
//! END\n
//! ```
//!
//! Every float that must survive bit-for-bit (`u`, `τ`, `λ`, `ds`, `ξ`, ...)
//! lives in the binary part; the metadata holds settings and diagnostics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cont::{BifPoint, ContinuationState};
use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::problem::Params;

pub const POINT_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "FEMCONT-POINT";

/// Everything needed to resume at a point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub problem: String,
    pub params: Params,
    pub mesh: Mesh,
    pub state: ContinuationState,
    pub bif: Option<BifPoint>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    problem: String,
    params: Params,
    state: ContinuationState,
    bif: Option<BifPoint>,
    arrays: Vec<(String, usize)>,
}

fn take_arrays(data: &PointData) -> (ContinuationState, Option<BifPoint>, Vec<(String, Vec<f64>)>) {
    let mut state = data.state.clone();
    let mut arrays = vec![
        ("u".to_string(), std::mem::take(&mut state.u)),
        ("tau".to_string(), std::mem::take(&mut state.tau)),
        ("state".to_string(), vec![state.lam, state.ds, state.xi, state.err]),
    ];
    state.lam = 0.0;
    state.ds = 0.0;
    state.xi = 0.0;
    state.err = 0.0;
    let bif = data.bif.clone().map(|mut b| {
        arrays.push(("bif.u".into(), std::mem::take(&mut b.u)));
        arrays.push(("bif.tau".into(), std::mem::take(&mut b.tau)));
        arrays.push(("bif.phi".into(), std::mem::take(&mut b.phi)));
        arrays.push(("bif.psi".into(), std::mem::take(&mut b.psi)));
        arrays.push(("bif".into(), vec![b.lam, b.mu, b.mu_next, b.bracket.0, b.bracket.1]));
        (b.lam, b.mu, b.mu_next, b.bracket) = (0.0, 0.0, 0.0, (0.0, 0.0));
        if let Some(sw) = b.switch.as_mut() {
            arrays.push(("bif.switch.tau".into(), std::mem::take(&mut sw.tau_new)));
            arrays.push(("bif.switch.phi0".into(), std::mem::take(&mut sw.phi0)));
            arrays.push(("bif.switch".into(), vec![sw.alpha0, sw.alpha1, sw.a1, sw.b1, sw.alpha_bar]));
            (sw.alpha0, sw.alpha1, sw.a1, sw.b1, sw.alpha_bar) = (0.0, 0.0, 0.0, 0.0, 0.0);
        }
        b
    });
    (state, bif, arrays)
}

pub fn to_bytes(data: &PointData) -> Result<Vec<u8>> {
    let (state, bif, arrays) = take_arrays(data);
    let meta = Meta {
        problem: data.problem.clone(),
        params: data.params.clone(),
        state,
        bif,
        arrays: arrays.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
    };
    let json = serde_json::to_string(&meta).map_err(|e| Error::InvalidInput(format!("point metadata: {e}")))?;
    let mesh = data.mesh.to_text();
    let payload: Vec<u8> = arrays.iter().flat_map(|(_, v)| v.iter().flat_map(|x| x.to_le_bytes())).collect();
    let mut out = Vec::with_capacity(json.len() + mesh.len() + payload.len() + 64);
    out.extend_from_slice(format!("{MAGIC} {POINT_FORMAT_VERSION}\n{json}\nMESH {}\n", mesh.len()).as_bytes());
    out.extend_from_slice(mesh.as_bytes());
    out.extend_from_slice(format!("DATA {}\n", payload.len()).as_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(b"END\n");
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, msg: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            msg: msg.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| self.corrupt("truncated header"))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| self.corrupt("header is not UTF-8"))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt("truncated payload"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn section(&mut self, name: &str) -> Result<&'a [u8]> {
        let line = self.line()?;
        let len = line
            .strip_prefix(name)
            .and_then(|r| r.trim().parse::<usize>().ok())
            .ok_or_else(|| self.corrupt(format!("expected '{name} <len>', found '{line}'")))?;
        self.take(len)
    }
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<PointData> {
    let mut r = Reader { bytes, pos: 0, path };
    let head = r.line()?;
    let version = head
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| r.corrupt("not a point file"))?;
    if version != POINT_FORMAT_VERSION {
        return Err(r.corrupt(format!(
            "format version {version} is not supported (expected {POINT_FORMAT_VERSION})"
        )));
    }
    let meta: Meta = serde_json::from_str(r.line()?).map_err(|e| r.corrupt(format!("metadata: {e}")))?;
    let mesh_text = std::str::from_utf8(r.section("MESH")?).map_err(|_| r.corrupt("mesh is not UTF-8"))?;
    let mesh = Mesh::from_text(mesh_text).map_err(|e| r.corrupt(format!("mesh: {e}")))?;
    let payload = r.section("DATA")?;
    if r.line()? != "END" || r.pos != bytes.len() {
        return Err(r.corrupt("missing end marker"));
    }
    let expected: usize = meta.arrays.iter().map(|(_, n)| 8 * n).sum();
    if expected != payload.len() {
        return Err(r.corrupt(format!("payload has {} bytes, metadata expects {expected}", payload.len())));
    }
    let mut chunks = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut arrays: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, n) in &meta.arrays {
        arrays.push((name.clone(), chunks.by_ref().take(*n).collect()));
    }
    let mut get = |name: &str| -> Result<Vec<f64>> {
        let i = arrays
            .iter()
            .position(|(k, _)| k == name)
            .ok_or_else(|| Error::Corrupt {
                path: path.to_path_buf(),
                msg: format!("missing array '{name}'"),
            })?;
        Ok(std::mem::take(&mut arrays[i].1))
    };
    let mut state = meta.state;
    state.u = get("u")?;
    state.tau = get("tau")?;
    let s = get("state")?;
    if s.len() != 4 {
        return Err(r.corrupt("bad state scalars"));
    }
    (state.lam, state.ds, state.xi, state.err) = (s[0], s[1], s[2], s[3]);
    let ndof = state.u.len();
    let np = mesh.n_points();
    if np == 0 || !ndof.is_multiple_of(np) || state.tau.len() != ndof + 1 {
        return Err(r.corrupt(format!("vector lengths do not match the mesh ({ndof} unknowns, {np} nodes)")));
    }
    let bif = match meta.bif {
        None => None,
        Some(mut b) => {
            b.u = get("bif.u")?;
            b.tau = get("bif.tau")?;
            b.phi = get("bif.phi")?;
            b.psi = get("bif.psi")?;
            let s = get("bif")?;
            if s.len() != 5 {
                return Err(r.corrupt("bad bifurcation scalars"));
            }
            (b.lam, b.mu, b.mu_next, b.bracket) = (s[0], s[1], s[2], (s[3], s[4]));
            if let Some(sw) = b.switch.as_mut() {
                sw.tau_new = get("bif.switch.tau")?;
                sw.phi0 = get("bif.switch.phi0")?;
                let c = get("bif.switch")?;
                if c.len() != 5 {
                    return Err(r.corrupt("bad switching coefficients"));
                }
                (sw.alpha0, sw.alpha1, sw.a1, sw.b1, sw.alpha_bar) = (c[0], c[1], c[2], c[3], c[4]);
            }
            Some(b)
        }
    };
    Ok(PointData {
        problem: meta.problem,
        params: meta.params,
        mesh,
        state,
        bif,
    })
}

/// Writes through a temporary file so that readers never see a partial point.
pub fn save_point(path: &Path, data: &PointData) -> Result<()> {
    let bytes = to_bytes(data)?;
    let tmp: PathBuf = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_point(path: &Path) -> Result<PointData> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes, path)
}
