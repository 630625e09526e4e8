//! Binary field snapshots.
//!
//! Header: magic `BCIF`, then little-endian `u32` version, dimension, three
//! axis sizes, number of time samples and field kind (0 scalar, 1 vector,
//! 2 symmetric matrix). The body is little-endian `f64`, x fastest, one block
//! per time sample and, within it, one block per stored component.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::scheme::profiles::{HeatSource, Polynomial, X3Series};
use crate::scheme::ReynoldsState;
use crate::torus::{GridSpec, Padding, ScalarField, SymField, TimeGrid, VectorField};

pub const MAGIC: &[u8; 4] = b"BCIF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar = 0,
    Vector = 1,
    Sym = 2,
}

impl FieldKind {
    fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => 3,
            FieldKind::Sym => 6,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(FieldKind::Scalar),
            1 => Ok(FieldKind::Vector),
            2 => Ok(FieldKind::Sym),
            _ => Err(Error::Format(format!("unknown field kind {tag}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub n: [usize; 3],
    pub n_time: usize,
    pub kind: FieldKind,
}

/// A field series as stored on disk: `blocks[t][component]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: Header,
    pub blocks: Vec<Vec<Vec<f64>>>,
}

fn put_u32(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION)?;
    put_u32(&mut w, 3)?;
    for n in snap.header.n {
        put_u32(&mut w, n as u32)?;
    }
    put_u32(&mut w, snap.header.n_time as u32)?;
    put_u32(&mut w, snap.header.kind as u32)?;
    for block in &snap.blocks {
        for comp in block {
            for x in comp {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: bad magic {magic:?}", path.display())));
    }
    let version = get_u32(&mut r)?;
    if version == 0 {
        return Err(Error::Format("format version 0 is invalid".into()));
    }
    if version > FORMAT_VERSION {
        warn!(
            "{}: format version {version} is newer than {FORMAT_VERSION}; reading as version {FORMAT_VERSION}",
            path.display()
        );
    }
    let dim = get_u32(&mut r)?;
    if dim != 3 {
        return Err(Error::Format(format!("dimension {dim} unsupported")));
    }
    let n = [get_u32(&mut r)? as usize, get_u32(&mut r)? as usize, get_u32(&mut r)? as usize];
    let n_time = get_u32(&mut r)? as usize;
    let kind = FieldKind::from_tag(get_u32(&mut r)?)?;
    let len = n[0] * n[1] * n[2];
    let mut buf = [0u8; 8];
    let mut blocks = Vec::with_capacity(n_time);
    for _ in 0..n_time {
        let mut block = Vec::with_capacity(kind.components());
        for _ in 0..kind.components() {
            let mut comp = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut buf)
                    .map_err(|e| Error::Format(format!("{}: truncated body: {e}", path.display())))?;
                comp.push(f64::from_le_bytes(buf));
            }
            block.push(comp);
        }
        blocks.push(block);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{}: {} trailing bytes", path.display(), rest.len())));
    }
    Ok(Snapshot {
        header: Header {
            version,
            n,
            n_time,
            kind,
        },
        blocks,
    })
}

fn header(grid: GridSpec, n_time: usize, kind: FieldKind) -> Header {
    Header {
        version: FORMAT_VERSION,
        n: grid.n,
        n_time,
        kind,
    }
}

pub fn scalar_snapshot(series: &[ScalarField]) -> Snapshot {
    Snapshot {
        header: header(series[0].grid(), series.len(), FieldKind::Scalar),
        blocks: series.iter().map(|f| vec![f.data().to_vec()]).collect(),
    }
}

pub fn vector_snapshot(series: &[VectorField]) -> Snapshot {
    Snapshot {
        header: header(series[0].grid(), series.len(), FieldKind::Vector),
        blocks: series
            .iter()
            .map(|f| f.c.iter().map(|c| c.data().to_vec()).collect())
            .collect(),
    }
}

pub fn sym_snapshot(series: &[SymField]) -> Snapshot {
    Snapshot {
        header: header(series[0].grid(), series.len(), FieldKind::Sym),
        blocks: series
            .iter()
            .map(|f| f.c.iter().map(|c| c.data().to_vec()).collect())
            .collect(),
    }
}

impl Snapshot {
    fn expect(&self, kind: FieldKind, grid: GridSpec, n_time: usize) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Format(format!("expected {kind:?}, found {:?}", self.header.kind)));
        }
        if self.header.n != grid.n || self.header.n_time != n_time {
            return Err(Error::GridMismatch(format!(
                "snapshot is {:?} x {} samples, expected {:?} x {n_time}",
                self.header.n, self.header.n_time, grid.n
            )));
        }
        Ok(())
    }

    pub fn grid(&self, padding: Padding) -> Result<GridSpec> {
        GridSpec::new(self.header.n, padding)
    }

    pub fn into_scalars(self, grid: GridSpec) -> Result<Vec<ScalarField>> {
        self.expect(FieldKind::Scalar, grid, self.header.n_time)?;
        self.blocks
            .into_iter()
            .map(|mut b| ScalarField::from_vec(grid, b.remove(0)))
            .collect()
    }

    pub fn into_vectors(self, grid: GridSpec) -> Result<Vec<VectorField>> {
        self.expect(FieldKind::Vector, grid, self.header.n_time)?;
        self.blocks
            .into_iter()
            .map(|b| {
                let mut it = b.into_iter().map(|c| ScalarField::from_vec(grid, c));
                Ok(VectorField::from_components([
                    it.next().expect("3 components")?,
                    it.next().expect("3 components")?,
                    it.next().expect("3 components")?,
                ]))
            })
            .collect()
    }

    pub fn into_syms(self, grid: GridSpec) -> Result<Vec<SymField>> {
        self.expect(FieldKind::Sym, grid, self.header.n_time)?;
        self.blocks
            .into_iter()
            .map(|b| {
                let comps: Vec<ScalarField> = b
                    .into_iter()
                    .map(|c| ScalarField::from_vec(grid, c))
                    .collect::<Result<_>>()?;
                let arr: [ScalarField; 6] = comps
                    .try_into()
                    .map_err(|_| Error::Format("symmetric field needs 6 components".into()))?;
                let mut s = SymField::from_components(arr);
                s.traceless = true;
                Ok(s)
            })
            .collect()
    }
}

const STATE_FILES: [&str; 5] = ["v.bcif", "p.bcif", "theta.bcif", "r.bcif", "f.bcif"];

/// Writes the five field series plus a `state.meta` text file holding `δ`
/// and the heat source.
pub fn write_state(dir: &Path, state: &ReynoldsState) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_snapshot(&dir.join(STATE_FILES[0]), &vector_snapshot(&state.v))?;
    write_snapshot(&dir.join(STATE_FILES[1]), &scalar_snapshot(&state.p))?;
    write_snapshot(&dir.join(STATE_FILES[2]), &scalar_snapshot(&state.theta))?;
    write_snapshot(&dir.join(STATE_FILES[3]), &sym_snapshot(&state.r))?;
    write_snapshot(&dir.join(STATE_FILES[4]), &vector_snapshot(&state.f))?;
    let mut meta = format!("delta = {:e}\n", state.delta);
    if let Some(h) = &state.heat {
        let a: Vec<String> = h.a.coeffs.iter().map(|c| format!("{c:e}")).collect();
        meta.push_str(&format!("heat_a = {}\n", a.join(",")));
        let mut terms = Vec::new();
        if h.b.constant != 0.0 {
            terms.push(format!("{:e}", h.b.constant));
        }
        for &(m, c, s) in &h.b.modes {
            if c != 0.0 {
                terms.push(format!("cos{m}:{c:e}"));
            }
            if s != 0.0 {
                terms.push(format!("sin{m}:{s:e}"));
            }
        }
        meta.push_str(&format!("heat_b = {}\n", terms.join(" ")));
    }
    fs::write(dir.join("state.meta"), meta)?;
    Ok(())
}

pub fn read_state(dir: &Path, padding: Padding) -> Result<ReynoldsState> {
    let v = read_snapshot(&dir.join(STATE_FILES[0]))?;
    let grid = v.grid(padding)?;
    let n_time = v.header.n_time;
    let time = TimeGrid::new(n_time)?;
    let v = v.into_vectors(grid)?;
    let check = |s: Snapshot| -> Result<Snapshot> {
        if s.header.n_time != n_time {
            return Err(Error::GridMismatch("snapshots disagree on the number of time samples".into()));
        }
        Ok(s)
    };
    let p = check(read_snapshot(&dir.join(STATE_FILES[1]))?)?.into_scalars(grid)?;
    let theta = check(read_snapshot(&dir.join(STATE_FILES[2]))?)?.into_scalars(grid)?;
    let r = check(read_snapshot(&dir.join(STATE_FILES[3]))?)?.into_syms(grid)?;
    let f = check(read_snapshot(&dir.join(STATE_FILES[4]))?)?.into_vectors(grid)?;
    let meta = fs::read_to_string(dir.join("state.meta"))?;
    let mut delta = None;
    let (mut heat_a, mut heat_b) = (None, None);
    for (i, line) in meta.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, val) = line.split_once('=').ok_or(Error::Config {
            line: i + 1,
            message: format!("expected key = value in state.meta, got `{line}`"),
        })?;
        match k.trim() {
            "delta" => {
                delta = Some(val.trim().parse::<f64>().map_err(|_| Error::Config {
                    line: i + 1,
                    message: "delta is not a number".into(),
                })?)
            }
            "heat_a" => heat_a = Some(Polynomial::parse(val.trim())?),
            "heat_b" => heat_b = Some(X3Series::parse(val.trim())?),
            other => warn!("state.meta: ignoring unknown key `{other}`"),
        }
    }
    let heat = match (heat_a, heat_b) {
        (Some(a), Some(b)) => Some(HeatSource { a, b }),
        (None, None) => None,
        _ => return Err(Error::Format("state.meta has only one of heat_a / heat_b".into())),
    };
    Ok(ReynoldsState {
        time,
        v,
        p,
        theta,
        r,
        f,
        delta: delta.ok_or_else(|| Error::Format("state.meta lacks delta".into()))?,
        heat,
    })
}
