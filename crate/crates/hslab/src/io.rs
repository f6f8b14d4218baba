//! File formats: HSF field containers, coefficient and problem JSON, atomic writes.
//!
//! HSF: one UTF-8 JSON header line, then little-endian (re, im) f64 pairs in
//! level-major, spatial row-major, channel-minor order. Boundary fields use K = 0.

use crate::calculus::{CoefficientFile, CoefficientMatrix};
use crate::exponents::Exponent;
use crate::grid::{BoundaryField, BoundarySpec, Field, GridSpec};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsfHeader {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub channels: usize,
    pub dtype: String,
    pub byte_order: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HsfData {
    Field(Field),
    Boundary(BoundaryField),
}

impl HsfData {
    pub fn into_field(self) -> Result<Field> {
        match self {
            HsfData::Field(f) => Ok(f),
            HsfData::Boundary(_) => Err(Error::Format("expected a half-space field, found a boundary field".into())),
        }
    }
    pub fn into_boundary(self) -> Result<BoundaryField> {
        match self {
            HsfData::Boundary(b) => Ok(b),
            HsfData::Field(_) => Err(Error::Format("expected a boundary field, found a half-space field".into())),
        }
    }
}

/// Write `bytes` to a sibling temp file and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Precondition(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn encode(header: &HsfHeader, values: &[C64]) -> Vec<u8> {
    let mut out = serde_json::to_vec(header).expect("header serialises");
    out.push(b'\n');
    out.reserve(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn field_to_bytes(f: &Field) -> Vec<u8> {
    let s = f.spec();
    let h = HsfHeader {
        n: s.n,
        m: s.m,
        l: s.l,
        nx: s.nx,
        t_min: s.t_min,
        t_max: s.t_max,
        k: s.k,
        channels: f.channels(),
        dtype: "c128".into(),
        byte_order: "LE".into(),
    };
    encode(&h, f.values())
}

pub fn boundary_to_bytes(g: &BoundaryField, m: usize) -> Vec<u8> {
    let h = HsfHeader {
        n: g.spec.n,
        m,
        l: g.spec.l,
        nx: g.spec.nx,
        t_min: 0.0,
        t_max: 0.0,
        k: 0,
        channels: g.channels,
        dtype: "c128".into(),
        byte_order: "LE".into(),
    };
    encode(&h, &g.values)
}

pub fn parse_hsf(bytes: &[u8]) -> Result<HsfData> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Format("missing HSF header line".into()))?;
    let header: HsfHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Format(format!("bad HSF header: {e}")))?;
    if header.byte_order != "LE" {
        return Err(Error::Format(format!("unsupported byte order {:?}; only LE is accepted", header.byte_order)));
    }
    if header.dtype != "c128" {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.channels == 0 {
        return Err(Error::Format("header declares zero channels".into()));
    }
    let bspec = BoundarySpec { n: header.n, l: header.l, nx: header.nx };
    let spatial = header
        .nx
        .checked_pow(header.n as u32)
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let count = spatial * header.channels * header.k.max(1);
    let payload = &bytes[nl + 1..];
    let expected = count * 16;
    if payload.len() < expected {
        let whole = payload.len() / 16;
        return Err(Error::Format(format!(
            "truncated payload: expected {expected} bytes, found {} (data ends at byte offset {}, within value {whole})",
            payload.len(),
            nl + 1 + payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "payload longer than the header declares: expected {expected} bytes, found {} (excess starts at byte offset {})",
            payload.len(),
            nl + 1 + expected
        )));
    }
    let values: Vec<C64> = payload
        .chunks_exact(16)
        .map(|b| C64::new(f64::from_le_bytes(b[..8].try_into().unwrap()), f64::from_le_bytes(b[8..].try_into().unwrap())))
        .collect();
    if header.k == 0 {
        return Ok(HsfData::Boundary(BoundaryField::new(bspec, header.channels, values)?));
    }
    let spec = GridSpec::new(header.n, header.m, header.l, header.nx, header.t_min, header.t_max, header.k)
        .map_err(|e| Error::Format(format!("invalid grid in header: {e}")))?;
    Ok(HsfData::Field(Field::new(spec, header.channels, values)?))
}

pub fn read_hsf(path: &Path) -> Result<HsfData> {
    let bytes = std::fs::read(path)?;
    parse_hsf(&bytes)
}

pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    write_atomic(path, &field_to_bytes(f))
}

pub fn write_boundary(path: &Path, g: &BoundaryField, m: usize) -> Result<()> {
    write_atomic(path, &boundary_to_bytes(g, m))
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: CoefficientFile = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    CoefficientMatrix::from_file(&file)
}

pub fn write_coefficients(path: &Path, a: &CoefficientMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&a.to_file()).expect("coefficients serialise");
    write_atomic(path, text.as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentJson {
    pub j: f64,
    #[serde(alias = "θ")]
    pub theta: f64,
}

impl ExponentJson {
    pub fn at(&self, n: usize) -> Exponent {
        Exponent::from_views(n, self.j, self.theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub coefficients: PathBuf,
    pub grid: GridSpec,
    pub problem: crate::bvp::Problem,
    pub exponent: ExponentJson,
    pub datum: PathBuf,
}

/// Read a problem file; relative paths resolve against its directory.
pub fn read_problem(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)?;
    let mut p: ProblemFile = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if p.coefficients.is_relative() {
        p.coefficients = base.join(&p.coefficients);
    }
    if p.datum.is_relative() {
        p.datum = base.join(&p.datum);
    }
    Ok(p)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::random_field;

    #[test]
    fn field_round_trip_bits() {
        let spec = GridSpec::new(1, 1, 3.0, 8, 0.01, 1.0, 5).unwrap();
        let f = random_field(&spec, 2, 3, 0.5);
        let bytes = field_to_bytes(&f);
        let g = parse_hsf(&bytes).unwrap().into_field().unwrap();
        assert_eq!(field_to_bytes(&g), bytes);
    }

    #[test]
    fn truncation_reports_offset() {
        let spec = GridSpec::new(1, 1, 3.0, 8, 0.01, 1.0, 5).unwrap();
        let bytes = field_to_bytes(&random_field(&spec, 1, 3, 0.0));
        let err = parse_hsf(&bytes[..bytes.len() - 5]).unwrap_err().to_string();
        assert!(err.contains("offset"), "{err}");
    }
}
