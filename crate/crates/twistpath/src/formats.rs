//! File formats: fields (JSON and binary), metric state exports, toric
//! potentials, profiles, continuation logs and CSV tables.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twistpath_core::continuation::ContinuationRecord;
use twistpath_core::kahler::MetricState;
use twistpath_core::lattice::{Field, Purity, TorusGrid};
use twistpath_core::toric::{MomentGrid, Profile, ToricPotential};

use crate::error::{CliError, Result};

const FIELD_MAGIC: &[u8; 4] = b"TWPF";
const FIELD_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PurityTag {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum FieldValues {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

/// Field on disk: header and row-major samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    purity: PurityTag,
    values: FieldValues,
}

impl FieldFile {
    pub fn from_field(field: &Field) -> Self {
        let grid = field.grid();
        let (purity, values) = match field.purity() {
            Purity::Real => (PurityTag::Real, FieldValues::Real(field.real_values())),
            Purity::Complex => (
                PurityTag::Complex,
                FieldValues::Complex(field.values().iter().map(|v| [v.re, v.im]).collect()),
            ),
        };
        Self {
            n: grid.dim(),
            points: grid.points(),
            purity,
            values,
        }
    }

    pub fn to_field(&self) -> Result<Field> {
        let grid = TorusGrid::new(self.n, self.points)?;
        let field = match (&self.purity, &self.values) {
            (PurityTag::Real, FieldValues::Real(v)) => Field::real(grid, v.clone())?,
            (PurityTag::Complex, FieldValues::Complex(v)) => Field::complex(
                grid,
                v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            )?,
            _ => {
                return Err(CliError::format(
                    "field",
                    "purity does not match the value layout",
                ))
            }
        };
        Ok(field)
    }
}

pub fn field_to_json(field: &Field) -> String {
    serde_json::to_string(&FieldFile::from_field(field)).expect("finite samples")
}

pub fn field_from_json(text: &str) -> Result<Field> {
    let file: FieldFile = serde_json::from_str(text).map_err(|e| CliError::format("field", e))?;
    file.to_field()
}

/// `TWPF`, version, `n`, purity, `N` (u32), then little-endian `f64`
/// samples; complex samples are interleaved `re, im`.
pub fn field_to_bytes(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let complex = field.purity() == Purity::Complex;
    let mut out = Vec::with_capacity(12 + field.len() * if complex { 16 } else { 8 });
    out.extend_from_slice(FIELD_MAGIC);
    out.push(FIELD_VERSION);
    out.push(grid.dim() as u8);
    out.push(u8::from(complex));
    out.push(0);
    out.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<Field> {
    let bad = |m: &str| CliError::format("binary field", m);
    if bytes.len() < 12 || &bytes[..4] != FIELD_MAGIC {
        return Err(bad("missing header"));
    }
    if bytes[4] != FIELD_VERSION {
        return Err(bad("unsupported version"));
    }
    let complex = match bytes[6] {
        0 => false,
        1 => true,
        _ => return Err(bad("unknown purity")),
    };
    let points = u32::from_le_bytes(bytes[8..12].try_into().expect("four bytes")) as usize;
    let grid = TorusGrid::new(bytes[5] as usize, points)?;
    let width = if complex { 16 } else { 8 };
    let body = &bytes[12..];
    if body.len() != grid.len() * width {
        return Err(bad("sample count does not match the header"));
    }
    let read = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().expect("eight bytes"));
    let field = if complex {
        let values = body
            .chunks_exact(16)
            .map(|c| Complex64::new(read(&c[..8]), read(&c[8..])))
            .collect();
        Field::complex(grid, values)?
    } else {
        Field::real(grid, body.chunks_exact(8).map(read).collect())?
    };
    Ok(field)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
struct MetricExport {
    background_hash: String,
    phi: FieldFile,
    #[serde(rename = "R")]
    scalar_curvature: FieldFile,
    min_metric_eigenvalue: f64,
}

pub fn metric_state_to_json(state: &MetricState) -> String {
    let export = MetricExport {
        background_hash: sha256_hex(&field_to_bytes(state.background().reference_potential())),
        phi: FieldFile::from_field(state.potential()),
        scalar_curvature: FieldFile::from_field(state.scalar_curvature()),
        min_metric_eigenvalue: state.min_eigenvalue(),
    };
    serde_json::to_string(&export).expect("finite samples")
}

/// Toric potential on disk: node count and `h` at the Chebyshev nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToricFile {
    #[serde(rename = "K")]
    nodes: usize,
    h: Vec<f64>,
}

impl ToricFile {
    pub fn from_potential(u: &ToricPotential) -> Self {
        Self {
            nodes: u.grid().len(),
            h: u.h_values(),
        }
    }

    pub fn to_potential(&self) -> Result<ToricPotential> {
        let grid = MomentGrid::new(self.nodes)?;
        if self.h.len() != self.nodes {
            return Err(CliError::format(
                "toric potential",
                "need one h value per node",
            ));
        }
        Ok(ToricPotential::from_node_values(
            &grid,
            &self.h,
            self.nodes - 1,
        )?)
    }
}

pub fn toric_to_json(u: &ToricPotential) -> String {
    serde_json::to_string(&ToricFile::from_potential(u)).expect("finite samples")
}

pub fn toric_from_json(text: &str) -> Result<ToricPotential> {
    let file: ToricFile =
        serde_json::from_str(text).map_err(|e| CliError::format("toric potential", e))?;
    file.to_potential()
}

pub fn write_profile_csv<W: Write>(out: W, profile: &Profile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "value"]).map_err(csv_error)?;
    for (x, v) in profile.grid().nodes().iter().zip(profile.values()) {
        w.serialize((x, v)).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::format("profile csv", e))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::format("csv", e)
}

/// Potentials that can appear in continuation logs and path files.
pub trait PotentialFormat: Sized {
    type File: Serialize + for<'de> Deserialize<'de>;
    fn to_file(&self) -> Self::File;
    fn from_file(file: &Self::File) -> Result<Self>;
}

impl PotentialFormat for Field {
    type File = FieldFile;
    fn to_file(&self) -> FieldFile {
        FieldFile::from_field(self)
    }
    fn from_file(file: &FieldFile) -> Result<Self> {
        file.to_field()
    }
}

impl PotentialFormat for ToricPotential {
    type File = ToricFile;
    fn to_file(&self) -> ToricFile {
        ToricFile::from_potential(self)
    }
    fn from_file(file: &ToricFile) -> Result<Self> {
        file.to_potential()
    }
}

/// One line of a continuation log.
#[derive(Debug, Serialize, Deserialize)]
pub struct RecordLine<F> {
    pub t: f64,
    pub residual_sup: f64,
    pub mean_defect: f64,
    pub reduced: Vec<f64>,
    pub iterations: usize,
    pub iota: f64,
    pub orthogonality_defect: f64,
    pub continuity: Option<f64>,
    pub potential: F,
}

impl<F> RecordLine<F> {
    pub fn from_record<P: PotentialFormat<File = F>>(rec: &ContinuationRecord<P>) -> Self {
        Self {
            t: rec.t,
            residual_sup: rec.residual_sup,
            mean_defect: rec.mean_defect,
            reduced: rec.reduced.clone(),
            iterations: rec.iterations,
            iota: rec.iota,
            orthogonality_defect: rec.orthogonality_defect,
            continuity: rec.continuity,
            potential: rec.potential.to_file(),
        }
    }
}

pub fn write_records_jsonl<W: Write, P: PotentialFormat>(
    mut out: W,
    records: &[ContinuationRecord<P>],
) -> Result<()> {
    for rec in records {
        let line = serde_json::to_string(&RecordLine::from_record(rec)).expect("finite record");
        writeln!(out, "{line}").map_err(|e| CliError::format("jsonl", e))?;
    }
    Ok(())
}

/// Only the `potential` member of each line is read.
#[derive(Deserialize)]
struct PotentialLine<F> {
    potential: F,
}

pub fn read_potentials_jsonl<P: PotentialFormat>(text: &str) -> Result<Vec<P>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let parsed: PotentialLine<P::File> = serde_json::from_str(line)
                .map_err(|e| CliError::format("path file", format!("line {}: {e}", i + 1)))?;
            P::from_file(&parsed.potential)
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryRow {
    t: f64,
    residual: f64,
    iota: f64,
    newton_iters: usize,
}

pub fn write_summary_csv<W: Write, P>(out: W, records: &[ContinuationRecord<P>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["t", "residual", "iota", "newton_iters"])
        .map_err(csv_error)?;
    for rec in records {
        w.serialize(SummaryRow {
            t: rec.t,
            residual: rec.residual_sup,
            iota: rec.iota,
            newton_iters: rec.iterations,
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::format("summary csv", e))
}

/// One sample of an energy scan; values are relative to the first sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub s: f64,
    #[serde(rename = "I")]
    pub aubin: f64,
    #[serde(rename = "J_chi")]
    pub chi: f64,
    pub iota: f64,
    #[serde(rename = "K_energy")]
    pub k_energy: f64,
    #[serde(rename = "E_t")]
    pub twisted: f64,
    #[serde(rename = "E_K")]
    pub modified: f64,
    /// Second difference of `E_K + (1 − t)ι` at interior samples.
    pub convexity: Option<f64>,
}

pub fn write_energy_csv<W: Write>(out: W, rows: &[EnergyRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::format("energy csv", e))
}

pub fn read_energy_csv(text: &str) -> Result<Vec<EnergyRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward(grid: TorusGrid) -> Field {
        Field::from_fn(grid, |p| {
            (p[0] * 1.234_567).sin() / 3.0 + 1e-300 * p[1] - 7.0e15 * p[0].cos()
        })
    }

    #[test]
    fn real_field_round_trips_exactly() {
        let f = awkward(TorusGrid::new(1, 16).unwrap());
        assert_eq!(field_from_json(&field_to_json(&f)).unwrap(), f);
        assert_eq!(field_from_bytes(&field_to_bytes(&f)).unwrap(), f);
    }

    #[test]
    fn complex_field_round_trips_exactly() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = Field::from_complex_fn(grid, |p| {
            Complex64::new(p[0].sin() / 7.0, p[3].cos() * 1e-17)
        });
        assert_eq!(field_from_json(&field_to_json(&f)).unwrap(), f);
        assert_eq!(field_from_bytes(&field_to_bytes(&f)).unwrap(), f);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let f = awkward(TorusGrid::new(1, 8).unwrap());
        let bytes = field_to_bytes(&f);
        assert!(field_from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(field_from_bytes(b"NOPE0000000000").is_err());
    }

    #[test]
    fn header_names_match_the_format() {
        let f = Field::zeros(TorusGrid::new(1, 8).unwrap());
        let json: serde_json::Value = serde_json::from_str(&field_to_json(&f)).unwrap();
        assert_eq!(json["n"], 1);
        assert_eq!(json["N"], 8);
        assert_eq!(json["purity"], "real");
    }

    #[test]
    fn toric_potential_round_trips() {
        let grid = MomentGrid::new(32).unwrap();
        let u = ToricPotential::from_fn(&grid, |x| 0.1 * (1.0 - x * x) * (1.0 - x * x) + 0.02 * x);
        let back = toric_from_json(&toric_to_json(&u)).unwrap();
        assert!(back.distance(&u) < 1e-14);
        let json: serde_json::Value = serde_json::from_str(&toric_to_json(&u)).unwrap();
        assert_eq!(json["K"], 32);
    }

    #[test]
    fn profile_csv_has_one_row_per_node() {
        let grid = MomentGrid::new(32).unwrap();
        let p = Profile::from_fn(&grid, |x| x * x);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 33);
        assert!(text.starts_with("x,value\n"));
    }

    #[test]
    fn energy_rows_round_trip() {
        let rows = vec![
            EnergyRow {
                s: 0.0,
                aubin: 0.0,
                chi: 0.0,
                iota: 0.0,
                k_energy: 0.0,
                twisted: 0.0,
                modified: 0.0,
                convexity: None,
            },
            EnergyRow {
                s: 0.5,
                aubin: 1.5,
                chi: -2.0,
                iota: 0.25,
                k_energy: 3.0,
                twisted: 1.0,
                modified: 2.0,
                convexity: Some(0.1),
            },
        ];
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,I,J_chi,iota,K_energy,E_t,E_K,convexity\n"));
        assert_eq!(read_energy_csv(&text).unwrap(), rows);
    }
}
