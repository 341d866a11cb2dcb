//! Persistence of eigenfunction documents and CSV emission.
//!
//! One JSON document per degree, wrapped with a SHA-256 checksum of the
//! canonical inner serialization so corrupted or hand-edited files are
//! rejected on load. Floats are serialized with 17 significant digits, which
//! round-trips f64 exactly.

use crate::error::{Error, Result};
use crate::harmonics::BASIS_CONVENTION_ID;
use crate::hecke::{EigenFunction, InvariantSubspace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serializable per-degree eigenbasis document.
#[derive(Debug, Serialize, Deserialize)]
pub struct EigenDocument {
    pub ell: usize,
    pub dim: usize,
    pub basis_convention_id: String,
    /// d rows of 2l+1 coefficients spanning the invariant subspace
    pub invariant_basis: Vec<Vec<String>>,
    /// d rows of 2l+1 coefficients, one per eigenfunction (quotient norm)
    pub eigen_coeffs: Vec<Vec<String>>,
    /// per eigenfunction: prime -> eigenvalue
    pub eigenvalues: Vec<BTreeMap<u64, String>>,
    pub normalization: String,
    pub library_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChecksumEnvelope {
    checksum: String,
    doc: EigenDocument,
}

/// 17-significant-digit decimal form; round-trips every f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.17e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|e| Error::Format(format!("bad float {s:?}: {e}")))
}

pub fn eigen_document(sub: &InvariantSubspace, basis: &[EigenFunction]) -> EigenDocument {
    let row = |v: &[f64]| v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>();
    EigenDocument {
        ell: sub.degree,
        dim: basis.len(),
        basis_convention_id: BASIS_CONVENTION_ID.to_string(),
        invariant_basis: (0..sub.basis.ncols())
            .map(|j| row(sub.basis.column(j).as_slice()))
            .collect(),
        eigen_coeffs: basis.iter().map(|f| row(f.coeffs.as_slice())).collect(),
        eigenvalues: basis
            .iter()
            .map(|f| {
                f.primes
                    .iter()
                    .zip(&f.eigenvalues)
                    .map(|(p, v)| (*p, format_f64(*v)))
                    .collect()
            })
            .collect(),
        normalization: "quotient".to_string(),
        library_version: LIBRARY_VERSION.to_string(),
    }
}

fn doc_checksum(doc: &EigenDocument) -> Result<String> {
    let canonical =
        serde_json::to_vec(doc).map_err(|e| Error::Format(format!("serialize: {e}")))?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

pub fn write_document(doc: &EigenDocument, path: &Path) -> Result<()> {
    let envelope = ChecksumEnvelope {
        checksum: doc_checksum(doc)?,
        doc: EigenDocument {
            ell: doc.ell,
            dim: doc.dim,
            basis_convention_id: doc.basis_convention_id.clone(),
            invariant_basis: doc.invariant_basis.clone(),
            eigen_coeffs: doc.eigen_coeffs.clone(),
            eigenvalues: doc.eigenvalues.clone(),
            normalization: doc.normalization.clone(),
            library_version: doc.library_version.clone(),
        },
    };
    let text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::Format(format!("serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_document(path: &Path) -> Result<EigenDocument> {
    let text = std::fs::read_to_string(path)?;
    let envelope: ChecksumEnvelope = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let actual = doc_checksum(&envelope.doc)?;
    if actual != envelope.checksum {
        return Err(Error::ChecksumMismatch {
            path: path.display().to_string(),
            expected: envelope.checksum,
            actual,
        });
    }
    Ok(envelope.doc)
}

/// Reconstruct eigenfunctions from a persisted document.
pub fn document_eigenfunctions(doc: &EigenDocument) -> Result<Vec<EigenFunction>> {
    if doc.basis_convention_id != BASIS_CONVENTION_ID {
        return Err(Error::Format(format!(
            "unknown basis convention {:?}",
            doc.basis_convention_id
        )));
    }
    let dim = 2 * doc.ell + 1;
    doc.eigen_coeffs
        .iter()
        .zip(&doc.eigenvalues)
        .map(|(coeffs, eigs)| {
            if coeffs.len() != dim {
                return Err(Error::Format(format!(
                    "coefficient row has length {}, expected {dim}",
                    coeffs.len()
                )));
            }
            let c = coeffs.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
            let (primes, vals): (Vec<u64>, Vec<String>) =
                eigs.iter().map(|(p, v)| (*p, v.clone())).unzip();
            Ok(EigenFunction {
                degree: doc.ell,
                coeffs: nalgebra::DVector::from_vec(c),
                eigenvalues: vals
                    .iter()
                    .map(|s| parse_f64(s))
                    .collect::<Result<Vec<_>>>()?,
                primes,
            })
        })
        .collect()
}

/// CSV writer: header row naming the columns, preceded by a comment line
/// carrying the library version and a hash of the run configuration.
pub struct CsvWriter {
    out: std::fs::File,
}

impl CsvWriter {
    pub fn create(path: &Path, columns: &[&str], config_hash: &str) -> Result<Self> {
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "# library_version={LIBRARY_VERSION} config_hash={config_hash}")?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }
}

/// Hash of a run configuration's canonical serialization.
pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let bytes =
        serde_json::to_vec(config).map_err(|e| Error::Format(format!("serialize: {e}")))?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..8]))
}
