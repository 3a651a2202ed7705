//! The JSON space document, report envelopes and CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hajlasz_core::corpus::CorpusSpec;
use hajlasz_core::{validate_space, MetricMeasureSpace, RawSpace};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::LabError;

/// Where a space comes from: a JSON file or a generator spec such as
/// `cantor:5`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSource {
    File(PathBuf),
    Generator(CorpusSpec),
}

impl SpaceSource {
    /// Existing files win over generator specs.
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let path = Path::new(text);
        if path.exists() {
            return Ok(SpaceSource::File(path.to_path_buf()));
        }
        text.parse::<CorpusSpec>()
            .map(SpaceSource::Generator)
            .map_err(|e| LabError::Input(format!("`{text}` is neither a file nor a generator spec: {e}")))
    }

    pub fn load(&self) -> Result<MetricMeasureSpace, LabError> {
        match self {
            SpaceSource::File(path) => read_space(path),
            SpaceSource::Generator(spec) => spec.build().map_err(|e| LabError::Input(e.to_string())),
        }
    }

    /// Exponent the generator is designed around, if known.
    pub fn expected_s(&self) -> Option<f64> {
        match self {
            SpaceSource::File(_) => None,
            SpaceSource::Generator(spec) => Some(spec.expected_s()),
        }
    }
}

pub fn read_space(path: &Path) -> Result<MetricMeasureSpace, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::Io(path.to_path_buf(), e))?;
    let raw: RawSpace = serde_json::from_str(&text).map_err(|e| LabError::Input(format!("{}: {e}", path.display())))?;
    Ok(validate_space(raw)?)
}

pub fn space_json(space: &MetricMeasureSpace) -> String {
    let mut text = serde_json::to_string_pretty(&space.to_raw()).expect("spaces serialize");
    text.push('\n');
    text
}

/// Lowercase hex SHA-256 of the compact JSON form of `value`.
pub fn json_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("reports serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Every JSON report: the result together with what produced it. There is
/// no timestamp, so equal configurations give byte-identical files.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a C,
    pub config_hash: String,
    pub space_name: &'a str,
    pub space_hash: String,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'static str, config: &'a C, space: &'a MetricMeasureSpace, result: &'a R) -> Self {
        Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            config_hash: json_hash(config),
            space_name: space.name(),
            space_hash: json_hash(&space.to_raw()),
            result,
        }
    }
}

/// Writes `text` to `path`, or to standard output when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), LabError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| LabError::Io(p.to_path_buf(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| LabError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    emit(path, &text)
}

/// A CSV table with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), LabError> {
    let io_err = |e: csv::Error| LabError::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(|e| LabError::Io(path.to_path_buf(), e))
}
