//! Dataset and posterior serialization.
//!
//! Datasets travel as `x,d,sigma` CSV plus a JSON sidecar carrying the
//! generation provenance. Floats are written with the shortest
//! representation that parses back to the same bits, so write/read is an
//! exact round trip and regenerated outputs are byte-identical.

use std::fs;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::linear::LecPosterior;
use crate::toy::{DataPoint, Dataset, Provenance};

/// Writes `x,d,sigma` rows with round-trip precision.
pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "d", "sigma"])?;
    for p in dataset.points() {
        w.write_record([p.x.to_string(), p.d.to_string(), p.sigma.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]; provenance stays empty
/// unless the caller attaches a sidecar via [`load_dataset`].
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match Error::from(e) {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "d", "sigma"] {
        return Err(Error::InvalidData(format!(
            "{}: expected header x,d,sigma, got {:?}",
            path.display(),
            headers
        )));
    }
    let mut points = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let field = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| {
                    Error::InvalidData(format!("{}: row {} too short", path.display(), row + 1))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    Error::Parse(format!("{}: row {}: {e}", path.display(), row + 1))
                })
        };
        points.push(DataPoint { x: field(0)?, d: field(1)?, sigma: field(2)? });
    }
    Dataset::new(points, None)
}

/// The JSON sidecar belonging to a dataset CSV: same path, `.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Reads a dataset CSV and, when its sidecar exists, the provenance too.
pub fn load_dataset(csv_path: &Path) -> Result<Dataset> {
    let bare = read_dataset_csv(csv_path)?;
    let sidecar = sidecar_path(csv_path);
    if sidecar.exists() {
        let provenance: Provenance = read_json(&sidecar)?;
        Dataset::new(bare.points().to_vec(), Some(provenance))
    } else {
        Ok(bare)
    }
}

/// Writes the CSV and its provenance sidecar (when the dataset has one).
pub fn store_dataset(csv_path: &Path, dataset: &Dataset) -> Result<()> {
    write_dataset_csv(csv_path, dataset)?;
    if let Some(p) = &dataset.provenance {
        write_json(&sidecar_path(csv_path), p)?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|io| {
        std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))
    })?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| match Error::from(e) {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
}

/// Serialization shape of a coefficient posterior.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct LecPosteriorExport {
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma_a: f64,
    pub mean: Vec<f64>,
    /// Row-major covariance.
    pub cov: Vec<Vec<f64>>,
    pub chi2_aug_min: f64,
    #[serde(rename = "log_det_A_aug")]
    pub log_det_a_aug: f64,
}

impl From<&LecPosterior> for LecPosteriorExport {
    fn from(lp: &LecPosterior) -> Self {
        let dim = lp.mean.len();
        Self {
            m: lp.m,
            sigma_a: lp.sigma_a,
            mean: lp.mean.iter().copied().collect(),
            cov: (0..dim).map(|i| (0..dim).map(|j| lp.cov[(i, j)]).collect()).collect(),
            chi2_aug_min: lp.chi2_aug_min,
            log_det_a_aug: lp.log_det_a_aug,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{build_design, lec_posterior};
    use crate::seed::{SeedSpec, StreamId};
    use crate::toy::{DataConfig, UnderlyingFunction, generate_dataset};

    fn sample_dataset() -> Dataset {
        generate_dataset(
            UnderlyingFunction::G1,
            &DataConfig::default(),
            SeedSpec::new(5, StreamId::Adhoc(2)),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let original = sample_dataset();
        store_dataset(&path, &original).unwrap();
        let reread = load_dataset(&path).unwrap();
        assert_eq!(original.points(), reread.points());
        assert_eq!(original.provenance, reread.provenance);
        let twice = fs::read(&path).unwrap();
        store_dataset(&path, &original).unwrap();
        assert_eq!(twice, fs::read(&path).unwrap());
    }

    #[test]
    fn csv_without_sidecar_has_no_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bare.csv");
        write_dataset_csv(&path, &sample_dataset()).unwrap();
        assert_eq!(load_dataset(&path).unwrap().provenance, None);
    }

    #[test]
    fn header_and_number_format_are_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let bad_header = dir.path().join("a.csv");
        fs::write(&bad_header, "x,y,sigma\n0,1,0.1\n").unwrap();
        assert!(matches!(read_dataset_csv(&bad_header), Err(Error::InvalidData(_))));

        let bad_value = dir.path().join("b.csv");
        fs::write(&bad_value, "x,d,sigma\n0,one,0.1\n").unwrap();
        assert!(matches!(read_dataset_csv(&bad_value), Err(Error::Parse(_))));

        assert!(matches!(
            read_dataset_csv(&dir.path().join("missing.csv")),
            Err(Error::Parse(_) | Error::Io(_))
        ));
    }

    #[test]
    fn sidecar_sits_next_to_the_csv() {
        assert_eq!(sidecar_path(Path::new("out/run/data.csv")), Path::new("out/run/data.json"));
    }

    #[test]
    fn posterior_export_uses_the_documented_field_names() {
        let ds = build_design(&sample_dataset(), 2).unwrap();
        let lp = lec_posterior(&ds, 1.0).unwrap();
        let export = LecPosteriorExport::from(&lp);
        let text = serde_json::to_string(&export).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["M"], 2);
        assert!(value["log_det_A_aug"].is_f64());
        assert_eq!(value["mean"].as_array().unwrap().len(), 3);
        let back: LecPosteriorExport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, export);
        assert_eq!(back.cov[0][1], lp.cov[(0, 1)]);
    }
}
