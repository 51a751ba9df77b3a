use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable naming the download cache directory.
pub const CACHE_ENV: &str = "STAGEWISE_DATA_DIR";

/// A public dataset: where to download it and how to turn the raw file into a
/// headered CSV.
#[derive(Clone, Copy, Debug)]
pub struct FetchSpec {
    pub name: &'static str,
    pub url: &'static str,
    pub header: &'static [&'static str],
    /// Raw label value to the value written in the CSV.
    pub labels: &'static [(&'static str, &'static str)],
}

pub const FETCHERS: [FetchSpec; 2] = [
    FetchSpec {
        name: "pima",
        url: "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.data.csv",
        header: &[
            "pregnancies",
            "glucose",
            "blood_pressure",
            "skin_fold",
            "insulin",
            "bmi",
            "pedigree",
            "age",
            "class",
        ],
        labels: &[("1", "tested_positive"), ("0", "tested_negative")],
    },
    FetchSpec {
        name: "mammographic_mass",
        url: "https://archive.ics.uci.edu/ml/machine-learning-databases/mammographic-masses/mammographic_masses.data",
        header: &["bi_rads", "age", "shape", "margin", "density", "severity"],
        labels: &[("1", "1"), ("0", "0")],
    },
];

/// Cache directory from [`CACHE_ENV`], or `.stagewise-cache` in the working
/// directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".stagewise-cache"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn download(url: &str) -> Result<Vec<u8>> {
    let fail = |e: ureq::Error| Error::Fetch {
        url: url.to_string(),
        message: e.to_string(),
    };
    let mut response = ureq::get(url).call().map_err(fail)?;
    response.body_mut().read_to_vec().map_err(fail)
}

/// Ensures `<dir>/<name>.csv` exists and returns its path.
///
/// The raw download is kept as `<name>.raw` with its SHA-256 in
/// `<name>.sha256`; later calls reuse the raw file after verifying it against
/// the recorded checksum.
pub fn fetch(name: &str, dir: &Path) -> Result<PathBuf> {
    let spec = FETCHERS.iter().find(|f| f.name == name).ok_or_else(|| {
        let known: Vec<&str> = FETCHERS.iter().map(|f| f.name).collect();
        Error::input(format!("unknown dataset `{name}` (known: {})", known.join(", ")))
    })?;
    std::fs::create_dir_all(dir)?;
    let raw_path = dir.join(format!("{name}.raw"));
    let sum_path = dir.join(format!("{name}.sha256"));
    let csv_path = dir.join(format!("{name}.csv"));

    let raw = if raw_path.exists() {
        let bytes = std::fs::read(&raw_path)?;
        let found = sha256_hex(&bytes);
        if let Ok(expected) = std::fs::read_to_string(&sum_path) {
            let expected = expected.trim().to_string();
            if expected != found {
                return Err(Error::Checksum {
                    path: raw_path.display().to_string(),
                    expected,
                    found,
                });
            }
        } else {
            std::fs::write(&sum_path, format!("{found}\n"))?;
        }
        bytes
    } else {
        log::info!("downloading {} from {}", spec.name, spec.url);
        let bytes = download(spec.url)?;
        std::fs::write(&raw_path, &bytes)?;
        let digest = sha256_hex(&bytes);
        log::info!("{}: sha256 {digest}", spec.name);
        std::fs::write(&sum_path, format!("{digest}\n"))?;
        bytes
    };

    let text = String::from_utf8(raw).map_err(|e| Error::input(format!("{name}: {e}")))?;
    let rows = convert(spec, &text)?;
    log::info!("{}: {} rows", spec.name, rows.len());
    let mut out = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(out, "{}", spec.header.join(","))?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(csv_path)
}

fn convert(spec: &FetchSpec, text: &str) -> Result<Vec<String>> {
    let width = spec.header.len();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(Error::Parse {
                row: i + 1,
                column: String::new(),
                message: format!("expected {width} fields, found {}", cells.len()),
            });
        }
        let raw_label = cells[width - 1];
        cells[width - 1] = spec
            .labels
            .iter()
            .find(|(from, _)| *from == raw_label)
            .map(|(_, to)| *to)
            .ok_or_else(|| Error::Parse {
                row: i + 1,
                column: spec.header[width - 1].to_string(),
                message: format!("unexpected label `{raw_label}`"),
            })?;
        rows.push(cells.join(","));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cached_raw_file_is_verified() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("mammographic_mass.raw"), "5,67,3,5,3,1\n4,43,1,1,?,0\n").unwrap();
        let path = fetch("mammographic_mass", dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("bi_rads,age,shape,margin,density,severity\n5,67"));

        std::fs::write(dir.path().join("mammographic_mass.raw"), "5,67,3,5,3,0\n").unwrap();
        assert!(matches!(fetch("mammographic_mass", dir.path()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn unknown_dataset() {
        let dir = tempfile::tempdir().unwrap();
        assert!(fetch("iris", dir.path()).is_err());
    }
}
