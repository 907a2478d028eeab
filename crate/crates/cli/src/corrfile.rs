//! Plain-text correspondence files: one `px py pz qx qy qz` record per line,
//! whitespace separated, `#` comment lines and blank lines ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gror_core::{CorrespondenceSet, GrorError, Vec3};
use thiserror::Error;

/// Minimum number of records a file must hold.
pub const MIN_RECORDS: usize = 3;

#[derive(Debug, Error)]
pub enum CorrFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need at least {MIN_RECORDS} correspondences, found {0}")]
    EmptyFile(usize),
    #[error(transparent)]
    Set(#[from] GrorError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceFile {
    pub path: PathBuf,
    /// `(p, q)` pairs in file order; the pair's position is its id.
    pub pairs: Vec<(Vec3, Vec3)>,
}

impl CorrespondenceFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorrFileError> {
        let path = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&path).map_err(|source| CorrFileError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            pairs: parse_records(&text)?,
            path,
        })
    }

    pub fn to_set(&self, delta: f64) -> Result<CorrespondenceSet, CorrFileError> {
        Ok(CorrespondenceSet::new(self.pairs.iter().copied(), delta)?)
    }
}

/// Reads a correspondence file into a set with noise bound `delta`.
pub fn parse_correspondences(
    path: impl AsRef<Path>,
    delta: f64,
) -> Result<CorrespondenceSet, CorrFileError> {
    CorrespondenceFile::read(path)?.to_set(delta)
}

/// Parses file contents. Line numbers in errors are 1-based.
pub fn parse_records(text: &str) -> Result<Vec<(Vec3, Vec3)>, CorrFileError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| CorrFileError::Parse {
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(parse_err(format!(
                "expected 6 fields, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0; 6];
        for (slot, field) in v.iter_mut().zip(&fields) {
            let x: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("not a number: {field:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(format!("non-finite value: {field:?}")));
            }
            *slot = x;
        }
        pairs.push((Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])));
    }
    if pairs.len() < MIN_RECORDS {
        return Err(CorrFileError::EmptyFile(pairs.len()));
    }
    Ok(pairs)
}

/// Serializes pairs with 17 significant digits, which re-parses exactly.
pub fn format_records<'a>(pairs: impl IntoIterator<Item = (&'a Vec3, &'a Vec3)>) -> String {
    let mut out = String::from("# px py pz qx qy qz\n");
    for (p, q) in pairs {
        let _ = writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            p.x, p.y, p.z, q.x, q.y, q.z
        );
    }
    out
}

pub fn format_set(set: &CorrespondenceSet) -> String {
    format_records(set.items().iter().map(|c| (&c.p, &c.q)))
}
