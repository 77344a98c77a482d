//! OEIS b-files: parsing, triangle matching, fixtures and optional download.

use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::poly::Poly;
use crate::rational::{fmt_rational, Rational};

/// Environment variable overriding the download endpoint.
pub const ENDPOINT_ENV: &str = "EULERLAW_OEIS_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str = "https://oeis.org/";
/// Checksum list inside a fixture directory.
pub const CHECKSUM_FILE: &str = "SHA256SUMS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OeisError {
    #[error("line {line}: malformed entry `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: index {got} does not follow {prev}")]
    NonMonotone { line: usize, prev: i64, got: i64 },
    #[error("no entries")]
    Empty,
    #[error("malformed A-number `{0}`")]
    BadId(String),
    #[error("{0} not in cache or fixtures (offline)")]
    CacheMiss(String),
    #[error("network: {0}")]
    Network(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("checksum mismatch for {0}")]
    Checksum(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for OeisError {
    fn from(e: std::io::Error) -> Self {
        OeisError::Io(e.to_string())
    }
}

/// Consecutive `(index, value)` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BFile {
    pub entries: Vec<(i64, BigInt)>,
}

impl BFile {
    pub fn values(&self) -> impl Iterator<Item = &BigInt> {
        self.entries.iter().map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `index value` lines.
    pub fn serialize(&self) -> String {
        self.entries.iter().map(|(i, v)| format!("{i} {v}\n")).collect()
    }

    /// Entries from row-major values starting at `first_index`.
    pub fn from_values(first_index: i64, values: impl IntoIterator<Item = BigInt>) -> BFile {
        BFile { entries: values.into_iter().enumerate().map(|(i, v)| (first_index + i as i64, v)).collect() }
    }
}

/// Parse `index value` lines; `#` comments and blank lines are skipped.
pub fn parse_bfile(text: &str) -> Result<BFile, OeisError> {
    let mut entries: Vec<(i64, BigInt)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || OeisError::Malformed { line: i + 1, text: raw.to_string() };
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let idx: i64 = a.parse().map_err(|_| bad())?;
        let val: BigInt = b.parse().map_err(|_| bad())?;
        if let Some(&(prev, _)) = entries.last() {
            if idx != prev + 1 {
                return Err(OeisError::NonMonotone { line: i + 1, prev, got: idx });
            }
        }
        entries.push((idx, val));
    }
    if entries.is_empty() {
        return Err(OeisError::Empty);
    }
    Ok(BFile { entries })
}

/// Number of entries taken from row `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Width {
    /// Up to the row's degree.
    Degree,
    /// `a n + b` entries, zero-padded past the degree.
    Linear { a: i64, b: i64 },
}

/// How generated rows map onto a flattened triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    /// Row index of the first triangle row.
    pub first_row: i64,
    /// Coefficients dropped from the low end of each row.
    pub lead_trim: usize,
    pub width: Width,
}

impl Default for Layout {
    fn default() -> Self {
        Layout { first_row: 0, lead_trim: 0, width: Width::Degree }
    }
}

impl Layout {
    /// Entries contributed by row `n` with polynomial `p`.
    pub fn row_entries(&self, n: i64, p: &Poly) -> Vec<Rational> {
        let count = match self.width {
            Width::Degree => p.degree().map_or(0, |d| (d + 1).saturating_sub(self.lead_trim)),
            Width::Linear { a, b } => (a * n + b).max(0) as usize,
        };
        (0..count).map(|i| p.coeff(self.lead_trim + i)).collect()
    }

    /// Rows needed to cover `entries` values, when the width is known in advance.
    pub fn rows_needed(&self, entries: usize) -> Option<i64> {
        let Width::Linear { a, b } = self.width else { return None };
        let (mut n, mut seen) = (self.first_row, 0usize);
        while seen < entries {
            let w = (a * n + b).max(0) as usize;
            seen += w;
            n += 1;
            if n > self.first_row + entries as i64 + 1 && w == 0 {
                return None;
            }
        }
        Some(n - 1)
    }
}

/// Layouts of the vendored triangles, for rows counted as in the shipped specs.
pub fn known_layout(a_number: &str) -> Option<Layout> {
    let lin = |first_row, lead_trim, a, b| Layout { first_row, lead_trim, width: Width::Linear { a, b } };
    Some(match a_number {
        "A008292" | "A008517" => lin(1, 0, 1, 0),
        "A244312" => lin(1, 1, 1, 0),
        "A173018" | "A060187" | "A008290" | "A039598" | "A193229" | "A065600" | "A091441" | "A202550" => lin(0, 0, 1, 1),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub n: i64,
    pub k: usize,
    pub expected: BigInt,
    /// `None` when the rows ran out.
    pub got: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMatch {
    pub a_number: String,
    pub offset: i64,
    /// Rows matched completely.
    pub rows_matched: usize,
    pub entries_matched: usize,
    pub first_mismatch: Option<Mismatch>,
}

impl TriangleMatch {
    pub fn is_full(&self) -> bool {
        self.first_mismatch.is_none()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "a_number": self.a_number,
            "offset": self.offset,
            "rows_matched": self.rows_matched,
            "entries_matched": self.entries_matched,
            "full_match": self.is_full(),
            "first_mismatch": self.first_mismatch.as_ref().map(|m| serde_json::json!({
                "n": m.n, "k": m.k, "expected": m.expected.to_string(),
                "got": m.got.as_ref().map(fmt_rational),
            })),
        })
    }
}

/// Longest exact prefix of `bfile` reproduced by `rows`, where `rows[i]` is row `start + i`.
pub fn match_triangle(a_number: &str, rows: &[Poly], start: i64, bfile: &BFile, layout: &Layout) -> TriangleMatch {
    let mut values = bfile.values().peekable();
    let mut result = TriangleMatch {
        a_number: a_number.to_string(),
        offset: layout.first_row,
        rows_matched: 0,
        entries_matched: 0,
        first_mismatch: None,
    };
    let mut n = layout.first_row;
    while values.peek().is_some() {
        let idx = n - start;
        if idx < 0 || idx as usize >= rows.len() {
            let expected = values.next().expect("peeked").clone();
            result.first_mismatch = Some(Mismatch { n, k: layout.lead_trim, expected, got: None });
            return result;
        }
        let entries = layout.row_entries(n, &rows[idx as usize]);
        let mut complete = true;
        for (i, got) in entries.into_iter().enumerate() {
            let Some(expected) = values.next() else {
                complete = false;
                break;
            };
            if Rational::from_integer(expected.clone()) != got {
                result.first_mismatch = Some(Mismatch { n, k: layout.lead_trim + i, expected: expected.clone(), got: Some(got) });
                return result;
            }
            result.entries_matched += 1;
        }
        if complete {
            result.rows_matched += 1;
        }
        n += 1;
    }
    result
}

/// Validate `A` followed by six digits.
pub fn validate_a_number(a: &str) -> Result<(), OeisError> {
    let ok = a.len() == 7 && a.starts_with('A') && a[1..].bytes().all(|b| b.is_ascii_digit());
    if ok {
        Ok(())
    } else {
        Err(OeisError::BadId(a.to_string()))
    }
}

/// `bNNNNNN.txt` for `ANNNNNN`.
pub fn bfile_name(a: &str) -> String {
    format!("b{}.txt", &a[1..])
}

/// Read a vendored fixture, checking it against the directory's checksum list.
pub fn load_fixture(dir: &Path, a_number: &str) -> Result<BFile, OeisError> {
    validate_a_number(a_number)?;
    let name = bfile_name(a_number);
    let path = dir.join(&name);
    if !path.exists() {
        return Err(OeisError::CacheMiss(a_number.to_string()));
    }
    let bytes = fs::read(&path)?;
    let sums = fs::read_to_string(dir.join(CHECKSUM_FILE))?;
    let want = sums
        .lines()
        .find_map(|l| l.split_once("  ").filter(|(_, f)| f.trim() == name).map(|(h, _)| h.trim().to_string()))
        .ok_or_else(|| OeisError::Checksum(name.clone()))?;
    if sha256_hex(&bytes) != want {
        return Err(OeisError::Checksum(name));
    }
    parse_bfile(&String::from_utf8_lossy(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Where b-files are looked up.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchOptions {
    pub endpoint: String,
    pub cache_dir: PathBuf,
    pub fixtures_dir: Option<PathBuf>,
    pub offline: bool,
}

impl FetchOptions {
    /// Endpoint from the environment when set, else the default.
    pub fn new(cache_dir: PathBuf, fixtures_dir: Option<PathBuf>, offline: bool) -> FetchOptions {
        let endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        FetchOptions { endpoint, cache_dir, fixtures_dir, offline }
    }
}

/// Cache, then fixtures, then (unless offline) the network. Downloads are
/// written to the cache through a temporary file and a rename.
pub fn fetch_bfile(a_number: &str, opts: &FetchOptions) -> Result<BFile, OeisError> {
    validate_a_number(a_number)?;
    let name = bfile_name(a_number);
    let cached = opts.cache_dir.join(&name);
    if cached.exists() {
        return parse_bfile(&fs::read_to_string(&cached)?);
    }
    if let Some(dir) = &opts.fixtures_dir {
        match load_fixture(dir, a_number) {
            Err(OeisError::CacheMiss(_)) => {}
            other => return other,
        }
    }
    if opts.offline {
        return Err(OeisError::CacheMiss(a_number.to_string()));
    }
    let url = format!("{}/{}", opts.endpoint.trim_end_matches('/'), name);
    let text = download(&url)?;
    let parsed = parse_bfile(&text)?;
    fs::create_dir_all(&opts.cache_dir)?;
    let tmp = opts.cache_dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, &text)?;
    fs::rename(&tmp, &cached)?;
    Ok(parsed)
}

fn download(url: &str) -> Result<String, OeisError> {
    let resp = ureq::get(url).call().map_err(|e| match e {
        ureq::Error::StatusCode(code) => OeisError::Status(code),
        other => OeisError::Network(other.to_string()),
    })?;
    if resp.status() != 200 {
        return Err(OeisError::Status(resp.status().as_u16()));
    }
    let mut body = String::new();
    resp.into_body().into_reader().read_to_string(&mut body).map_err(|e| OeisError::Network(e.to_string()))?;
    Ok(body)
}
