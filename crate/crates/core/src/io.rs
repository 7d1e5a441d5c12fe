//! File formats: forests, coding sequences and progeny laws as JSON,
//! population trajectories as CSV.
//!
//! Types are written 1-based; parent indices are 0-based positions in the
//! canonical vertex list.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coding::CodingSequence;
use crate::distributions::{decimal_to_rational, Lattice, Pmf, ProgenyDistribution};
use crate::forest::{EdgeLengthForest, TypedForest};
use crate::trajectory::PopulationTrajectory;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error("invalid {what}: {field}: {message}")]
    Invalid { what: &'static str, field: String, message: String },
}

fn invalid(what: &'static str, field: impl Into<String>, message: impl ToString) -> IoError {
    IoError::Invalid { what, field: field.into(), message: message.to_string() }
}

fn parse_json<'a, T: Deserialize<'a>>(what: &'static str, text: &'a str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse { what, message: e.to_string() })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable");
    out.push('\n');
    out
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(file_err)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestJson {
    d: usize,
    roots: Vec<usize>,
    vertices: Vec<VertexJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexJson {
    #[serde(rename = "type")]
    ty: usize,
    parent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lifetime: Option<f64>,
}

/// A forest file: discrete when no vertex carries a lifetime.
#[derive(Debug, Clone, PartialEq)]
pub enum ForestFile {
    Discrete(TypedForest),
    EdgeLength(EdgeLengthForest),
}

impl ForestFile {
    pub fn skeleton(&self) -> &TypedForest {
        match self {
            ForestFile::Discrete(f) => f,
            ForestFile::EdgeLength(f) => f.skeleton(),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            ForestFile::Discrete(f) => forest_to_json(f, None),
            ForestFile::EdgeLength(f) => forest_to_json(f.skeleton(), Some(f.lifetimes())),
        }
    }
}

pub fn forest_to_json(forest: &TypedForest, lifetimes: Option<&[f64]>) -> String {
    let vertices = forest
        .vertices()
        .iter()
        .enumerate()
        .map(|(k, v)| VertexJson { ty: v.ty + 1, parent: v.parent, lifetime: lifetimes.map(|l| l[k]) })
        .collect();
    to_json(&ForestJson { d: forest.d(), roots: forest.roots().to_vec(), vertices })
}

pub fn parse_forest(text: &str) -> Result<ForestFile, IoError> {
    const WHAT: &str = "forest";
    let raw: ForestJson = parse_json(WHAT, text)?;
    let d = raw.d;
    if d == 0 {
        return Err(invalid(WHAT, "d", "must be positive"));
    }
    if raw.roots.len() != d {
        return Err(invalid(WHAT, "roots", format!("expected {d} entries, got {}", raw.roots.len())));
    }
    let mut records = Vec::with_capacity(raw.vertices.len());
    for (k, v) in raw.vertices.iter().enumerate() {
        if v.ty == 0 || v.ty > d {
            return Err(invalid(WHAT, format!("vertices[{k}].type"), format!("{} not in 1..={d}", v.ty)));
        }
        if let Some(p) = v.parent {
            if p >= raw.vertices.len() {
                return Err(invalid(WHAT, format!("vertices[{k}].parent"), format!("{p} out of range")));
            }
        }
        records.push((v.ty - 1, v.parent));
    }
    let forest = TypedForest::new(d, &records).map_err(|e| invalid(WHAT, "vertices", e))?;
    if forest.roots() != raw.roots.as_slice() {
        return Err(invalid(WHAT, "roots", format!("declared {:?}, vertices give {:?}", raw.roots, forest.roots())));
    }
    let with_lifetime = raw.vertices.iter().filter(|v| v.lifetime.is_some()).count();
    if with_lifetime == 0 {
        return Ok(ForestFile::Discrete(forest));
    }
    if let Some(k) = raw.vertices.iter().position(|v| v.lifetime.is_none()) {
        return Err(invalid(WHAT, format!("vertices[{k}].lifetime"), "missing while other vertices have one"));
    }
    let lifetimes = raw.vertices.iter().map(|v| v.lifetime.unwrap()).collect();
    EdgeLengthForest::new(forest, lifetimes)
        .map(ForestFile::EdgeLength)
        .map_err(|e| invalid(WHAT, "lifetime", e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodingJson {
    d: usize,
    streams: Vec<Vec<Vec<i64>>>,
}

pub fn coding_to_json(x: &CodingSequence) -> String {
    to_json(&CodingJson { d: x.d(), streams: x.streams().to_vec() })
}

pub fn parse_coding(text: &str) -> Result<CodingSequence, IoError> {
    let raw: CodingJson = parse_json("coding sequence", text)?;
    CodingSequence::new(raw.d, raw.streams).map_err(|e| invalid("coding sequence", "streams", e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgenyJson {
    d: usize,
    nu: Vec<Vec<AtomJson>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomJson {
    k: Vec<i64>,
    p: Probability,
}

/// A probability written as a JSON number or as a string (`"0.25"`, `"1/3"`).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    fn to_rational(&self) -> Option<BigRational> {
        match self {
            // shortest round-trip formatting recovers the decimal literal
            Probability::Number(p) => decimal_to_rational(&format!("{p}")),
            Probability::Text(s) => match s.split_once('/') {
                Some((n, d)) => {
                    let (n, d) = (decimal_to_rational(n)?, decimal_to_rational(d)?);
                    if num_traits::Zero::is_zero(&d) {
                        None
                    } else {
                        Some(n / d)
                    }
                }
                None => decimal_to_rational(s),
            },
        }
    }
}

/// A loaded progeny law. `exact` is present when the probabilities, read as
/// exact rationals, sum to one for every type.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgenyFile {
    pub nu: ProgenyDistribution,
    pub exact: Option<ProgenyDistribution<BigRational>>,
}

pub fn parse_progeny(text: &str) -> Result<ProgenyFile, IoError> {
    const WHAT: &str = "progeny law";
    let raw: ProgenyJson = parse_json(WHAT, text)?;
    let d = raw.d;
    if d == 0 {
        return Err(invalid(WHAT, "d", "must be positive"));
    }
    if raw.nu.len() != d {
        return Err(invalid(WHAT, "nu", format!("expected {d} laws, got {}", raw.nu.len())));
    }
    let mut exact_laws = Vec::with_capacity(d);
    for (i, atoms) in raw.nu.iter().enumerate() {
        let mut law = Pmf::empty(d);
        for (a, atom) in atoms.iter().enumerate() {
            let field = format!("nu[{i}][{a}]");
            if atom.k.len() != d {
                return Err(invalid(WHAT, format!("{field}.k"), format!("expected {d} entries")));
            }
            let p = atom.p.to_rational().ok_or_else(|| invalid(WHAT, format!("{field}.p"), "not a number"))?;
            law.add(atom.k.clone(), p);
        }
        exact_laws.push(law);
    }
    let float_laws: Vec<Pmf<f64>> = exact_laws
        .iter()
        .map(|law: &Pmf<BigRational>| {
            Pmf::from_pairs(d, law.iter().map(|(k, p)| (k.clone(), p.to_f64().unwrap_or(f64::NAN))))
        })
        .collect();
    let nu = ProgenyDistribution::new(float_laws).map_err(|e| invalid(WHAT, "nu", e))?;
    let exact = if exact_laws.iter().all(|law| law.total() == BigRational::one()) {
        ProgenyDistribution::new(exact_laws).ok()
    } else {
        None
    };
    Ok(ProgenyFile { nu, exact })
}

/// Writes `ν` with float probabilities.
pub fn progeny_to_json(nu: &ProgenyDistribution) -> String {
    #[derive(Serialize)]
    struct Atom<'a> {
        k: &'a Lattice,
        p: f64,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        d: usize,
        nu: Vec<Vec<Atom<'a>>>,
    }
    let laws = nu.laws().iter().map(|law| law.iter().map(|(k, &p)| Atom { k, p }).collect()).collect();
    to_json(&Out { d: nu.d(), nu: laws })
}

/// A `d x d` integer matrix, as a bare array of rows.
pub fn parse_matrix(text: &str, d: usize) -> Result<Vec<Lattice>, IoError> {
    const WHAT: &str = "matrix";
    let rows: Vec<Lattice> = parse_json(WHAT, text)?;
    if rows.len() != d {
        return Err(invalid(WHAT, "rows", format!("expected {d}, got {}", rows.len())));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(invalid(WHAT, format!("[{i}]"), format!("expected {d} entries")));
    }
    Ok(rows)
}

/// Columns `t, Z_1..Z_d, Z_11..Z_dd`, one row per event, first row at `t = 0`.
pub fn trajectory_csv(path: &PopulationTrajectory) -> String {
    let d = path.d();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("Z_{i}")));
    for i in 1..=d {
        header.extend((1..=d).map(|j| format!("Z_{i}{j}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    for e in &path.events {
        let mut row = vec![format!("{}", e.t)];
        row.extend(e.z.iter().map(i64::to_string));
        row.extend(e.zmat.iter().flatten().map(i64::to_string));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::edge::tests::figure_forest;

    #[test]
    fn forest_round_trip_is_byte_stable() {
        let f = figure_forest();
        let text = ForestFile::EdgeLength(f.clone()).to_json();
        let back = parse_forest(&text).unwrap();
        assert_eq!(back, ForestFile::EdgeLength(f));
        assert_eq!(back.to_json(), text);
        let discrete = forest_to_json(back.skeleton(), None);
        assert!(!discrete.contains("lifetime"));
        assert!(matches!(parse_forest(&discrete).unwrap(), ForestFile::Discrete(_)));
    }

    #[test]
    fn forest_errors_name_the_field() {
        let bad_type = r#"{"d": 1, "roots": [1], "vertices": [{"type": 2, "parent": null}]}"#;
        assert!(parse_forest(bad_type).unwrap_err().to_string().contains("vertices[0].type"));
        let bad_roots = r#"{"d": 1, "roots": [2], "vertices": [{"type": 1, "parent": null}]}"#;
        assert!(parse_forest(bad_roots).unwrap_err().to_string().contains("roots"));
        let partial = r#"{"d": 1, "roots": [2], "vertices": [
            {"type": 1, "parent": null, "lifetime": 1.0}, {"type": 1, "parent": null}]}"#;
        assert!(parse_forest(partial).unwrap_err().to_string().contains("vertices[1].lifetime"));
        let syntax = "{\"d\": 1,\n \"roots\": [1,]}";
        assert!(parse_forest(syntax).unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn progeny_law_exact_and_float() {
        let text = r#"{"d": 2, "nu": [
            [{"k": [0, 0], "p": "1/3"}, {"k": [0, 1], "p": "2/3"}],
            [{"k": [0, 0], "p": 0.5}, {"k": [1, 0], "p": 0.5}]]}"#;
        let file = parse_progeny(text).unwrap();
        let exact = file.exact.unwrap();
        assert_eq!(exact.law(0).get(&[0, 0]), BigRational::new(1.into(), 3.into()));
        assert!((file.nu.law(0).get(&[0, 1]) - 2.0 / 3.0).abs() < 1e-15);
        let rounded = r#"{"d": 1, "nu": [[{"k": [0], "p": 0.3333333333333333}, {"k": [2], "p": 0.6666666666666666}]]}"#;
        assert!(parse_progeny(rounded).unwrap().exact.is_none());
    }

    #[test]
    fn progeny_law_round_trips_through_json() {
        let text = r#"{"d": 1, "nu": [[{"k": [0], "p": 0.25}, {"k": [2], "p": 0.75}]]}"#;
        let file = parse_progeny(text).unwrap();
        assert_eq!(parse_progeny(&progeny_to_json(&file.nu)).unwrap(), file);
    }

    #[test]
    fn trajectory_csv_layout() {
        let path = crate::forest::alive_trajectory(&figure_forest());
        let csv = trajectory_csv(&path);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,Z_1,Z_2,Z_11,Z_12,Z_21,Z_22");
        assert_eq!(lines.next().unwrap(), "0,2,2,2,0,0,2");
        assert_eq!(csv.lines().count(), path.events.len() + 1);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("ramify-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let target = dir.join("out.json");
        write_atomic(&target, b"one").unwrap();
        write_atomic(&target, b"two").unwrap();
        assert_eq!(read_text(&target).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
