//! Text formats for dictionaries, vector sets, labels and result tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use tempfile::NamedTempFile;
use ulrs::harness::RocCurve;
use ulrs::{Detection, Dictionary, Hypothesis};

pub const DICTIONARY_MAGIC: &str = "ULRSDICT";
pub const DICTIONARY_VERSION: u32 = 1;

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = temp_beside(path)?;
    file.write_all(bytes)?;
    file.flush()?;
    persist(file, path)
}

/// Runs `write` against a temporary path beside `path`, then renames the
/// result into place. For writers that insist on opening the file themselves.
pub fn write_atomic_with(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let file = temp_beside(path)?;
    write(file.path())?;
    persist(file, path)
}

fn temp_beside(path: &Path) -> Result<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    NamedTempFile::new_in(dir).with_context(|| format!("cannot create a temporary file in {}", dir.display()))
}

fn persist(file: NamedTempFile, path: &Path) -> Result<()> {
    file.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Shortest text that parses back to exactly `v`; scientific notation for
/// very small or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// `ULRSDICT 1 n K`, then `n` rows of `K` values; row `i` holds coordinate
/// `i` of every atom.
pub fn dictionary_to_string(dict: &Dictionary) -> String {
    let atoms = dict.atoms();
    let mut out = format!("{DICTIONARY_MAGIC} {DICTIONARY_VERSION} {} {}\n", dict.n(), dict.k());
    for row in atoms.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out += &line.join(" ");
        out.push('\n');
    }
    out
}

pub fn parse_dictionary(text: &str) -> Result<Dictionary> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    let [magic, version, n, k] = header[..] else {
        bail!("dictionary header must read '{DICTIONARY_MAGIC} {DICTIONARY_VERSION} <n> <K>'");
    };
    if magic != DICTIONARY_MAGIC {
        bail!("not a dictionary file (expected '{DICTIONARY_MAGIC}', found '{magic}')");
    }
    if version.parse::<u32>().ok() != Some(DICTIONARY_VERSION) {
        bail!("unsupported dictionary version '{version}'");
    }
    let n: usize = n.parse().with_context(|| format!("bad atom length '{n}'"))?;
    let k: usize = k.parse().with_context(|| format!("bad atom count '{k}'"))?;
    let mut atoms = DMatrix::zeros(n, k);
    for i in 0..n {
        let line = lines.next().with_context(|| format!("dictionary has {i} rows, header says {n}"))?;
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().with_context(|| format!("bad value '{v}' in row {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != k {
            bail!("row {} has {} values, header says {k}", i + 1, values.len());
        }
        for (j, v) in values.into_iter().enumerate() {
            atoms[(i, j)] = v;
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        bail!("dictionary has more than the {n} rows its header declares");
    }
    Ok(Dictionary::new(atoms)?)
}

pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    write_atomic(path, dictionary_to_string(dict).as_bytes())
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    parse_dictionary(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// One vector per line, comma separated, no header. Vectors become columns.
pub fn parse_vectors(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>().with_context(|| format!("bad value '{v}' on line {}", line + 1)))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            bail!("non-finite value on line {}", line + 1);
        }
        columns.push(values);
    }
    let Some(first) = columns.first() else {
        bail!("no vectors found");
    };
    let n = first.len();
    let mut m = DMatrix::zeros(n, columns.len());
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            bail!("line {} has {} values, line 1 has {n}", j + 1, col.len());
        }
        m.column_mut(j).copy_from_slice(col);
    }
    Ok(m)
}

pub fn read_vectors(path: &Path) -> Result<DMatrix<f64>> {
    parse_vectors(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn vectors_to_csv(m: &DMatrix<f64>) -> Result<String> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for col in m.column_iter() {
        writer.write_record(col.iter().map(|&v| num(v)))?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

/// One `0` or `1` per line.
pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => bail!("label on line {} must be 0 or 1, found '{other}'", i + 1),
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    parse_labels(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn labels_to_string(labels: &[bool]) -> String {
    labels.iter().map(|&l| if l { "1\n" } else { "0\n" }).collect()
}

/// Header `pf,pd,threshold`.
pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut out = String::from("pf,pd,threshold\n");
    for p in curve.points() {
        let _ = writeln!(out, "{},{},{}", num(p.pf), num(p.pd), num(p.threshold));
    }
    out
}

/// Header `T,esr`.
pub fn sweep_to_csv(sweep: &[(usize, f64)]) -> String {
    let mut out = String::from("T,esr\n");
    for (t, esr) in sweep {
        let _ = writeln!(out, "{t},{}", num(*esr));
    }
    out
}

/// Header `frame,t,threshold,decision`.
pub fn decisions_to_csv(detections: &[Detection]) -> String {
    let mut out = String::from("frame,t,threshold,decision\n");
    for (i, d) in detections.iter().enumerate() {
        let flag = u8::from(d.decision == Hypothesis::H1);
        let _ = writeln!(out, "{i},{},{},{flag}", num(d.statistic_t), num(d.threshold));
    }
    out
}
