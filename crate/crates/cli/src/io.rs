//! Dataset files.
//!
//! Two matrix formats are understood, one sample per row in both:
//!
//! * CSV with an optional header row. When the header's last column is
//!   named `label`, that column holds integer ground-truth classes.
//! * MVMX, a raw binary format: the magic `MVMX`, then little-endian `u32`
//!   version (1), rows (samples) and columns (features), followed by
//!   `rows × cols` little-endian `f64` values in column-major order.
//!
//! In memory a view is `features × samples`, which is exactly the MVMX
//! payload layout, so MVMX files round-trip bit-for-bit.

use crate::{CliError, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use hamclust::{DenseMatrix, MultiViewDataset};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MVMX_MAGIC: &[u8; 4] = b"MVMX";
pub const MVMX_VERSION: u32 = 1;
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Mvmx,
}

/// One view read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewFile {
    /// `features × samples`
    pub features: DenseMatrix,
    pub labels: Option<Vec<usize>>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Reads a view, picking the format from the file's first bytes.
pub fn read_view(path: &Path) -> Result<ViewFile> {
    let mut head = [0u8; 4];
    let mut f = open(path)?;
    let got = f.read(&mut head).map_err(|e| CliError::io(path, e))?;
    if got == 4 && &head == MVMX_MAGIC {
        read_mvmx(path).map(|features| ViewFile { features, labels: None })
    } else {
        read_csv(path)
    }
}

pub fn read_mvmx(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(open(path)?);
    let bad = |reason: &str| CliError::format(path, reason);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MVMX_MAGIC {
        return Err(bad("missing MVMX magic"));
    }
    let mut header = [0u32; 3];
    r.read_u32_into::<LittleEndian>(&mut header)
        .map_err(|_| bad("truncated header"))?;
    let [version, rows, cols] = header;
    if version != MVMX_VERSION {
        return Err(bad(&format!("unsupported MVMX version {version}")));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut data = vec![0.0; rows * cols];
    r.read_f64_into::<LittleEndian>(&mut data)
        .map_err(|_| bad("payload shorter than header dimensions"))?;
    if r.read(&mut [0u8; 1]).map_err(|e| CliError::io(path, e))? != 0 {
        return Err(bad("trailing bytes after payload"));
    }
    if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
        return Err(bad(&format!(
            "non-finite value at sample {}, feature {}",
            pos % rows.max(1),
            pos / rows.max(1)
        )));
    }
    DenseMatrix::from_vec(cols, rows, data).map_err(|e| bad(&e.to_string()))
}

/// Writes a `features × samples` matrix as MVMX.
pub fn write_mvmx(path: &Path, features: &DenseMatrix) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let dim = |x: usize| u32::try_from(x).map_err(|_| CliError::format(path, "matrix too large for MVMX"));
    w.write_all(MVMX_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(MVMX_VERSION).map_err(io)?;
    w.write_u32::<LittleEndian>(dim(features.cols())?).map_err(io)?;
    w.write_u32::<LittleEndian>(dim(features.rows())?).map_err(io)?;
    for &x in features.as_slice() {
        w.write_f64::<LittleEndian>(x).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn parse_label(path: &Path, line: usize, field: &str) -> Result<usize> {
    field.trim().parse().map_err(|_| {
        CliError::format(
            path,
            format!("line {line}: label `{field}` is not a non-negative integer"),
        )
    })
}

pub fn read_csv(path: &Path) -> Result<ViewFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut records = reader.records().enumerate().peekable();

    let mut has_label = false;
    let mut first_data: Option<csv::StringRecord> = None;
    if let Some((_, rec)) = records.next() {
        let rec = rec.map_err(|e| CliError::format(path, e.to_string()))?;
        if rec.iter().all(|f| f.parse::<f64>().is_ok()) {
            first_data = Some(rec);
        } else {
            has_label = rec.iter().next_back() == Some(LABEL_COLUMN);
        }
    }

    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let rows = first_data
        .into_iter()
        .map(|r| Ok((0, r)))
        .chain(records.map(|(i, r)| r.map(|r| (i, r))));
    for item in rows {
        let (i, rec) = item.map_err(|e: csv::Error| CliError::format(path, e.to_string()))?;
        let line = i + 1;
        let mut fields: Vec<&str> = rec.iter().collect();
        if has_label {
            let l = fields.pop().unwrap_or_default();
            labels.push(parse_label(path, line, l)?);
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(CliError::format(
                    path,
                    format!("line {line}: expected {w} features, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        for f in fields {
            let x: f64 = f
                .parse()
                .map_err(|_| CliError::format(path, format!("line {line}: `{f}` is not a number")))?;
            if !x.is_finite() {
                return Err(CliError::format(path, format!("line {line}: non-finite value `{f}`")));
            }
            values.push(x);
        }
    }
    let d = width.unwrap_or(0);
    if d == 0 {
        return Err(CliError::format(path, "no feature columns"));
    }
    let n = values.len() / d;
    let samples = DenseMatrix::from_vec(n, d, values).map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(ViewFile {
        features: samples.transpose(),
        labels: has_label.then_some(labels),
    })
}

/// Writes one sample per row; a `label` column is appended when labels are
/// given.
pub fn write_csv(path: &Path, features: &DenseMatrix, labels: Option<&[usize]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e.to_string()))?;
    let csv_err = |e: csv::Error| CliError::format(path, e.to_string());
    let mut header: Vec<String> = (0..features.rows()).map(|k| format!("f{k}")).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..features.cols() {
        // `{}` on f64 prints the shortest string that parses back exactly
        let mut row: Vec<String> = (0..features.rows()).map(|k| features.get(k, i).to_string()).collect();
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_view(path: &Path, format: MatrixFormat, features: &DenseMatrix, labels: Option<&[usize]>) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_csv(path, features, labels),
        MatrixFormat::Mvmx => write_mvmx(path, features),
    }
}

/// Reads one integer label per line; a leading `label` header is skipped.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == LABEL_COLUMN) {
            continue;
        }
        out.push(parse_label(path, i + 1, line)?);
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{LABEL_COLUMN}").map_err(io)?;
    for l in labels {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Loads aligned views. Labels come from `labels_path` when given,
/// otherwise from the first view file carrying a `label` column; label
/// columns of different files must agree.
pub fn load_views(paths: &[PathBuf], labels_path: Option<&Path>) -> Result<MultiViewDataset> {
    if paths.is_empty() {
        return Err(CliError::Config {
            field: "view",
            reason: "at least one --view is required".into(),
        });
    }
    let mut views = Vec::with_capacity(paths.len());
    let mut labels: Option<(Vec<usize>, &Path)> = None;
    for path in paths {
        let file = read_view(path)?;
        if let Some(first) = views.first().map(|_: &DenseMatrix| &paths[0]) {
            let (n0, n) = (views[0].cols(), file.features.cols());
            if n != n0 {
                return Err(CliError::format(
                    path,
                    format!("has {n} samples but {} has {n0}", first.display()),
                ));
            }
        }
        if let Some(l) = file.labels {
            match &labels {
                Some((prev, src)) if *prev != l => {
                    return Err(CliError::format(
                        path,
                        format!("label column disagrees with {}", src.display()),
                    ))
                }
                Some(_) => {}
                None => labels = Some((l, path)),
            }
        }
        views.push(file.features);
    }
    let labels = match labels_path {
        Some(p) => Some(read_labels(p)?),
        None => labels.map(|(l, _)| l),
    };
    if let (Some(l), Some(v)) = (&labels, views.first()) {
        if l.len() != v.cols() {
            let src = labels_path.unwrap_or(&paths[0]);
            return Err(CliError::format(
                src,
                format!("{} labels for {} samples", l.len(), v.cols()),
            ));
        }
    }
    Ok(MultiViewDataset::new(views, labels)?)
}
