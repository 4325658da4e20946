//! Loading labeled datasets from disk.
//!
//! Labels come from a CSV with header `sample_id,class_id`. A dataset is
//! either a single DTF1 stack (samples on the last mode, ids `0..K`), a
//! directory of per-sample `.dtf` files, or a directory of binary PPM (P6)
//! images; directory entries take their file stem as sample id.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::classify::LabeledDataset;
use crate::error::{Error, Result};
use crate::format::{load_dtf, save_dtf};
use crate::mps::FeatureMatrix;
use crate::tensor::DenseTensor;

/// Reads `sample_id,class_id` rows keyed by id.
pub fn read_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    let path = path.as_ref();
    let mut out = BTreeMap::new();
    for (id, class) in read_label_rows(path)? {
        if out.insert(id.clone(), class).is_some() {
            return Err(ingest_err(path, &format!("duplicate sample id {id}")));
        }
    }
    Ok(out)
}

/// Reads `sample_id,class_id` rows in file order.
pub fn read_label_rows(path: impl AsRef<Path>) -> Result<Vec<(String, usize)>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "sample_id" || &headers[1] != "class_id" {
        return Err(ingest_err(path, "labels header must be sample_id,class_id"));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().trim().to_string();
        let class = rec
            .get(1)
            .unwrap_or_default()
            .trim()
            .parse::<usize>()
            .map_err(|e| ingest_err(path, &format!("row {}: {e}", line + 2)))?;
        out.push((id, class));
    }
    Ok(out)
}

pub fn write_labels(path: impl AsRef<Path>, ids: &[String], labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sample_id", "class_id"])?;
    for (id, c) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a DTF1 stack file or a directory of per-sample DTF1 files.
pub fn ingest_dtf(path: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let label_map = read_labels(labels)?;
    if path.is_dir() {
        let files = list_with_extension(path, "dtf")?;
        let loaded = files
            .into_iter()
            .map(|(id, file)| {
                let t = load_dtf(&file).map_err(|e| ingest_err(&file, &e.to_string()))?;
                Ok((id, file, t))
            })
            .collect::<Result<Vec<_>>>()?;
        assemble(loaded, &label_map)
    } else {
        let stack = load_dtf(path).map_err(|e| ingest_err(path, &e.to_string()))?;
        if stack.order() < 2 {
            return Err(ingest_err(path, "a stack needs at least two modes"));
        }
        let k = *stack.shape().last().expect("order >= 2");
        let loaded = (0..k)
            .map(|i| (i.to_string(), path.to_path_buf(), stack.last_mode_slice(i)))
            .collect();
        assemble(loaded, &label_map)
    }
}

/// Loads every `.ppm` (P6, maxval 255) in `dir` as an `H x W x 3` tensor
/// scaled to [0, 1].
pub fn ingest_ppm_dir(dir: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledDataset> {
    let label_map = read_labels(labels)?;
    let files = list_with_extension(dir.as_ref(), "ppm")?;
    let loaded = files
        .into_iter()
        .map(|(id, file)| {
            let bytes = fs::read(&file)?;
            let t = decode_ppm(&bytes).map_err(|m| ingest_err(&file, &m))?;
            Ok((id, file, t))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(loaded, &label_map)
}

/// Decodes a binary P6 PPM with maxval 255 into `H x W x 3`, values / 255.
pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<DenseTensor, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PPM header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P6" {
        return Err(format!("unsupported magic {}", fields[0]));
    }
    let parse = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad {what} {s:?}"))
    };
    let width = parse(&fields[1], "width")?;
    let height = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported, need 255"));
    }
    if width == 0 || height == 0 {
        return Err("empty image".into());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * 3;
    if bytes.len() < pos + need {
        return Err(format!("raster has {} of {need} bytes", bytes.len().saturating_sub(pos)));
    }
    let raster = &bytes[pos..pos + need];
    DenseTensor::from_fn(vec![height, width, 3], |i| {
        raster[3 * (i[0] * width + i[1]) + i[2]] as f64 / 255.0
    })
    .map_err(|e| e.to_string())
}

/// Writes a dataset as one DTF1 stack plus a labels CSV.
pub fn save_dataset(ds: &LabeledDataset, stack_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    save_dtf(stack_path, &ds.stack()?)?;
    write_labels(labels_path, ds.ids(), ds.labels())
}

/// Writes `sample_id,class_id,f0,f1,...`; `class_id` is blank when the
/// matrix carries no labels.
pub fn write_features(path: impl AsRef<Path>, ids: &[String], f: &FeatureMatrix) -> Result<()> {
    if ids.len() != f.rows() {
        return Err(Error::DimensionMismatch(format!("{} ids for {} feature rows", ids.len(), f.rows())));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample_id".to_string(), "class_id".to_string()];
    header.extend((0..f.cols()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (q, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone(), f.labels().map(|l| l[q].to_string()).unwrap_or_default()];
        rec.extend(f.row(q).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_features`]. Labels are attached only
/// when every row has one.
pub fn read_features(path: impl AsRef<Path>) -> Result<(Vec<String>, FeatureMatrix)> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "sample_id" || &headers[1] != "class_id" {
        return Err(ingest_err(path, "feature header must start with sample_id,class_id"));
    }
    let cols = headers.len() - 2;
    let (mut ids, mut labels, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| ingest_err(path, &format!("row {}: bad {what}", line + 2));
        ids.push(rec[0].to_string());
        labels.push(if rec[1].is_empty() {
            None
        } else {
            Some(rec[1].parse::<usize>().map_err(|_| bad("class_id"))?)
        });
        for v in rec.iter().skip(2) {
            values.push(v.parse::<f64>().map_err(|_| bad("feature"))?);
        }
    }
    let f = FeatureMatrix::new(ids.len(), cols, values)?;
    let f = match labels.into_iter().collect::<Option<Vec<_>>>() {
        Some(l) if !l.is_empty() => f.with_labels(l)?,
        _ => f,
    };
    Ok((ids, f))
}

fn list_with_extension(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push((stem, path));
        }
    }
    if out.is_empty() {
        return Err(ingest_err(dir, &format!("no .{ext} files")));
    }
    out.sort();
    Ok(out)
}

fn assemble(
    loaded: Vec<(String, PathBuf, DenseTensor)>,
    label_map: &BTreeMap<String, usize>,
) -> Result<LabeledDataset> {
    let shape = loaded[0].2.shape().to_vec();
    let mut samples = Vec::with_capacity(loaded.len());
    let mut labels = Vec::with_capacity(loaded.len());
    let mut ids = Vec::with_capacity(loaded.len());
    for (id, file, t) in loaded {
        if t.shape() != shape {
            return Err(ingest_err(
                &file,
                &format!("sample {id} has shape {:?}, expected {shape:?}", t.shape()),
            ));
        }
        let class = *label_map
            .get(&id)
            .ok_or_else(|| ingest_err(&file, &format!("no label for sample {id}")))?;
        samples.push(t);
        labels.push(class);
        ids.push(id);
    }
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    LabeledDataset::with_ids(samples, labels, ids, class_count)
}

fn ingest_err(path: &Path, message: &str) -> Error {
    Error::Ingest {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}
