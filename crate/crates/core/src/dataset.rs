//! Point datasets and their file formats.
//!
//! On disk a dataset is either CSV with header `x1,...,xd[,y]`, or a binary
//! file: magic bytes, domain/label flags, `d` and `N` as little-endian u64,
//! then row-major 64-bit floats (labels appended when present).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::poly::DomainKind;

const BINARY_MAGIC: &[u8; 8] = b"SGDATA01";

/// Unlabeled points in `R^d` or `{-1,+1}^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    domain: DomainKind,
    dimension: usize,
    rows: Vec<f64>,
}

impl Dataset {
    pub fn new(domain: DomainKind, dimension: usize, rows: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if rows.len() % dimension != 0 {
            return Err(Error::ShapeMismatch(format!(
                "row data of length {} is not a multiple of dimension {}",
                rows.len(),
                dimension
            )));
        }
        Ok(Self {
            domain,
            dimension,
            rows,
        })
    }

    pub fn empty(domain: DomainKind, dimension: usize) -> Self {
        Self {
            domain,
            dimension,
            rows: Vec::new(),
        }
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.rows.chunks_exact(self.dimension)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: point.len(),
            });
        }
        self.rows.extend_from_slice(point);
        Ok(())
    }

    pub fn set_point(&mut self, i: usize, point: &[f64]) {
        assert_eq!(point.len(), self.dimension);
        self.rows[i * self.dimension..(i + 1) * self.dimension].copy_from_slice(point);
    }

    /// Dataset containing the rows at `indices`, in order.
    pub fn subset(&self, indices: impl Iterator<Item = usize>) -> Self {
        let mut rows = Vec::new();
        for i in indices {
            rows.extend_from_slice(self.point(i));
        }
        Self {
            domain: self.domain,
            dimension: self.dimension,
            rows,
        }
    }

    /// Split into a prefix of `n` rows and the remainder.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let cut = n.min(self.len()) * self.dimension;
        (
            Self {
                domain: self.domain,
                dimension: self.dimension,
                rows: self.rows[..cut].to_vec(),
            },
            Self {
                domain: self.domain,
                dimension: self.dimension,
                rows: self.rows[cut..].to_vec(),
            },
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv_impl(path, self, None)
    }

    pub fn read_csv(path: &Path, domain: DomainKind) -> Result<Self> {
        let (data, labels) = read_csv_impl(path, domain)?;
        if labels.is_some() {
            return Err(Error::Format("expected unlabeled CSV, found y column".into()));
        }
        Ok(data)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_binary_impl(path, self, None)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let (data, labels) = read_binary_impl(path)?;
        if labels.is_some() {
            return Err(Error::Format("expected unlabeled file, found labels".into()));
        }
        Ok(data)
    }
}

/// Points with `{-1,+1}` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    points: Dataset,
    labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(points: Dataset, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        for &y in &labels {
            if y != 1.0 && y != -1.0 {
                return Err(Error::NonBinaryLabels(y));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &Dataset {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points.dimension()
    }

    pub fn domain(&self) -> DomainKind {
        self.points.domain()
    }

    pub fn subset(&self, indices: impl Iterator<Item = usize> + Clone) -> Self {
        let points = self.points.subset(indices.clone());
        let labels = indices.map(|i| self.labels[i]).collect();
        Self { points, labels }
    }

    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let cut = n.min(self.len());
        let (a, b) = self.points.split_at(cut);
        (
            Self {
                points: a,
                labels: self.labels[..cut].to_vec(),
            },
            Self {
                points: b,
                labels: self.labels[cut..].to_vec(),
            },
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv_impl(path, &self.points, Some(&self.labels))
    }

    pub fn read_csv(path: &Path, domain: DomainKind) -> Result<Self> {
        let (points, labels) = read_csv_impl(path, domain)?;
        let labels = labels.ok_or_else(|| Error::Format("missing y column".into()))?;
        Self::new(points, labels)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_binary_impl(path, &self.points, Some(&self.labels))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let (points, labels) = read_binary_impl(path)?;
        let labels = labels.ok_or_else(|| Error::Format("missing labels".into()))?;
        Self::new(points, labels)
    }
}

fn write_csv_impl(path: &Path, data: &Dataset, labels: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = (1..=data.dimension()).map(|i| format!("x{i}")).collect();
    if labels.is_some() {
        header.push("y".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, p) in data.points().enumerate() {
        let mut rec: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        if let Some(ys) = labels {
            rec.push(format!("{}", ys[i]));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv_impl(path: &Path, domain: DomainKind) -> Result<(Dataset, Option<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = r.headers().map_err(csv_err)?.clone();
    let labeled = header.iter().last() == Some("y");
    let d = if labeled { header.len() - 1 } else { header.len() };
    if d == 0 {
        return Err(Error::Format("no coordinate columns".into()));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Format(format!(
                "row with {} fields, expected {}",
                rec.len(),
                header.len()
            )));
        }
        for v in rec.iter().take(d) {
            rows.push(parse_float(v)?);
        }
        if labeled {
            labels.push(parse_float(rec.get(d).unwrap())?);
        }
    }
    let data = Dataset::new(domain, d, rows)?;
    Ok((data, labeled.then_some(labels)))
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("bad float {s:?}: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn write_binary_impl(path: &Path, data: &Dataset, labels: Option<&[f64]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_u8(match data.domain() {
        DomainKind::Real => 0,
        DomainKind::Hypercube => 1,
    })?;
    w.write_u8(labels.is_some() as u8)?;
    w.write_u64::<LittleEndian>(data.dimension() as u64)?;
    w.write_u64::<LittleEndian>(data.len() as u64)?;
    for v in &data.rows {
        w.write_f64::<LittleEndian>(*v)?;
    }
    if let Some(ys) = labels {
        for y in ys {
            w.write_f64::<LittleEndian>(*y)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_binary_impl(path: &Path) -> Result<(Dataset, Option<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let domain = match r.read_u8()? {
        0 => DomainKind::Real,
        1 => DomainKind::Hypercube,
        other => return Err(Error::Format(format!("bad domain tag {other}"))),
    };
    let labeled = match r.read_u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad label flag {other}"))),
    };
    let d = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let mut rows = vec![0.0f64; n * d];
    for v in rows.iter_mut() {
        *v = r.read_f64::<LittleEndian>()?;
    }
    let labels = if labeled {
        let mut ys = vec![0.0f64; n];
        for y in ys.iter_mut() {
            *y = r.read_f64::<LittleEndian>()?;
        }
        Some(ys)
    } else {
        None
    };
    Ok((Dataset::new(domain, d, rows)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledDataset {
        let points = Dataset::new(
            DomainKind::Real,
            2,
            vec![0.5, -1.0, 2.25, 3.5, -0.125, 0.0],
        )
        .unwrap();
        LabeledDataset::new(points, vec![1.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn rejects_nonbinary_labels() {
        let points = Dataset::new(DomainKind::Real, 1, vec![0.0]).unwrap();
        assert!(matches!(
            LabeledDataset::new(points, vec![0.5]),
            Err(Error::NonBinaryLabels(_))
        ));
    }

    #[test]
    fn csv_round_trip_labeled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = sample();
        data.write_csv(&path).unwrap();
        let back = LabeledDataset::read_csv(&path, DomainKind::Real).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn binary_round_trip_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        let data = sample().points().clone();
        data.write_binary(&path).unwrap();
        let back = Dataset::read_binary(&path).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOTMAGIC________").unwrap();
        assert!(matches!(Dataset::read_binary(&path), Err(Error::Format(_))));
    }
}
