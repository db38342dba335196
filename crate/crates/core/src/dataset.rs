//! Vector datasets: the `FJLV` binary format, CSV interop, synthetic
//! generators, and zero padding to a power-of-two dimension.
//!
//! Binary layout, little-endian throughout:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `"FJLV"`             |
//! | 4      | 2    | version (`u16`, currently 1) |
//! | 6      | 4    | dimension `n` (`u32`)      |
//! | 10     | 8    | vector count (`u64`)       |
//! | 18     | 8·n·count | `f64` entries, row-major |

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, require_pow2, Error, Result};
use crate::rng::{derive_seed, rng_from_seed, uniform_subset};

pub const DATASET_MAGIC: &[u8; 4] = b"FJLV";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: usize = 18;

/// `count` dense vectors of dimension `n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    n: usize,
    data: Vec<f64>,
}

impl VectorDataset {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("dataset dimension must be positive");
        }
        if !data.len().is_multiple_of(n) {
            return invalid(format!("{} values do not split into rows of {n}", data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(n * rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return invalid(format!("row {i} has length {} (expected {n})", r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.count() as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_bin(&mut &bytes[..])
    }

    pub fn write_bin<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_bin<R: Read>(r: &mut R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated dataset header".into()))?;
        if &header[0..4] != DATASET_MAGIC {
            return Err(Error::Format("bad dataset magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != DATASET_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let n = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(header[10..18].try_into().unwrap()) as usize;
        let len = n.checked_mul(count).ok_or_else(|| Error::Format("dataset size overflows".into()))?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != 8 * len {
            return Err(Error::Format(format!(
                "header promises {count} x {n} values but payload has {} bytes",
                payload.len()
            )));
        }
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(n, data)
    }

    /// One vector per line, no header. Values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.rows() {
            wtr.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut n = None;
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let width = *n.get_or_insert(rec.len());
            if rec.len() != width {
                return Err(Error::Format(format!("csv row {line} has {} fields (expected {width})", rec.len())));
            }
            for field in rec.iter() {
                data.push(field.parse::<f64>().map_err(|e| Error::Format(format!("csv row {line}: {e}")))?);
            }
        }
        match n {
            Some(n) => Self::new(n, data),
            None => invalid("empty csv dataset"),
        }
    }

    /// Reads `path`, choosing CSV for a `.csv` extension and the binary format otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let mut file = BufReader::new(File::open(path)?);
        match DataFormat::for_path(path) {
            DataFormat::Csv => Self::read_csv(file),
            DataFormat::Bin => Self::read_bin(&mut file),
        }
    }

    pub fn save(&self, path: &Path, format: DataFormat) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        match format {
            DataFormat::Csv => self.write_csv(&mut file)?,
            DataFormat::Bin => self.write_bin(&mut file)?,
        }
        file.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    #[default]
    Bin,
    Csv,
}

impl DataFormat {
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Bin,
        }
    }
}

/// Synthetic corpus families. Every generated vector has unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// Uniform on the sphere (normalized Gaussians).
    UnitSphere,
    /// `r` nonzero Gaussian coordinates on a uniform support.
    Sparse(usize),
    /// Gaussian perturbations around a handful of random centers.
    Clustered,
    /// Pairs `(y, y + small noise)`, each normalized.
    NearDuplicate,
}

const CLUSTER_CENTERS: usize = 8;
const CLUSTER_SPREAD: f64 = 0.1;
const DUPLICATE_NOISE: f64 = 1e-3;

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "unit-sphere" => return Ok(DatasetKind::UnitSphere),
            "clustered" => return Ok(DatasetKind::Clustered),
            "near-duplicate" => return Ok(DatasetKind::NearDuplicate),
            _ => {}
        }
        let inner = s
            .strip_prefix("sparse(")
            .and_then(|rest| rest.strip_suffix(')'))
            .or_else(|| s.strip_prefix("sparse:"));
        match inner.map(str::parse::<usize>) {
            Some(Ok(r)) if r >= 1 => Ok(DatasetKind::Sparse(r)),
            _ => invalid(format!(
                "unknown dataset kind '{s}' (expected unit-sphere, sparse(R), clustered, near-duplicate)"
            )),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::UnitSphere => f.write_str("unit-sphere"),
            DatasetKind::Sparse(r) => write!(f, "sparse({r})"),
            DatasetKind::Clustered => f.write_str("clustered"),
            DatasetKind::NearDuplicate => f.write_str("near-duplicate"),
        }
    }
}

fn gaussian(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// A deterministic synthetic dataset. Vector `i` draws from sub-stream `i` of
/// `seed`; shared structure (cluster centers) draws from a separate stream.
pub fn generate(kind: DatasetKind, n: usize, count: usize, seed: u64) -> Result<VectorDataset> {
    if require_pow2(n).is_err() {
        return invalid(format!(
            "dimension {n} is not a power of 2; generate at {} and use `pad`, or pad an existing dataset",
            n.next_power_of_two()
        ));
    }
    if let DatasetKind::Sparse(r) = kind {
        if r > n {
            return invalid(format!("sparsity {r} exceeds dimension {n}"));
        }
    }
    let centers: Vec<Vec<f64>> = if kind == DatasetKind::Clustered {
        let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
        (0..CLUSTER_CENTERS).map(|_| normalized(gaussian(n, &mut rng))).collect()
    } else {
        Vec::new()
    };
    let rows: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            match kind {
                DatasetKind::UnitSphere => normalized(gaussian(n, &mut rng)),
                DatasetKind::Sparse(r) => {
                    let support = uniform_subset(&mut rng, n, r);
                    let mut v = vec![0.0; n];
                    for j in support {
                        v[j] = rng.sample(StandardNormal);
                    }
                    normalized(v)
                }
                DatasetKind::Clustered => {
                    let c = &centers[i % CLUSTER_CENTERS];
                    let noise = gaussian(n, &mut rng);
                    let scale = CLUSTER_SPREAD / (n as f64).sqrt();
                    normalized(c.iter().zip(&noise).map(|(a, e)| a + scale * e).collect())
                }
                DatasetKind::NearDuplicate => {
                    // even rows are bases, odd rows perturb the preceding base
                    let base_seed = derive_seed(seed, (i & !1) as u64);
                    let base = normalized(gaussian(n, &mut rng_from_seed(base_seed)));
                    if i % 2 == 0 {
                        base
                    } else {
                        let noise = gaussian(n, &mut rng);
                        let scale = DUPLICATE_NOISE / (n as f64).sqrt();
                        normalized(base.iter().zip(&noise).map(|(a, e)| a + scale * e).collect())
                    }
                }
            }
        })
        .collect();
    VectorDataset::from_rows(n, &rows)
}

/// Zero-pads every vector to the next power of two. Returns the dataset and
/// the original dimension.
pub fn pad(dataset: &VectorDataset) -> (VectorDataset, usize) {
    let n = dataset.n();
    let padded = n.next_power_of_two();
    if padded == n {
        return (dataset.clone(), n);
    }
    let mut data = Vec::with_capacity(padded * dataset.count());
    for row in dataset.rows() {
        data.extend_from_slice(row);
        data.extend(std::iter::repeat_n(0.0, padded - n));
    }
    (VectorDataset { n: padded, data }, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_and_display() {
        for s in ["unit-sphere", "sparse(3)", "clustered", "near-duplicate"] {
            assert_eq!(s.parse::<DatasetKind>().unwrap().to_string(), s);
        }
        assert_eq!("sparse:4".parse::<DatasetKind>().unwrap(), DatasetKind::Sparse(4));
        assert!("gaussian".parse::<DatasetKind>().is_err());
        assert!("sparse(0)".parse::<DatasetKind>().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(DatasetKind::UnitSphere, 8, 3, 11).unwrap();
        let b = generate(DatasetKind::UnitSphere, 8, 3, 11).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a, generate(DatasetKind::UnitSphere, 8, 3, 12).unwrap());
    }

    #[test]
    fn sparse_vectors_have_bounded_support() {
        let d = generate(DatasetKind::Sparse(2), 8, 5, 1).unwrap();
        for row in d.rows() {
            assert!(row.iter().filter(|v| **v != 0.0).count() <= 2);
        }
    }

    #[test]
    fn all_kinds_have_unit_norm() {
        for kind in [DatasetKind::UnitSphere, DatasetKind::Sparse(5), DatasetKind::Clustered, DatasetKind::NearDuplicate] {
            let d = generate(kind, 64, 20, 3).unwrap();
            for row in d.rows() {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn near_duplicates_are_close() {
        let d = generate(DatasetKind::NearDuplicate, 128, 6, 9).unwrap();
        for pair in 0..3 {
            let dist: f64 = d.row(2 * pair).iter().zip(d.row(2 * pair + 1)).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(dist.sqrt() < 1e-2);
        }
    }

    #[test]
    fn generation_rejects_bad_shapes() {
        assert!(generate(DatasetKind::UnitSphere, 6, 2, 0).is_err());
        assert!(generate(DatasetKind::Sparse(9), 8, 2, 0).is_err());
    }

    #[test]
    fn binary_layout() {
        let d = VectorDataset::new(2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let bytes = d.to_bytes();
        assert_eq!(&bytes[0..4], b"FJLV");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[26..34].try_into().unwrap()), -2.0);
        assert_eq!(bytes.len(), 18 + 32);
        assert_eq!(VectorDataset::from_bytes(&bytes).unwrap(), d);
    }

    #[test]
    fn binary_rejects_corruption() {
        let mut bytes = VectorDataset::new(2, vec![1.0; 4]).unwrap().to_bytes();
        assert!(VectorDataset::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(VectorDataset::from_bytes(&bytes).is_err());
        assert!(VectorDataset::from_bytes(b"FJ").is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let d = generate(DatasetKind::Clustered, 16, 7, 2).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(VectorDataset::read_csv(&buf[..]).unwrap(), d);
        assert!(VectorDataset::read_csv(&b"1,2\n3\n"[..]).is_err());
    }

    #[test]
    fn padding() {
        let d = VectorDataset::new(6, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let (p, original) = pad(&d);
        assert_eq!((p.n(), original, p.count()), (8, 6, 2));
        for (a, b) in d.rows().zip(p.rows()) {
            assert_eq!(&b[..6], a);
            assert_eq!(&b[6..], &[0.0, 0.0]);
            let na: f64 = a.iter().map(|v| v * v).sum();
            let nb: f64 = b.iter().map(|v| v * v).sum();
            assert_eq!(na, nb);
        }
        let square = VectorDataset::new(8, vec![1.0; 16]).unwrap();
        assert_eq!(pad(&square), (square.clone(), 8));
    }
}
