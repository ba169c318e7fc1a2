//! Datasets: IDX (MNIST) files, seeded synthetic blobs and device shards.

use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Purpose};
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n_dims: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, n_dims: usize, n_classes: usize) -> Result<Self> {
        if n_dims == 0 || features.len() != labels.len() * n_dims {
            return Err(Error::Shape {
                expected: labels.len() * n_dims,
                actual: features.len(),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InputDomain(format!(
                "label {l} outside 0..{n_classes}"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InputDomain("non-finite feature".into()));
        }
        Ok(Self {
            features,
            labels,
            n_dims,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_dims..(i + 1) * self.n_dims]
    }

    /// The first `n` samples (or all of them if there are fewer).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            features: self.features[..n * self.n_dims].to_vec(),
            labels: self.labels[..n].to_vec(),
            n_dims: self.n_dims,
            n_classes: self.n_classes,
        }
    }

    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let tail = Dataset {
            features: self.features[n * self.n_dims..].to_vec(),
            labels: self.labels[n..].to_vec(),
            n_dims: self.n_dims,
            n_classes: self.n_classes,
        };
        (self.head(n), tail)
    }
}

/// Checks the magic number first so a swapped file is reported as such even
/// when it is shorter than the expected header.
fn read_header(path: &Path, bytes: &[u8], magic: u32, header_len: usize) -> Result<()> {
    if bytes.len() >= 4 {
        let found = BigEndian::read_u32(&bytes[0..4]);
        if found != magic {
            return Err(Error::Format {
                path: path.to_path_buf(),
                expected: magic,
                found,
            });
        }
    }
    if bytes.len() < header_len {
        return Err(Error::Length {
            path: path.to_path_buf(),
            needed: header_len,
            found: bytes.len(),
        });
    }
    Ok(())
}

/// Reads an IDX image/label pair. Pixels are scaled to `[0, 1]`; the class
/// count is 10 or one more than the largest label, whichever is larger.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let img = fs::read(images)?;
    read_header(images, &img, IDX_IMAGES_MAGIC, 16)?;
    let count = BigEndian::read_u32(&img[4..8]) as usize;
    let rows = BigEndian::read_u32(&img[8..12]) as usize;
    let cols = BigEndian::read_u32(&img[12..16]) as usize;
    let dims = rows * cols;
    let needed = 16 + count * dims;
    if img.len() < needed {
        return Err(Error::Length {
            path: images.to_path_buf(),
            needed,
            found: img.len(),
        });
    }

    let lab = fs::read(labels)?;
    read_header(labels, &lab, IDX_LABELS_MAGIC, 8)?;
    let n_labels = BigEndian::read_u32(&lab[4..8]) as usize;
    if n_labels != count {
        return Err(Error::Consistency {
            images: count,
            labels: n_labels,
        });
    }
    if lab.len() < 8 + n_labels {
        return Err(Error::Length {
            path: labels.to_path_buf(),
            needed: 8 + n_labels,
            found: lab.len(),
        });
    }

    let features = img[16..needed].iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<usize> = lab[8..8 + n_labels].iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(10);
    Dataset::new(features, labels, dims, n_classes)
}

/// Writes a dataset as an IDX pair. Features are mapped back to bytes with
/// `round(x * 255)`, so `[0, 1]` data on the 1/255 grid round-trips exactly.
pub fn write_idx(data: &Dataset, rows: usize, cols: usize, images: &Path, labels: &Path) -> Result<()> {
    if rows * cols != data.n_dims {
        return Err(Error::Shape {
            expected: data.n_dims,
            actual: rows * cols,
        });
    }
    let mut img = Vec::with_capacity(16 + data.features.len());
    img.write_u32::<BigEndian>(IDX_IMAGES_MAGIC)?;
    img.write_u32::<BigEndian>(data.len() as u32)?;
    img.write_u32::<BigEndian>(rows as u32)?;
    img.write_u32::<BigEndian>(cols as u32)?;
    img.extend(data.features.iter().map(|x| (x * 255.0).round().clamp(0.0, 255.0) as u8));
    fs::File::create(images)?.write_all(&img)?;

    let mut lab = Vec::with_capacity(8 + data.len());
    lab.write_u32::<BigEndian>(IDX_LABELS_MAGIC)?;
    lab.write_u32::<BigEndian>(data.len() as u32)?;
    for &l in &data.labels {
        if l > u8::MAX as usize {
            return Err(Error::InputDomain(format!("label {l} does not fit in a byte")));
        }
        lab.push(l as u8);
    }
    fs::File::create(labels)?.write_all(&lab)?;
    Ok(())
}

/// Gaussian blobs with balanced classes (`label = i mod n_classes`).
///
/// Each class center is a random unit direction times `separation`; samples
/// add unit isotropic noise and the whole matrix is then mapped to `[0, 1]`
/// by one affine transform.
pub fn synthetic(seed: u64, n_samples: usize, n_dims: usize, n_classes: usize, separation: f64) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::Config(format!("separation must be positive, got {separation}")));
    }
    if n_dims == 0 {
        return Err(Error::Config("need at least one feature dimension".into()));
    }
    let mut rng = stream(seed, Purpose::Dataset, 0, 0);
    let mut centers = Vec::with_capacity(n_classes * n_dims);
    for _ in 0..n_classes {
        let dir: Vec<f64> = (0..n_dims).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        centers.extend(dir.iter().map(|x| x / norm * separation));
    }
    let mut features = Vec::with_capacity(n_samples * n_dims);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let c = i % n_classes;
        labels.push(c);
        let center = &centers[c * n_dims..(c + 1) * n_dims];
        features.extend(center.iter().map(|mu| mu + rng.sample::<f64, _>(StandardNormal)));
    }
    let (lo, hi) = features
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = hi - lo;
    if span > 0.0 {
        for x in &mut features {
            *x = (*x - lo) / span;
        }
    }
    Dataset::new(features, labels, n_dims, n_classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    #[default]
    Iid,
    LabelSorted,
}

/// Splits `0..dataset.len()` into `k` disjoint shards covering every
/// sample. The first `len % k` shards get one extra sample.
pub fn shard(dataset: &Dataset, k: usize, scheme: Partition, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cannot split {n} samples into {k} shards"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    match scheme {
        Partition::Iid => order.shuffle(&mut stream(seed, Purpose::Shard, 0, 0)),
        Partition::LabelSorted => order.sort_by_key(|&i| dataset.labels[i]),
    }
    let (base, extra) = (n / k, n % k);
    let mut shards = Vec::with_capacity(k);
    let mut start = 0;
    for s in 0..k {
        let len = base + usize::from(s < extra);
        shards.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(shards)
}
