//! Datasets: MNIST IDX ingestion, a synthetic two-class set, and batching.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SnnError};
use crate::net::Shape3;
use crate::seed::{self, Stream};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Images with pixels in `[0, 1]` stored contiguously, plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    shape: Shape3,
    images: Vec<f64>,
    labels: Vec<usize>,
    classes: usize,
    split: Split,
}

impl Dataset {
    pub fn new(
        shape: Shape3,
        images: Vec<f64>,
        labels: Vec<usize>,
        classes: usize,
        split: Split,
    ) -> Result<Self> {
        let image_len: usize = shape.iter().product();
        if image_len == 0 {
            return Err(SnnError::Empty("image shape"));
        }
        if images.len() != image_len * labels.len() {
            return Err(SnnError::Dimension {
                context: "dataset pixels",
                expected: image_len * labels.len(),
                actual: images.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(SnnError::OutOfRange {
                name: "label",
                value: bad as f64,
                expected: "label < class count",
            });
        }
        if let Some(&p) = images.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(SnnError::OutOfRange {
                name: "pixel",
                value: p,
                expected: "0 <= pixel <= 1",
            });
        }
        Ok(Dataset {
            shape,
            images,
            labels,
            classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn image_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.image_len();
        &self.images[i * n..(i + 1) * n]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The same samples tagged with another split.
    pub fn with_split(mut self, split: Split) -> Dataset {
        self.split = split;
        self
    }

    /// The first `n` samples (or all of them if fewer).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            shape: self.shape,
            images: self.images[..n * self.image_len()].to_vec(),
            labels: self.labels[..n].to_vec(),
            classes: self.classes,
            split: self.split,
        }
    }
}

struct Reader<'a> {
    file: String,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, offset: usize, reason: impl Into<String>) -> SnnError {
        SnnError::Parse {
            file: self.file.clone(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.error(self.pos, format!("file ends before {what}")))?;
        let v = u32::from_be_bytes(chunk.try_into().expect("4-byte slice"));
        self.pos = end;
        Ok(v)
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let at = self.pos;
        let magic = self.u32("magic number")?;
        if magic != expected {
            return Err(self.error(
                at,
                format!("magic {magic:#010x}, expected {expected:#010x}"),
            ));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(self.error(
                self.bytes.len(),
                format!(
                    "truncated payload: {len} bytes expected from offset {}, {available} present",
                    self.pos
                ),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| SnnError::io(path, e))
}

/// Parses an IDX image file and its label file into a dataset with
/// pixels scaled by 1/255 and ten classes.
pub fn load_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<Dataset> {
    let image_bytes = read_file(images_path)?;
    let label_bytes = read_file(labels_path)?;
    parse_idx(
        &images_path.display().to_string(),
        &image_bytes,
        &labels_path.display().to_string(),
        &label_bytes,
        split,
    )
}

/// In-memory form of [`load_idx`]; names are used in error messages only.
pub fn parse_idx(
    image_name: &str,
    image_bytes: &[u8],
    label_name: &str,
    label_bytes: &[u8],
    split: Split,
) -> Result<Dataset> {
    let mut img = Reader {
        file: image_name.to_string(),
        bytes: image_bytes,
        pos: 0,
    };
    img.magic(IMAGE_MAGIC)?;
    let count = img.u32("image count")? as usize;
    let rows = img.u32("row count")? as usize;
    let cols = img.u32("column count")? as usize;
    let pixels = img.payload(count * rows * cols)?;

    let mut lab = Reader {
        file: label_name.to_string(),
        bytes: label_bytes,
        pos: 0,
    };
    lab.magic(LABEL_MAGIC)?;
    let count_at = lab.pos;
    let label_count = lab.u32("label count")? as usize;
    if label_count != count {
        return Err(lab.error(count_at, format!("{label_count} labels for {count} images")));
    }
    let raw_labels = lab.payload(count)?;
    let labels = raw_labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l < 10 {
                Ok(l as usize)
            } else {
                Err(lab.error(lab.pos - count + i, format!("label {l} is not a digit")))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let images = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    Dataset::new([1, rows, cols], images, labels, 10, split)
}

/// Side length of the synthetic images.
pub const SYNTHETIC_SIDE: usize = 4;

/// Pixels that fire for class 0 and class 1 respectively.
const PROTOTYPES: [[usize; 4]; 2] = [[0, 1, 4, 5], [10, 11, 14, 15]];

/// Deterministic two-class set of 4x4 images: each class lights its own
/// four prototype pixels at 1.0 and a random subset of the others at 0.1.
///
/// The prototypes are disjoint, so a layer wiring each prototype to its
/// class output separates the classes perfectly.
pub fn synthetic_two_class(n: usize, rng_seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(SnnError::OutOfRange {
            name: "n",
            value: n as f64,
            expected: "n >= 2",
        });
    }
    let len = SYNTHETIC_SIDE * SYNTHETIC_SIDE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(rng_seed, Stream::Data, 0, 0));
    let mut images = vec![0.0; n * len];
    let mut labels = Vec::with_capacity(n);
    for (i, img) in images.chunks_exact_mut(len).enumerate() {
        let class = i % 2;
        for (p, v) in img.iter_mut().enumerate() {
            *v = if PROTOTYPES[class].contains(&p) {
                1.0
            } else if rng.gen_bool(0.5) {
                0.1
            } else {
                0.0
            };
        }
        labels.push(class);
    }
    Dataset::new(
        [1, SYNTHETIC_SIDE, SYNTHETIC_SIDE],
        images,
        labels,
        2,
        Split::Train,
    )
}

/// Index batches for one epoch: a seeded shuffle of `0..len`, chunked,
/// with the final short batch kept.
pub fn batches(
    len: usize,
    batch_size: usize,
    shuffle_seed: u64,
    epoch: usize,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(SnnError::OutOfRange {
            name: "batch_size",
            value: 0.0,
            expected: "batch_size >= 1",
        });
    }
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed::derive(shuffle_seed, Stream::Shuffle, epoch as u64, 0));
    order.shuffle(&mut rng);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
