//! Procedural 3×3 Tetris-brick images.
//!
//! Each class is a free polyomino: every rotation and reflection, placed at
//! every offset that fits the grid. `O` is the 2×2 square, `I` the 3-cell
//! line, `T` the T-tetromino, `S` pools S/Z and `L` pools L/J, giving
//! 8, 16, 4, 8 and 6 masks for S, L, O, T, I.
//!
//! Randomness comes from `Pcg64` (PCG XSL RR 128/64) seeded with
//! `seed_from_u64`, so a seed fully determines a dataset.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub const GRID: usize = 3;
pub const PIXELS: usize = GRID * GRID;
pub const FOREGROUND: (f64, f64) = (0.7, 1.0);
pub const BACKGROUND: (f64, f64) = (0.0, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BrickClass {
    S,
    L,
    O,
    T,
    I,
}

impl BrickClass {
    pub const ALL: [BrickClass; 5] = [
        BrickClass::S,
        BrickClass::L,
        BrickClass::O,
        BrickClass::T,
        BrickClass::I,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BrickClass::S => "S",
            BrickClass::L => "L",
            BrickClass::O => "O",
            BrickClass::T => "T",
            BrickClass::I => "I",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::domain(format!("unknown brick class `{name}`")))
    }

    fn cells(self) -> &'static [(i32, i32)] {
        match self {
            BrickClass::S => &[(0, 1), (0, 2), (1, 0), (1, 1)],
            BrickClass::L => &[(0, 0), (1, 0), (2, 0), (2, 1)],
            BrickClass::O => &[(0, 0), (0, 1), (1, 0), (1, 1)],
            BrickClass::T => &[(0, 0), (0, 1), (0, 2), (1, 1)],
            BrickClass::I => &[(0, 0), (0, 1), (0, 2)],
        }
    }
}

impl fmt::Display for BrickClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 3×3 binary mask; bit `row * 3 + col` marks a foreground cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mask(u16);

impl Mask {
    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_set(self, row: usize, col: usize) -> bool {
        self.0 & (1 << (row * GRID + col)) != 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..GRID {
            for c in 0..GRID {
                f.write_str(if self.is_set(r, c) { "#" } else { "." })?;
            }
            if r + 1 < GRID {
                f.write_str("/")?;
            }
        }
        Ok(())
    }
}

fn normalize(cells: &mut [(i32, i32)]) {
    let r0 = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let c0 = cells.iter().map(|c| c.1).min().unwrap_or(0);
    for c in cells.iter_mut() {
        *c = (c.0 - r0, c.1 - c0);
    }
    cells.sort_unstable();
}

/// All placements of the class inside the grid, sorted by mask bits.
pub fn enumerate_configurations(class: BrickClass) -> Vec<Mask> {
    let mut masks = BTreeSet::new();
    for reflect in [false, true] {
        for turns in 0..4 {
            let mut cells: Vec<(i32, i32)> = class
                .cells()
                .iter()
                .map(|&(r, c)| {
                    let (mut r, mut c) = if reflect { (r, -c) } else { (r, c) };
                    for _ in 0..turns {
                        (r, c) = (c, -r);
                    }
                    (r, c)
                })
                .collect();
            normalize(&mut cells);
            let h = cells.iter().map(|c| c.0).max().unwrap() + 1;
            let w = cells.iter().map(|c| c.1).max().unwrap() + 1;
            for dr in 0..=(GRID as i32 - h) {
                for dc in 0..=(GRID as i32 - w) {
                    let bits = cells.iter().fold(0u16, |m, &(r, c)| {
                        m | 1 << ((r + dr) as usize * GRID + (c + dc) as usize)
                    });
                    masks.insert(Mask(bits));
                }
            }
        }
    }
    masks.into_iter().collect()
}

pub fn enumerate_configurations_by_name(name: &str) -> Result<Vec<Mask>> {
    Ok(enumerate_configurations(BrickClass::from_name(name)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: usize,
    /// Row-major 3×3 intensities.
    pub pixels: Vec<f64>,
}

impl Sample {
    pub fn image(&self) -> Tensor {
        Tensor::new(Shape::new(GRID, GRID, 1), self.pixels.clone())
            .expect("sample pixels are validated on construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Full,
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub class_names: Vec<String>,
    pub split: SplitTag,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }
}

/// `n` images with labels uniform over the five classes and configurations
/// uniform within each class.
pub fn generate_dataset(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::domain("dataset size must be at least 1"));
    }
    let configs: Vec<Vec<Mask>> = BrickClass::ALL
        .iter()
        .map(|&c| enumerate_configurations(c))
        .collect();
    let mut rng = Pcg64::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let label = rng.gen_range(0..BrickClass::ALL.len());
            let class_configs = &configs[label];
            let mask = class_configs[rng.gen_range(0..class_configs.len())];
            let pixels = (0..PIXELS)
                .map(|i| {
                    let (lo, hi) = if mask.0 & (1 << i) != 0 {
                        FOREGROUND
                    } else {
                        BACKGROUND
                    };
                    rng.gen_range(lo..=hi)
                })
                .collect();
            Sample { label, pixels }
        })
        .collect();
    Ok(Dataset {
        samples,
        class_names: BrickClass::ALL
            .iter()
            .map(|c| c.name().to_string())
            .collect(),
        split: SplitTag::Full,
        seed,
    })
}

/// Shuffles with `seed` and puts the first `⌊fraction·n⌋` samples in train.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = (train_fraction * n as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::domain(format!(
            "splitting {n} samples at {train_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut Pcg64::seed_from_u64(seed));
    let pick = |idx: &[usize], split| Dataset {
        samples: idx.iter().map(|&i| dataset.samples[i].clone()).collect(),
        class_names: dataset.class_names.clone(),
        split,
        seed: dataset.seed,
    };
    Ok((
        pick(&order[..n_train], SplitTag::Train),
        pick(&order[n_train..], SplitTag::Test),
    ))
}

/// Keeps samples of the named classes, relabelled densely in `names` order.
pub fn filter_labels<S: AsRef<str>>(dataset: &Dataset, names: &[S]) -> Result<Dataset> {
    if names.is_empty() {
        return Err(Error::domain("label subset must not be empty"));
    }
    let mut mapping = vec![None; dataset.n_classes()];
    let mut class_names = Vec::with_capacity(names.len());
    for (new, name) in names.iter().enumerate() {
        let name = name.as_ref().trim();
        let old = dataset
            .class_names
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::domain(format!("unknown class `{name}`")))?;
        if mapping[old].is_some() {
            return Err(Error::domain(format!("class `{name}` listed twice")));
        }
        mapping[old] = Some(new);
        class_names.push(dataset.class_names[old].clone());
    }
    Ok(Dataset {
        samples: dataset
            .samples
            .iter()
            .filter_map(|s| {
                mapping[s.label].map(|label| Sample {
                    label,
                    pixels: s.pixels.clone(),
                })
            })
            .collect(),
        class_names,
        split: dataset.split,
        seed: dataset.seed,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    class_names: Vec<String>,
    seed: u64,
    split: SplitTag,
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let header = Header {
        class_names: dataset.class_names.clone(),
        seed: dataset.seed,
        split: dataset.split,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for s in &dataset.samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let io_err = |line: usize, e: std::io::Error| Error::Parse {
        line,
        message: e.to_string(),
    };
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let header: Header =
        serde_json::from_str(&first.map_err(|e| io_err(1, e))?).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
    if header.class_names.is_empty() {
        return Err(Error::Validation {
            line: 1,
            message: "header lists no classes".into(),
        });
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| io_err(lineno, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let invalid = |message: String| Error::Validation {
            line: lineno,
            message,
        };
        if sample.label >= header.class_names.len() {
            return Err(invalid(format!("label {} out of range", sample.label)));
        }
        if sample.pixels.len() != PIXELS {
            return Err(invalid(format!(
                "expected {PIXELS} pixels, got {}",
                sample.pixels.len()
            )));
        }
        if let Some(p) = sample.pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("pixel {p} outside [0, 1]")));
        }
        samples.push(sample);
    }
    Ok(Dataset {
        samples,
        class_names: header.class_names,
        split: header.split,
        seed: header.seed,
    })
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = File::create(path).map_err(io)?;
    write_dataset(dataset, BufWriter::new(file)).map_err(io)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_dataset(BufReader::new(file))
}
