//! Finite-support datasets, the synthetic box generator and its corruption
//! models, and CSV persistence.
//!
//! Every random operation draws from a ChaCha8 generator seeded with the
//! caller's seed on an operation-specific stream, so results depend only on
//! `(parameters, seed)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the sampling box `[-BOX_HALF_WIDTH, BOX_HALF_WIDTH]^d`.
pub const BOX_HALF_WIDTH: f64 = 10.0;

pub(crate) mod streams {
    pub const GENERATE: u64 = 1;
    pub const FLIP: u64 = 2;
    pub const INJECT: u64 = 3;
    pub const STARTS: u64 = 4;
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Points `x_i`, labels `y_i` in {+1, -1}, and probability weights `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    points: Vec<f64>,
    labels: Vec<f64>,
    weights: Vec<f64>,
}

impl Dataset {
    /// `points` is row-major `n x d`.
    pub fn new(d: usize, points: Vec<f64>, labels: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::invalid("n", "dataset must contain at least one point"));
        }
        if points.len() != n * d {
            return Err(Error::invalid(
                "points",
                format!("expected {} coordinates, got {}", n * d, points.len()),
            ));
        }
        if weights.len() != n {
            return Err(Error::invalid(
                "weights",
                format!("expected {n}, got {}", weights.len()),
            ));
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "points",
                format!("non-finite coordinate in row {}", i / d),
            ));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid(
                "labels",
                format!("label {} at row {i} is not +1 or -1", labels[i]),
            ));
        }
        if let Some(i) = weights.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid(
                "weights",
                format!("weight {} at row {i} is not positive", weights[i]),
            ));
        }
        // naive summation drifts by up to about n * machine epsilon
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12_f64.max(4.0 * n as f64 * f64::EPSILON) {
            return Err(Error::invalid("weights", format!("sum to {total}, not 1")));
        }
        Ok(Dataset {
            n,
            d,
            points,
            labels,
            weights,
        })
    }

    /// Dataset with uniform weights `1/n`.
    pub fn uniform(d: usize, points: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        let weights = uniform_weights(n);
        Self::new(d, points, labels, weights)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64, f64)> + '_ {
        self.points
            .chunks_exact(self.d)
            .zip(self.labels.iter().zip(&self.weights))
            .map(|(x, (&y, &p))| (x, y, p))
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Points uniform on `[-10, 10]^d`, labelled by the sign of the first
/// coordinate. A point whose first coordinate is exactly zero is redrawn.
pub fn generate_separable(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    let mut rng = rng_for(seed, streams::GENERATE);
    let mut points = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        loop {
            for v in row.iter_mut() {
                *v = rng.random_range(-BOX_HALF_WIDTH..BOX_HALF_WIDTH);
            }
            if row[0] != 0.0 {
                break;
            }
        }
        labels.push(row[0].signum());
        points.extend_from_slice(&row);
    }
    Dataset::uniform(d, points, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    FlipLabels,
    InjectAdversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub fraction: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        match self.kind {
            CorruptionKind::FlipLabels => flip_labels(ds, self.fraction, self.seed),
            CorruptionKind::InjectAdversarial => inject_adversarial(ds, self.fraction, self.seed),
        }
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..=0.5).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::invalid("fraction", format!("{fraction} is outside [0, 0.5]")))
    }
}

/// Indices of the `floor(fraction * n)` points selected for corruption,
/// uniformly without replacement.
pub fn corrupted_indices(n: usize, fraction: f64, seed: u64, stream: u64) -> Result<Vec<usize>> {
    check_fraction(fraction)?;
    let count = (fraction * n as f64).floor() as usize;
    let mut rng = rng_for(seed, stream);
    let mut picked = index::sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Rows that [`inject_adversarial`] modifies for the same arguments.
pub fn adversarial_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    corrupted_indices(n, fraction, seed, streams::INJECT)
}

/// Negates the labels of `floor(fraction * n)` randomly chosen points.
pub fn flip_labels(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    let picked = corrupted_indices(ds.n, fraction, seed, streams::FLIP)?;
    let mut out = ds.clone();
    for i in picked {
        out.labels[i] = -out.labels[i];
    }
    Ok(out)
}

/// Moves `floor(fraction * n)` randomly chosen points to `x_1 = -10` and
/// labels them `+1`, so the canonical hyperplane misclassifies them.
pub fn inject_adversarial(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    let picked = adversarial_indices(ds.n, fraction, seed)?;
    let mut out = ds.clone();
    for i in picked {
        out.points[i * out.d] = -BOX_HALF_WIDTH;
        out.labels[i] = 1.0;
    }
    Ok(out)
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x1,...,xd,y,p` with 17 significant digits.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    let mut header: Vec<String> = (1..=ds.d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    header.push("p".into());
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (x, y, p) in ds.iter() {
        let mut fields: Vec<String> = x.iter().map(|&v| fmt_real(v)).collect();
        fields.push(if y > 0.0 { "1".into() } else { "-1".into() });
        fields.push(fmt_real(p));
        writeln!(out, "{}", fields.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a dataset written by [`save_csv`]. The `p` column is optional;
/// without it every point gets weight `1/n`. Row numbers in errors count the
/// header as row 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let header = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let y_col = names
        .iter()
        .position(|&h| h == "y")
        .ok_or_else(|| parse_err(1, "header has no `y` column".into()))?;
    let has_weights = match &names[y_col + 1..] {
        [] => false,
        ["p"] => true,
        _ => return Err(parse_err(1, "expected header `x1,...,xd,y[,p]`".into())),
    };
    let d = y_col;
    if d == 0 {
        return Err(parse_err(1, "header has no feature columns".into()));
    }
    for (j, name) in names[..d].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(parse_err(
                1,
                format!("column {} should be `x{}`, found `{name}`", j + 1, j + 1),
            ));
        }
    }
    let width = names.len();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != width {
            return Err(parse_err(
                row,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let field = |j: usize| -> Result<f64> {
            let s = &record[j];
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(row, format!("cannot parse `{s}` in column {}", j + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(row, format!("non-finite value in column {}", j + 1)))
            }
        };
        for j in 0..d {
            points.push(field(j)?);
        }
        let y = field(d)?;
        if y != 1.0 && y != -1.0 {
            return Err(parse_err(row, format!("label {y} is not +1 or -1")));
        }
        labels.push(y);
        if has_weights {
            let p = field(d + 1)?;
            if p <= 0.0 {
                return Err(parse_err(row, format!("weight {p} is not positive")));
            }
            weights.push(p);
        }
    }
    if labels.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    if !has_weights {
        weights = uniform_weights(labels.len());
    }
    Dataset::new(d, points, labels, weights)
}
