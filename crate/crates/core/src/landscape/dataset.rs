use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sequence::{Alphabet, Sequence};
use super::toy::ContinuousInput;
use super::LandscapeError;
use crate::csvfmt::{fmt_f64, parse_f64, write_rows};
use crate::nn::{Features, InputShape};
use crate::seed::rng_for;

/// Homogeneous collection of input points.
#[derive(Debug, Clone, PartialEq)]
pub enum Inputs {
    Continuous(Vec<ContinuousInput>),
    Sequence { alphabet: Alphabet, seqs: Vec<Sequence> },
}

/// What a model consumes: the continuous plane or fixed-length sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    Continuous,
    Sequence { length: usize, alphabet: Alphabet },
}

impl InputKind {
    pub fn shape(&self) -> InputShape {
        match self {
            InputKind::Continuous => InputShape::Vector { len: 2 },
            InputKind::Sequence { length, alphabet } => InputShape::OneHot {
                length: *length,
                alphabet: alphabet.len(),
            },
        }
    }
}

impl Inputs {
    pub fn len(&self) -> usize {
        match self {
            Inputs::Continuous(v) => v.len(),
            Inputs::Sequence { seqs, .. } => seqs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Kind of the inputs; `None` for an empty sequence collection, whose
    /// length is undefined.
    pub fn kind(&self) -> Option<InputKind> {
        match self {
            Inputs::Continuous(_) => Some(InputKind::Continuous),
            Inputs::Sequence { alphabet, seqs } => seqs.first().map(|s| InputKind::Sequence {
                length: s.len(),
                alphabet: alphabet.clone(),
            }),
        }
    }

    /// Network features: raw coordinates, or position-major one-hot codes.
    pub fn features(&self) -> Features {
        match self {
            Inputs::Continuous(v) => {
                let data = v.iter().flat_map(|x| x.coords()).collect();
                Features::new(data, 2).expect("two columns")
            }
            Inputs::Sequence { alphabet, seqs } => {
                let dim = seqs.first().map_or(0, |s| s.len()) * alphabet.len();
                let mut data = Vec::with_capacity(dim * seqs.len());
                for s in seqs {
                    s.one_hot_into(alphabet.len(), &mut data);
                }
                Features::new(data, dim.max(1)).unwrap_or_else(|_| Features::new(Vec::new(), 1).expect("empty"))
            }
        }
    }

    pub fn select(&self, idx: &[usize]) -> Inputs {
        match self {
            Inputs::Continuous(v) => Inputs::Continuous(idx.iter().map(|&i| v[i]).collect()),
            Inputs::Sequence { alphabet, seqs } => Inputs::Sequence {
                alphabet: alphabet.clone(),
                seqs: idx.iter().map(|&i| seqs[i].clone()).collect(),
            },
        }
    }

    fn validate(&self) -> Result<(), LandscapeError> {
        if let Inputs::Sequence { alphabet, seqs } = self {
            if let Some(first) = seqs.first() {
                for s in seqs {
                    s.check(alphabet, first.len())?;
                }
            }
        }
        Ok(())
    }

    /// Text form of point `i` as it appears in CSV output.
    pub fn render(&self, i: usize) -> Vec<String> {
        match self {
            Inputs::Continuous(v) => vec![fmt_f64(v[i].x0()), fmt_f64(v[i].x1())],
            Inputs::Sequence { alphabet, seqs } => vec![alphabet.render(&seqs[i])],
        }
    }

    fn hasher(&self) -> Sha256 {
        let mut h = Sha256::new();
        if let Inputs::Sequence { alphabet, .. } = self {
            h.update(alphabet.as_string().as_bytes());
            h.update(b"\n");
        }
        for i in 0..self.len() {
            h.update(self.render(i).join(",").as_bytes());
            h.update(b"\n");
        }
        h
    }

    /// SHA-256 over the CSV rendering of the inputs.
    pub fn fingerprint(&self) -> String {
        hex(self.hasher())
    }

    fn header(&self) -> &'static [&'static str] {
        match self {
            Inputs::Continuous(_) => &["x0", "x1"],
            Inputs::Sequence { .. } => &["sequence"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    inputs: Inputs,
    labels: Vec<f64>,
    meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(inputs: Inputs, labels: Vec<f64>, meta: DatasetMeta) -> Result<Self, LandscapeError> {
        if inputs.len() != labels.len() {
            return Err(LandscapeError::LengthMismatch {
                inputs: inputs.len(),
                labels: labels.len(),
            });
        }
        inputs.validate()?;
        Ok(Self { inputs, labels, meta })
    }

    pub fn inputs(&self) -> &Inputs {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn kind(&self) -> Option<InputKind> {
        self.inputs.kind()
    }

    pub fn features(&self) -> Features {
        self.inputs.features()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            inputs: self.inputs.select(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Same inputs with different labels (e.g. a second property).
    pub fn relabel(&self, labels: Vec<f64>) -> Result<LabeledDataset, LandscapeError> {
        LabeledDataset::new(self.inputs.clone(), labels, self.meta.clone())
    }

    /// Random split into `(train, holdout)` with `round(frac * n)` holdout
    /// points.
    pub fn split(&self, holdout_fraction: f64, seed: u64) -> (LabeledDataset, LabeledDataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng_for(seed, "dataset-split", 0));
        let n_hold = ((holdout_fraction * self.len() as f64).round() as usize).min(self.len());
        let (hold, train) = idx.split_at(n_hold);
        (self.subset(train), self.subset(hold))
    }

    /// SHA-256 over the CSV rendering of inputs and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = self.inputs.hasher();
        h.update(b"y");
        for y in &self.labels {
            h.update(fmt_f64(*y).as_bytes());
            h.update(b"\n");
        }
        hex(h)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), LandscapeError> {
        let mut header = self.inputs.header().to_vec();
        header.push("y");
        write_rows(
            path,
            &header,
            (0..self.len()).map(|i| {
                let mut r = self.inputs.render(i);
                r.push(fmt_f64(self.labels[i]));
                r
            }),
        )?;
        Ok(())
    }

    pub fn read_continuous_csv(path: &Path, meta: DatasetMeta) -> Result<Self, LandscapeError> {
        let rows = read_table(path, &["x0", "x1", "y"])?;
        let mut pts = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for r in rows {
            let num = |s: &str| parse_f64(s).map_err(LandscapeError::Parse);
            pts.push(ContinuousInput::new(num(&r[0])?, num(&r[1])?)?);
            labels.push(num(&r[2])?);
        }
        Self::new(Inputs::Continuous(pts), labels, meta)
    }

    pub fn read_sequence_csv(path: &Path, alphabet: &Alphabet, meta: DatasetMeta) -> Result<Self, LandscapeError> {
        let rows = read_table(path, &["sequence", "y"])?;
        let mut seqs = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for r in rows {
            seqs.push(alphabet.parse(&r[0])?);
            labels.push(parse_f64(&r[1]).map_err(LandscapeError::Parse)?);
        }
        Self::new(
            Inputs::Sequence {
                alphabet: alphabet.clone(),
                seqs,
            },
            labels,
            meta,
        )
    }
}

fn hex(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, LandscapeError> {
    let mut r = csv::Reader::from_path(path)?;
    let got = r.headers()?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(LandscapeError::Parse(format!(
            "{}: expected header {header:?}, found {got:?}",
            path.display()
        )));
    }
    r.records().collect::<Result<Vec<_>, _>>().map_err(Into::into)
}
