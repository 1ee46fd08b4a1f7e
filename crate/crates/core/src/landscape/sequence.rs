use std::fmt;

use serde::{Deserialize, Serialize};

use super::LandscapeError;

/// The 20 canonical amino acids, one-letter codes in lexicographic order.
pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Ordered set of distinct single-character symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    /// Single-symbol alphabets are accepted: they describe a degenerate
    /// search space with exactly one sequence per length.
    pub fn new(symbols: &str) -> Result<Self, LandscapeError> {
        let symbols: Vec<char> = symbols.chars().collect();
        if symbols.is_empty() {
            return Err(LandscapeError::InvalidAlphabet("alphabet is empty".into()));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(LandscapeError::InvalidAlphabet("more than 255 symbols".into()));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(LandscapeError::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
            if c.is_whitespace() || *c == ',' {
                return Err(LandscapeError::InvalidAlphabet(format!("unusable symbol {c:?}")));
            }
        }
        Ok(Self { symbols })
    }

    pub fn amino_acids() -> Self {
        Self::new(AMINO_ACIDS).expect("canonical alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, idx: u8) -> char {
        self.symbols[idx as usize]
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u8)
    }

    pub fn as_string(&self) -> String {
        self.symbols.iter().collect()
    }

    /// Parses a symbol string into a sequence over this alphabet.
    pub fn parse(&self, text: &str) -> Result<Sequence, LandscapeError> {
        text.chars()
            .map(|c| {
                self.index_of(c)
                    .ok_or_else(|| LandscapeError::InvalidSequence(format!("symbol {c:?} not in alphabet")))
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Sequence)
    }

    pub fn render(&self, s: &Sequence) -> String {
        s.0.iter().map(|&i| self.symbol(i)).collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::amino_acids()
    }
}

impl TryFrom<String> for Alphabet {
    type Error = LandscapeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(&s)
    }
}

impl From<Alphabet> for String {
    fn from(a: Alphabet) -> String {
        a.as_string()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

/// A sequence stored as indices into its alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence(Vec<u8>);

impl Sequence {
    pub fn from_indices(indices: Vec<u8>, alphabet: &Alphabet) -> Result<Self, LandscapeError> {
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= alphabet.len()) {
            return Err(LandscapeError::InvalidSequence(format!(
                "symbol index {bad} outside alphabet of size {}",
                alphabet.len()
            )));
        }
        Ok(Self(indices))
    }

    #[cfg(test)]
    pub(crate) fn from_indices_unchecked(indices: Vec<u8>) -> Self {
        Self(indices)
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub(crate) fn indices_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hamming(&self, other: &Sequence) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count() + self.0.len().abs_diff(other.0.len())
    }

    /// Appends the position-major one-hot encoding to `out`.
    pub fn one_hot_into(&self, alphabet_len: usize, out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + self.0.len() * alphabet_len, 0.0);
        for (pos, &s) in self.0.iter().enumerate() {
            out[start + pos * alphabet_len + s as usize] = 1.0;
        }
    }

    pub fn check(&self, alphabet: &Alphabet, length: usize) -> Result<(), LandscapeError> {
        if self.0.len() != length {
            return Err(LandscapeError::InvalidSequence(format!(
                "length {} but landscape expects {length}",
                self.0.len()
            )));
        }
        if self.0.iter().any(|&i| i as usize >= alphabet.len()) {
            return Err(LandscapeError::InvalidSequence("symbol outside alphabet".into()));
        }
        Ok(())
    }
}
