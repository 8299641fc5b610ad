//! Finite patches: partial maps from lattice points to letters.

use std::collections::BTreeMap;

use crate::error::CoreError;
use crate::lattice::{DilationDatum, LatticePoint};

/// Finite alphabet with stable letter indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new(letters: Vec<String>) -> Result<Self, CoreError> {
        if letters.is_empty() {
            return Err(CoreError::Invalid("alphabet must be non-empty".into()));
        }
        if letters.len() > 250 {
            return Err(CoreError::Invalid("alphabet too large".into()));
        }
        for l in &letters {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(CoreError::Invalid(format!(
                    "letter `{l}` must be a nonempty alphanumeric identifier"
                )));
            }
        }
        let mut sorted = letters.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != letters.len() {
            return Err(CoreError::Invalid("duplicate letters in alphabet".into()));
        }
        Ok(Alphabet { letters })
    }

    pub fn of(names: &[&str]) -> Self {
        Alphabet::new(names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn name(&self, idx: u8) -> &str {
        &self.letters[idx as usize]
    }

    pub fn index(&self, name: &str) -> Option<u8> {
        self.letters.iter().position(|l| l == name).map(|i| i as u8)
    }

    pub fn names(&self) -> &[String] {
        &self.letters
    }
}

/// A finite patch: letters assigned to a finite set of lattice points. The
/// support is kept in coordinate-lexicographic order so equality and
/// hashing are deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Patch {
    support: Vec<LatticePoint>,
    letters: Vec<u8>,
}

impl Patch {
    pub fn empty() -> Self {
        Patch {
            support: vec![],
            letters: vec![],
        }
    }

    pub fn from_pairs(mut pairs: Vec<(LatticePoint, u8)>) -> Result<Self, CoreError> {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CoreError::Invalid(format!(
                    "duplicate support point {:?}",
                    w[0].0 .0
                )));
            }
        }
        let (support, letters) = pairs.into_iter().unzip();
        Ok(Patch { support, letters })
    }

    /// Support and letters in matching sorted order, zero-copy views.
    pub fn support(&self) -> &[LatticePoint] {
        &self.support
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// The one-point patch P_a at the identity.
    pub fn single(dim: usize, letter: u8) -> Self {
        Patch {
            support: vec![LatticePoint::origin(dim)],
            letters: vec![letter],
        }
    }

    pub fn get(&self, p: &LatticePoint) -> Option<u8> {
        self.support
            .binary_search(p)
            .ok()
            .map(|i| self.letters[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, u8)> {
        self.support.iter().zip(self.letters.iter().copied())
    }

    /// Left translation: support gamma * x, letters carried along, i.e.
    /// (gamma . P)(gamma * x) = P(x).
    pub fn translate(&self, datum: &DilationDatum, gamma: &LatticePoint) -> Result<Patch, CoreError> {
        let mut pairs = Vec::with_capacity(self.len());
        for (p, l) in self.iter() {
            pairs.push((datum.mul_points(gamma, p)?, l));
        }
        Patch::from_pairs(pairs)
    }

    /// Restriction to the given set.
    pub fn restrict(&self, set: &[LatticePoint]) -> Patch {
        let mut pairs = Vec::new();
        for p in set {
            if let Some(l) = self.get(p) {
                pairs.push((p.clone(), l));
            }
        }
        Patch::from_pairs(pairs).expect("restriction of a valid patch")
    }

    /// Occurrence counts per letter.
    pub fn letter_counts(&self, alphabet_len: usize) -> Vec<u64> {
        let mut counts = vec![0u64; alphabet_len];
        for &l in &self.letters {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Group the support by all coordinates except `axis` and report the
    /// extrema of the `axis` coordinate per fiber (in multiples).
    pub fn fiber_extrema(&self, axis: usize) -> Vec<(Vec<i64>, i64, i64)> {
        let mut fibers: BTreeMap<Vec<i64>, (i64, i64)> = BTreeMap::new();
        for p in &self.support {
            let mut key = p.0.clone();
            let v = key.remove(axis);
            fibers
                .entry(key)
                .and_modify(|(lo, hi)| {
                    *lo = (*lo).min(v);
                    *hi = (*hi).max(v);
                })
                .or_insert((v, v));
        }
        fibers
            .into_iter()
            .map(|(k, (lo, hi))| (k, lo, hi))
            .collect()
    }
}
