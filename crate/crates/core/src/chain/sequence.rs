use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::space::StateSpace;
use crate::error::{Error, Result};

/// How the kernels `K_1, K_2, ...` are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceRule {
    /// A finite list; indices beyond it are an error, indices `<= 0` reuse the
    /// list cyclically (see [`KernelSequence::extends_backward_naturally`]).
    Explicit(Vec<Kernel>),
    /// `K_i = alphabet[word[(i - 1) mod |word|]]` for every integer `i`.
    Cyclic { alphabet: Vec<Kernel>, word: Vec<usize> },
    /// Independent draws from `alphabet` with probabilities `probs`. Draw `i`
    /// is a pure function of `(seed, i)`, so the sequence is random-access.
    Iid { alphabet: Vec<Kernel>, probs: Vec<f64>, seed: u64 },
}

/// A rule producing kernels on a common state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceDoc", into = "SequenceDoc")]
pub struct KernelSequence {
    space: StateSpace,
    rule: SequenceRule,
    cumulative: Vec<f64>,
}

/// JSON shape of a sequence:
/// `{"kind": "cyclic"|"explicit"|"iid", "kernels": [...], "word": [...], "probs": [...], "seed": u64}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub kind: SequenceKind,
    pub kernels: Vec<Kernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Explicit,
    Cyclic,
    Iid,
}

impl TryFrom<SequenceDoc> for KernelSequence {
    type Error = Error;

    fn try_from(doc: SequenceDoc) -> Result<Self> {
        match doc.kind {
            SequenceKind::Explicit => KernelSequence::explicit(doc.kernels),
            SequenceKind::Cyclic => {
                let word = doc.word.unwrap_or_else(|| (0..doc.kernels.len()).collect());
                KernelSequence::cyclic(doc.kernels, word)
            }
            SequenceKind::Iid => {
                let n = doc.kernels.len();
                let probs = doc.probs.unwrap_or_else(|| vec![1.0 / n as f64; n]);
                KernelSequence::iid(doc.kernels, probs, doc.seed.unwrap_or(0))
            }
        }
    }
}

impl From<KernelSequence> for SequenceDoc {
    fn from(seq: KernelSequence) -> Self {
        match seq.rule {
            SequenceRule::Explicit(kernels) => SequenceDoc {
                kind: SequenceKind::Explicit,
                kernels,
                word: None,
                probs: None,
                seed: None,
            },
            SequenceRule::Cyclic { alphabet, word } => SequenceDoc {
                kind: SequenceKind::Cyclic,
                kernels: alphabet,
                word: Some(word),
                probs: None,
                seed: None,
            },
            SequenceRule::Iid { alphabet, probs, seed } => SequenceDoc {
                kind: SequenceKind::Iid,
                kernels: alphabet,
                word: None,
                probs: Some(probs),
                seed: Some(seed),
            },
        }
    }
}

fn common_space(kernels: &[Kernel]) -> Result<StateSpace> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::InvalidParameter("a sequence needs at least one kernel".into()))?;
    for k in &kernels[1..] {
        first.space().check_same(k.space())?;
    }
    Ok(first.space().clone())
}

impl KernelSequence {
    pub fn explicit(kernels: Vec<Kernel>) -> Result<Self> {
        let space = common_space(&kernels)?;
        Ok(Self { space, rule: SequenceRule::Explicit(kernels), cumulative: Vec::new() })
    }

    pub fn cyclic(alphabet: Vec<Kernel>, word: Vec<usize>) -> Result<Self> {
        let space = common_space(&alphabet)?;
        if word.is_empty() {
            return Err(Error::InvalidParameter("cyclic word must be non-empty".into()));
        }
        if let Some(&bad) = word.iter().find(|&&w| w >= alphabet.len()) {
            return Err(Error::InvalidParameter(format!("word letter {bad} out of range")));
        }
        Ok(Self { space, rule: SequenceRule::Cyclic { alphabet, word }, cumulative: Vec::new() })
    }

    pub fn iid(alphabet: Vec<Kernel>, probs: Vec<f64>, seed: u64) -> Result<Self> {
        let space = common_space(&alphabet)?;
        if probs.len() != alphabet.len() {
            return Err(Error::DimensionMismatch { expected: alphabet.len(), found: probs.len() });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Ok(Self { space, rule: SequenceRule::Iid { alphabet, probs, seed }, cumulative })
    }

    /// `K_i = k` for all `i`.
    pub fn constant(k: Kernel) -> Self {
        let space = k.space().clone();
        Self { space, rule: SequenceRule::Cyclic { alphabet: vec![k], word: vec![0] }, cumulative: Vec::new() }
    }

    /// `K_1 = first, K_2 = second, K_3 = first, ...`
    pub fn alternating(first: Kernel, second: Kernel) -> Result<Self> {
        Self::cyclic(vec![first, second], vec![0, 1])
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn rule(&self) -> &SequenceRule {
        &self.rule
    }

    /// The kernels the rule draws from (the list itself for explicit rules).
    pub fn alphabet(&self) -> &[Kernel] {
        match &self.rule {
            SequenceRule::Explicit(k) => k,
            SequenceRule::Cyclic { alphabet, .. } | SequenceRule::Iid { alphabet, .. } => alphabet,
        }
    }

    /// Explicit lists have no canonical continuation to indices `<= 0`; they
    /// are reused cyclically there.
    pub fn extends_backward_naturally(&self) -> bool {
        !matches!(self.rule, SequenceRule::Explicit(_))
    }

    /// Index into [`Self::alphabet`] of `K_i`, for any integer `i`.
    pub fn letter(&self, i: i64) -> Result<usize> {
        match &self.rule {
            SequenceRule::Explicit(list) => {
                let len = list.len() as i64;
                if i > len {
                    return Err(Error::SequenceExhausted { len: list.len(), index: i });
                }
                Ok((i - 1).rem_euclid(len) as usize)
            }
            SequenceRule::Cyclic { word, .. } => Ok(word[(i - 1).rem_euclid(word.len() as i64) as usize]),
            SequenceRule::Iid { seed, .. } => {
                let (stream, pos) = if i >= 1 { (0u64, (i - 1) as u128) } else { (1u64, (-i) as u128) };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(stream);
                rng.set_word_pos(pos * 2);
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                let idx = self.cumulative.iter().position(|&c| u < c);
                Ok(idx.unwrap_or(self.cumulative.len() - 1))
            }
        }
    }

    /// `K_i`. Index 1 is the first kernel applied.
    pub fn kernel(&self, i: i64) -> Result<&Kernel> {
        let letter = self.letter(i)?;
        Ok(&self.alphabet()[letter])
    }

    /// Letters of `K_{m+1}, ..., K_n`.
    pub fn word(&self, m: i64, n: i64) -> Result<Vec<usize>> {
        (m + 1..=n).map(|i| self.letter(i)).collect()
    }
}
