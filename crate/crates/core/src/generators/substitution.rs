use std::sync::Arc;

use super::TAU;
use crate::error::{Error, Result};
use crate::group::{BoxWindow, Embedding, ModulePoint, PointPatch};

const PF_TOL: f64 = 1e-12;
const PF_MAX_ITER: usize = 100_000;
const CONSISTENCY_TOL: f64 = 1e-9;

/// Dominant eigenvalue and left eigenvector of a primitive nonnegative
/// matrix, by power iteration. `counts[i][j]` is the number of letters `i`
/// in the image of letter `j`; the returned lengths satisfy
/// `λ ℓ_j = Σ_i ℓ_i counts[i][j]` and are normalized to `ℓ_0 = 1`.
pub fn pf_lengths(counts: &[Vec<u64>]) -> Result<(Vec<f64>, f64)> {
    let n = counts.len();
    if n == 0 || counts.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("count matrix must be square and nonempty".into()));
    }
    if !is_primitive(counts) {
        return Err(Error::NotPrimitive);
    }
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..PF_MAX_ITER {
        let mut w: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| v[i] * counts[i][j] as f64).sum())
            .collect();
        let new_lambda = w[0] / v[0];
        let s = w[0];
        w.iter_mut().for_each(|x| *x /= s);
        let change = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        let settled = (new_lambda - lambda).abs() <= PF_TOL * new_lambda;
        lambda = new_lambda;
        if change <= PF_TOL && settled {
            return Ok((v, lambda));
        }
    }
    Err(Error::NoConvergence(PF_MAX_ITER))
}

/// Some power of the matrix is strictly positive. Checked on the boolean
/// pattern up to the Wielandt bound `(n−1)² + 1`.
fn is_primitive(counts: &[Vec<u64>]) -> bool {
    let n = counts.len();
    let a: Vec<Vec<bool>> = counts
        .iter()
        .map(|r| r.iter().map(|&c| c > 0).collect())
        .collect();
    let mut p = a.clone();
    for _ in 0..(n - 1) * (n - 1) + 1 {
        if p.iter().all(|r| r.iter().all(|&b| b)) {
            return true;
        }
        p = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| p[i][k] && a[k][j])).collect())
            .collect();
    }
    p.iter().all(|r| r.iter().all(|&b| b))
}

/// A one-dimensional substitution with tile lengths in a rank-k module.
#[derive(Clone, Debug)]
pub struct SubstitutionRule {
    alphabet: Vec<char>,
    words: Vec<Vec<usize>>,
    /// Exact tile lengths over the module basis of `embedding`.
    length_coords: Vec<ModulePoint>,
    lengths: Vec<f64>,
    expansion: f64,
    embedding: Arc<Embedding>,
}

impl SubstitutionRule {
    /// `rules[t] = (letter, image word)`. The exact lengths must agree with
    /// the Perron–Frobenius lengths up to a common positive factor.
    pub fn new(
        rules: &[(char, &str)],
        embedding: Embedding,
        length_coords: Vec<ModulePoint>,
    ) -> Result<Self> {
        let alphabet: Vec<char> = rules.iter().map(|r| r.0).collect();
        let n = alphabet.len();
        if n == 0 || length_coords.len() != n {
            return Err(Error::InvalidInput(
                "need one exact length per letter".into(),
            ));
        }
        if embedding.dim() != 1 {
            return Err(Error::Unsupported("substitutions are one-dimensional".into()));
        }
        let words = rules
            .iter()
            .map(|(_, w)| {
                w.chars()
                    .map(|c| {
                        alphabet.iter().position(|&a| a == c).ok_or_else(|| {
                            Error::InvalidInput(format!("letter {c:?} is not in the alphabet"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if words.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput("empty substitution word".into()));
        }
        let mut counts = vec![vec![0u64; n]; n];
        for (j, w) in words.iter().enumerate() {
            for &i in w {
                counts[i][j] += 1;
            }
        }
        let (pf, expansion) = pf_lengths(&counts)?;
        let lengths: Vec<f64> = length_coords
            .iter()
            .map(|c| embedding.embed(c).map(|x| x[0]))
            .collect::<Result<_>>()?;
        if lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidInput("tile lengths must be positive".into()));
        }
        for (t, (l, p)) in lengths.iter().zip(&pf).enumerate() {
            let residual = (l / lengths[0] - p).abs();
            if residual > CONSISTENCY_TOL {
                return Err(Error::InconsistentLengths { label: t, residual });
            }
        }
        let rule = SubstitutionRule {
            alphabet,
            words,
            length_coords,
            lengths,
            expansion,
            embedding: Arc::new(embedding),
        };
        let residuals = rule.consistency_residuals();
        if let Some((t, &r)) = residuals
            .iter()
            .enumerate()
            .find(|(_, &r)| r >= CONSISTENCY_TOL)
        {
            return Err(Error::InconsistentLengths {
                label: t,
                residual: r,
            });
        }
        Ok(rule)
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length_coords(&self) -> &[ModulePoint] {
        &self.length_coords
    }

    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    pub fn embedding(&self) -> &Arc<Embedding> {
        &self.embedding
    }

    pub fn letter(&self, c: char) -> Option<usize> {
        self.alphabet.iter().position(|&a| a == c)
    }

    /// `|λ ℓ_t − Σ_{s ∈ word(t)} ℓ_s|` per label.
    pub fn consistency_residuals(&self) -> Vec<f64> {
        self.words
            .iter()
            .enumerate()
            .map(|(t, w)| {
                let sum: f64 = w.iter().map(|&s| self.lengths[s]).sum();
                (self.expansion * self.lengths[t] - sum).abs()
            })
            .collect()
    }
}

/// `a → aba, b → aaaa` with lengths `(1, √5 − 1)` over the basis `(1, √5)`;
/// the internal images are the Galois conjugates `(1, −√5)`.
pub fn aba_aaaa_rule() -> SubstitutionRule {
    let s5 = 5f64.sqrt();
    let e = Embedding::with_internal(vec![vec![1.0], vec![s5]], vec![vec![1.0], vec![-s5]])
        .expect("basis is well formed");
    SubstitutionRule::new(
        &[('a', "aba"), ('b', "aaaa")],
        e,
        vec![ModulePoint::new(&[1, 0]), ModulePoint::new(&[-1, 1])],
    )
    .expect("preset substitution is consistent")
}

/// `a → ab, b → a` with lengths `(1, τ − 1)` over the basis `(1, τ)`.
pub fn fibonacci_rule() -> SubstitutionRule {
    let e = Embedding::with_internal(vec![vec![1.0], vec![TAU]], vec![vec![1.0], vec![-1.0 / TAU]])
        .expect("basis is well formed");
    SubstitutionRule::new(
        &[('a', "ab"), ('b', "a")],
        e,
        vec![ModulePoint::new(&[1, 0]), ModulePoint::new(&[-1, 1])],
    )
    .expect("preset substitution is consistent")
}

/// The rule applied `n` times to `seed`.
pub fn substitution_word(rule: &SubstitutionRule, seed: usize, n: usize) -> Vec<usize> {
    let mut w = vec![seed];
    for _ in 0..n {
        w = w.iter().flat_map(|&t| rule.words[t].iter().copied()).collect();
    }
    w
}

/// Left endpoints of the tiles of `σ^n(seed)` laid out from 0, with window
/// `[0, total length]`.
pub fn substitute(rule: &SubstitutionRule, seed: usize, n: usize) -> Result<PointPatch> {
    if seed >= rule.alphabet.len() {
        return Err(Error::InvalidInput(format!("seed label {seed} out of range")));
    }
    let rank = rule.embedding.rank();
    let word = substitution_word(rule, seed, n);
    let mut points = Vec::with_capacity(word.len());
    let mut at = ModulePoint::zero(rank);
    for &t in &word {
        let next = at
            .checked_add(&rule.length_coords[t])
            .ok_or(Error::CoordinateOverflow { iteration: n })?;
        points.push(std::mem::replace(&mut at, next));
    }
    let total = rule.embedding.embed(&at)?[0];
    PointPatch::new(
        rule.embedding.clone(),
        points,
        BoxWindow::interval(0.0, total),
        0.0,
    )
}
