//! String representations and the distances built on them.
//!
//! Strings are represented by the arithmetic mean of their token vectors; the
//! empty string is represented by a dedicated end-of-string vector. Distances
//! are cosine distances between those means.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::lm::{Alphabet, Outcome, Sym};

#[derive(Debug, thiserror::Error)]
pub enum RepError {
    #[error("no embedding for token {0:?}")]
    MissingToken(String),
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("vector of length {found} where {expected} was expected")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedding file is empty")]
    Empty,
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("representation provider failed: {0}")]
    Provider(String),
}

/// Anything that can hand out a vector per next-symbol outcome.
pub trait RepresentationProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn vector(&self, outcome: Outcome) -> Result<Arc<[f64]>, RepError>;
}

/// Token vectors keyed by surface string.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    eos_vector: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table; without an explicit EOS vector one is derived from the
    /// table mean (see [`default_eos_vector`]).
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>, eos_vector: Option<Vec<f64>>) -> Result<Self, RepError> {
        if dim == 0 {
            return Err(RepError::DimensionMismatch { expected: 1, found: 0 });
        }
        for (token, v) in &vectors {
            if v.len() != dim {
                return Err(RepError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if norm(v) == 0.0 {
                return Err(RepError::Provider(format!("token {token:?} has a zero-norm vector")));
            }
        }
        let eos_vector = match eos_vector {
            Some(v) if v.len() != dim => {
                return Err(RepError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                })
            }
            Some(v) if norm(&v) == 0.0 => return Err(RepError::ZeroNorm),
            Some(v) => v,
            None => {
                // sorted so the mean does not depend on hash order
                let mut keys: Vec<&String> = vectors.keys().collect();
                keys.sort();
                default_eos_vector(dim, keys.into_iter().map(|k| &vectors[k]))
            }
        };
        Ok(Self {
            dim,
            vectors,
            eos_vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn eos_vector(&self) -> &[f64] {
        &self.eos_vector
    }

    /// Resolves vectors against an alphabet once so lookups become indexing.
    /// Tokens without vectors only fail when they are actually requested.
    pub fn bind(&self, alphabet: &Alphabet) -> BoundEmbeddings {
        let vectors = alphabet
            .symbols()
            .iter()
            .map(|s| self.vectors.get(s).map(|v| Arc::from(v.as_slice())))
            .collect();
        BoundEmbeddings {
            dim: self.dim,
            names: alphabet.symbols().to_vec(),
            vectors,
            eos: Arc::from(self.eos_vector.as_slice()),
        }
    }
}

/// A unit vector orthogonal to the table mean: the normalized all-ones
/// direction with the mean component removed, falling back to standard basis
/// vectors when that direction collapses.
pub fn default_eos_vector<'a>(dim: usize, vectors: impl Iterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
        n += 1;
    }
    if n > 0 {
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    let mean_norm = norm(&mean);
    let candidates = std::iter::once(vec![1.0; dim]).chain((0..dim).map(|i| {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        e
    }));
    for mut e in candidates {
        if mean_norm > 0.0 {
            let proj = dot(&e, &mean) / (mean_norm * mean_norm);
            e.iter_mut().zip(&mean).for_each(|(x, m)| *x -= proj * m);
        }
        let n = norm(&e);
        if n > 1e-8 {
            e.iter_mut().for_each(|x| *x /= n);
            return e;
        }
    }
    // dim == 1 with a nonzero mean: nothing is orthogonal, pick the opposite direction
    vec![-mean.first().copied().unwrap_or(1.0).signum(); dim]
}

/// An [`EmbeddingTable`] indexed by the symbol ids of one alphabet.
#[derive(Debug, Clone)]
pub struct BoundEmbeddings {
    dim: usize,
    names: Vec<String>,
    vectors: Vec<Option<Arc<[f64]>>>,
    eos: Arc<[f64]>,
}

impl RepresentationProvider for BoundEmbeddings {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, outcome: Outcome) -> Result<Arc<[f64]>, RepError> {
        match outcome {
            Outcome::Eos => Ok(Arc::clone(&self.eos)),
            Outcome::Symbol(s) => match self.vectors.get(s.index()) {
                Some(Some(v)) => Ok(Arc::clone(v)),
                Some(None) => Err(RepError::MissingToken(self.names[s.index()].clone())),
                None => Err(RepError::MissingToken(format!("#{}", s.0))),
            },
        }
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Mean-pooled representation of `s`; `ε` maps to the EOS vector.
///
/// Token vectors are summed in symbol-id order so the result depends only on
/// the multiset of tokens, bit for bit.
pub fn represent<P: RepresentationProvider + ?Sized>(provider: &P, s: &[Sym]) -> Result<Vec<f64>, RepError> {
    if s.is_empty() {
        return Ok(provider.vector(Outcome::Eos)?.to_vec());
    }
    let mut ids = s.to_vec();
    ids.sort_unstable();
    let mut acc = vec![0.0; provider.dim()];
    for sym in ids {
        let v = provider.vector(Outcome::Symbol(sym))?;
        if v.len() != acc.len() {
            return Err(RepError::DimensionMismatch {
                expected: acc.len(),
                found: v.len(),
            });
        }
        acc.iter_mut().zip(v.iter()).for_each(|(a, x)| *a += x);
    }
    let n = s.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// `1 − x·y / (‖x‖₂‖y‖₂)`, clamped to `[0, 2]` against rounding.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64, RepError> {
    if x.len() != y.len() {
        return Err(RepError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(RepError::ZeroNorm);
    }
    Ok((1.0 - dot(x, y) / (nx * ny)).clamp(0.0, 2.0))
}

/// `x / ‖x‖₂`.
pub fn unit(x: &[f64]) -> Result<Vec<f64>, RepError> {
    let n = norm(x);
    if n == 0.0 {
        return Err(RepError::ZeroNorm);
    }
    Ok(x.iter().map(|v| v / n).collect())
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Elementwise logistic of a symbol's embedding.
pub fn activations<P: RepresentationProvider + ?Sized>(provider: &P, u: Sym) -> Result<Vec<f64>, RepError> {
    Ok(provider.vector(Outcome::Symbol(u))?.iter().map(|&x| logistic(x)).collect())
}

/// Parses the embedding TSV format: `token<TAB>x1 x2 … xd` per line, with an
/// optional `#dim N` first line. A row whose token equals `eos_marker`
/// supplies the EOS vector. Duplicate tokens keep the last row.
pub fn parse_embeddings(text: &str, eos_marker: &str) -> Result<EmbeddingTable, RepError> {
    let mut declared: Option<usize> = None;
    let mut dim: Option<usize> = None;
    let mut vectors = HashMap::new();
    let mut eos = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Some(rest) = trimmed.strip_prefix("#dim") {
                let d = rest.trim().parse::<usize>().map_err(|e| RepError::Parse {
                    line: lineno,
                    message: format!("bad #dim header: {e}"),
                })?;
                declared = Some(d);
                dim = Some(d);
                continue;
            }
        }
        let (token, values) = trimmed.split_once('\t').ok_or_else(|| RepError::Parse {
            line: lineno,
            message: "expected token<TAB>values".into(),
        })?;
        let v = values
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| RepError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(RepError::Parse {
                line: lineno,
                message: "non-finite value".into(),
            });
        }
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(RepError::Parse {
                    line: lineno,
                    message: format!("expected {d} values, found {}", v.len()),
                })
            }
            _ => {}
        }
        if norm(&v) == 0.0 {
            return Err(RepError::Parse {
                line: lineno,
                message: format!("zero vector for token {token:?}"),
            });
        }
        if token == eos_marker {
            eos = Some(v);
        } else if vectors.insert(token.to_string(), v).is_some() {
            log::warn!("line {lineno}: duplicate token {token:?}, keeping the later vector");
        }
    }
    let dim = dim.or(declared).ok_or(RepError::Empty)?;
    if vectors.is_empty() && eos.is_none() {
        return Err(RepError::Empty);
    }
    EmbeddingTable::new(dim, vectors, eos)
}

pub fn load_embeddings(path: impl AsRef<Path>, eos_marker: &str) -> Result<EmbeddingTable, RepError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| RepError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_embeddings(&text, eos_marker)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table3() -> (Alphabet, BoundEmbeddings) {
        let alphabet = Alphabet::new(["a", "b"], "</s>").unwrap();
        let mut v = HashMap::new();
        v.insert("a".to_string(), vec![1.0, 0.0, 0.0]);
        v.insert("b".to_string(), vec![0.0, 1.0, 0.0]);
        let t = EmbeddingTable::new(3, v, Some(vec![0.0, 0.0, 1.0])).unwrap();
        let bound = t.bind(&alphabet);
        (alphabet, bound)
    }

    #[test]
    fn represent_examples() {
        let (_, t) = table3();
        assert_eq!(represent(&t, &[Sym(0), Sym(1)]).unwrap(), vec![0.5, 0.5, 0.0]);
        assert_eq!(represent(&t, &[Sym(1)]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(represent(&t, &[]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(represent(&t, &[Sym(0), Sym(1)]).unwrap(), represent(&t, &[Sym(1), Sym(0)]).unwrap());
    }

    #[test]
    fn default_eos_ignores_insertion_order() {
        let entries: Vec<(String, Vec<f64>)> = (0..50)
            .map(|i| (format!("w{i}"), vec![0.1 * i as f64, 1.0 / (i + 1) as f64, (i as f64).sin()]))
            .collect();
        let forward: HashMap<_, _> = entries.iter().cloned().collect();
        let backward: HashMap<_, _> = entries.iter().rev().cloned().collect();
        let a = EmbeddingTable::new(3, forward, None).unwrap();
        let b = EmbeddingTable::new(3, backward, None).unwrap();
        let bits = |t: &EmbeddingTable| t.eos_vector().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn missing_token_is_named() {
        let alphabet = Alphabet::new(["a", "zebra"], "</s>").unwrap();
        let mut v = HashMap::new();
        v.insert("a".to_string(), vec![1.0]);
        let t = EmbeddingTable::new(1, v, Some(vec![1.0])).unwrap().bind(&alphabet);
        let err = represent(&t, &[Sym(1)]).unwrap_err();
        assert!(err.to_string().contains("zebra"));
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(RepError::ZeroNorm)));
        assert_abs_diff_eq!(
            cosine_distance(&[0.5, 0.5, 0.0], &[1.0, 0.0, 0.0]).unwrap(),
            1.0 - std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn activation_examples() {
        let alphabet = Alphabet::new(["z", "e"], "</s>").unwrap();
        let mut v = HashMap::new();
        v.insert("z".to_string(), vec![1e-100, 0.0, 0.0]);
        v.insert("e".to_string(), vec![1.0, 0.0, 0.0]);
        let t = EmbeddingTable::new(3, v, None).unwrap().bind(&alphabet);
        let a = activations(&t, Sym(0)).unwrap();
        a.iter().for_each(|x| assert_abs_diff_eq!(*x, 0.5));
        let a = activations(&t, Sym(1)).unwrap();
        assert_abs_diff_eq!(a[0], 0.731_058_578_630_004_9, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 0.5);
    }

    #[test]
    fn default_eos_is_orthogonal_unit() {
        let vs = [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let e = default_eos_vector(3, vs.iter());
        assert_abs_diff_eq!(norm(&e), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(&e, &[0.5, 0.5, 0.0]), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 1.0, epsilon = 1e-12);
        // all-ones mean forces the basis-vector fallback
        let vs = [vec![1.0, 1.0]];
        let e = default_eos_vector(2, vs.iter());
        assert_abs_diff_eq!(dot(&e, &[1.0, 1.0]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn parse_file_format() {
        let t = parse_embeddings("#dim 2\nx\t1 0\ny\t0 1\nz\t1 1\n", "</s>").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dim(), 2);
        let t = parse_embeddings("x\t1 0\n</s>\t0 1\n", "</s>").unwrap();
        assert_eq!(t.eos_vector(), &[0.0, 1.0]);
        assert!(matches!(parse_embeddings("", "</s>"), Err(RepError::Empty)));
        let ragged = "a\t1 0\nb\t1 0\nc\t1 0\nd\t1 0\ne\t1 0\nf\t1 0\ng\t1 0 3\n";
        match parse_embeddings(ragged, "</s>") {
            Err(RepError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        let dup = parse_embeddings("a\t1 0\na\t0 1\n", "</s>").unwrap();
        assert_eq!(dup.get("a").unwrap(), &[0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn cosine_properties(
            x in prop::collection::vec(-5.0f64..5.0, 4),
            y in prop::collection::vec(-5.0f64..5.0, 4),
            k in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&x) > 1e-3 && norm(&y) > 1e-3);
            let d = cosine_distance(&x, &y).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert_eq!(d, cosine_distance(&y, &x).unwrap());
            prop_assert!(cosine_distance(&x, &x).unwrap() < 1e-12);
            let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
            prop_assert!((cosine_distance(&scaled, &y).unwrap() - d).abs() < 1e-12);
        }
    }
}
