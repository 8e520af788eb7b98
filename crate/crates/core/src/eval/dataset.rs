use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Per-million frequency assumed for words missing from the frequency table.
pub const OOV_FREQUENCY_PER_MILLION: f64 = 0.1;

/// Predictors every stimulus carries without any language model.
pub const BASELINE_PREDICTORS: [&str; 3] = ["target_length", "log_frequency", "context_length"];

const REQUIRED: [&str; 5] = ["item_id", "sentence_id", "word_index", "context", "target"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub item_id: String,
    pub sentence_id: String,
    pub word_index: usize,
    pub context: String,
    pub target: String,
    /// Characters.
    pub target_length: usize,
    /// Whitespace-separated words.
    pub context_length: usize,
    /// Occurrences per million words.
    pub frequency: f64,
    pub measurements: BTreeMap<String, Option<f64>>,
}

impl Stimulus {
    pub fn new(
        item_id: impl Into<String>,
        sentence_id: impl Into<String>,
        word_index: usize,
        context: impl Into<String>,
        target: impl Into<String>,
        frequency: f64,
    ) -> Self {
        let context = context.into();
        let target = target.into();
        Self {
            item_id: item_id.into(),
            sentence_id: sentence_id.into(),
            word_index,
            target_length: target.chars().count(),
            context_length: context.split_whitespace().count(),
            context,
            target,
            frequency,
            measurements: BTreeMap::new(),
        }
    }

    /// Value of a built-in baseline predictor, if `name` is one.
    pub fn baseline(&self, name: &str) -> Option<f64> {
        match name {
            "target_length" => Some(self.target_length as f64),
            "log_frequency" => Some((self.frequency + 1.0).ln()),
            "context_length" => Some(self.context_length as f64),
            _ => None,
        }
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.get(name).copied().flatten()
    }
}

/// Word → occurrences per million.
#[derive(Debug, Clone, Default)]
pub struct Frequencies {
    table: HashMap<String, f64>,
}

impl Frequencies {
    pub fn new(table: HashMap<String, f64>) -> Self {
        Self { table }
    }

    /// Exact match first, then the lowercased word, then the OOV floor.
    pub fn lookup(&self, word: &str) -> f64 {
        self.table
            .get(word)
            .or_else(|| self.table.get(&word.to_lowercase()))
            .copied()
            .unwrap_or(OOV_FREQUENCY_PER_MILLION)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Parses `word<TAB>count_per_million` lines; blank lines are skipped.
pub fn parse_frequencies(text: &str, path: &str) -> Result<Frequencies, EvalError> {
    let mut table = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| EvalError::Row {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        let (word, value) = line
            .split_once('\t')
            .ok_or_else(|| row_err("expected word<TAB>count_per_million".into()))?;
        let value: f64 = match value.trim().parse() {
            Ok(v) => v,
            // tolerate a header row
            Err(_) if i == 0 => continue,
            Err(e) => return Err(row_err(format!("bad frequency {value:?}: {e}"))),
        };
        if !(value.is_finite() && value >= 0.0) {
            return Err(row_err(format!("frequency must be finite and non-negative, got {value}")));
        }
        table.insert(word.to_string(), value);
    }
    Ok(Frequencies { table })
}

pub fn load_frequencies(path: impl AsRef<Path>) -> Result<Frequencies, EvalError> {
    let path = path.as_ref();
    let text = read(path)?;
    parse_frequencies(&text, &path.display().to_string())
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a stimulus TSV. The first five columns are fixed; every further
/// column is a measurement where an empty cell means missing.
pub fn parse_dataset(text: &str, path: &str, frequencies: &Frequencies) -> Result<Vec<Stimulus>, EvalError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| EvalError::Schema {
        path: path.to_string(),
        message: "empty dataset".into(),
    })?;
    let columns: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|c| !columns.contains(c)).collect();
    if !missing.is_empty() {
        return Err(EvalError::Schema {
            path: path.to_string(),
            message: format!("missing columns: {}", missing.join(", ")),
        });
    }
    let pos = |name: &str| columns.iter().position(|c| *c == name).expect("checked above");
    let (id_col, sent_col, idx_col, ctx_col, tgt_col) =
        (pos("item_id"), pos("sentence_id"), pos("word_index"), pos("context"), pos("target"));
    let measure_cols: Vec<(usize, &str)> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !REQUIRED.contains(c))
        .map(|(i, c)| (i, *c))
        .collect();

    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let row_err = |message: String| EvalError::Row {
            path: path.to_string(),
            line: lineno,
            message,
        };
        let cells: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if cells.len() != columns.len() {
            return Err(row_err(format!("expected {} cells, found {}", columns.len(), cells.len())));
        }
        let word_index: usize = cells[idx_col]
            .trim()
            .parse()
            .map_err(|e| row_err(format!("bad word_index {:?}: {e}", cells[idx_col])))?;
        let target = cells[tgt_col].trim();
        if target.is_empty() || target.split_whitespace().count() != 1 {
            return Err(row_err(format!("target must be a single word, got {target:?}")));
        }
        let item_id = cells[id_col].trim();
        if !seen.insert(item_id.to_string()) {
            return Err(row_err(format!("duplicate item_id {item_id:?}")));
        }
        let mut s = Stimulus::new(
            item_id,
            cells[sent_col].trim(),
            word_index,
            cells[ctx_col].trim(),
            target,
            frequencies.lookup(target),
        );
        for &(col, name) in &measure_cols {
            let cell = cells[col].trim();
            let value = if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .map_err(|e| row_err(format!("bad {name} value {cell:?}: {e}")))?,
                )
            };
            s.measurements.insert(name.to_string(), value);
        }
        out.push(s);
    }
    Ok(out)
}

/// Loads a stimulus TSV, attaching frequencies from `frequency_path` when given.
pub fn load_dataset(path: impl AsRef<Path>, frequency_path: Option<&Path>) -> Result<Vec<Stimulus>, EvalError> {
    let path = path.as_ref();
    let freqs = match frequency_path {
        Some(p) => load_frequencies(p)?,
        None => Frequencies::default(),
    };
    parse_dataset(&read(path)?, &path.display().to_string(), &freqs)
}

/// Laplace-smoothed cloze probability of `target` and the entropy (nats) of
/// the smoothed response distribution over observed responses plus the target.
pub fn laplace_cloze(counts: &BTreeMap<String, u64>, target: &str, alpha: f64) -> (f64, f64) {
    let mut support: BTreeMap<&str, f64> = counts.iter().map(|(k, &v)| (k.as_str(), v as f64)).collect();
    support.entry(target).or_insert(0.0);
    let total: f64 = support.values().sum();
    let denom = total + alpha * support.len() as f64;
    let p = |c: f64| (c + alpha) / denom;
    let entropy = support
        .values()
        .map(|&c| p(c))
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum();
    (p(support[target]), entropy)
}
