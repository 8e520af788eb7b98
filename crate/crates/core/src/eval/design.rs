use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::cv::RegressionSpec;
use super::dataset::Stimulus;
use super::EvalError;

/// Predictor values by item id, then by predictor name.
pub type PredictorValues = HashMap<String, HashMap<String, f64>>;

/// A regression design: intercept plus every predictor at every lag, with
/// incomplete rows removed.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub columns: Vec<String>,
    pub item_ids: Vec<String>,
    pub sentence_ids: Vec<String>,
    pub dropped: usize,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    /// Indices of the intercept and of all lags of `predictors`.
    pub fn select(&self, predictors: &[String]) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(i, name)| {
                *i == 0 || {
                    let base = name.split('@').next().unwrap_or(name);
                    predictors.iter().any(|p| p == base)
                }
            })
            .map(|(i, _)| i)
            .collect()
    }
}

fn lagged_name(name: &str, lag: usize) -> String {
    if lag == 0 {
        name.to_string()
    } else {
        format!("{name}@-{lag}")
    }
}

fn predictor_value(s: &Stimulus, name: &str, estimates: &PredictorValues) -> Option<f64> {
    s.baseline(name)
        .or_else(|| estimates.get(&s.item_id).and_then(|m| m.get(name)).copied())
        .or_else(|| s.measurement(name))
        .filter(|v| v.is_finite())
}

/// Builds `X` (intercept, then every predictor of `spec` at lags
/// `0..=spillover_lags`) and `y`. Lag `k` takes the value from the word `k`
/// positions earlier in the same sentence; rows lacking any cell are dropped.
pub fn build_design(spec: &RegressionSpec, stimuli: &[Stimulus], estimates: &PredictorValues) -> Result<Design, EvalError> {
    let predictors = spec.all_predictors();
    let mut columns = vec!["intercept".to_string()];
    for lag in 0..=spec.spillover_lags {
        columns.extend(predictors.iter().map(|p| lagged_name(p, lag)));
    }
    let position: HashMap<(&str, usize), &Stimulus> =
        stimuli.iter().map(|s| ((s.sentence_id.as_str(), s.word_index), s)).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ys = Vec::new();
    let mut item_ids = Vec::new();
    let mut sentence_ids = Vec::new();
    let mut dropped = 0;
    'rows: for s in stimuli {
        let Some(y) = s.measurement(&spec.response).filter(|v| v.is_finite()) else {
            dropped += 1;
            continue;
        };
        let mut row = Vec::with_capacity(columns.len());
        row.push(1.0);
        for lag in 0..=spec.spillover_lags {
            let source = match s.word_index.checked_sub(lag) {
                Some(idx) => position.get(&(s.sentence_id.as_str(), idx)),
                None => None,
            };
            let Some(source) = source else {
                dropped += 1;
                continue 'rows;
            };
            for p in &predictors {
                match predictor_value(source, p, estimates) {
                    Some(v) => row.push(v),
                    None => {
                        dropped += 1;
                        continue 'rows;
                    }
                }
            }
        }
        rows.push(row);
        ys.push(y);
        item_ids.push(s.item_id.clone());
        sentence_ids.push(s.sentence_id.clone());
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyDesign { dropped });
    }
    let x = DMatrix::from_fn(rows.len(), columns.len(), |i, j| rows[i][j]);
    Ok(Design {
        x,
        y: DVector::from_vec(ys),
        columns,
        item_ids,
        sentence_ids,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stimuli() -> Vec<Stimulus> {
        (0..6)
            .map(|i| {
                let mut s = Stimulus::new(format!("i{i}"), "s1", i, "w ".repeat(i + 1), "word", 10.0);
                s.measurements.insert("rt".into(), Some(200.0 + i as f64));
                s
            })
            .collect()
    }

    fn estimates(stimuli: &[Stimulus]) -> PredictorValues {
        stimuli
            .iter()
            .map(|s| (s.item_id.clone(), [("surprisal".to_string(), s.word_index as f64 * 0.5)].into()))
            .collect()
    }

    #[test]
    fn column_counts() {
        let st = stimuli();
        let est = estimates(&st);
        let mut spec = RegressionSpec::new("rt", vec!["surprisal".into()]);
        let d = build_design(&spec, &st, &est).unwrap();
        assert_eq!(d.x.ncols(), 5);
        assert_eq!(d.n_rows(), 6);
        spec.spillover_lags = 2;
        let d = build_design(&spec, &st, &est).unwrap();
        assert_eq!(d.x.ncols(), 13);
        assert_eq!(d.n_rows(), 4);
        assert_eq!(d.dropped, 2);
        assert_eq!(d.columns[5], "target_length@-1");
        // the lagged surprisal comes from the previous word
        let col = d.columns.iter().position(|c| c == "surprisal@-1").unwrap();
        assert_eq!(d.x[(0, col)], 0.5);
        assert_eq!(d.select(&["surprisal".to_string()]).len(), 4);
    }

    #[test]
    fn missing_cells_drop_rows() {
        let mut st = stimuli();
        st[3].measurements.insert("rt".into(), None);
        let mut est = estimates(&st);
        est.remove("i5");
        let spec = RegressionSpec::new("rt", vec!["surprisal".into()]);
        let d = build_design(&spec, &st, &est).unwrap();
        assert_eq!((d.n_rows(), d.dropped), (4, 2));
        let none = RegressionSpec::new("N400", vec!["surprisal".into()]);
        assert!(matches!(build_design(&none, &st, &est), Err(EvalError::EmptyDesign { dropped: 6 })));
    }
}
