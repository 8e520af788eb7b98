use nalgebra::{DMatrix, DVector};

/// Least-squares coefficients; `rank_deficient` marks fits that fell back to
/// the minimum-norm solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

impl OlsFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.coefficients
    }
}

/// Minimizes `‖y − Xβ‖²` through the SVD of `X`. Singular values below
/// `σ_max · max(n, p) · ε` are treated as zero, which yields the
/// minimum-norm solution when `X` lacks full column rank.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> OlsFit {
    let (n, p) = x.shape();
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = max_sv * n.max(p) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > threshold).count();
    let coefficients = svd
        .solve(y, threshold)
        .unwrap_or_else(|_| DVector::zeros(p));
    if rank < p {
        log::debug!("design of {n}×{p} has rank {rank}; using the minimum-norm solution");
    }
    OlsFit {
        coefficients,
        rank,
        rank_deficient: rank < p,
    }
}

/// `1 − SS_res / SS_tot` with `SS_tot` about the mean of `y`; zero when `y`
/// is constant.
pub fn r2(predicted: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let mean = y.sum() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    let ss_res: f64 = y.iter().zip(predicted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// R² of a fitted model on held-out rows, about the held-out mean.
pub fn r2_out_of_sample(fit: &OlsFit, x_test: &DMatrix<f64>, y_test: &DVector<f64>) -> f64 {
    r2(&fit.predict(x_test), y_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn with_intercept(cols: &[Vec<f64>]) -> DMatrix<f64> {
        let n = cols[0].len();
        DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] })
    }

    #[test]
    fn exact_line() {
        let x = with_intercept(&[vec![0.0, 1.0, 2.0]]);
        let y = DVector::from_vec(vec![0.0, 2.0, 4.0]);
        let fit = ols_fit(&x, &y);
        assert_abs_diff_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2_out_of_sample(&fit, &x, &y), 1.0, epsilon = 1e-12);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn constant_response_has_zero_r2() {
        let x = with_intercept(&[vec![0.0, 1.0, 2.0, 5.0]]);
        let y = DVector::from_element(4, 3.0);
        assert_eq!(r2_out_of_sample(&ols_fit(&x, &y), &x, &y), 0.0);
    }

    #[test]
    fn duplicated_column_falls_back_to_minimum_norm() {
        let c = vec![1.0, 2.0, 3.0, 4.0];
        let x = with_intercept(&[c.clone(), c.clone()]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0, 8.0]);
        let fit = ols_fit(&x, &y);
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 2);
        assert_abs_diff_eq!(fit.coefficients[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.coefficients[2], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn noisy_line_explains_half_the_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut draw = |n: usize| -> (DMatrix<f64>, DVector<f64>) {
            let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
            (with_intercept(&[xs]), DVector::from_vec(ys))
        };
        let (xtr, ytr) = draw(10_000);
        let (xte, yte) = draw(10_000);
        let fit = ols_fit(&xtr, &ytr);
        assert_abs_diff_eq!(r2_out_of_sample(&fit, &xte, &yte), 0.5, epsilon = 0.03);
    }
}
