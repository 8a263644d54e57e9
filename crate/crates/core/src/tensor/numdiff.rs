use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `params`.
///
/// Each coordinate is perturbed by `±eps` in turn and restored afterwards.
pub fn finite_diff_grad<F>(mut loss: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::config(format!("eps must be positive, got {eps}")));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let plus = loss(&theta);
        theta[i] = orig - eps;
        let minus = loss(&theta);
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Evaluation { coord: i });
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square() {
        let g = finite_diff_grad(|t| t[0] * t[0], &[3.0], 1e-6).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_gives_zero() {
        let g = finite_diff_grad(|_| 4.5, &[1.0, -2.0, 7.0], 1e-6).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn product_rule() {
        let g = finite_diff_grad(|t| t[0] * t[1], &[2.0, 5.0], 1e-6).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-6);
        assert!((g[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_loss_names_coordinate() {
        let err = finite_diff_grad(|t| if t[1] > 1.0 { f64::NAN } else { 0.0 }, &[0.0, 1.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Evaluation { coord: 1 }));
    }

    #[test]
    fn rejects_nonpositive_eps() {
        assert!(finite_diff_grad(|_| 0.0, &[1.0], 0.0).is_err());
    }

    proptest! {
        // Cubic: f(x) = Σ a_i x_i^3 + b_i x_i^2 + c_i x_i x_{i+1}.
        // Central differences are exact up to eps^2 * |a_i|.
        #[test]
        fn cubic_polynomial_matches_analytic(
            coeffs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..6)
        ) {
            let n = coeffs.len();
            let x: Vec<f64> = coeffs.iter().map(|c| c.3).collect();
            let f = |t: &[f64]| {
                (0..n).map(|i| {
                    let (a, b, c, _) = coeffs[i];
                    a * t[i].powi(3) + b * t[i].powi(2) + c * t[i] * t[(i + 1) % n]
                }).sum::<f64>()
            };
            let mut analytic = vec![0.0; n];
            for i in 0..n {
                let (a, b, c, _) = coeffs[i];
                analytic[i] += 3.0 * a * x[i].powi(2) + 2.0 * b * x[i];
                let j = (i + 1) % n;
                if j == i {
                    analytic[i] += 2.0 * c * x[i];
                } else {
                    analytic[i] += c * x[j];
                    analytic[j] += c * x[i];
                }
            }
            let eps = 1e-4;
            let g = finite_diff_grad(f, &x, eps).unwrap();
            for (num, ana) in g.iter().zip(&analytic) {
                // eps^2 truncation plus cancellation noise ~1e-16/eps
                prop_assert!((num - ana).abs() < 10.0 * eps * eps + 1e-10, "{num} vs {ana}");
            }
        }
    }
}
