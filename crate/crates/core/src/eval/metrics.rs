use crate::error::{ensure_finite, invalid, shape, Result};

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(shape(format!(
            "{} targets vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    ensure_finite(y, "targets")?;
    ensure_finite(y_hat, "predictions")
}

/// Root mean squared error.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    if y.is_empty() {
        return Err(invalid("rmse of empty vectors"));
    }
    let mse = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt())
}

/// Lin's concordance correlation coefficient with population moments.
///
/// When both series are constant the denominator vanishes; the result is
/// then 1 if the series are identical and 0 otherwise.
pub fn ccc(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    if y.len() < 2 {
        return Err(invalid("ccc needs at least two points"));
    }
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mp = y_hat.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vy = 0.0;
    let mut vp = 0.0;
    for (a, b) in y.iter().zip(y_hat) {
        let (da, db) = (a - my, b - mp);
        cov += da * db;
        vy += da * da;
        vp += db * db;
    }
    let denom = vy / n + vp / n + (my - mp) * (my - mp);
    if denom == 0.0 {
        return Ok(if y == y_hat { 1.0 } else { 0.0 });
    }
    Ok((2.0 * cov / n / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ccc_examples() {
        let y = [-1.5, 0.5, -0.5, 1.5];
        assert_eq!(ccc(&y, &y).unwrap(), 1.0);
        assert_eq!(ccc(&y, &[0.7; 4]).unwrap(), 0.0);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_eq!(ccc(&y, &neg).unwrap(), -1.0);
        assert_eq!(ccc(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(ccc(&[2.0, 2.0], &[3.0, 3.0]).unwrap(), 0.0);
        assert!(ccc(&[1.0], &[1.0]).is_err());
        assert!(ccc(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn ccc_is_symmetric_and_bounded(
            pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..40)
        ) {
            let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = ccc(&y, &p).unwrap();
            prop_assert_eq!(a, ccc(&p, &y).unwrap());
            prop_assert!((-1.0..=1.0).contains(&a));
        }

        #[test]
        fn rmse_squared_is_mse(
            pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..40)
        ) {
            let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&y, &p).unwrap();
            // reverse accumulation order
            let mse = y.iter().zip(&p).rev().fold(0.0, |acc, (a, b)| acc + (a - b).powi(2)) / y.len() as f64;
            prop_assert!((r * r - mse).abs() <= 1e-12 * mse.max(1.0));
        }
    }
}
