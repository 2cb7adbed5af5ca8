use super::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    /// `None` when either vector is constant.
    pub cc: Option<f64>,
}

pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(ModelError::LengthMismatch {
            x: y_pred.len(),
            y: y_true.len(),
        });
    }
    if y_true.is_empty() {
        return Err(ModelError::NoSamples);
    }
    let n = y_true.len() as f64;
    let mse = y_true
        .iter()
        .zip(y_pred)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    Ok(Metrics {
        rmse: mse.sqrt(),
        cc: pearson(y_true, y_pred),
    })
}

/// Pearson correlation, or `None` if either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if a.is_empty() || a.len() != b.len() || constant(a) || constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let denom = (saa * sbb).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some((sab / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 2.0, 4.0];
        let m = evaluate(&y, &y).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert!((m.cc.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn anti_correlated() {
        let y = [1.0, 2.0, 4.0];
        let p: Vec<f64> = y.iter().map(|v| 3.0 - v).collect();
        assert!((evaluate(&y, &p).unwrap().cc.unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_prediction_has_no_cc() {
        let m = evaluate(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(m.rmse, 1.0);
        assert_eq!(m.cc, None);
    }

    #[test]
    fn errors() {
        assert!(evaluate(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(evaluate(&[], &[]).unwrap_err(), ModelError::NoSamples);
    }
}
