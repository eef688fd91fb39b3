//! Small numeric helpers shared by the scorers, policies and trainers.

/// Scores are clamped to this magnitude before entering the logistic function.
pub const SCORE_CLAMP: f64 = 30.0;

/// Logistic function on a clamped score.
///
/// Scores beyond `±SCORE_CLAMP` are clamped first, so the result always lies
/// strictly inside (0, 1).
#[inline]
pub fn sigmoid(f: f64) -> f64 {
    let f = f.clamp(-SCORE_CLAMP, SCORE_CLAMP);
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^f)` without overflow.
#[inline]
pub fn softplus(f: f64) -> f64 {
    if f > SCORE_CLAMP {
        f + (-f).exp().ln_1p()
    } else {
        f.exp().ln_1p()
    }
}

/// `ln σ(f)` using the same clamp as [`sigmoid`].
#[inline]
pub fn log_sigmoid(f: f64) -> f64 {
    sigmoid(f).ln()
}

/// `ln(1 − σ(f))` using the same clamp as [`sigmoid`].
#[inline]
pub fn log_one_minus_sigmoid(f: f64) -> f64 {
    sigmoid(-f).ln()
}

/// Softmax of `scores / temperature` with max subtraction.
pub fn softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let z: f64 = out.iter().sum();
    for p in &mut out {
        *p /= z;
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-1000.0) > 0.0);
        assert!(sigmoid(1000.0) < 1.0);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(softplus(-1000.0).abs() < 1e-300);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!(softplus(1000.0).is_finite());
    }

    #[test]
    fn softmax_hand_case() {
        let p = softmax(&[2f64.ln(), 0.0], 1.0);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }
}
