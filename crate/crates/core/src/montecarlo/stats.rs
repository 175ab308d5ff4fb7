//! Order-fixed reductions and weighted estimators.

/// Pairwise summation in a fixed tree shape, independent of threading.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and the variance of the mean.
pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mu = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - mu) * (x - mu)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mu, var / n)
}

/// Weights `exp(logw − max)`, rescaled so only ratios matter.
pub fn normalized_weights(logw: &[f64]) -> Vec<f64> {
    let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logw.iter().map(|l| (l - mx).exp()).collect()
}

/// Self-normalised estimate of a mean and its variance
/// `Σw²(f − μ̂)² / (Σw)²`.
pub fn snis(values: &[f64], logw: &[f64]) -> (f64, f64) {
    let w = normalized_weights(logw);
    let sw = pairwise_sum(&w);
    let wf: Vec<f64> = w.iter().zip(values).map(|(w, f)| w * f).collect();
    let mu = pairwise_sum(&wf) / sw;
    let r: Vec<f64> = w
        .iter()
        .zip(values)
        .map(|(w, f)| w * w * (f - mu) * (f - mu))
        .collect();
    (mu, pairwise_sum(&r) / (sw * sw))
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn kish(logw: &[f64]) -> f64 {
    let w = normalized_weights(logw);
    let sw = pairwise_sum(&w);
    let sq: Vec<f64> = w.iter().map(|w| w * w).collect();
    sw * sw / pairwise_sum(&sq)
}

/// Mean of `exp(logw)` and its standard error.
pub fn mean_weight(logw: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = logw.iter().map(|l| l.exp()).collect();
    let (m, v) = mean_and_var(&w);
    (m, v.sqrt())
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn q_ks(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let t = sign * (-2.0 * j * j * lambda * lambda).exp();
        sum += t;
        if t.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub n_eff: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with weights on the first sample.
///
/// The first sample's size enters through its Kish effective size.
pub fn weighted_ks(a: &[f64], logw_a: &[f64], b: &[f64]) -> KsResult {
    let wa = normalized_weights(logw_a);
    let sw = pairwise_sum(&wa);
    let mut ia: Vec<usize> = (0..a.len()).collect();
    ia.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(i.cmp(&j)));
    let mut sb = b.to_vec();
    sb.sort_by(f64::total_cmp);
    let nb = sb.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fa, mut d) = (0.0f64, 0.0f64);
    while i < ia.len() || j < sb.len() {
        let x = match (ia.get(i), sb.get(j)) {
            (Some(&p), Some(&q)) => a[p].min(q),
            (Some(&p), None) => a[p],
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        while i < ia.len() && a[ia[i]] <= x {
            fa += wa[ia[i]] / sw;
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((fa - j as f64 / nb).abs());
    }
    let na = kish(logw_a);
    let n_eff = na * nb / (na + nb);
    let s = n_eff.sqrt();
    KsResult {
        d,
        n_eff,
        p_value: q_ks((s + 0.12 + 0.11 / s) * d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snis_with_equal_weights_is_plain_mean() {
        let v = [1.0, 2.0, 3.0, 6.0];
        let (m, var) = snis(&v, &[0.3; 4]);
        assert!((m - 3.0).abs() < 1e-15);
        assert!((var - 14.0 / 16.0).abs() < 1e-15);
        assert!((kish(&[0.0; 4]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ks_tail_values() {
        assert!((q_ks(1.36) - 0.0494).abs() < 1e-3);
        assert!((q_ks(1.63) - 0.0098).abs() < 1e-3);
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = weighted_ks(&a, &[0.0; 100], &a);
        assert!(r.d < 1e-12);
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 50.0).collect();
        let r = weighted_ks(&a, &[0.0; 100], &b);
        assert!((r.d - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-6);
    }
}
