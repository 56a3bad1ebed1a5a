use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub t: f64,
    pub df: u32,
    pub p_two_sided: f64,
    pub mean: f64,
    pub sd: f64,
    pub n: u32,
}

/// One-sample t-test from summary statistics.
pub fn one_sample_t(mean: f64, sd: f64, n: u32, mu0: f64) -> Result<StatResult> {
    if n < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 observations, got {n}")));
    }
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateInput(format!("standard deviation must be positive, got {sd}")));
    }
    let t = (mean - mu0) / (sd / f64::from(n).sqrt());
    let df = n - 1;
    Ok(StatResult {
        t,
        df,
        p_two_sided: student_t_two_sided(t, f64::from(df)),
        mean,
        sd,
        n,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// One-sample t-test from raw observations.
pub fn one_sample_t_from_scores(scores: &[f64], mu0: f64) -> Result<StatResult> {
    if scores.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 observations, got {}",
            scores.len()
        )));
    }
    one_sample_t(mean(scores), sample_variance(scores).sqrt(), scores.len() as u32, mu0)
}

/// Cronbach's alpha over a responses × items matrix.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 responses and 2 items, got {n} x {k}"
        )));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::DegenerateInput("rows have different item counts".into()));
    }
    let item_var_sum: f64 = (0..k)
        .map(|j| sample_variance(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var <= 0.0 {
        return Err(Error::DegenerateInput("total score variance is zero".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var_sum / total_var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers_and_half() {
        // Gamma(n) = (n-1)!
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(f64::from(n)) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= f64::from(n);
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((ln_gamma(0.5) - sqrt_pi.ln()).abs() < 1e-13);
    }

    #[test]
    fn beta_closed_forms() {
        // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1-x)^b.
        for &x in &[0.1, 0.37, 0.5, 0.9] {
            for &a in &[0.5, 2.0, 7.5] {
                let r = regularized_incomplete_beta(x, a, 1.0);
                assert!((r - x.powf(a)).abs() < 1e-13);
                let r = regularized_incomplete_beta(x, 1.0, a);
                assert!((r - (1.0 - (1.0 - x).powf(a))).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cauchy_tail() {
        // df = 1 is Cauchy: p = 1 - 2 atan(|t|) / pi.
        for &t in &[0.3, 1.0, 4.0, 25.0] {
            let oracle = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_two_sided(t, 1.0) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn null_case() {
        let r = one_sample_t(5.0, 1.0, 10, 5.0).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(one_sample_t(1.0, 1.0, 1, 0.0), Err(Error::DegenerateInput(_))));
        assert!(matches!(one_sample_t(1.0, 0.0, 5, 0.0), Err(Error::DegenerateInput(_))));
        assert!(cronbach_alpha(&[vec![1.0, 2.0]]).is_err());
        assert!(cronbach_alpha(&[vec![3.0, 3.0], vec![3.0, 3.0]]).is_err());
    }

    #[test]
    fn alpha_hand_matrix() {
        // Items: [2,3,4], [3,4,5], [3,5,4]; item variances 1, 1, 1.
        // Totals 8, 12, 13: mean 11, variance (9 + 1 + 4) / 2 = 7.
        // alpha = 3/2 * (1 - 3/7) = 6/7.
        let rows = vec![vec![2.0, 3.0, 3.0], vec![3.0, 4.0, 5.0], vec![4.0, 5.0, 4.0]];
        assert!((cronbach_alpha(&rows).unwrap() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_identical_items() {
        let rows: Vec<Vec<f64>> = (1..=5).map(|v| vec![f64::from(v); 4]).collect();
        assert!((cronbach_alpha(&rows).unwrap() - 1.0).abs() < 1e-12);
    }
}
