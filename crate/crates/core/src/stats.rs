// SPDX-License-Identifier: Apache-2.0

//! Proportion intervals and the one-sided Welch test used in reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A proportion with a Wilson score interval. Ties contribute 0.5 to `successes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: f64,
    pub n: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Alternative hypothesis: mean of the first group exceeds the second.
    FirstGreater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_one_sided: f64,
    pub direction: Direction,
}

/// Two-sided standard normal quantile for confidence `level`.
fn z_for_level(level: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(0.5 + level / 2.0)
}

pub fn wilson_ci(successes: f64, n: u64, level: f64) -> Result<Proportion> {
    if n == 0 {
        return Err(Error::Stats("proportion with n = 0".into()));
    }
    let nf = n as f64;
    if !(0.0..=nf).contains(&successes) || successes.is_nan() {
        return Err(Error::Stats(format!(
            "successes {successes} outside [0, {n}]"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Stats(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let z = z_for_level(level);
    let p = successes / nf;
    let z2n = z * z / nf;
    let denom = 1.0 + z2n;
    let center = (p + z2n / 2.0) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2n / (4.0 * nf)).sqrt();

    let mut low = (center - half).max(0.0);
    let mut high = (center + half).min(1.0);
    if successes == 0.0 {
        low = 0.0;
    }
    if successes == nf {
        high = 1.0;
    }
    Ok(Proportion {
        successes,
        n,
        estimate: p,
        ci_low: low.min(p),
        ci_high: high.max(p),
        level,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Welch two-sample t-test, alternative `mean(a) > mean(b)`.
pub fn one_sided_welch_t(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stats(format!(
            "t-test needs ≥ 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::Stats("both groups have zero variance".into()));
    }
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df =
        (sa + sb).powi(2) / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(TTestResult {
        t,
        df,
        p_one_sided: student_t_sf(t, df),
        direction: Direction::FirstGreater,
    })
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `I_x(a, b)` by the modified Lentz continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // the fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..1000 {
        let m = m as f64;
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

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_half() {
        let p = wilson_ci(50.0, 100, 0.95).unwrap();
        assert_eq!(p.estimate, 0.5);
        // closed form with z = 1.959964: 0.5 ± 1.959964 * sqrt(0.25/100 + z²/40000) / (1 + z²/100)
        assert!((p.ci_low - 0.403_831_9).abs() < 1e-6, "{}", p.ci_low);
        assert!((p.ci_high - 0.596_168_1).abs() < 1e-6, "{}", p.ci_high);
    }

    #[test]
    fn wilson_boundaries() {
        let p = wilson_ci(0.0, 10, 0.95).unwrap();
        assert_eq!(p.ci_low, 0.0);
        let p = wilson_ci(10.0, 10, 0.95).unwrap();
        assert_eq!(p.ci_high, 1.0);
        assert!(wilson_ci(1.0, 0, 0.95).is_err());
        assert!(wilson_ci(11.0, 10, 0.95).is_err());
    }

    #[test]
    fn welch_worked_example() {
        let r = one_sided_welch_t(&[1.0, 1.0, 0.0, 1.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(format!("{:.3}", r.t), "1.414");
        assert_eq!(format!("{:.1}", r.df), "6.0");
        // exact value for df = 6: 0.103515625
        assert!(
            (r.p_one_sided - 0.103_515_625).abs() < 1e-9,
            "{}",
            r.p_one_sided
        );
    }

    #[test]
    fn welch_identical_groups() {
        let a = [1.0, 0.0, 1.0, 1.0, 0.0];
        let r = one_sided_welch_t(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_one_sided, 0.5);
    }

    #[test]
    fn welch_errors() {
        assert!(one_sided_welch_t(&[1.0], &[0.0, 1.0]).is_err());
        assert!(one_sided_welch_t(&[1.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn t_tail_known_values() {
        // df = 1 is Cauchy: P(T > 1) = 1/4
        assert!((student_t_sf(1.0, 1.0) - 0.25).abs() < 1e-12);
        // df = 2 closed form: 0.5 - t / (2 sqrt(t² + 2))
        let t: f64 = 1.7;
        let exact = 0.5 - t / (2.0 * (t * t + 2.0).sqrt());
        assert!((student_t_sf(t, 2.0) - exact).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wilson_narrows_with_n(k in 1u64..50, scale in 2u64..6) {
            let small = wilson_ci(k as f64, 2 * k, 0.95).unwrap();
            let large = wilson_ci((k * scale) as f64, 2 * k * scale, 0.95).unwrap();
            prop_assert!(large.ci_high - large.ci_low < small.ci_high - small.ci_low);
        }

        #[test]
        fn welch_antisymmetric(
            a in prop::collection::vec(0.0f64..1.0, 2..20),
            b in prop::collection::vec(0.0f64..1.0, 2..20),
        ) {
            let ab = one_sided_welch_t(&a, &b).unwrap();
            let ba = one_sided_welch_t(&b, &a).unwrap();
            prop_assert!((ab.t + ba.t).abs() < 1e-12);
            prop_assert!((ab.df - ba.df).abs() < 1e-9);
            prop_assert!((ab.p_one_sided + ba.p_one_sided - 1.0).abs() < 1e-12);
        }
    }
}
