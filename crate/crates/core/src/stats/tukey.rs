//! Studentized range distribution and Tukey's HSD.

use std::sync::OnceLock;

use super::special::{ln_gamma, normal_cdf, normal_pdf};
use super::StatsError;

const GL_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

/// Integrates `f` over [lo, hi] with `panels` equal Gauss–Legendre panels.
fn integrate(lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre();
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for &(x, w) in rule {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// P(range of k standard normals ≤ w).
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let k1 = (k - 1) as i32;
    let inner = integrate(-8.0, 8.0, 32, |z| {
        normal_pdf(z) * (normal_cdf(z) - normal_cdf(z - w)).max(0.0).powi(k1)
    });
    (k as f64 * inner).min(1.0)
}

/// P(Q > q) for the studentized range of `k` means with `df` error degrees of freedom.
pub fn studentized_range_upper_tail(q: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if q.is_nan() || !df.is_finite() {
        return Err(StatsError::NonFinite);
    }
    if q < 0.0 || k < 2 || df < 1.0 {
        return Err(StatsError::Domain(format!(
            "studentized range at q={q}, k={k}, df={df}"
        )));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    // s = sqrt(chi2_df / df); density ∝ s^(df-1) exp(-df s^2 / 2)
    let ln_norm =
        0.5 * df * df.ln() - ln_gamma(0.5 * df) - (0.5 * df - 1.0) * std::f64::consts::LN_2;
    let density = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_norm + (df - 1.0) * s.ln() - 0.5 * df * s * s).exp()
    };
    let mode = ((df - 1.0) / df).sqrt();
    let spread = (0.5 / df).sqrt();
    let lo = (mode - 14.0 * spread).max(0.0);
    let hi = mode + 14.0 * spread.max(0.5);
    let p = integrate(lo, hi, 48, |s| density(s) * (1.0 - range_cdf(q * s, k)));
    Ok(p.clamp(0.0, 1.0))
}

/// Smallest q with upper tail ≤ `alpha`, by bisection.
pub fn studentized_range_critical(alpha: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while studentized_range_upper_tail(hi, k, df)? > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_upper_tail(mid, k, df)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyPair {
    pub i: usize,
    pub j: usize,
    /// mean_i − mean_j
    pub mean_difference: f64,
    pub q: f64,
    pub p: f64,
    pub significant: bool,
}

/// All-pairs comparisons of `means`, each based on `n` observations.
pub fn tukey_hsd(
    means: &[f64],
    n: usize,
    ms_within: f64,
    df_within: f64,
    alpha: f64,
) -> Result<Vec<TukeyPair>, StatsError> {
    let k = means.len();
    if k < 2 {
        return Err(StatsError::Domain(format!(
            "Tukey needs at least 2 groups, got {k}"
        )));
    }
    if ms_within.is_nan() || ms_within <= 0.0 || n == 0 {
        return Err(StatsError::Domain(format!(
            "Tukey needs MS_within > 0 and n > 0, got {ms_within}, {n}"
        )));
    }
    let se = (ms_within / n as f64).sqrt();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            let q = diff.abs() / se;
            let p = studentized_range_upper_tail(q, k, df_within)?;
            out.push(TukeyPair {
                i,
                j,
                mean_difference: diff,
                q,
                p,
                significant: p < alpha,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::special::t_two_sided;

    #[test]
    fn quadrature_rule_is_exact_for_polynomials() {
        let w: f64 = gauss_legendre().iter().map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x8 = integrate(-1.0, 1.0, 1, |x| x.powi(8));
        assert!((x8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn two_groups_match_t() {
        for &df in &[2.0, 5.0, 10.0, 30.0, 190.0] {
            for &q in &[0.1, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0] {
                let p = studentized_range_upper_tail(q, 2, df).unwrap();
                let t = t_two_sided(q / 2f64.sqrt(), df).unwrap();
                assert!((p - t).abs() < 1e-4, "q={q} df={df}: {p} vs {t}");
            }
        }
    }

    #[test]
    fn published_critical_values() {
        // q_{.05}(k, df) from standard tables
        for &(k, df, q) in &[
            (3, 10.0, 3.877),
            (5, 20.0, 4.232),
            (5, 120.0, 3.917),
            (10, 60.0, 4.646),
        ] {
            let p = studentized_range_upper_tail(q, k, df).unwrap();
            assert!((p - 0.05).abs() < 3e-4, "k={k} df={df}: {p}");
        }
        let crit = studentized_range_critical(0.05, 3, 10.0).unwrap();
        assert!((crit - 3.877).abs() < 2e-3);
    }

    #[test]
    fn tail_is_monotone_and_bounded() {
        assert_eq!(studentized_range_upper_tail(0.0, 5, 190.0).unwrap(), 1.0);
        let mut last = 1.0;
        for i in 1..60 {
            let p = studentized_range_upper_tail(i as f64 * 0.15, 5, 190.0).unwrap();
            assert!(p < last, "not decreasing at q={}", i as f64 * 0.15);
            assert!((0.0..=1.0).contains(&p));
            last = p;
        }
        assert!(studentized_range_upper_tail(-1.0, 3, 10.0).is_err());
        assert!(studentized_range_upper_tail(1.0, 1, 10.0).is_err());
    }

    #[test]
    fn tukey_basic_properties() {
        let pairs = tukey_hsd(&[3.0, 3.0], 10, 1.0, 18.0, 0.05).unwrap();
        assert_eq!(pairs[0].q, 0.0);
        assert_eq!(pairs[0].p, 1.0);
        let a = tukey_hsd(&[1.0, 2.0, 4.0], 5, 2.0, 12.0, 0.05).unwrap();
        let b = tukey_hsd(&[101.0, 102.0, 104.0], 5, 2.0, 12.0, 0.05).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.q - y.q).abs() < 1e-9 && (x.p - y.p).abs() < 1e-12);
        }
        // swapping the pair order flips the sign only
        let c = tukey_hsd(&[4.0, 2.0, 1.0], 5, 2.0, 12.0, 0.05).unwrap();
        assert!((a[2].q - c[0].q).abs() < 1e-12 && (a[2].p - c[0].p).abs() < 1e-12);
        assert!(tukey_hsd(&[1.0], 5, 1.0, 4.0, 0.05).is_err());
        assert!(tukey_hsd(&[1.0, 2.0], 5, 0.0, 4.0, 0.05).is_err());
    }
}
