//! Special functions behind the F, t and normal tail probabilities.

use super::StatsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
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

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_EPS: f64 = 1e-14;
const CF_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta I_x(a, b).
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64, StatsError> {
    if !(x.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if a <= 0.0 || b <= 0.0 || !(0.0..=1.0).contains(&x) {
        return Err(StatsError::Domain(format!(
            "incomplete beta at x={x}, a={a}, b={b}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - front * beta_cf(1.0 - x, b, a)? / b)
    } else {
        Ok(front * beta_cf(x, a, b)? / a)
    }
}

/// Continued fraction for I_x(a, b), modified Lentz.
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64, StatsError> {
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
    for m in 1..=CF_MAX_ITER {
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
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence { x, a, b })
}

/// P(F > f) for an F(df1, df2) variable.
pub fn f_upper_tail(f: f64, df1: f64, df2: f64) -> Result<f64, StatsError> {
    if f.is_nan() || !df1.is_finite() || !df2.is_finite() {
        return Err(StatsError::NonFinite);
    }
    if f < 0.0 || df1 < 1.0 || df2 < 1.0 {
        return Err(StatsError::Domain(format!(
            "F tail at F={f}, df=({df1}, {df2})"
        )));
    }
    if f == f64::INFINITY {
        return Ok(0.0);
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0)
}

/// Two-sided Student t tail, P(|T| > |t|).
pub fn t_two_sided(t: f64, df: f64) -> Result<f64, StatsError> {
    if t.is_nan() || !df.is_finite() {
        return Err(StatsError::NonFinite);
    }
    if df < 1.0 {
        return Err(StatsError::Domain(format!("t tail with df={df}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}
