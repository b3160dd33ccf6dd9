//! Descriptive statistics and the Pearson correlation test.

use alloc::vec::Vec;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / xs.len() as f64)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_absolute_error(truth: &[f64], pred: &[f64]) -> f64 {
    debug_assert_eq!(truth.len(), pred.len());
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(pred).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / truth.len() as f64
}

/// Result of a Pearson correlation test.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from the t statistic with `n - 2` degrees of freedom.
    pub p_value: f64,
    /// Set when either input has zero variance; `r` is then reported as 0.
    pub degenerate: bool,
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Correlation {
    assert_eq!(xs.len(), ys.len(), "pearson: length mismatch");
    let n = xs.len();
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if n < 2 || sxx <= 0.0 || syy <= 0.0 || constant(xs) || constant(ys) {
        return Correlation { r: 0.0, p_value: 1.0, degenerate: true };
    }
    let r = (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    Correlation { r, p_value: correlation_p_value(r, n), degenerate: false }
}

/// Two-sided p-value of correlation `r` over `n` paired samples, via
/// `t = r * sqrt((n - 2) / (1 - r^2))` against Student's t with `n - 2`
/// degrees of freedom. Clamped into `(0, 1]`.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n <= 2 || r.is_nan() {
        return 1.0;
    }
    let df = (n - 2) as f64;
    let r2 = r * r;
    if r2 >= 1.0 {
        return f64::MIN_POSITIVE;
    }
    let t2 = r2 * df / (1.0 - r2);
    student_t_two_sided(t2, df)
}

/// `P(|T| >= t)` for `T ~ t(df)`, given `t^2`.
pub fn student_t_two_sided(t_squared: f64, df: f64) -> f64 {
    let x = df / (df + t_squared);
    regularized_incomplete_beta(x, 0.5 * df, 0.5).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}
