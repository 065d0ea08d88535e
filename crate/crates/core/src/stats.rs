//! Small statistics toolkit used by the estimator and the validation suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Sample mean and standard error (`s / sqrt(n)` with the `n - 1` sample
/// variance). Sums run in slice order, so the output is a pure function of
/// the input sequence. The standard error of a single value is 0.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: `sup |F_n - F| <= eps` with
/// probability at least `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a
/// reference law given by its CDF `cdf(x) = P(X <= x)` and left limit
/// `cdf_left(x) = P(X < x)`. Reference atoms are handled exactly.
pub fn ks_distance<F, G>(samples: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut below = 0usize;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let before = below as f64 / n;
        let after = j as f64 / n;
        d = d
            .max((before - cdf_left(v)).abs())
            .max((after - cdf(v)).abs());
        below = j;
        i = j;
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-sample chi-square homogeneity test on integer-valued samples.
///
/// Consecutive values are pooled into bins holding at least `min_bin`
/// observations from both samples combined; a short remainder joins the last
/// bin.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_bin: u64) -> Result<ChiSquareTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "chi-square needs two nonempty samples".into(),
        ));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable();
    ys.sort_unstable();

    let mut bins: Vec<(u64, u64)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut current = (0u64, 0u64);
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            current.0 += 1;
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            current.1 += 1;
            j += 1;
        }
        if current.0 + current.1 >= min_bin {
            bins.push(current);
            current = (0, 0);
        }
    }
    if current.0 + current.1 > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += current.0;
                last.1 += current.1;
            }
            None => bins.push(current),
        }
    }
    if bins.len() < 2 {
        return Err(Error::InvalidArgument(
            "chi-square needs at least two bins".into(),
        ));
    }

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = bins
        .iter()
        .map(|&(r, s)| {
            let (r, s) = (r as f64, s as f64);
            (ka * r - kb * s).powi(2) / (r + s)
        })
        .sum();
    let df = bins.len() - 1;
    let law = ChiSquared::new(df as f64)
        .map_err(|e| Error::InvalidArgument(format!("chi-square law: {e}")))?;
    Ok(ChiSquareTest {
        statistic,
        df,
        p_value: law.sf(statistic),
    })
}
