//! Compensated summation and a few sample statistics built on it.

/// Kahan–Babuška (Neumaier) accumulator. Values are added left to right, so
/// the result depends only on the input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<KahanSum>().total()
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(sum(xs) / xs.len() as f64)
    }
}

/// Sample variance with divisor `n - 1`.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: KahanSum = xs.iter().map(|x| (x - m) * (x - m)).collect();
    Some(ss.total() / (xs.len() - 1) as f64)
}

/// Biased (divide by `n`) sample autocovariance at `lag`, centred at the
/// sample mean.
pub fn autocovariance(xs: &[f64], lag: usize) -> Option<f64> {
    let n = xs.len();
    if lag >= n {
        return None;
    }
    let m = mean(xs)?;
    let acc: KahanSum = xs
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .collect();
    Some(acc.total() / n as f64)
}

/// Ordinary least squares of `y` on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Usual OLS standard error of the slope; zero with two points.
    pub slope_stderr: f64,
    pub rss: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let sxx: KahanSum = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let sxy: KahanSum = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx = sxx.total();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy.total() / sxx;
    let intercept = my - slope * mx;
    let rss: KahanSum = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .collect();
    let rss = rss.total();
    let slope_stderr = if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        rss,
    })
}
