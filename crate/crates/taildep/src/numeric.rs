//! Small numeric helpers shared across modules.

/// powf with the exponent behind an optimization barrier. Tail-index
/// exponents are runtime values in the CLI but often compile-time
/// constants in embedding code; the optimizer then strength-reduces
/// powf(x, 2.0) to x * x and similar, which changes the last ulp and
/// breaks bit-for-bit agreement between the two. The barrier pins every
/// caller to the same libm path.
#[inline]
pub fn powa(x: f64, exponent: f64) -> f64 {
    x.powf(std::hint::black_box(exponent))
}

/// Neumaier-compensated accumulator. Summation error stays O(eps)
/// independent of the number of terms, so chunked parallel reductions
/// reproduce the sequential result to ~1e-15 relative.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of f64.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Order-statistic empirical quantile: the ceil(level * n)-th smallest value.
/// Deterministic, so exceedance counts are exactly reproducible.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!(level > 0.0 && level < 1.0);
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Sort a copy ascending. Ties keep their original order (stable sort),
/// matching the deterministic tie-breaking rule used throughout.
pub fn sorted_ascending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in sort"));
    v
}

/// Summary statistics backing the boxplot-style outputs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let sorted = sorted_ascending(values);
        let n = sorted.len();
        // Linear interpolation between closest ranks (type-7 quantile).
        let q = |p: f64| -> f64 {
            let h = p * (n as f64 - 1.0);
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Some(SummaryStats {
            n,
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[n - 1],
            mean: csum(sorted.iter().copied()) / n as f64,
        })
    }
}
