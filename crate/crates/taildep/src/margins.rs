//! Univariate heavy-tail estimation and semi-parametric standardization.
//!
//! The Hill estimator targets the extreme-value index gamma = 1/alpha from
//! the top k order statistics. Margins are standardized to unit-scale
//! Fréchet with shape 2 through x -> (-log F(x))^(-1/2), where F is the
//! empirical distribution below a high threshold and a fitted generalized
//! Pareto tail above it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::{csum, empirical_quantile, sorted_ascending};

/// Tail-index estimate with its full diagnostic path k -> gamma_hat(k).
#[derive(Debug, Clone)]
pub struct TailIndexEstimate {
    pub gamma_hat: f64,
    /// 1 / gamma_hat; +inf when gamma_hat = 0.
    pub alpha_hat: f64,
    pub k_used: usize,
    pub path: Vec<(usize, f64)>,
}

fn alpha_from_gamma(gamma: f64) -> f64 {
    if gamma > 0.0 {
        1.0 / gamma
    } else {
        f64::INFINITY
    }
}

fn check_positive_sample(sample: &[f64]) -> Result<()> {
    if let Some(&x) = sample.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!(
            "Hill estimation needs strictly positive finite data, found {x}"
        )));
    }
    Ok(())
}

/// Raw Hill path gamma_hat(j) for j = 1..=k_max over the sorted sample.
fn hill_path(sorted: &[f64], k_max: usize) -> Vec<(usize, f64)> {
    let n = sorted.len();
    let mut path = Vec::with_capacity(k_max);
    let mut log_sum = crate::numeric::CompensatedSum::new();
    for j in 1..=k_max {
        log_sum.add(sorted[n - j].ln());
        path.push((j, log_sum.value() / j as f64 - sorted[n - j - 1].ln()));
    }
    path
}

/// Hill estimator: gamma_hat = (1/k) sum_{i=1..k} log(X_(n-i+1) / X_(n-k)).
pub fn hill_estimate(sample: &[f64], k: usize) -> Result<TailIndexEstimate> {
    check_positive_sample(sample)?;
    let n = sample.len();
    if k < 1 || k >= n {
        return Err(Error::Argument(format!(
            "Hill estimator needs 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let sorted = sorted_ascending(sample);
    let path = hill_path(&sorted, k);
    let gamma_hat = path[k - 1].1;
    Ok(TailIndexEstimate {
        gamma_hat,
        alpha_hat: alpha_from_gamma(gamma_hat),
        k_used: k,
        path,
    })
}

/// Averaged Hill over the window k..floor(u k): smooths the sawtooth the
/// raw path develops on tied or rounded data.
pub fn smoothed_hill(sample: &[f64], k: usize, smoothing: f64) -> Result<TailIndexEstimate> {
    check_positive_sample(sample)?;
    let n = sample.len();
    if !(smoothing > 1.0) {
        return Err(Error::Argument(format!(
            "smoothing factor must exceed 1, got {smoothing}"
        )));
    }
    let k_top = (smoothing * k as f64).floor() as usize;
    if k < 1 || k_top >= n {
        return Err(Error::Argument(format!(
            "smoothed Hill needs 1 <= k and floor(u k) < n, got k = {k}, u = {smoothing}, n = {n}"
        )));
    }
    let sorted = sorted_ascending(sample);
    let raw = hill_path(&sorted, k_top);
    let smoothed_at = |j: usize| -> f64 {
        let hi = ((smoothing * j as f64).floor() as usize).min(k_top);
        let window = &raw[j - 1..hi];
        csum(window.iter().map(|&(_, g)| g)) / window.len() as f64
    };
    let path: Vec<(usize, f64)> = (1..=k).map(|j| (j, smoothed_at(j))).collect();
    let gamma_hat = path[k - 1].1;
    Ok(TailIndexEstimate {
        gamma_hat,
        alpha_hat: alpha_from_gamma(gamma_hat),
        k_used: k,
        path,
    })
}

/// Stability rule for picking k from a Hill path.
#[derive(Debug, Clone)]
pub struct EyeballConfig {
    pub k_min: usize,
    /// Forward window: max(ceil(window_frac * path length), window_min).
    pub window_frac: f64,
    pub window_min: usize,
    /// Estimates within +-band * gamma(k) of gamma(k) count as stable.
    pub band: f64,
    /// Required fraction of stable estimates in the window.
    pub agreement: f64,
}

impl Default for EyeballConfig {
    fn default() -> Self {
        EyeballConfig {
            k_min: 15,
            window_frac: 0.02,
            window_min: 10,
            band: 0.3,
            agreement: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EyeballSelection {
    pub k_star: usize,
    pub gamma_at_k: f64,
    /// No k satisfied the stability rule; k_star is the argmin of the
    /// rolling variance instead.
    pub fell_back: bool,
}

/// Smallest k >= k_min whose forward window of estimates stays inside the
/// relative band around gamma(k). Deterministic for fixed inputs.
pub fn eyeball_threshold(path: &[(usize, f64)], config: &EyeballConfig) -> Result<EyeballSelection> {
    if path.is_empty() {
        return Err(Error::Argument("empty Hill path".into()));
    }
    let n = path.len();
    let window = ((config.window_frac * n as f64).ceil() as usize).max(config.window_min);
    let first = match path.iter().position(|&(k, _)| k >= config.k_min) {
        Some(t) => t,
        None => {
            return Err(Error::Argument(format!(
                "no path entry reaches k_min = {}",
                config.k_min
            )))
        }
    };

    for t in first..n {
        let (k_t, g_t) = path[t];
        let hi = (t + 1 + window).min(n);
        if t + 1 >= hi {
            continue;
        }
        let fwd = &path[t + 1..hi];
        let stable = fwd
            .iter()
            .filter(|&&(_, g)| (g - g_t).abs() <= config.band * g_t.abs())
            .count();
        if stable as f64 >= config.agreement * fwd.len() as f64 {
            return Ok(EyeballSelection {
                k_star: k_t,
                gamma_at_k: g_t,
                fell_back: false,
            });
        }
    }

    // Fallback: k with the lowest forward-window variance.
    let mut best = (f64::INFINITY, first);
    for t in first..n {
        let hi = (t + 1 + window).min(n);
        if t + 1 >= hi {
            break;
        }
        let vals: Vec<f64> = path[t..hi].iter().map(|&(_, g)| g).collect();
        let mean = csum(vals.iter().copied()) / vals.len() as f64;
        let var = csum(vals.iter().map(|g| (g - mean) * (g - mean))) / vals.len() as f64;
        if var < best.0 {
            best = (var, t);
        }
    }
    Ok(EyeballSelection {
        k_star: path[best.1].0,
        gamma_at_k: path[best.1].1,
        fell_back: true,
    })
}

/// Hill (or smoothed Hill) estimate on all n*d observations pooled, for
/// use when the margins share a common tail index.
pub fn pooled_alpha(
    data: &DMatrix<f64>,
    k: usize,
    smoothing: Option<f64>,
) -> Result<TailIndexEstimate> {
    let flat: Vec<f64> = data.iter().copied().collect();
    match smoothing {
        Some(u) => smoothed_hill(&flat, k, u),
        None => hill_estimate(&flat, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GpdMethod {
    MaximumLikelihood,
    ProbabilityWeightedMoments,
}

/// Fitted generalized Pareto tail for threshold excesses.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GpdFit {
    pub sigma_hat: f64,
    pub gamma_hat: f64,
    pub threshold: f64,
    pub n_exceed: usize,
    pub log_likelihood: f64,
    /// Too few distinct excess values to identify the shape.
    pub degenerate: bool,
    pub method: GpdMethod,
}

impl GpdFit {
    /// Survival function of the excess distribution, 1 at y = 0.
    pub fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        if self.gamma_hat.abs() < 1e-8 {
            (-y / self.sigma_hat).exp()
        } else {
            let t = 1.0 + self.gamma_hat * y / self.sigma_hat;
            if t <= 0.0 {
                0.0
            } else {
                t.powf(-1.0 / self.gamma_hat)
            }
        }
    }

    /// Quantile of the excess distribution at probability p.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&p));
        if self.gamma_hat.abs() < 1e-8 {
            -self.sigma_hat * (1.0 - p).ln()
        } else {
            self.sigma_hat / self.gamma_hat * ((1.0 - p).powf(-self.gamma_hat) - 1.0)
        }
    }
}

const GPD_SHAPE_LO: f64 = -0.5;
const GPD_SHAPE_HI: f64 = 1.0;

fn gpd_nll(excesses: &[f64], log_sigma: f64, gamma: f64) -> f64 {
    if !(GPD_SHAPE_LO..=GPD_SHAPE_HI).contains(&gamma) || !log_sigma.is_finite() {
        return f64::INFINITY;
    }
    let sigma = log_sigma.exp();
    let n = excesses.len() as f64;
    if gamma.abs() < 1e-8 {
        n * log_sigma + csum(excesses.iter().map(|&y| y / sigma))
    } else {
        let mut nll = n * log_sigma;
        for &y in excesses {
            let t = 1.0 + gamma * y / sigma;
            if t <= 0.0 {
                return f64::INFINITY;
            }
            nll += (1.0 + 1.0 / gamma) * t.ln();
        }
        nll
    }
}

/// Derivative-free Nelder-Mead on (log sigma, gamma).
fn nelder_mead_gpd(excesses: &[f64], start: [f64; 2]) -> ([f64; 2], f64) {
    let f = |x: &[f64; 2]| gpd_nll(excesses, x[0], x[1]);
    let mut simplex = [start, [start[0] + 0.5, start[1]], [start[0], start[1] + 0.2]];
    let mut values = simplex.map(|x| f(&x));
    for _ in 0..500 {
        // Order best -> worst.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let (best, mid, worst) = (idx[0], idx[1], idx[2]);
        if (values[worst] - values[best]).abs() < 1e-12 * (1.0 + values[best].abs()) {
            break;
        }
        let centroid = [
            (simplex[best][0] + simplex[mid][0]) / 2.0,
            (simplex[best][1] + simplex[mid][1]) / 2.0,
        ];
        let reflect = [
            centroid[0] + (centroid[0] - simplex[worst][0]),
            centroid[1] + (centroid[1] - simplex[worst][1]),
        ];
        let fr = f(&reflect);
        if fr < values[best] {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - simplex[worst][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[worst][1]),
            ];
            let fe = f(&expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract = [
                centroid[0] + 0.5 * (simplex[worst][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[worst][1] - centroid[1]),
            ];
            let fc = f(&contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                for i in 0..3 {
                    if i != best {
                        simplex[i] = [
                            (simplex[i][0] + simplex[best][0]) / 2.0,
                            (simplex[i][1] + simplex[best][1]) / 2.0,
                        ];
                        values[i] = f(&simplex[i]);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best])
}

/// Probability-weighted-moments estimate, the fallback when the
/// likelihood surface defeats the simplex search.
fn gpd_pwm(excesses: &[f64]) -> (f64, f64) {
    let sorted = sorted_ascending(excesses);
    let n = sorted.len();
    let a0 = csum(sorted.iter().copied()) / n as f64;
    let a1 = csum(
        sorted
            .iter()
            .enumerate()
            .map(|(i, &y)| y * (n - 1 - i) as f64 / (n - 1) as f64),
    ) / n as f64;
    let denom = a0 - 2.0 * a1;
    let k_hw = a0 / denom - 2.0;
    let sigma = 2.0 * a0 * a1 / denom;
    (sigma, -k_hw)
}

/// Maximum-likelihood GPD fit with the shape bracketed in (-0.5, 1.0),
/// falling back to probability-weighted moments when the optimizer fails.
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.len() < 10 {
        return Err(Error::Argument(format!(
            "GPD fit needs at least 10 excesses, got {}",
            excesses.len()
        )));
    }
    if excesses.iter().any(|&y| !(y > 0.0) || !y.is_finite()) {
        return Err(Error::Domain("excesses must be strictly positive and finite".into()));
    }
    let n = excesses.len();
    let mut distinct = sorted_ascending(excesses);
    distinct.dedup_by(|a, b| a == b);
    let degenerate = distinct.len() <= 2;

    // Method-of-moments start, clamped into the shape bracket.
    let mean = csum(excesses.iter().copied()) / n as f64;
    let var = csum(excesses.iter().map(|&y| (y - mean) * (y - mean))) / n as f64;
    let gamma0 = (0.5 * (1.0 - mean * mean / var)).clamp(GPD_SHAPE_LO + 0.05, GPD_SHAPE_HI - 0.05);
    let sigma0 = (0.5 * mean * (mean * mean / var + 1.0)).max(1e-10);

    let (opt, nll) = nelder_mead_gpd(excesses, [sigma0.ln(), gamma0]);
    if nll.is_finite() && opt[0].is_finite() && opt[1].is_finite() {
        return Ok(GpdFit {
            sigma_hat: opt[0].exp(),
            gamma_hat: opt[1],
            threshold: 0.0,
            n_exceed: n,
            log_likelihood: -nll,
            degenerate,
            method: GpdMethod::MaximumLikelihood,
        });
    }
    let (sigma, gamma) = gpd_pwm(excesses);
    if !sigma.is_finite() || !gamma.is_finite() || sigma <= 0.0 {
        return Err(Error::Optimizer(format!(
            "GPD fit failed; last iterate log_sigma = {:.6}, gamma = {:.6}",
            opt[0], opt[1]
        )));
    }
    let nll = gpd_nll(excesses, sigma.ln(), gamma.clamp(GPD_SHAPE_LO, GPD_SHAPE_HI));
    Ok(GpdFit {
        sigma_hat: sigma,
        gamma_hat: gamma,
        threshold: 0.0,
        n_exceed: n,
        log_likelihood: -nll,
        degenerate,
        method: GpdMethod::ProbabilityWeightedMoments,
    })
}

/// Semi-parametric distribution estimate: empirical below the threshold,
/// generalized Pareto tail above it.
#[derive(Debug, Clone)]
pub struct SemiParametricCdf {
    sorted: Vec<f64>,
    threshold: f64,
    /// Empirical CDF at the threshold.
    f_at_threshold: f64,
    gpd: Option<GpdFit>,
}

impl SemiParametricCdf {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn exceedance_fraction(&self) -> f64 {
        1.0 - self.f_at_threshold
    }

    pub fn gpd(&self) -> Option<&GpdFit> {
        self.gpd.as_ref()
    }

    fn empirical(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Monotone non-decreasing over the whole real line, continuous at the
    /// threshold up to the empirical step granularity.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.gpd {
            Some(gpd) if x > self.threshold => {
                1.0 - (1.0 - self.f_at_threshold) * gpd.survival(x - self.threshold)
            }
            _ => self.empirical(x),
        }
    }

    /// Generalized inverse: smallest x with cdf(x) >= p on the empirical
    /// part, the exact tail quantile on the GPD part.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::Argument(format!("quantile level must lie in (0,1), got {p}")));
        }
        let n = self.sorted.len();
        match &self.gpd {
            Some(gpd) if p > self.f_at_threshold => {
                let q = (p - self.f_at_threshold) / (1.0 - self.f_at_threshold);
                Ok(self.threshold + gpd.quantile(q))
            }
            _ => {
                let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
                Ok(self.sorted[rank - 1])
            }
        }
    }
}

/// Fit the semi-parametric CDF of one column: empirical part everywhere,
/// GPD tail above the empirical quantile at `threshold_level` when
/// `use_gpd` is set.
pub fn fit_semiparametric(
    column: &[f64],
    threshold_level: f64,
    use_gpd: bool,
) -> Result<SemiParametricCdf> {
    if column.is_empty() {
        return Err(Error::Domain("empty column".into()));
    }
    if !(threshold_level > 0.0 && threshold_level < 1.0) {
        return Err(Error::Argument(format!(
            "threshold level must lie in (0,1), got {threshold_level}"
        )));
    }
    let sorted = sorted_ascending(column);
    let threshold = empirical_quantile(&sorted, threshold_level);
    let f_at_threshold = sorted.partition_point(|&v| v <= threshold) as f64 / sorted.len() as f64;
    let gpd = if use_gpd {
        let excesses: Vec<f64> = sorted
            .iter()
            .filter(|&&v| v > threshold)
            .map(|&v| v - threshold)
            .collect();
        let mut fit = fit_gpd(&excesses)?;
        fit.threshold = threshold;
        Some(fit)
    } else {
        None
    };
    Ok(SemiParametricCdf {
        sorted,
        threshold,
        f_at_threshold,
        gpd,
    })
}

/// Fréchet(1, 2) standardization: x -> (-log F(x))^(-1/2). Values the CDF
/// maps to 1 exactly would blow up; they are replaced by the transform of
/// the (n - 0.5)/n plateau and counted.
pub fn standardize_frechet(
    data: &DMatrix<f64>,
    cdfs: &[SemiParametricCdf],
) -> Result<(DMatrix<f64>, usize)> {
    let d = data.ncols();
    if cdfs.len() != d {
        return Err(Error::Argument(format!(
            "expected {d} fitted margins, got {}",
            cdfs.len()
        )));
    }
    let mut out = DMatrix::zeros(data.nrows(), d);
    let mut plateau_hits = 0usize;
    for j in 0..d {
        let n = data.nrows() as f64;
        let plateau = (n - 0.5) / n;
        for i in 0..data.nrows() {
            let mut f = cdfs[j].cdf(data[(i, j)]);
            if f >= 1.0 {
                f = plateau;
                plateau_hits += 1;
            }
            out[(i, j)] = (-f.ln()).powf(-0.5);
        }
    }
    Ok((out, plateau_hits))
}

/// Fit every margin at the same threshold level and standardize.
pub fn standardize_pipeline(
    data: &DMatrix<f64>,
    threshold_level: f64,
    use_gpd: bool,
) -> Result<(DMatrix<f64>, Vec<SemiParametricCdf>, usize)> {
    let cdfs: Result<Vec<SemiParametricCdf>> = (0..data.ncols())
        .map(|j| {
            let col: Vec<f64> = (0..data.nrows()).map(|i| data[(i, j)]).collect();
            fit_semiparametric(&col, threshold_level, use_gpd)
        })
        .collect();
    let cdfs = cdfs?;
    let (out, plateau_hits) = standardize_frechet(data, &cdfs)?;
    Ok((out, cdfs, plateau_hits))
}
