//! Failure regions and their exponent measures under a max-linear model.
//!
//! For an extreme region C the probability P[Y in C] is approximated by
//! the exponent measure nu(C), which has closed forms for the region
//! families used here. Every formula is a sum of per-factor (per angular
//! atom) contributions; a Monte Carlo estimator over seeded simulations
//! serves as the independent check.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxlin::MaxLinearModel;
use crate::numeric::{csum, powa, CompensatedSum};
use crate::tpdm::TailMatrix;

/// Extreme set whose probability is wanted. Thresholds are in the units
/// of the model margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureRegion {
    /// Some component exceeds its threshold.
    Max { thresholds: Vec<f64> },
    /// Every component exceeds its threshold.
    Min { thresholds: Vec<f64> },
    /// The weighted sum exceeds x; weights must sum to 1.
    Sum { weights: Vec<f64>, threshold: f64 },
    /// The smallest of the per-group weighted sums exceeds x. Weights are
    /// used as given (no normalization).
    MinOfSums {
        weights: Vec<f64>,
        groups: Vec<Vec<usize>>,
        threshold: f64,
    },
    /// The largest of the per-group weighted sums exceeds x.
    MaxOfSums {
        weights: Vec<f64>,
        groups: Vec<Vec<usize>>,
        threshold: f64,
    },
}

fn check_thresholds(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Argument(format!(
            "expected {dim} thresholds, got {}",
            x.len()
        )));
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Argument("thresholds must be strictly positive".into()));
    }
    Ok(())
}

fn check_weights(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Argument(format!("expected {dim} weights, got {}", v.len())));
    }
    if v.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Argument("weights must be nonnegative".into()));
    }
    Ok(())
}

fn check_groups(groups: &[Vec<usize>], dim: usize) -> Result<()> {
    let mut seen = vec![false; dim];
    for g in groups {
        for &j in g {
            if j >= dim || seen[j] {
                return Err(Error::Argument(
                    "groups must partition the dimensions disjointly".into(),
                ));
            }
            seen[j] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Argument("groups must cover every dimension".into()));
    }
    Ok(())
}

impl FailureRegion {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            FailureRegion::Max { thresholds } | FailureRegion::Min { thresholds } => {
                check_thresholds(thresholds, dim)
            }
            FailureRegion::Sum { weights, threshold } => {
                check_weights(weights, dim)?;
                let total = csum(weights.iter().copied());
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Argument(format!(
                        "sum-region weights must sum to 1, got {total}"
                    )));
                }
                if !(*threshold > 0.0) {
                    return Err(Error::Argument("threshold must be positive".into()));
                }
                Ok(())
            }
            FailureRegion::MinOfSums { weights, groups, threshold }
            | FailureRegion::MaxOfSums { weights, groups, threshold } => {
                check_weights(weights, dim)?;
                check_groups(groups, dim)?;
                if !(*threshold > 0.0) {
                    return Err(Error::Argument("threshold must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Membership test for one observation.
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            FailureRegion::Max { thresholds } => {
                y.iter().zip(thresholds).any(|(&yi, &xi)| yi > xi)
            }
            FailureRegion::Min { thresholds } => {
                y.iter().zip(thresholds).all(|(&yi, &xi)| yi > xi)
            }
            FailureRegion::Sum { weights, threshold } => {
                csum(y.iter().zip(weights).map(|(&yi, &vi)| vi * yi)) > *threshold
            }
            FailureRegion::MinOfSums { weights, groups, threshold } => {
                groups
                    .iter()
                    .map(|g| csum(g.iter().map(|&j| weights[j] * y[j])))
                    .fold(f64::INFINITY, f64::min)
                    > *threshold
            }
            FailureRegion::MaxOfSums { weights, groups, threshold } => {
                groups
                    .iter()
                    .map(|g| csum(g.iter().map(|&j| weights[j] * y[j])))
                    .fold(f64::NEG_INFINITY, f64::max)
                    > *threshold
            }
        }
    }

    /// Same region with all thresholds scaled by t.
    pub fn scaled(&self, t: f64) -> FailureRegion {
        let mut out = self.clone();
        match &mut out {
            FailureRegion::Max { thresholds } | FailureRegion::Min { thresholds } => {
                for x in thresholds {
                    *x *= t;
                }
            }
            FailureRegion::Sum { threshold, .. }
            | FailureRegion::MinOfSums { threshold, .. }
            | FailureRegion::MaxOfSums { threshold, .. } => *threshold *= t,
        }
        out
    }
}

/// nu(C_max(x)) = sum_l max_j (a_jl / x_j)^alpha.
pub fn nu_max(model: &MaxLinearModel, x: &[f64]) -> Result<f64> {
    check_thresholds(x, model.dim())?;
    let a = model.coefficients();
    let alpha = model.alpha();
    Ok(csum((0..model.n_factors()).map(|l| {
        (0..model.dim())
            .map(|j| powa(a[(j, l)] / x[j], alpha))
            .fold(f64::NEG_INFINITY, f64::max)
    })))
}

/// nu(C_min(x)) = sum_l min_j (a_jl / x_j)^alpha; any zero loading in a
/// column kills that column's contribution.
pub fn nu_min(model: &MaxLinearModel, x: &[f64]) -> Result<f64> {
    check_thresholds(x, model.dim())?;
    let a = model.coefficients();
    let alpha = model.alpha();
    Ok(csum((0..model.n_factors()).map(|l| {
        (0..model.dim())
            .map(|j| powa(a[(j, l)] / x[j], alpha))
            .fold(f64::INFINITY, f64::min)
    })))
}

/// nu(C_sum(v, x)) = x^-alpha sum_l (v^T a_l)^alpha for weights summing to 1.
pub fn nu_sum(model: &MaxLinearModel, v: &[f64], x: f64) -> Result<f64> {
    check_weights(v, model.dim())?;
    let total = csum(v.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "sum-region weights must sum to 1, got {total}"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let a = model.coefficients();
    let alpha = model.alpha();
    Ok(powa(x, -alpha)
        * csum((0..model.n_factors()).map(|l| {
            powa(csum((0..model.dim()).map(|j| v[j] * a[(j, l)])), alpha)
        })))
}

/// TPDM-only route for the sum region, available exactly when alpha is 1
/// or 2: x^-1 sum_j v_j sigma_jj, respectively x^-2 v^T Sigma v.
pub fn nu_sum_tpdm(tail: &TailMatrix, v: &[f64], x: f64) -> Result<f64> {
    check_weights(v, tail.dim())?;
    if !(x > 0.0) {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let sigma = tail.sigma();
    if tail.alpha() == 1.0 {
        Ok(csum((0..tail.dim()).map(|j| v[j] * sigma[(j, j)])) / x)
    } else if tail.alpha() == 2.0 {
        let mut quad = CompensatedSum::new();
        for j in 0..tail.dim() {
            for k in 0..tail.dim() {
                quad.add(v[j] * sigma[(j, k)] * v[k]);
            }
        }
        Ok(quad.value() / (x * x))
    } else {
        Err(Error::Argument(format!(
            "TPDM-only sum formula needs alpha 1 or 2, got {}",
            tail.alpha()
        )))
    }
}

fn group_sums(a: &DMatrix<f64>, v: &[f64], groups: &[Vec<usize>], l: usize) -> Vec<f64> {
    groups
        .iter()
        .map(|g| csum(g.iter().map(|&j| v[j] * a[(j, l)])))
        .collect()
}

/// nu of the min-of-weighted-sums region: per column, the contribution is
/// (min_g sum_{j in g} v_j a_jl / x)^alpha.
pub fn nu_min_of_sums(
    model: &MaxLinearModel,
    v: &[f64],
    groups: &[Vec<usize>],
    x: f64,
) -> Result<f64> {
    check_weights(v, model.dim())?;
    check_groups(groups, model.dim())?;
    if !(x > 0.0) {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let alpha = model.alpha();
    Ok(csum((0..model.n_factors()).map(|l| {
        let s = group_sums(model.coefficients(), v, groups, l)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        powa(s / x, alpha)
    })))
}

/// nu of the max-of-weighted-sums region.
pub fn nu_max_of_sums(
    model: &MaxLinearModel,
    v: &[f64],
    groups: &[Vec<usize>],
    x: f64,
) -> Result<f64> {
    check_weights(v, model.dim())?;
    check_groups(groups, model.dim())?;
    if !(x > 0.0) {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let alpha = model.alpha();
    Ok(csum((0..model.n_factors()).map(|l| {
        let s = group_sums(model.coefficients(), v, groups, l)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        powa(s / x, alpha)
    })))
}

/// Closed-form nu for a region described by the enum.
pub fn nu_region(model: &MaxLinearModel, region: &FailureRegion) -> Result<f64> {
    region.validate(model.dim())?;
    match region {
        FailureRegion::Max { thresholds } => nu_max(model, thresholds),
        FailureRegion::Min { thresholds } => nu_min(model, thresholds),
        FailureRegion::Sum { weights, threshold } => nu_sum(model, weights, *threshold),
        FailureRegion::MinOfSums { weights, groups, threshold } => {
            nu_min_of_sums(model, weights, groups, *threshold)
        }
        FailureRegion::MaxOfSums { weights, groups, threshold } => {
            nu_max_of_sums(model, weights, groups, *threshold)
        }
    }
}

/// Per-factor (per angular atom) contributions to nu; their compensated
/// sum equals nu_region up to summation rounding.
pub fn nu_region_contributions(
    model: &MaxLinearModel,
    region: &FailureRegion,
) -> Result<Vec<f64>> {
    region.validate(model.dim())?;
    let a = model.coefficients();
    let alpha = model.alpha();
    let d = model.dim();
    let term = |l: usize| -> f64 {
        match region {
            FailureRegion::Max { thresholds } => (0..d)
                .map(|j| powa(a[(j, l)] / thresholds[j], alpha))
                .fold(f64::NEG_INFINITY, f64::max),
            FailureRegion::Min { thresholds } => (0..d)
                .map(|j| powa(a[(j, l)] / thresholds[j], alpha))
                .fold(f64::INFINITY, f64::min),
            FailureRegion::Sum { weights, threshold } => {
                powa(csum((0..d).map(|j| weights[j] * a[(j, l)])) / threshold, alpha)
            }
            FailureRegion::MinOfSums { weights, groups, threshold } => {
                let s = group_sums(a, weights, groups, l)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                powa(s / threshold, alpha)
            }
            FailureRegion::MaxOfSums { weights, groups, threshold } => {
                let s = group_sums(a, weights, groups, l)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                powa(s / threshold, alpha)
            }
        }
    };
    Ok((0..model.n_factors()).map(term).collect())
}

const BRACKET_CAP: f64 = 1e30;
const BISECT_ITERS: usize = 200;
const BISECT_RTOL: f64 = 1e-12;

/// Radius r with f(r w) = x for a nonnegative f that is nondecreasing
/// along rays with f(0) = 0. None: f stays below x up to the bracket cap
/// (zero contribution). Err: f is above x all the way down to zero, which
/// contradicts the ray monotonicity assumptions.
fn ray_crossing(f: &dyn Fn(&[f64]) -> f64, w: &[f64], x: f64) -> Result<Option<f64>> {
    let eval = |r: f64| -> f64 {
        let scaled: Vec<f64> = w.iter().map(|&wi| r * wi).collect();
        f(&scaled)
    };
    let mut lo;
    let mut hi;
    if eval(1.0) >= x {
        hi = 1.0;
        lo = 0.5;
        while eval(lo) >= x {
            lo *= 0.5;
            if lo < 1.0 / BRACKET_CAP {
                return Err(Error::Domain(
                    "functional exceeds the threshold arbitrarily close to the origin; \
                     not monotone along rays with f(0) = 0"
                        .into(),
                ));
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while eval(hi) < x {
            hi *= 2.0;
            if hi > BRACKET_CAP {
                return Ok(None);
            }
        }
    }
    for _ in 0..BISECT_ITERS {
        if (hi - lo) <= BISECT_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid) >= x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// nu(C_f(x)) = sum_l ||a_l||_alpha^alpha * r_*(a_l / ||a_l||_alpha)^-alpha
/// for a positively homogeneous-like f, with r_* found by bracketed
/// bisection along each atom's ray.
pub fn nu_generic(
    model: &MaxLinearModel,
    f: &dyn Fn(&[f64]) -> f64,
    x: f64,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let alpha = model.alpha();
    let mut acc = CompensatedSum::new();
    for atom in model.angular_atoms() {
        let w: Vec<f64> = atom.atom.iter().copied().collect();
        if let Some(r_star) = ray_crossing(&f, &w, x)? {
            acc.add(atom.mass * powa(r_star, -alpha));
        }
    }
    Ok(acc.value())
}

/// Region families with one free scalar threshold, all with
/// nu(x) = nu(1) * x^-alpha.
#[derive(Debug, Clone)]
pub enum RegionFamily {
    /// C_max at thresholds x * 1.
    MaxEqual,
    /// C_min at thresholds x * 1.
    MinEqual,
    Sum { weights: Vec<f64> },
    MinOfSums { weights: Vec<f64>, groups: Vec<Vec<usize>> },
    MaxOfSums { weights: Vec<f64>, groups: Vec<Vec<usize>> },
}

impl RegionFamily {
    pub fn region_at(&self, dim: usize, x: f64) -> FailureRegion {
        match self {
            RegionFamily::MaxEqual => FailureRegion::Max { thresholds: vec![x; dim] },
            RegionFamily::MinEqual => FailureRegion::Min { thresholds: vec![x; dim] },
            RegionFamily::Sum { weights } => FailureRegion::Sum {
                weights: weights.clone(),
                threshold: x,
            },
            RegionFamily::MinOfSums { weights, groups } => FailureRegion::MinOfSums {
                weights: weights.clone(),
                groups: groups.clone(),
                threshold: x,
            },
            RegionFamily::MaxOfSums { weights, groups } => FailureRegion::MaxOfSums {
                weights: weights.clone(),
                groups: groups.clone(),
                threshold: x,
            },
        }
    }
}

/// Threshold x with nu(region at x) = target, using the exact homogeneity
/// x = (nu(1) / target)^(1/alpha).
pub fn calibrate_threshold(
    model: &MaxLinearModel,
    family: &RegionFamily,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::Argument(format!("target must be positive, got {target}")));
    }
    let nu_at_one = nu_region(model, &family.region_at(model.dim(), 1.0))?;
    if nu_at_one == 0.0 {
        return Err(Error::Degenerate(
            "region has zero exponent measure at every threshold".into(),
        ));
    }
    Ok(powa(nu_at_one / target, 1.0 / model.alpha()))
}

/// Threshold x with nu_generic(f, x) = target for strictly decreasing
/// nu(x), by bracketed bisection on x.
pub fn calibrate_generic(
    model: &MaxLinearModel,
    f: &dyn Fn(&[f64]) -> f64,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::Argument(format!("target must be positive, got {target}")));
    }
    let nu_at = |x: f64| nu_generic(model, f, x);
    let mut lo = 1.0f64;
    let mut hi = 1.0f64;
    while nu_at(hi)? > target {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::Degenerate("target unreachable: nu stays above it".into()));
        }
    }
    while nu_at(lo)? < target {
        lo *= 0.5;
        if lo < 1.0 / BRACKET_CAP {
            return Err(Error::Degenerate("target unreachable: nu stays below it".into()));
        }
    }
    for _ in 0..BISECT_ITERS {
        if (hi - lo) <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if nu_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// nu-based probability with its caveat flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub nu: f64,
    /// min(nu, 1); nu approximates the probability only for extreme
    /// regions.
    pub probability: f64,
    /// nu > 0.1: the region may not be extreme enough for the
    /// approximation to be accurate.
    pub extreme_warning: bool,
    /// nu exceeded 1 and was clamped.
    pub clamped: bool,
}

/// P[Y in C] ~= nu(C) for extreme C.
pub fn failure_probability(
    model: &MaxLinearModel,
    region: &FailureRegion,
) -> Result<ProbabilityEstimate> {
    let nu = nu_region(model, region)?;
    Ok(ProbabilityEstimate {
        nu,
        probability: nu.min(1.0),
        extreme_warning: nu > 0.1,
        clamped: nu > 1.0,
    })
}

/// Monte Carlo failure probability with binomial standard error. Row
/// draws are addressed by (seed, row, factor), so the count is identical
/// for any chunking across workers.
pub fn mc_failure_probability(
    model: &MaxLinearModel,
    region: &FailureRegion,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n < 10_000 {
        return Err(Error::Argument(format!(
            "Monte Carlo estimate needs at least 10^4 simulations, got {n}"
        )));
    }
    region.validate(model.dim())?;
    const CHUNK: usize = 8192;
    let n_chunks = n.div_ceil(CHUNK);
    let hits: usize = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut row = vec![0.0f64; model.dim()];
            let mut count = 0usize;
            for i in lo..hi {
                model.simulate_row_into(i, seed, &mut row);
                if region.contains(&row) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok((p, se))
}

/// Plain exceedance fraction of the data rows over the region.
pub fn empirical_failure_probability(
    data: &DMatrix<f64>,
    region: &FailureRegion,
) -> Result<f64> {
    region.validate(data.ncols())?;
    let mut hits = 0usize;
    let mut row = vec![0.0f64; data.ncols()];
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            row[j] = data[(i, j)];
        }
        if region.contains(&row) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng::CounterRng;

    fn a3_model() -> MaxLinearModel {
        MaxLinearModel::new(fixtures::a3(), 4.0).unwrap()
    }

    fn identity_model(d: usize, alpha: f64) -> MaxLinearModel {
        MaxLinearModel::new(DMatrix::identity(d, d), alpha).unwrap()
    }

    #[test]
    fn nu_max_identity_counts_dimensions() {
        let m = identity_model(4, 2.0);
        assert!((nu_max(&m, &[1.0; 4]).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn nu_max_single_column() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.5]);
        let m = MaxLinearModel::new(a, 4.0).unwrap();
        let x = [2.0, 1.0, 0.25];
        let expected = (2.0f64 / 1.0).powi(4); // max_j a_j / x_j = 2
        assert!((nu_max(&m, &x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn nu_max_calibration_round_trip_on_a3() {
        let m = a3_model();
        let x = calibrate_threshold(&m, &RegionFamily::MaxEqual, 0.1).unwrap();
        let nu = nu_max(&m, &vec![x; 5]).unwrap();
        assert!((nu - 0.1).abs() < 1e-12, "recomputed nu = {nu}");
    }

    #[test]
    fn nu_min_identity_is_zero() {
        let m = identity_model(3, 2.0);
        assert_eq!(nu_min(&m, &[0.5, 1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn nu_min_single_positive_column() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.5]);
        let m = MaxLinearModel::new(a, 4.0).unwrap();
        let x = [1.0, 1.0, 1.0];
        assert!((nu_min(&m, &x).unwrap() - 0.5f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn nu_min_a2_uses_only_the_dense_column() {
        // Columns 2..5 of A2 all contain a zero loading.
        let a2 = fixtures::a2();
        let m = MaxLinearModel::new(a2.clone(), 4.0).unwrap();
        let x = vec![2.0; 5];
        let expected = (0..5)
            .map(|j| (a2[(j, 0)] / 2.0).powi(4))
            .fold(f64::INFINITY, f64::min);
        assert!((nu_min(&m, &x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn nu_sum_single_column_uniform_weights() {
        let a = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let m = MaxLinearModel::new(a, 3.0).unwrap();
        let v = vec![0.25; 4];
        let x = 2.0f64;
        let expected = x.powf(-3.0) * 2.5f64.powf(3.0); // mean = 2.5
        assert!((nu_sum(&m, &v, x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn nu_sum_matches_tpdm_routes() {
        let rng = CounterRng::new(50);
        let mut ctr = 0u64;
        for trial in 0..100 {
            let alpha = if trial % 2 == 0 { 1.0 } else { 2.0 };
            let d = 3 + trial % 4;
            let q = 2 + trial % 5;
            let mut a = DMatrix::zeros(d, q);
            for j in 0..d {
                for l in 0..q {
                    a[(j, l)] = rng.uniform_at(ctr) * 1.5;
                    ctr += 1;
                }
            }
            for l in 0..q {
                a[(l % d, l)] += 0.1; // keep every column loaded
            }
            let m = MaxLinearModel::new(a, alpha).unwrap();
            let raw: Vec<f64> = (0..d)
                .map(|_| {
                    ctr += 1;
                    rng.uniform_at(ctr)
                })
                .collect();
            let total = csum(raw.iter().copied());
            let v: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let x = 1.0 + rng.uniform_at(ctr) * 3.0;
            ctr += 1;
            let direct = nu_sum(&m, &v, x).unwrap();
            let via_tpdm = nu_sum_tpdm(&m.tpdm(), &v, x).unwrap();
            assert!(
                (direct - via_tpdm).abs() <= 1e-12,
                "alpha {alpha}: {direct} vs {via_tpdm}"
            );
        }
    }

    #[test]
    fn nu_generic_agrees_with_sum_and_max() {
        let m = a3_model();
        let v = [0.2, 0.2, 0.2, 0.2, 0.2];
        let f_sum = move |y: &[f64]| csum(y.iter().zip(&v).map(|(&yi, &vi)| vi * yi));
        let x = 3.0;
        let direct = nu_sum(&m, &v, x).unwrap();
        let generic = nu_generic(&m, &f_sum, x).unwrap();
        assert!((direct - generic).abs() <= 1e-10 * direct.max(1.0));

        let f_max = |y: &[f64]| y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gm = nu_generic(&m, &f_max, x).unwrap();
        let dm = nu_max(&m, &vec![x; 5]).unwrap();
        assert!((gm - dm).abs() <= 1e-10 * dm.max(1.0));
    }

    #[test]
    fn nu_generic_product_region_matches_analytic_crossing() {
        // f(y) = prod y_j is homogeneous of degree d; r_* = (x / prod w_j)^(1/d)
        // for all-positive atoms and the zero-loaded columns contribute 0.
        let m = a3_model();
        let d = 5usize;
        let x = 2.0;
        let f = |y: &[f64]| y.iter().product::<f64>();
        let generic = nu_generic(&m, &f, x).unwrap();
        let mut expected = 0.0;
        for atom in m.angular_atoms() {
            let prod: f64 = atom.atom.iter().product();
            if prod > 0.0 {
                let r_star = (x / prod).powf(1.0 / d as f64);
                expected += atom.mass * r_star.powf(-4.0);
            }
        }
        assert!(
            (generic - expected).abs() <= 1e-10 * expected.max(1.0),
            "{generic} vs {expected}"
        );
    }

    #[test]
    fn min_of_sums_single_group_reduces_to_sum() {
        let m = a3_model();
        let v = [0.3, 1.7, 1.0, 0.3, 1.7];
        let total = csum(v.iter().copied());
        let groups = vec![(0..5).collect::<Vec<_>>()];
        let x = 4.0;
        let grouped = nu_min_of_sums(&m, &v, &groups, x).unwrap();
        // Normalizing weights rescales the threshold by the same factor.
        let normalized: Vec<f64> = v.iter().map(|w| w / total).collect();
        let plain = nu_sum(&m, &normalized, x / total).unwrap();
        assert!((grouped - plain).abs() <= 1e-12 * plain.max(1.0));
        let grouped_max = nu_max_of_sums(&m, &v, &groups, x).unwrap();
        assert!((grouped_max - plain).abs() <= 1e-12 * plain.max(1.0));
    }

    #[test]
    fn min_of_sums_zero_group_kills_column() {
        // Group {0} has weight zero on a column loading only dimension 0.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let m = MaxLinearModel::new(a, 2.0).unwrap();
        let v = [0.0, 1.0];
        let groups = vec![vec![0], vec![1]];
        assert_eq!(nu_min_of_sums(&m, &v, &groups, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn grouped_sums_agree_with_generic_handle() {
        let m = a3_model();
        let v = [0.3, 1.7, 1.0, 0.3, 1.7];
        let groups = vec![vec![0, 1], vec![2, 3], vec![4]];
        let x = 2.5;
        let f_min = {
            let v = v;
            let groups = groups.clone();
            move |y: &[f64]| {
                groups
                    .iter()
                    .map(|g| csum(g.iter().map(|&j| v[j] * y[j])))
                    .fold(f64::INFINITY, f64::min)
            }
        };
        let f_max = {
            let v = v;
            let groups = groups.clone();
            move |y: &[f64]| {
                groups
                    .iter()
                    .map(|g| csum(g.iter().map(|&j| v[j] * y[j])))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        };
        let closed_min = nu_min_of_sums(&m, &v, &groups, x).unwrap();
        let closed_max = nu_max_of_sums(&m, &v, &groups, x).unwrap();
        let gen_min = nu_generic(&m, &f_min, x).unwrap();
        let gen_max = nu_generic(&m, &f_max, x).unwrap();
        assert!((closed_min - gen_min).abs() <= 1e-10 * closed_min.max(1e-30));
        assert!((closed_max - gen_max).abs() <= 1e-10 * closed_max.max(1.0));
    }

    #[test]
    fn calibrate_threshold_closed_form() {
        // nu(1) = 10 and target 0.1 at alpha = 4 forces x = 100^(1/4).
        let a = DMatrix::from_column_slice(1, 1, &[10.0f64.powf(0.25)]);
        let m = MaxLinearModel::new(a, 4.0).unwrap();
        let nu1 = nu_max(&m, &[1.0]).unwrap();
        assert!((nu1 - 10.0).abs() < 1e-10);
        let x = calibrate_threshold(&m, &RegionFamily::MaxEqual, 0.1).unwrap();
        assert!((x - 100.0f64.powf(0.25)).abs() < 1e-10);
        let region = RegionFamily::MaxEqual.region_at(1, x);
        let nu = nu_region(&m, &region).unwrap();
        assert!((nu - 0.1).abs() <= 1e-10);
    }

    #[test]
    fn calibrate_generic_product_region_scaling() {
        // Degree-d homogeneity: x = (nu(1) / target)^(d / alpha).
        let m = a3_model();
        let f = |y: &[f64]| y.iter().product::<f64>();
        let target = 0.1;
        let x = calibrate_generic(&m, &f, target).unwrap();
        let nu1 = nu_generic(&m, &f, 1.0).unwrap();
        let analytic = (nu1 / target).powf(5.0 / 4.0);
        assert!(
            (x - analytic).abs() <= 1e-8 * analytic,
            "bisection {x} vs analytic {analytic}"
        );
        let check = nu_generic(&m, &f, x).unwrap();
        assert!((check - target).abs() <= 1e-9);
    }

    #[test]
    fn probability_flags_and_homogeneity() {
        let m = a3_model();
        let x = calibrate_threshold(
            &m,
            &RegionFamily::Sum { weights: vec![0.2; 5] },
            1e-3,
        )
        .unwrap();
        let region = FailureRegion::Sum { weights: vec![0.2; 5], threshold: x };
        let p = failure_probability(&m, &region).unwrap();
        assert!((p.nu - 1e-3).abs() < 1e-12);
        assert!(!p.extreme_warning && !p.clamped);

        // Doubling the threshold divides nu by 2^alpha = 16.
        let doubled = failure_probability(&m, &region.scaled(2.0)).unwrap();
        assert!((p.nu / doubled.nu - 16.0).abs() < 1e-9);

        let tight = failure_probability(&m, &region.scaled(0.01)).unwrap();
        assert!(tight.extreme_warning && tight.clamped);
        assert_eq!(tight.probability, 1.0);
    }

    #[test]
    fn nu_scaling_is_homogeneous_of_order_alpha() {
        let m = a3_model();
        let regions = [
            FailureRegion::Max { thresholds: vec![1.5, 2.0, 1.0, 3.0, 2.5] },
            FailureRegion::Min { thresholds: vec![1.5, 2.0, 1.0, 3.0, 2.5] },
            FailureRegion::Sum { weights: vec![0.2; 5], threshold: 2.0 },
            FailureRegion::MinOfSums {
                weights: vec![0.3, 1.7, 1.0, 0.3, 1.7],
                groups: vec![vec![0, 1], vec![2, 3, 4]],
                threshold: 2.0,
            },
        ];
        for region in &regions {
            let nu1 = nu_region(&m, region).unwrap();
            for &t in &[0.5, 2.0, 7.3] {
                let nut = nu_region(&m, &region.scaled(t)).unwrap();
                assert!(
                    (nut - t.powf(-4.0) * nu1).abs() <= 1e-12 * nu1.max(1e-12),
                    "homogeneity violated at t = {t}"
                );
            }
        }
    }

    #[test]
    fn nu_is_monotone_in_thresholds() {
        let m = a3_model();
        let base = vec![1.0; 5];
        let nu0 = nu_max(&m, &base).unwrap();
        for j in 0..5 {
            let mut x = base.clone();
            x[j] = 1.5;
            assert!(nu_max(&m, &x).unwrap() <= nu0);
        }
        let nu0 = nu_min(&m, &base).unwrap();
        for j in 0..5 {
            let mut x = base.clone();
            x[j] = 1.5;
            assert!(nu_min(&m, &x).unwrap() <= nu0);
        }
    }

    #[test]
    fn nu_min_never_exceeds_nu_max() {
        let m = a3_model();
        for &x in &[0.5, 1.0, 4.0] {
            let lo = nu_min(&m, &vec![x; 5]).unwrap();
            let hi = nu_max(&m, &vec![x; 5]).unwrap();
            assert!(lo <= hi);
        }
    }

    #[test]
    fn mc_covers_everything_when_threshold_vanishes() {
        let m = identity_model(2, 2.0);
        let region = FailureRegion::Max { thresholds: vec![1e-9, 1e-9] };
        let (p, _) = mc_failure_probability(&m, &region, 10_000, 3).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn mc_min_region_for_independent_model_is_empty() {
        // Joint exceedance probability for independent margins is
        // (1 - exp(-x^-2))^3 ~ 1.4e-9 at x = 30: no hits in 10^4 draws.
        let m = identity_model(3, 2.0);
        let region = FailureRegion::Min { thresholds: vec![30.0, 30.0, 30.0] };
        let (p, _) = mc_failure_probability(&m, &region, 10_000, 4).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn empirical_probability_edge_cases_and_mc_equality() {
        let m = a3_model();
        let sample = m.simulate(10_000, 99);
        let region = FailureRegion::Max { thresholds: vec![5.0; 5] };
        let (p_mc, _) = mc_failure_probability(&m, &region, 10_000, 99).unwrap();
        let p_emp = empirical_failure_probability(&sample, &region).unwrap();
        assert_eq!(p_mc, p_emp, "same seed, same indicator, same count");

        let tiny = FailureRegion::Max { thresholds: vec![1e-12; 5] };
        assert_eq!(empirical_failure_probability(&sample, &tiny).unwrap(), 1.0);
        let huge = FailureRegion::Min { thresholds: vec![1e12; 5] };
        assert_eq!(empirical_failure_probability(&sample, &huge).unwrap(), 0.0);
    }

    #[test]
    fn per_column_contributions_sum_to_nu() {
        let m = a3_model();
        let regions = [
            FailureRegion::Max { thresholds: vec![2.0; 5] },
            FailureRegion::Min { thresholds: vec![2.0; 5] },
            FailureRegion::Sum { weights: vec![0.2; 5], threshold: 3.0 },
            FailureRegion::MinOfSums {
                weights: vec![0.3, 1.7, 1.0, 0.3, 1.7],
                groups: vec![vec![0, 1], vec![2, 3, 4]],
                threshold: 2.0,
            },
        ];
        for region in &regions {
            let contribs = nu_region_contributions(&m, region).unwrap();
            assert_eq!(contribs.len(), m.n_factors());
            assert!(contribs.iter().all(|&c| c >= 0.0));
            let total = csum(contribs.iter().copied());
            let nu = nu_region(&m, region).unwrap();
            assert!((total - nu).abs() <= 1e-12 * nu.max(1e-12));
        }
    }

    #[test]
    fn sum_region_rejects_unnormalized_weights() {
        let m = a3_model();
        assert!(nu_sum(&m, &[0.5; 5], 1.0).is_err());
        let region = FailureRegion::Sum { weights: vec![0.5; 5], threshold: 1.0 };
        assert!(region.validate(5).is_err());
        // Grouped families accept unnormalized weights.
        let grouped = FailureRegion::MinOfSums {
            weights: vec![0.3, 1.7, 1.0, 0.3, 1.7],
            groups: vec![vec![0, 1, 2], vec![3, 4]],
            threshold: 1.0,
        };
        assert!(grouped.validate(5).is_ok());
    }
}
