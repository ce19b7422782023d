//! Tail pairwise dependence matrix (TPDM) estimation.
//!
//! The sample is first put in polar coordinates under the L_alpha norm,
//! R_i = ||X_i||_alpha and W_i = X_i / R_i. Radii above a high quantile r0
//! locate the extreme observations; the angular mass and the TPDM
//!
//! sigma_jk = (r0^alpha / n) * sum_{i : R_i > r0} (W_ij * W_ik)^(alpha/2)
//!
//! are estimated from those exceedances only. The matrix is symmetric with
//! nonnegative entries and positive semi-definite up to sampling noise.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{csum, empirical_quantile, powa, sorted_ascending, CompensatedSum};

/// A validated TPDM: symmetric, nonnegative, PSD within tolerance, together
/// with the tail index the L_alpha norm was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMatrix {
    sigma: DMatrix<f64>,
    alpha: f64,
}

/// Diagnostic report of the TPDM structural checks. Pure report: building it
/// never fails, callers decide what to do with violations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TpdmValidation {
    pub dim: usize,
    /// max |sigma_jk - sigma_kj|
    pub symmetry_defect: f64,
    /// most negative entry (0 if none)
    pub most_negative_entry: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// eigenvalues >= -psd_tolerance are accepted as PSD
    pub psd_tolerance: f64,
    pub symmetric: bool,
    pub nonnegative: bool,
    pub positive_semidefinite: bool,
}

impl TpdmValidation {
    pub fn is_valid(&self) -> bool {
        self.symmetric && self.nonnegative && self.positive_semidefinite
    }
}

/// Relative PSD tolerance: eigenvalues down to -1e-10 * trace pass.
/// Scale-free, so validation does not depend on measurement units.
pub const PSD_TOL_REL: f64 = 1e-10;
const SYMMETRY_TOL_REL: f64 = 1e-12;
const ENTRY_TOL_REL: f64 = 1e-12;

/// Structural checks for a candidate TPDM: symmetry defect, most negative
/// entry, smallest eigenvalue. Works on any square matrix.
pub fn validate_tpdm(matrix: &DMatrix<f64>) -> TpdmValidation {
    let d = matrix.nrows();
    assert_eq!(d, matrix.ncols(), "validate_tpdm needs a square matrix");
    let trace = matrix.diagonal().iter().sum::<f64>();
    let scale = trace.abs().max(1.0);

    let mut symmetry_defect = 0.0f64;
    let mut most_negative = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            symmetry_defect = symmetry_defect.max((matrix[(j, k)] - matrix[(k, j)]).abs());
            most_negative = most_negative.min(matrix[(j, k)]);
        }
    }

    let symmetrized = (matrix + matrix.transpose()) * 0.5;
    let min_eigenvalue = symmetrized
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let psd_tolerance = PSD_TOL_REL * scale;

    TpdmValidation {
        dim: d,
        symmetry_defect,
        most_negative_entry: most_negative,
        min_eigenvalue,
        trace,
        psd_tolerance,
        symmetric: symmetry_defect <= SYMMETRY_TOL_REL * scale,
        nonnegative: most_negative >= -ENTRY_TOL_REL * scale,
        positive_semidefinite: min_eigenvalue >= -psd_tolerance,
    }
}

impl TailMatrix {
    /// Validates symmetry, nonnegativity and positive semi-definiteness.
    pub fn new(sigma: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(Error::Domain(format!(
                "TPDM must be square, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::Argument(format!("tail index must be positive, got {alpha}")));
        }
        let report = validate_tpdm(&sigma);
        if !report.symmetric {
            return Err(Error::Domain(format!(
                "matrix is not symmetric (defect {:.3e})",
                report.symmetry_defect
            )));
        }
        if !report.nonnegative {
            return Err(Error::Domain(format!(
                "matrix has negative entries (most negative {:.3e})",
                report.most_negative_entry
            )));
        }
        if !report.positive_semidefinite {
            return Err(Error::Domain(format!(
                "matrix is not positive semi-definite (min eigenvalue {:.3e})",
                report.min_eigenvalue
            )));
        }
        Ok(TailMatrix { sigma, alpha })
    }

    /// Skips validation. For matrices that are PSD-nonnegative by
    /// construction, e.g. B * B^T with B nonnegative.
    pub fn new_unchecked(sigma: DMatrix<f64>, alpha: f64) -> Self {
        TailMatrix { sigma, alpha }
    }

    /// B * B^T for entrywise-nonnegative B. Completely positive by
    /// construction, hence a valid TPDM.
    pub fn from_factor(b: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        if b.iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("factor matrix has negative entries".into()));
        }
        Ok(TailMatrix {
            sigma: b * b.transpose(),
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn into_sigma(self) -> DMatrix<f64> {
        self.sigma
    }

    pub fn trace(&self) -> f64 {
        self.sigma.diagonal().iter().sum()
    }

    pub fn validation(&self) -> TpdmValidation {
        validate_tpdm(&self.sigma)
    }
}

/// Sample in polar coordinates under the L_alpha norm.
#[derive(Debug, Clone)]
pub struct PolarSample {
    /// R_i = ||X_i||_alpha, one per retained row.
    pub radii: Vec<f64>,
    /// W_i = X_i / R_i as rows; every row has unit L_alpha norm.
    pub angles: DMatrix<f64>,
    pub alpha: f64,
    /// Rows removed because all entries were zero (W undefined at 0).
    pub dropped_zero_rows: usize,
}

impl PolarSample {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.angles.ncols()
    }
}

/// Estimated total angular mass together with the radial threshold it came
/// from: m_hat = r0^alpha * n_exc / n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassEstimate {
    pub m_hat: f64,
    pub r0: f64,
    pub n_exc: usize,
    /// Retained sample size the exceedance fraction refers to.
    pub n: usize,
    pub quantile_level: f64,
    pub alpha: f64,
}

/// Polar decomposition of nonnegative data rows. All-zero rows are dropped
/// and counted; negative entries are a domain error.
pub fn polar_transform(data: &DMatrix<f64>, alpha: f64) -> Result<PolarSample> {
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("alpha must be positive, got {alpha}")));
    }
    if let Some(x) = data.iter().find(|&&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Domain(format!(
            "polar transform needs nonnegative finite data, found {x}"
        )));
    }
    let d = data.ncols();
    let mut radii = Vec::with_capacity(data.nrows());
    let mut angle_rows: Vec<f64> = Vec::with_capacity(data.nrows() * d);
    let mut dropped = 0usize;
    for i in 0..data.nrows() {
        let row = data.row(i);
        let r = powa(csum(row.iter().map(|&x| powa(x, alpha))), 1.0 / alpha);
        if r == 0.0 {
            dropped += 1;
            continue;
        }
        radii.push(r);
        angle_rows.extend(row.iter().map(|&x| x / r));
    }
    let n = radii.len();
    Ok(PolarSample {
        radii,
        angles: DMatrix::from_row_slice(n, d, &angle_rows),
        alpha,
        dropped_zero_rows: dropped,
    })
}

/// Angular-mass estimate at a radial threshold taken as an empirical
/// quantile of the radii.
pub fn estimate_mass(polar: &PolarSample, quantile_level: f64) -> Result<MassEstimate> {
    if !(quantile_level > 0.0 && quantile_level < 1.0) {
        return Err(Error::Argument(format!(
            "quantile level must lie in (0,1), got {quantile_level}"
        )));
    }
    if polar.is_empty() {
        return Err(Error::Domain("empty polar sample".into()));
    }
    let sorted = sorted_ascending(&polar.radii);
    let r0 = empirical_quantile(&sorted, quantile_level);
    let n = polar.len();
    let n_exc = polar.radii.iter().filter(|&&r| r > r0).count();
    if n_exc == 0 {
        return Err(Error::Degenerate(format!(
            "no radii exceed r0 = {r0} at level {quantile_level}"
        )));
    }
    Ok(MassEstimate {
        m_hat: powa(r0, polar.alpha) * n_exc as f64 / n as f64,
        r0,
        n_exc,
        n,
        quantile_level,
        alpha: polar.alpha,
    })
}

/// (level, mass estimate) table over a grid of quantile levels, used to
/// pick a threshold where the mass estimates are stable. Levels at which
/// no radius exceeds the quantile are skipped.
pub fn mass_stability_table(polar: &PolarSample, levels: &[f64]) -> Vec<MassEstimate> {
    levels
        .iter()
        .filter_map(|&lv| estimate_mass(polar, lv).ok())
        .collect()
}

/// Default stability grid: 0.80 to 0.995 in steps of 0.005.
pub fn default_stability_levels() -> Vec<f64> {
    (0..40).map(|i| 0.80 + 0.005 * i as f64).collect()
}

/// TPDM estimate plus its validation report. Sampling noise can push the
/// smallest eigenvalue slightly negative; that is recorded as a warning
/// rather than an error.
#[derive(Debug, Clone)]
pub struct TpdmEstimate {
    pub matrix: TailMatrix,
    pub validation: TpdmValidation,
    pub psd_warning: bool,
}

/// Empirical TPDM from the angular components of the radial exceedances.
///
/// The per-entry exceedance sums run over fixed index chunks with
/// compensated accumulation, so the result is identical for any number of
/// worker threads.
pub fn estimate_tpdm(polar: &PolarSample, mass: &MassEstimate) -> Result<TpdmEstimate> {
    if (polar.alpha - mass.alpha).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "alpha mismatch: polar sample has {}, mass estimate has {}",
            polar.alpha, mass.alpha
        )));
    }
    if mass.n != polar.len() {
        return Err(Error::Argument(
            "mass estimate was computed from a different sample".into(),
        ));
    }
    let d = polar.dim();
    let half_alpha = polar.alpha / 2.0;
    let exceed_idx: Vec<usize> = (0..polar.len())
        .filter(|&i| polar.radii[i] > mass.r0)
        .collect();
    let scale = powa(mass.r0, polar.alpha) / mass.n as f64;

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j..d).map(move |k| (j, k)))
        .collect();
    let entries: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let mut acc = CompensatedSum::new();
            for &i in &exceed_idx {
                let w = polar.angles[(i, j)] * polar.angles[(i, k)];
                acc.add(powa(w, half_alpha));
            }
            ((j, k), scale * acc.value())
        })
        .collect();

    let mut sigma = DMatrix::zeros(d, d);
    for ((j, k), v) in entries {
        sigma[(j, k)] = v;
        sigma[(k, j)] = v;
    }
    let validation = validate_tpdm(&sigma);
    let psd_warning = !validation.positive_semidefinite;
    Ok(TpdmEstimate {
        matrix: TailMatrix::new_unchecked(sigma, polar.alpha),
        validation,
        psd_warning,
    })
}

/// Benchmark factor: columns sqrt(m_hat / n_exc) * W_i^(alpha/2) over the
/// exceedances. Satisfies A~ * A~^T = sigma_hat exactly (up to rounding),
/// but with n_exc columns instead of d.
pub fn empirical_factor(polar: &PolarSample, mass: &MassEstimate) -> Result<DMatrix<f64>> {
    if (polar.alpha - mass.alpha).abs() > 1e-12 {
        return Err(Error::Argument("alpha mismatch between polar and mass".into()));
    }
    if mass.n_exc == 0 {
        return Err(Error::Degenerate("empirical factor needs at least one exceedance".into()));
    }
    let d = polar.dim();
    let half_alpha = polar.alpha / 2.0;
    let coeff = (mass.m_hat / mass.n_exc as f64).sqrt();
    let exceed_idx: Vec<usize> = (0..polar.len())
        .filter(|&i| polar.radii[i] > mass.r0)
        .collect();
    let mut a_tilde = DMatrix::zeros(d, exceed_idx.len());
    for (col, &i) in exceed_idx.iter().enumerate() {
        for j in 0..d {
            a_tilde[(j, col)] = coeff * powa(polar.angles[(i, j)], half_alpha);
        }
    }
    Ok(a_tilde)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn polar_three_four_five() {
        let p = polar_transform(&mat(1, 2, &[3.0, 4.0]), 2.0).unwrap();
        assert!((p.radii[0] - 5.0).abs() < 1e-15);
        assert!((p.angles[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((p.angles[(0, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn polar_basis_vector_any_alpha() {
        for &alpha in &[1.0, 2.0, 3.7, 4.0] {
            let p = polar_transform(&mat(1, 3, &[0.0, 1.0, 0.0]), alpha).unwrap();
            assert!((p.radii[0] - 1.0).abs() < 1e-15);
            assert_eq!(p.angles[(0, 1)], 1.0);
            assert_eq!(p.angles[(0, 0)], 0.0);
        }
    }

    #[test]
    fn polar_ones_l4_norm() {
        let p = polar_transform(&mat(1, 3, &[1.0, 1.0, 1.0]), 4.0).unwrap();
        let expected_r = 3.0f64.powf(0.25);
        assert!((p.radii[0] - expected_r).abs() < 1e-14);
        for j in 0..3 {
            assert!((p.angles[(0, j)] - 3.0f64.powf(-0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn polar_drops_zero_rows_and_rejects_negatives() {
        let p = polar_transform(&mat(3, 2, &[1.0, 2.0, 0.0, 0.0, 3.0, 4.0]), 2.0).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.dropped_zero_rows, 1);
        assert!(polar_transform(&mat(1, 2, &[1.0, -0.5]), 2.0).is_err());
    }

    #[test]
    fn polar_reconstructs_rows() {
        let data = mat(2, 3, &[0.3, 1.9, 2.5, 4.0, 0.01, 7.7]);
        for &alpha in &[1.0, 2.0, 4.0] {
            let p = polar_transform(&data, alpha).unwrap();
            for i in 0..2 {
                let norm = csum((0..3).map(|j| p.angles[(i, j)].powf(alpha)));
                assert!((norm - 1.0).abs() < 1e-12, "unit norm violated: {norm}");
                for j in 0..3 {
                    let rel = (p.radii[i] * p.angles[(i, j)] - data[(i, j)]).abs()
                        / data[(i, j)].max(1.0);
                    assert!(rel < 1e-10);
                }
            }
        }
    }

    #[test]
    fn mass_all_radii_equal_gives_no_exceedances() {
        let p = polar_transform(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]), 2.0).unwrap();
        assert!(matches!(estimate_mass(&p, 0.9), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mass_formula_is_exact() {
        // Radii 1..10, level 0.8 -> r0 = 8, two exceedances (9, 10).
        let rows: Vec<f64> = (1..=10).flat_map(|i| [i as f64, 0.0]).collect();
        let p = polar_transform(&mat(10, 2, &rows), 2.0).unwrap();
        let m = estimate_mass(&p, 0.8).unwrap();
        assert_eq!(m.r0, 8.0);
        assert_eq!(m.n_exc, 2);
        assert!((m.m_hat - 8.0f64.powi(2) * 2.0 / 10.0).abs() < 1e-14);
    }

    #[test]
    fn tpdm_single_exceedance_is_single_atom() {
        // Four unit-radius rows plus one large row on the first axis;
        // level 0.8 puts r0 at the fourth order statistic (= 1).
        let p = polar_transform(
            &mat(5, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 10.0, 0.0]),
            2.0,
        )
        .unwrap();
        let m = estimate_mass(&p, 0.8).unwrap();
        assert_eq!(m.n_exc, 1);
        assert_eq!(m.r0, 1.0);
        let est = estimate_tpdm(&p, &m).unwrap();
        let sigma = est.matrix.sigma();
        let expected = m.r0.powi(2) / 5.0;
        assert!((sigma[(0, 0)] - expected).abs() < 1e-14);
        assert_eq!(sigma[(0, 1)], 0.0);
        assert_eq!(sigma[(1, 1)], 0.0);
    }

    #[test]
    fn tpdm_duplicated_column_is_comonotone() {
        let rows: Vec<f64> = (1..=40).flat_map(|i| [i as f64, i as f64]).collect();
        let p = polar_transform(&mat(40, 2, &rows), 2.0).unwrap();
        let m = estimate_mass(&p, 0.8).unwrap();
        let est = estimate_tpdm(&p, &m).unwrap();
        let s = est.matrix.sigma();
        assert!((s[(0, 0)] - s[(0, 1)]).abs() < 1e-12);
        assert!((s[(0, 0)] - s[(1, 1)]).abs() < 1e-12);
    }

    #[test]
    fn tpdm_trace_equals_mass() {
        let rows: Vec<f64> = (0..300)
            .flat_map(|i| {
                let x = 1.0 + (i % 17) as f64;
                let y = 1.0 + (i % 5) as f64 * 0.7;
                let z = 0.1 + (i % 29) as f64 * 0.3;
                [x, y, z]
            })
            .collect();
        for &alpha in &[1.0, 2.0, 4.0] {
            let p = polar_transform(&mat(300, 3, &rows), alpha).unwrap();
            let m = estimate_mass(&p, 0.9).unwrap();
            let est = estimate_tpdm(&p, &m).unwrap();
            assert!(
                (est.matrix.trace() - m.m_hat).abs() <= 1e-10 * m.m_hat.max(1.0),
                "trace {} vs mass {}",
                est.matrix.trace(),
                m.m_hat
            );
        }
    }

    #[test]
    fn empirical_factor_reconstructs_tpdm_exactly() {
        let rows: Vec<f64> = (0..200)
            .flat_map(|i| {
                let x = 0.5 + (i % 13) as f64;
                let y = 0.2 + (i % 7) as f64 * 1.3;
                [x, y]
            })
            .collect();
        let p = polar_transform(&mat(200, 2, &rows), 4.0).unwrap();
        let m = estimate_mass(&p, 0.9).unwrap();
        let est = estimate_tpdm(&p, &m).unwrap();
        let a_tilde = empirical_factor(&p, &m).unwrap();
        assert_eq!(a_tilde.ncols(), m.n_exc);
        let gap = (est.matrix.sigma() - &a_tilde * a_tilde.transpose()).norm();
        assert!(gap <= 1e-12, "reconstruction gap {gap}");
    }

    #[test]
    fn empirical_factor_column_norms_alpha_two() {
        // For alpha = 2 each column has squared norm m_hat / n_exc.
        let rows: Vec<f64> = (0..100)
            .flat_map(|i| [(i % 11) as f64 + 0.4, (i % 3) as f64 + 0.9])
            .collect();
        let p = polar_transform(&mat(100, 2, &rows), 2.0).unwrap();
        let m = estimate_mass(&p, 0.85).unwrap();
        let a_tilde = empirical_factor(&p, &m).unwrap();
        for c in 0..a_tilde.ncols() {
            let sq: f64 = (0..2).map(|j| a_tilde[(j, c)] * a_tilde[(j, c)]).sum();
            assert!((sq - m.m_hat / m.n_exc as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn validate_identity_is_valid() {
        let v = validate_tpdm(&DMatrix::identity(4, 4));
        assert!(v.is_valid());
        assert_eq!(v.trace, 4.0);
    }

    #[test]
    fn validate_flags_indefinite_matrix() {
        // [[1,2],[2,1]] has eigenvalues 3 and -1.
        let v = validate_tpdm(&mat(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(!v.positive_semidefinite);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-10);
        assert!(v.symmetric && v.nonnegative);
    }

    #[test]
    fn scale_equivariance_of_tpdm() {
        // Scaling all rows by c and r0 by c leaves sigma unchanged.
        // Radius ties are broken by jitter: a tie at r0 is not stable
        // under rescaled floating-point arithmetic.
        let rows: Vec<f64> = (0..150)
            .flat_map(|i| {
                let jitter = (i * 7919 % 997) as f64 / 997.0;
                [0.3 + (i % 19) as f64 + 0.001 * jitter, 0.8 + (i % 23) as f64 * 0.5]
            })
            .collect();
        let data = mat(150, 2, &rows);
        let alpha = 3.0;
        let p1 = polar_transform(&data, alpha).unwrap();
        let m1 = estimate_mass(&p1, 0.9).unwrap();
        let s1 = estimate_tpdm(&p1, &m1).unwrap();

        let c = 7.25f64;
        let p2 = polar_transform(&(data * c), alpha).unwrap();
        let m2 = estimate_mass(&p2, 0.9).unwrap();
        assert_eq!(m2.n_exc, m1.n_exc);
        assert!((m2.r0 - c * m1.r0).abs() < 1e-9 * m2.r0);
        let s2 = estimate_tpdm(&p2, &m2).unwrap();
        // The estimator commutes with scaling: sigma(cX, c r0) = c^alpha sigma(X, r0).
        let diff = (s1.matrix.sigma() * c.powf(alpha) - s2.matrix.sigma()).norm();
        assert!(
            diff < 1e-10 * s2.matrix.trace(),
            "scale equivariance violated: {diff}"
        );
    }

    #[test]
    fn permutation_equivariance_of_tpdm() {
        let rows: Vec<f64> = (0..120)
            .flat_map(|i| {
                [
                    0.3 + (i % 19) as f64,
                    0.8 + (i % 23) as f64 * 0.5,
                    0.1 + (i % 7) as f64 * 1.1,
                ]
            })
            .collect();
        let data = mat(120, 3, &rows);
        let perm = [2usize, 0, 1];
        let mut permuted = DMatrix::zeros(120, 3);
        for i in 0..120 {
            for j in 0..3 {
                permuted[(i, j)] = data[(i, perm[j])];
            }
        }
        let est = |d: &DMatrix<f64>| {
            let p = polar_transform(d, 2.0).unwrap();
            let m = estimate_mass(&p, 0.9).unwrap();
            estimate_tpdm(&p, &m).unwrap().matrix.into_sigma()
        };
        let s = est(&data);
        let sp = est(&permuted);
        for j in 0..3 {
            for k in 0..3 {
                assert!((sp[(j, k)] - s[(perm[j], perm[k])]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn factor_product_is_always_valid_tpdm() {
        // B * B^T passes validation for any nonnegative B.
        let b = mat(4, 6, &(0..24).map(|i| (i % 7) as f64 * 0.31).collect::<Vec<_>>());
        let t = TailMatrix::from_factor(&b, 2.0).unwrap();
        assert!(t.validation().is_valid());
        // Benchmark Gram matrices in particular.
        let a1 = crate::fixtures::a1();
        assert!(TailMatrix::from_factor(&a1, 4.0).unwrap().validation().is_valid());
    }
}
