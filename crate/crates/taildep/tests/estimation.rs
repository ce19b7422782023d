//! Cross-module estimation checks: seeded simulations from known models
//! against the analytic quantities they estimate.

use nalgebra::DMatrix;
use taildep::fixtures;
use taildep::maxlin::MaxLinearModel;
use taildep::tpdm::{estimate_mass, estimate_tpdm, polar_transform};

#[test]
fn mass_estimate_tracks_model_trace() {
    // trace(Sigma) = sum_j sigma_jj is the total angular mass.
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.3, 0.5, 0.9, 0.2, 1.1]);
    let model = MaxLinearModel::new(a, 2.0).unwrap();
    let trace = model.tpdm().trace();
    let sample = model.simulate(100_000, 314);
    let polar = polar_transform(&sample, 2.0).unwrap();
    let mass = estimate_mass(&polar, 0.95).unwrap();
    assert!(
        (mass.m_hat - trace).abs() <= 0.1 * trace,
        "m_hat {} vs trace {trace}",
        mass.m_hat
    );
}

#[test]
fn empirical_tpdm_recovers_model_tpdm() {
    // Unit-scale margins with sizable cross-loadings: near-zero TPDM
    // entries converge much more slowly (the angular measure of a finite
    // sample still has mass off the atoms at the 0.95 radial threshold).
    let mut a = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.3, 0.4, 1.0, 0.5, 0.3, 0.6, 1.0]);
    for j in 0..3 {
        let norm = a.row(j).iter().map(|&x| x * x).sum::<f64>().sqrt();
        for l in 0..3 {
            a[(j, l)] /= norm;
        }
    }
    let model = MaxLinearModel::new(a, 2.0).unwrap();
    let sigma = model.tpdm();
    let sample = model.simulate(100_000, 2718);
    let polar = polar_transform(&sample, 2.0).unwrap();
    let mass = estimate_mass(&polar, 0.95).unwrap();
    let est = estimate_tpdm(&polar, &mass).unwrap();
    for j in 0..3 {
        for k in 0..3 {
            let err = (est.matrix.sigma()[(j, k)] - sigma.sigma()[(j, k)]).abs();
            assert!(err <= 0.15, "entry ({j},{k}): error {err}");
        }
    }
}

#[test]
fn standardized_a3_sample_recovers_normalized_tpdm() {
    // Simulate from (A3, alpha = 4) and standardize each margin through
    // its true Fréchet CDF: x -> (x / c_j)^2 is Fréchet(1, 2), and the
    // transformed vector is max-linear with coefficients (a_jl / c_j)^2.
    // Its TPDM is the diagonally normalized A3* A3*^T (unit diagonal).
    let a3 = fixtures::a3();
    let model = MaxLinearModel::new(a3.clone(), 4.0).unwrap();
    let scales = model.marginal_scales();
    let sample = model.simulate(100_000, 99);
    let mut standardized = DMatrix::zeros(sample.nrows(), 5);
    for i in 0..sample.nrows() {
        for j in 0..5 {
            let z = sample[(i, j)] / scales[j];
            standardized[(i, j)] = z * z;
        }
    }
    let polar = polar_transform(&standardized, 2.0).unwrap();
    let mass = estimate_mass(&polar, 0.95).unwrap();
    let est = estimate_tpdm(&polar, &mass).unwrap();

    let a_star = a3.map(|x| x * x);
    let sigma = &a_star * a_star.transpose();
    for j in 0..5 {
        for k in 0..5 {
            let normalized = sigma[(j, k)] / (sigma[(j, j)] * sigma[(k, k)]).sqrt();
            let err = (est.matrix.sigma()[(j, k)] - normalized).abs();
            assert!(err <= 0.15, "entry ({j},{k}): {} vs {normalized}", est.matrix.sigma()[(j, k)]);
        }
    }
    // Standardized margins carry unit mass each.
    assert!((mass.m_hat - 5.0).abs() < 0.5, "m_hat {}", mass.m_hat);
}
