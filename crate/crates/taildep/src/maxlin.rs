//! Max-linear model: Y_j = max_l a_jl * Z_l with Z_l iid Fréchet(1, alpha).
//!
//! Each component is the largest shock among q independent heavy-tailed
//! factors, scaled by the loadings in the j-th row of A. The angular
//! measure is a finite set of atoms, one per column, and the TPDM is
//! A_* A_*^T with A_* = A^(alpha/2) entrywise. Simulation from this model
//! is the Monte Carlo oracle for the analytic failure probabilities.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{csum, powa};
use crate::rng::CounterRng;
use crate::tpdm::TailMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxLinearModel {
    a: DMatrix<f64>,
    alpha: f64,
}

/// One atom of the angular measure: mass ||a_l||_alpha^alpha at the point
/// a_l / ||a_l||_alpha on the unit sphere.
#[derive(Debug, Clone)]
pub struct AngularAtom {
    pub mass: f64,
    pub atom: DVector<f64>,
}

impl MaxLinearModel {
    /// Validates a d x q nonnegative loading matrix; every column must
    /// carry some mass (max entry > 0).
    pub fn new(a: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Argument(format!("tail index must be positive, got {alpha}")));
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Domain("coefficient matrix must be non-empty".into()));
        }
        if a.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Domain("coefficient matrix must be nonnegative and finite".into()));
        }
        for l in 0..a.ncols() {
            if a.column(l).iter().copied().fold(0.0f64, f64::max) == 0.0 {
                return Err(Error::Domain(format!("column {l} of the coefficient matrix is zero")));
            }
        }
        Ok(MaxLinearModel { a, alpha })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.a.ncols()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// A_* = A^(alpha/2) entrywise; for alpha = 2 this is A itself.
    pub fn a_star(&self) -> DMatrix<f64> {
        if self.alpha == 2.0 {
            self.a.clone()
        } else {
            self.a.map(|x| powa(x, self.alpha / 2.0))
        }
    }

    /// Exact TPDM of the model: sigma_jk = sum_l a_jl^(alpha/2) a_kl^(alpha/2).
    pub fn tpdm(&self) -> TailMatrix {
        let a_star = self.a_star();
        TailMatrix::new_unchecked(&a_star * a_star.transpose(), self.alpha)
    }

    /// Atoms of the angular measure under the L_alpha norm. Total mass
    /// equals the trace of the TPDM.
    pub fn angular_atoms(&self) -> Vec<AngularAtom> {
        (0..self.n_factors())
            .map(|l| {
                let col = self.a.column(l);
                let mass = csum(col.iter().map(|&x| powa(x, self.alpha)));
                let norm = powa(mass, 1.0 / self.alpha);
                AngularAtom {
                    mass,
                    atom: col.map(|x| x / norm),
                }
            })
            .collect()
    }

    /// Fréchet scale of each margin: (sum_l a_jl^alpha)^(1/alpha), which is
    /// the alpha-th root of the corresponding TPDM diagonal entry.
    pub fn marginal_scales(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                powa(csum(self.a.row(j).iter().map(|&x| powa(x, self.alpha))), 1.0 / self.alpha)
            })
            .collect()
    }

    /// Row i of the seeded simulation, written into `out`. A pure function
    /// of (seed, i): the factor draw for (row, factor) is addressed by the
    /// counter i * q + l, so any chunking of rows across workers produces
    /// the same values.
    pub fn simulate_row_into(&self, i: usize, seed: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let rng = CounterRng::new(seed);
        let q = self.n_factors();
        out.fill(0.0);
        for l in 0..q {
            let z = rng.frechet_at(i as u64 * q as u64 + l as u64, self.alpha);
            for (j, slot) in out.iter_mut().enumerate() {
                let y = self.a[(j, l)] * z;
                if y > *slot {
                    *slot = y;
                }
            }
        }
    }

    /// n rows of A x_max Z; identical for any number of worker threads.
    pub fn simulate(&self, n: usize, seed: u64) -> DMatrix<f64> {
        let d = self.dim();
        let mut data = vec![0.0f64; n * d];
        data.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            self.simulate_row_into(i, seed, row);
        });
        DMatrix::from_row_slice(n, d, &data)
    }
}
