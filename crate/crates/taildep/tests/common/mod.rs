//! Shared test support: an exact rational re-implementation of the
//! deflation walk, used as an independent oracle for the path censuses.
#![allow(dead_code)] // each test binary uses a different subset
//!
//! The D ratios and the deflation recursion are rational functions of the
//! matrix entries (square roots enter only the assembled factor, and the
//! products tau_j * tau_k are again rational). For matrices with dyadic
//! entries the whole census classification is therefore exact integer
//! arithmetic: D = 1 and zero denominators are decided without tolerances.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type Rat = BigRational;

pub fn rat_from_dyadic(x: f64) -> Rat {
    // Exact for multiples of 2^-20, far finer than the fixture grid.
    let scaled = x * 1_048_576.0;
    assert_eq!(scaled.fract(), 0.0, "{x} is not dyadic on the 2^-20 grid");
    Rat::new(BigInt::from(scaled as i64), BigInt::from(1_048_576i64))
}

pub fn rat_matrix(a: &nalgebra::DMatrix<f64>) -> Vec<Vec<Rat>> {
    let (n, m) = (a.nrows(), a.ncols());
    (0..n)
        .map(|i| (0..m).map(|j| rat_from_dyadic(a[(i, j)])).collect())
        .collect()
}

/// Gram matrix A * A^T in rationals.
pub fn rat_gram(a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let m = a[0].len();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| (0..m).map(|l| &a[j][l] * &a[k][l]).sum::<Rat>())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RatD {
    Finite(Rat),
    Infinite,
}

#[derive(Debug)]
pub struct RatWalk {
    pub path: Vec<usize>,
    pub d_values: Vec<RatD>,
    /// Some step had a positive numerator over a zero denominator entry.
    pub has_infinite: bool,
    /// Some step had a 0/0 term: sigma_ji * sigma_ki = 0 with sigma_jk = 0.
    pub has_indeterminate: bool,
    /// Some step had D exactly equal to 1.
    pub has_boundary: bool,
    /// Every step had finite D < 1.
    pub all_below_one: bool,
    /// ||Sigma - A_* A_*^T||_F^2, exact.
    pub gap_sq: Rat,
}

fn minor(cur: &[Vec<Rat>], i: usize) -> Vec<Vec<Rat>> {
    let d = cur.len();
    let keep: Vec<usize> = (0..d).filter(|&j| j != i).collect();
    keep.iter()
        .map(|&j| keep.iter().map(|&k| cur[j][k].clone()).collect())
        .collect()
}

/// Exact deflation along a path; mirrors the f64 walk step for step.
pub fn rational_walk(sigma: &[Vec<Rat>], path: &[usize]) -> RatWalk {
    let d = sigma.len();
    let mut cur: Vec<Vec<Rat>> = sigma.to_vec();
    let mut remaining: Vec<usize> = (0..d).collect();
    // Accumulated A_* A_*^T by original indices.
    let mut product = vec![vec![Rat::zero(); d]; d];
    let mut d_values = Vec::new();
    let mut has_infinite = false;
    let mut has_indeterminate = false;
    let mut has_boundary = false;
    let mut all_below_one = true;
    let one = Rat::from_integer(BigInt::from(1));

    for step in 0..d {
        if remaining.len() == 1 {
            let r = remaining[0];
            let s = cur[0][0].clone();
            assert!(!s.is_negative(), "exact remainder must be nonnegative");
            product[r][r] += s;
            break;
        }
        let focal = path[step];
        let i = remaining.iter().position(|&r| r == focal).unwrap();
        let dd = cur.len();
        let sigma_ii = cur[i][i].clone();

        // Exact D_i with the zero conventions.
        let mut dval: Option<RatD> = None;
        for j in 0..dd {
            for k in 0..dd {
                if j == i || k == i {
                    continue;
                }
                let num = &cur[j][i] * &cur[k][i];
                if num.is_zero() && cur[j][k].is_zero() {
                    has_indeterminate = true;
                }
                let term = if num.is_zero() {
                    RatD::Finite(Rat::zero())
                } else if cur[j][k].is_zero() {
                    RatD::Infinite
                } else {
                    assert!(!sigma_ii.is_zero(), "zero pivot with dependent row");
                    RatD::Finite(num / (&cur[j][k] * &sigma_ii))
                };
                dval = Some(match (dval.take(), term) {
                    (None, t) => t,
                    (Some(RatD::Infinite), _) | (_, RatD::Infinite) => RatD::Infinite,
                    (Some(RatD::Finite(a)), RatD::Finite(b)) => {
                        RatD::Finite(if b > a { b } else { a })
                    }
                });
            }
        }
        let dval = dval.expect("dimension >= 2");
        match &dval {
            RatD::Infinite => {
                has_infinite = true;
                all_below_one = false;
                // Marginal peel: only the pivot mass is extracted.
                let r = remaining[i];
                product[r][r] += sigma_ii.clone();
                cur = minor(&cur, i);
                remaining.remove(i);
            }
            RatD::Finite(dv) => {
                if *dv == one {
                    has_boundary = true;
                    all_below_one = false;
                } else if *dv > one {
                    all_below_one = false;
                }
                if sigma_ii.is_zero() {
                    // Fully-explained dimension: zero column.
                    cur = minor(&cur, i);
                    remaining.remove(i);
                } else {
                    let denom = &sigma_ii * if *dv > one { dv.clone() } else { one.clone() };
                    // tau_i^2 = denom, tau_i tau_k = sigma_ki, tau_j tau_k =
                    // sigma_ji sigma_ki / denom: all rational.
                    for a in 0..dd {
                        for b in 0..dd {
                            let (oa, ob) = (remaining[a], remaining[b]);
                            let contrib = if a == i && b == i {
                                denom.clone()
                            } else if a == i {
                                cur[b][i].clone()
                            } else if b == i {
                                cur[a][i].clone()
                            } else {
                                &(&cur[a][i] * &cur[b][i]) / &denom
                            };
                            product[oa][ob] += contrib;
                        }
                    }
                    let keep: Vec<usize> = (0..dd).filter(|&j| j != i).collect();
                    let reduced: Vec<Vec<Rat>> = keep
                        .iter()
                        .map(|&j| {
                            keep.iter()
                                .map(|&k| &cur[j][k] - &(&(&cur[j][i] * &cur[k][i]) / &denom))
                                .collect()
                        })
                        .collect();
                    cur = reduced;
                    remaining.remove(i);
                }
            }
        }
        d_values.push(dval);
    }

    let mut gap_sq = Rat::zero();
    for j in 0..d {
        for k in 0..d {
            let diff = &sigma[j][k] - &product[j][k];
            gap_sq += &diff * &diff;
        }
    }
    RatWalk {
        path: path.to_vec(),
        d_values,
        has_infinite,
        has_indeterminate,
        has_boundary,
        all_below_one,
        gap_sq,
    }
}

pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(items: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if items.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for idx in 0..items.len() {
            let v = items.remove(idx);
            prefix.push(v);
            rec(items, prefix, out);
            prefix.pop();
            items.insert(idx, v);
        }
    }
    let mut items: Vec<usize> = (0..d).collect();
    rec(&mut items, &mut Vec::with_capacity(d), &mut out);
    out
}
