//! Iterative approximate completely positive decomposition of a TPDM.
//!
//! One step removes a focal dimension i from the matrix: with
//!
//! D_i = max_{j,k != i} sigma_ji * sigma_ki / (sigma_jk * sigma_ii),
//!
//! the column tau_i has pivot (sigma_ii * max(D_i, 1))^(1/2) and entries
//! sigma_ji / pivot elsewhere, and the remaining matrix deflates to
//! Sigma^(i) = Sigma^(-i,-i) - tau_{-i} tau_{-i}^T. Repeating along a
//! permutation of the dimensions (a "path") assembles a nonnegative factor
//! A_* whose product A_* A_*^T reproduces every off-diagonal entry exactly
//! and never shrinks a diagonal entry. The decomposition is exact if and
//! only if every step has D < 1; different paths give different factors,
//! and some paths fail where others succeed.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maxlin::MaxLinearModel;
use crate::rng::CounterRng;
use crate::tpdm::TailMatrix;

/// Tolerances of the decomposition. All interact with the matrix scale
/// and dimension, hence configurable.
#[derive(Debug, Clone)]
pub struct DecompConfig {
    /// Steps with |D - 1| <= tol_d are degenerate: the exactness guarantee
    /// is ambiguous there and such paths are excluded from path censuses.
    pub tol_d: f64,
    /// A decomposition is exact when ||Sigma - A_* A_*^T||_F <= exact_tol.
    pub exact_tol: f64,
    /// Reduced-matrix entries below -neg_entry_tol * max diagonal indicate
    /// corrupted input; entries above that but below zero are rounding
    /// noise and are clamped to zero.
    pub neg_entry_tol: f64,
    /// Entries at or below zero_tol * max diagonal count as zero in the
    /// D conventions. Deflation turns analytic zeros into +-1e-16 scale
    /// residue; without the floor such residue would flip a term between
    /// 0 and +inf depending on its rounding direction.
    pub zero_tol: f64,
    /// Admit boundary steps (|D - 1| <= tol_d) into the candidate sets of
    /// the exhaustive and pragmatic searches. On by default: a rank-one
    /// remainder has D = 1 for every dimension yet peels exactly, so
    /// rank-deficient matrices have no exact path without boundary steps.
    /// The Frobenius-gap check on the completed branch decides exactness
    /// either way.
    pub include_boundary: bool,
    /// Dimension guard for the exhaustive search (factorial growth).
    pub max_exhaustive_dim: usize,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig {
            tol_d: 1e-9,
            exact_tol: 1e-12,
            neg_entry_tol: 1e-8,
            zero_tol: 1e-12,
            include_boundary: true,
            max_exhaustive_dim: 10,
        }
    }
}

/// One deflation step.
#[derive(Debug, Clone)]
pub struct PeelStep {
    /// Index peeled, in the coordinates of the matrix passed to `peel`.
    pub index: usize,
    pub d_value: f64,
    /// Pair attaining D (lexicographically first on ties).
    pub argmax: (usize, usize),
    /// Column extracted; entry `index` is the pivot, the rest are the
    /// off-diagonal loadings.
    pub tau: DVector<f64>,
    /// Deflated matrix, one dimension smaller. Negative rounding residue
    /// is clamped to zero so the zero conventions of D stay meaningful.
    pub reduced: DMatrix<f64>,
    /// |D - 1| <= tol_d.
    pub degenerate: bool,
    /// D = +inf: some pair has sigma_ji * sigma_ki > 0 with sigma_jk = 0,
    /// so no finite pivot makes the deflated matrix nonnegative. The step
    /// substitutes the limit column: a capped huge pivot with vanishing
    /// off-diagonal entries whose products still reproduce row i, while
    /// the pivot mass blows up the reconstruction gap.
    pub unpeelable: bool,
}

/// Surrogate for an infinite ratio. Large enough that the deflation
/// subtracts less than any zero floor, small enough that squared gaps
/// stay finite.
const UNPEELABLE_D_CAP: f64 = 1e40;

/// Factorization of a TPDM along one path.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub path: Vec<usize>,
    pub alpha: f64,
    /// d x d nonnegative factor; column j is zero at the rows peeled
    /// before step j.
    pub a_star: DMatrix<f64>,
    /// Max-linear coefficient matrix, A = A_*^(2/alpha) entrywise.
    pub a: DMatrix<f64>,
    /// D value of each step (the final 1x1 remainder has none).
    pub d_values: Vec<f64>,
    pub frobenius_gap: f64,
    /// frobenius_gap <= exact_tol.
    pub exact: bool,
    /// Some step had |D - 1| <= tol_d.
    pub degenerate: bool,
    /// Some step had D = +inf.
    pub unpeelable: bool,
}

impl DecompositionResult {
    /// All recorded steps had D strictly below the degeneracy band.
    pub fn all_d_below_one(&self, config: &DecompConfig) -> bool {
        self.d_values.iter().all(|&d| d < 1.0 - config.tol_d)
    }

    /// Max-linear model with the zero columns of A pruned away, so that
    /// every remaining factor carries positive mass.
    pub fn to_model(&self, tol_col: Option<f64>) -> Result<MaxLinearModel> {
        let pruned = prune_zero_columns(&self.a, tol_col);
        if pruned.ncols() == 0 {
            return Err(Error::Degenerate("decomposition has no nonzero columns".into()));
        }
        MaxLinearModel::new(pruned, self.alpha)
    }
}

/// Outcome of the restarted random search.
#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Box<DecompositionResult>),
    /// No exact decomposition within the restart budget. A value, not an
    /// error: the matrix may genuinely have no exact path.
    NotFound { restarts: usize },
}

fn self_floor(sigma: &DMatrix<f64>, config: &DecompConfig) -> f64 {
    config.zero_tol * sigma.diagonal().iter().copied().fold(0.0f64, f64::max)
}

/// D_i with its attaining pair, using the default tolerances. The zero
/// floor is taken relative to the matrix itself; inside a deflation walk
/// use the variants that carry the original matrix scale.
pub fn dependence_ratio(sigma: &DMatrix<f64>, i: usize) -> Result<(f64, (usize, usize))> {
    let config = DecompConfig::default();
    dependence_ratio_floored(sigma, i, self_floor(sigma, &config))
}

/// D_i with the zero floor derived from the matrix's own diagonal.
pub fn dependence_ratio_with(
    sigma: &DMatrix<f64>,
    i: usize,
    config: &DecompConfig,
) -> Result<(f64, (usize, usize))> {
    dependence_ratio_floored(sigma, i, self_floor(sigma, config))
}

/// D_i with its attaining pair. Terms follow the zero conventions: a zero
/// numerator contributes 0 regardless of sigma_jk; a positive numerator
/// over sigma_jk = 0 makes the dimension unpeelable (D = +inf). Entries
/// with |x| <= floor count as zero; the floor must reflect the scale of
/// the matrix the walk started from, not the deflated remainder, because
/// rounding residue of analytic zeros carries the original scale.
pub fn dependence_ratio_floored(
    sigma: &DMatrix<f64>,
    i: usize,
    floor: f64,
) -> Result<(f64, (usize, usize))> {
    let d = sigma.nrows();
    if d < 2 {
        return Err(Error::Argument("dependence ratio needs dimension >= 2".into()));
    }
    if i >= d {
        return Err(Error::Argument(format!("index {i} out of bounds for dimension {d}")));
    }
    let is_zero = |x: f64| x.abs() <= floor;
    let sigma_ii = sigma[(i, i)];
    let mut best = f64::NEG_INFINITY;
    let mut best_pair = (usize::MAX, usize::MAX);
    for j in 0..d {
        if j == i {
            continue;
        }
        for k in 0..d {
            if k == i {
                continue;
            }
            let term = if is_zero(sigma[(j, i)]) || is_zero(sigma[(k, i)]) {
                0.0
            } else if is_zero(sigma_ii) {
                return Err(Error::Degenerate(format!(
                    "zero diagonal at {i} with nonzero off-diagonal entries"
                )));
            } else if is_zero(sigma[(j, k)]) {
                f64::INFINITY
            } else {
                sigma[(j, i)] * sigma[(k, i)] / (sigma[(j, k)] * sigma_ii)
            };
            if term > best {
                best = term;
                best_pair = (j, k);
            }
        }
    }
    Ok((best, best_pair))
}

/// One deflation step at focal index i, floors from the matrix itself.
pub fn peel(sigma: &DMatrix<f64>, i: usize, config: &DecompConfig) -> Result<PeelStep> {
    let scale = sigma.diagonal().iter().copied().fold(0.0f64, f64::max);
    peel_scaled(sigma, i, config, scale)
}

/// One deflation step at focal index i. `scale` is the largest diagonal
/// entry of the matrix the walk started from; both the zero floor and the
/// negative-entry tolerance are taken relative to it.
pub fn peel_scaled(
    sigma: &DMatrix<f64>,
    i: usize,
    config: &DecompConfig,
    scale: f64,
) -> Result<PeelStep> {
    let d = sigma.nrows();
    let (d_value, argmax) = dependence_ratio_floored(sigma, i, config.zero_tol * scale)?;
    let sigma_ii = sigma[(i, i)];

    let mut tau = DVector::zeros(d);
    let unpeelable = d_value.is_infinite();
    if sigma_ii > config.zero_tol * scale {
        let d_eff = if unpeelable { UNPEELABLE_D_CAP } else { d_value.max(1.0) };
        let pivot = (sigma_ii * d_eff).sqrt();
        tau[i] = pivot;
        for j in 0..d {
            if j != i {
                tau[j] = sigma[(j, i)] / pivot;
            }
        }
    }
    // A diagonal entry at the zero floor has only rounding residue in its
    // row (else dependence_ratio errors) and peels a zero column.

    let mut reduced = DMatrix::zeros(d - 1, d - 1);
    let keep: Vec<usize> = (0..d).filter(|&j| j != i).collect();
    for (a, &j) in keep.iter().enumerate() {
        for (b, &k) in keep.iter().enumerate() {
            let mut v = sigma[(j, k)] - tau[j] * tau[k];
            if v < 0.0 {
                if v < -config.neg_entry_tol * scale {
                    return Err(Error::Inconsistent(format!(
                        "reduced matrix entry ({j},{k}) = {v:.6e} below tolerance"
                    )));
                }
                v = 0.0;
            }
            reduced[(a, b)] = v;
        }
    }
    // Symmetrize exactly: the (j,k) and (k,j) computations round identically,
    // but clamping keeps this cheap insurance unnecessary; copy lower to upper.
    for a in 0..d - 1 {
        for b in (a + 1)..d - 1 {
            let v = reduced[(a, b)];
            reduced[(b, a)] = v;
        }
    }

    Ok(PeelStep {
        index: i,
        d_value,
        argmax,
        tau,
        reduced,
        degenerate: (d_value - 1.0).abs() <= config.tol_d,
        unpeelable,
    })
}

/// ||Sigma - A_* A_*^T||_F.
pub fn frobenius_gap(sigma: &DMatrix<f64>, a_star: &DMatrix<f64>) -> f64 {
    assert_eq!(sigma.nrows(), a_star.nrows(), "dimension mismatch");
    (sigma - a_star * a_star.transpose()).norm()
}

fn validate_path(d: usize, path: &[usize]) -> Result<()> {
    if path.len() != d {
        return Err(Error::Argument(format!(
            "path length {} does not match dimension {d}",
            path.len()
        )));
    }
    let mut seen = vec![false; d];
    for &p in path {
        if p >= d || seen[p] {
            return Err(Error::Argument("path is not a permutation of 0..d".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Entrywise A_*^(2/alpha). For alpha = 2 the factor is returned as-is so
/// no exponentiation rounding is introduced.
fn coefficient_matrix(a_star: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    if alpha == 2.0 {
        a_star.clone()
    } else {
        a_star.map(|x| crate::numeric::powa(x, 2.0 / alpha))
    }
}

/// Run the full deflation along a fixed path.
pub fn decompose_along_path(
    tail: &TailMatrix,
    path: &[usize],
    config: &DecompConfig,
) -> Result<DecompositionResult> {
    let d = tail.dim();
    validate_path(d, path)?;
    let sigma = tail.sigma();
    let sigma_max = sigma.diagonal().iter().copied().fold(0.0f64, f64::max);

    let mut current = sigma.clone();
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut a_star = DMatrix::zeros(d, d);
    let mut d_values = Vec::with_capacity(d.saturating_sub(1));
    let mut degenerate = false;
    let mut unpeelable = false;

    for step in 0..d {
        if remaining.len() == 1 {
            let s = current[(0, 0)];
            if s < -config.neg_entry_tol * sigma_max {
                return Err(Error::Inconsistent(format!(
                    "final remainder {s:.6e} is negative beyond tolerance"
                )));
            }
            a_star[(remaining[0], step)] = s.max(0.0).sqrt();
            break;
        }
        let focal = path[step];
        let local = remaining
            .iter()
            .position(|&r| r == focal)
            .expect("validated permutation");
        let ps = peel_scaled(&current, local, config, sigma_max)?;
        degenerate |= ps.degenerate;
        unpeelable |= ps.unpeelable;
        d_values.push(ps.d_value);
        for (loc, &orig) in remaining.iter().enumerate() {
            a_star[(orig, step)] = ps.tau[loc];
        }
        remaining.remove(local);
        current = ps.reduced;
    }

    let gap = frobenius_gap(sigma, &a_star);
    Ok(DecompositionResult {
        path: path.to_vec(),
        alpha: tail.alpha(),
        a: coefficient_matrix(&a_star, tail.alpha()),
        a_star,
        d_values,
        frobenius_gap: gap,
        exact: gap <= config.exact_tol,
        degenerate,
        unpeelable,
    })
}

/// D value of every still-unpeeled dimension of the current matrix,
/// keyed by local index. Dimensions whose ratio cannot be evaluated
/// (degenerate margins) are reported as +inf.
fn local_d_values(current: &DMatrix<f64>, floor: f64) -> Vec<f64> {
    (0..current.nrows())
        .map(|i| match dependence_ratio_floored(current, i, floor) {
            Ok((v, _)) => v,
            Err(_) => f64::INFINITY,
        })
        .collect()
}

/// Candidate dimensions the tree searches may branch on.
fn candidate_set(d_values: &[f64], config: &DecompConfig) -> Vec<usize> {
    d_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| {
            v < 1.0 - config.tol_d || (config.include_boundary && (v - 1.0).abs() <= config.tol_d)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Greedy search: peel the remaining dimension with the lowest D at every
/// step (ties to the lowest original index). Always completes; the result
/// may be inexact when the greedy choice runs into D >= 1.
pub fn search_simple(tail: &TailMatrix, config: &DecompConfig) -> Result<DecompositionResult> {
    let d = tail.dim();
    let scale = tail.sigma().diagonal().iter().copied().fold(0.0f64, f64::max);
    let mut current = tail.sigma().clone();
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut path = Vec::with_capacity(d);

    while remaining.len() > 1 {
        let ds = local_d_values(&current, config.zero_tol * scale);
        let mut best_local = 0usize;
        for loc in 1..remaining.len() {
            let better = ds[loc] < ds[best_local]
                || (ds[loc] == ds[best_local] && remaining[loc] < remaining[best_local]);
            if better {
                best_local = loc;
            }
        }
        path.push(remaining[best_local]);
        let ps = peel_scaled(&current, best_local, config, scale)?;
        current = ps.reduced;
        remaining.remove(best_local);
    }
    path.push(remaining[0]);
    decompose_along_path(tail, &path, config)
}

/// Depth-first tree over the candidate sets T_j = {i remaining : D_i < 1}.
/// Dead leaves are branches where T_j empties before the matrix does;
/// complete branches are exact decompositions. Results come in
/// lexicographic path order, deduplicated by construction, at most
/// `max_results` of them.
pub fn search_exhaustive(
    tail: &TailMatrix,
    max_results: usize,
    config: &DecompConfig,
) -> Result<Vec<DecompositionResult>> {
    let d = tail.dim();
    if d > config.max_exhaustive_dim {
        return Err(Error::Argument(format!(
            "exhaustive search is limited to dimension {} (got {d})",
            config.max_exhaustive_dim
        )));
    }
    let mut results = Vec::new();
    let mut prefix = Vec::with_capacity(d);
    let remaining: Vec<usize> = (0..d).collect();
    let scale = tail.sigma().diagonal().iter().copied().fold(0.0f64, f64::max);
    explore(
        tail,
        tail.sigma().clone(),
        remaining,
        &mut prefix,
        &mut results,
        max_results,
        config,
        scale,
    )?;
    Ok(results)
}

#[allow(clippy::too_many_arguments)]
fn explore(
    tail: &TailMatrix,
    current: DMatrix<f64>,
    remaining: Vec<usize>,
    prefix: &mut Vec<usize>,
    results: &mut Vec<DecompositionResult>,
    max_results: usize,
    config: &DecompConfig,
    scale: f64,
) -> Result<()> {
    if results.len() >= max_results {
        return Ok(());
    }
    if remaining.len() == 1 {
        prefix.push(remaining[0]);
        let res = decompose_along_path(tail, prefix, config)?;
        prefix.pop();
        if res.exact {
            results.push(res);
        }
        return Ok(());
    }
    let ds = local_d_values(&current, config.zero_tol * scale);
    for local in candidate_set(&ds, config) {
        let ps = peel_scaled(&current, local, config, scale)?;
        let mut next_remaining = remaining.clone();
        let orig = next_remaining.remove(local);
        prefix.push(orig);
        explore(tail, ps.reduced, next_remaining, prefix, results, max_results, config, scale)?;
        prefix.pop();
        if results.len() >= max_results {
            break;
        }
    }
    Ok(())
}

/// Restarted random search: at each step pick uniformly from the candidate
/// set, restart from scratch on a dead end. Restart r draws from the
/// substream (seed, r), so the search is reproducible under any thread
/// layout. Returns the first exact decomposition found.
pub fn search_pragmatic(
    tail: &TailMatrix,
    seed: u64,
    max_restarts: usize,
    config: &DecompConfig,
) -> Result<SearchOutcome> {
    if max_restarts == 0 {
        return Err(Error::Argument("max_restarts must be at least 1".into()));
    }
    let rng = CounterRng::new(seed);
    for restart in 0..max_restarts {
        if let Some(path) = pragmatic_walk(tail, rng.derive(restart as u64), config)? {
            let res = decompose_along_path(tail, &path, config)?;
            if res.exact {
                return Ok(SearchOutcome::Found(Box::new(res)));
            }
        }
    }
    Ok(SearchOutcome::NotFound { restarts: max_restarts })
}

fn pragmatic_walk(
    tail: &TailMatrix,
    stream: CounterRng,
    config: &DecompConfig,
) -> Result<Option<Vec<usize>>> {
    let d = tail.dim();
    let scale = tail.sigma().diagonal().iter().copied().fold(0.0f64, f64::max);
    let mut current = tail.sigma().clone();
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut path = Vec::with_capacity(d);
    let mut step = 0u64;
    while remaining.len() > 1 {
        let ds = local_d_values(&current, config.zero_tol * scale);
        let candidates = candidate_set(&ds, config);
        if candidates.is_empty() {
            return Ok(None);
        }
        let local = candidates[stream.index_at(step, candidates.len())];
        path.push(remaining[local]);
        let ps = peel_scaled(&current, local, config, scale)?;
        current = ps.reduced;
        remaining.remove(local);
        step += 1;
    }
    path.push(remaining[0]);
    Ok(Some(path))
}

/// Harvest up to `n` exact decompositions with distinct paths via restarted
/// random walks. Distinctness is keyed by path: different paths may yield
/// equal factors, and those count as separate evidence.
pub fn collect_exact_decompositions(
    tail: &TailMatrix,
    n: usize,
    seed: u64,
    max_restarts: usize,
    config: &DecompConfig,
) -> Result<Vec<DecompositionResult>> {
    let rng = CounterRng::new(seed);
    let mut results: Vec<DecompositionResult> = Vec::new();
    let mut seen: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    for restart in 0..max_restarts {
        if results.len() >= n {
            break;
        }
        if let Some(path) = pragmatic_walk(tail, rng.derive(restart as u64), config)? {
            if seen.contains(&path) {
                continue;
            }
            let res = decompose_along_path(tail, &path, config)?;
            if res.exact {
                seen.insert(path);
                results.push(res);
            }
        }
    }
    Ok(results)
}

/// Census over all d! paths.
#[derive(Debug, Clone)]
pub struct PathCensus {
    /// One result per permutation, in lexicographic path order.
    pub results: Vec<DecompositionResult>,
    /// Paths free of unpeelable (D = +inf) steps. Boundary steps
    /// (D = 1) stay usable: they peel via max(D, 1) = 1 without inflating
    /// anything, and rank-deficient matrices produce them on every exact
    /// path.
    pub usable: usize,
    /// Usable paths with frobenius_gap <= exact_tol.
    pub exact: usize,
    /// Usable paths with frobenius_gap <= gap_threshold.
    pub within_gap: usize,
    /// Usable paths with some |D - 1| <= tol_d step (diagnostic).
    pub boundary: usize,
    pub gap_threshold: f64,
}

impl PathCensus {
    pub fn is_usable(r: &DecompositionResult) -> bool {
        !r.unpeelable
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..d).collect();
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
    rec(&mut items, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Evaluate every permutation of the dimensions. Guarded to d <= 8
/// (factorial growth). Path evaluations are independent and distributed
/// across workers; the result order is the lexicographic path order
/// regardless of thread count.
pub fn enumerate_all_paths(
    tail: &TailMatrix,
    gap_threshold: f64,
    config: &DecompConfig,
) -> Result<PathCensus> {
    let d = tail.dim();
    if d > 8 {
        return Err(Error::Argument(format!(
            "full path enumeration is limited to dimension 8 (got {d}, {} paths)",
            (1..=d).product::<usize>()
        )));
    }
    let paths = permutations(d);
    let results: Vec<DecompositionResult> = paths
        .par_iter()
        .map(|p| decompose_along_path(tail, p, config))
        .collect::<Result<Vec<_>>>()?;

    let usable = results.iter().filter(|r| PathCensus::is_usable(r)).count();
    let exact = results
        .iter()
        .filter(|r| PathCensus::is_usable(r) && r.exact)
        .count();
    let within_gap = results
        .iter()
        .filter(|r| PathCensus::is_usable(r) && r.frobenius_gap <= gap_threshold)
        .count();
    let boundary = results
        .iter()
        .filter(|r| PathCensus::is_usable(r) && r.degenerate)
        .count();
    Ok(PathCensus {
        results,
        usable,
        exact,
        within_gap,
        boundary,
        gap_threshold,
    })
}

/// Drop columns whose largest entry is at most `tol_col`
/// (default 1e-10 * the largest entry of the matrix).
pub fn prune_zero_columns(a_star: &DMatrix<f64>, tol_col: Option<f64>) -> DMatrix<f64> {
    let max_entry = a_star.iter().copied().fold(0.0f64, f64::max);
    let tol = tol_col.unwrap_or(1e-10 * max_entry);
    let keep: Vec<usize> = (0..a_star.ncols())
        .filter(|&c| a_star.column(c).iter().copied().fold(0.0f64, f64::max) > tol)
        .collect();
    let mut out = DMatrix::zeros(a_star.nrows(), keep.len());
    for (new_c, &c) in keep.iter().enumerate() {
        out.set_column(new_c, &a_star.column(c));
    }
    out
}
