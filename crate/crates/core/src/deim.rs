//! Row-index selection on tall full-rank matrices and the associated
//! interpolation growth factors ||(S_U^T U)^{-1}||_2.
//!
//! Selectors: the original greedy procedure, the max-row-norm/deflation
//! procedure with smallest-index tie-breaking (implemented literally rather
//! than through library pivoted QR, whose tie-breaking is unspecified), its
//! strong-RRQR refinement by determinant-ratio swaps, and adaptive
//! randomized pivoting by leverage-score sampling. All of them work for
//! real and complex scalars; a "row norm" is the Euclidean norm of the
//! complex row and maxima are taken over real magnitudes.

use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::la::{jacobi_svd, lu_inverse};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectorKind {
    Greedy,
    Qdeim,
    Srrqr { eta: f64 },
    Arp { seed: u64 },
}

impl std::fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectorKind::Greedy => write!(f, "greedy"),
            SelectorKind::Qdeim => write!(f, "qdeim"),
            SelectorKind::Srrqr { eta } => write!(f, "srrqr({eta})"),
            SelectorKind::Arp { seed } => write!(f, "arp({seed})"),
        }
    }
}

/// An ordered choice of r distinct row indices of an m x r matrix, together
/// with the cached interpolation inverse M = (S_U^T U)^{-1} and the growth
/// factor ||M||_2.
#[derive(Clone, Debug)]
pub struct Selection<S: Scalar> {
    pub indices: Vec<usize>,
    pub method: SelectorKind,
    pub m_inv: Mat<S>,
    pub growth: f64,
}

impl<S: Scalar> Selection<S> {
    fn build(u: &Mat<S>, indices: Vec<usize>, method: SelectorKind) -> Result<Self, Error> {
        let sub = u.select_rows(&indices);
        let growth = growth_factor(u, &indices);
        if !growth.is_finite() {
            return Err(Error::InfeasibleSelection {
                context: format!("{method} produced a singular interpolation block"),
            });
        }
        let m_inv = lu_inverse(&sub)?;
        Ok(Selection {
            indices,
            method,
            m_inv,
            growth,
        })
    }

    /// The m x r selection matrix [e_{p_1}, ..., e_{p_r}].
    pub fn matrix(&self, m: usize) -> Mat<S> {
        Mat::identity_cols(m, &self.indices)
    }
}

/// Spectral norm of the inverse of the selected r x r row block, 1/sigma_min.
/// Returns +infinity when the block is singular (infeasible selection).
pub fn growth_factor<S: Scalar>(u: &Mat<S>, indices: &[usize]) -> f64 {
    let sub = u.select_rows(indices);
    let sig = jacobi_svd(&sub).sigma;
    let smin = *sig.last().unwrap();
    if smin <= sig[0] * 1e-300 || smin == 0.0 {
        f64::INFINITY
    } else {
        1.0 / smin
    }
}

pub fn select<S: Scalar>(kind: SelectorKind, u: &Mat<S>) -> Result<Selection<S>, Error> {
    match kind {
        SelectorKind::Greedy => select_greedy_deim(u),
        SelectorKind::Qdeim => select_qdeim(u),
        SelectorKind::Srrqr { eta } => select_srrqr(u, eta),
        SelectorKind::Arp { seed } => select_arp(u, seed),
    }
}

/// Classic greedy selection: p_1 maximizes |u_1|; for k >= 2 the next index
/// maximizes the residual of interpolating u_k at the chosen rows. Ties go
/// to the smallest index.
pub fn select_greedy_deim<S: Scalar>(u: &Mat<S>) -> Result<Selection<S>, Error> {
    let (m, r) = u.shape();
    assert!(m >= r && r >= 1);
    let mut indices = Vec::with_capacity(r);
    indices.push(argmax_abs_col(u, 0));
    for k in 1..r {
        // solve U[p, 0..k] c = u_k[p]
        let sub = u.select_rows(&indices).cols_range(0, k);
        let sig = jacobi_svd(&sub).sigma;
        if sig[0] <= 0.0 || sig[0] / sig[k - 1].max(1e-300) > 1e14 {
            return Err(Error::SingularMatrix {
                context: format!("greedy interpolation system at step {}", k + 1),
            });
        }
        let rhs = Mat::from_fn(k, 1, |i, _| u[(indices[i], k)]);
        let c = crate::la::lu_solve(&sub, &rhs)?;
        // residual rho = u_k - U[:, 0..k] c
        let mut best = (0usize, -1.0f64);
        for i in 0..m {
            let mut rho = u[(i, k)];
            for j in 0..k {
                rho -= u[(i, j)] * c[(j, 0)];
            }
            let a = rho.abs();
            if a > best.1 {
                best = (i, a);
            }
        }
        indices.push(best.0);
    }
    Selection::build(u, indices, SelectorKind::Greedy)
}

fn argmax_abs_col<S: Scalar>(u: &Mat<S>, col: usize) -> usize {
    let mut best = (0usize, -1.0f64);
    for i in 0..u.nrows() {
        let a = u[(i, col)].abs();
        if a > best.1 {
            best = (i, a);
        }
    }
    best.0
}

/// One deflation step: project the (Hermitian) direction of row `p` out of
/// every row of `w`. Returns the norm of the selected row before deflation.
fn deflate_row<S: Scalar>(w: &mut Mat<S>, p: usize) -> f64 {
    let r = w.ncols();
    let row: Vec<S> = (0..r).map(|j| w[(p, j)]).collect();
    let wn2: f64 = row.iter().map(|x| x.abs_sq()).sum();
    if wn2 == 0.0 {
        return 0.0;
    }
    // dots = W * conj(row) / ||row||^2, then W -= dots * row
    let m = w.nrows();
    let mut dots = vec![S::zero(); m];
    for (j, rj) in row.iter().enumerate() {
        let c = rj.conj().scale(1.0 / wn2);
        for (dst, x) in dots.iter_mut().zip(w.col(j)) {
            *dst += *x * c;
        }
    }
    for (j, rj) in row.iter().enumerate() {
        let rjv = *rj;
        for (x, dv) in w.col_mut(j).iter_mut().zip(dots.iter()) {
            *x -= *dv * rjv;
        }
    }
    wn2.sqrt()
}

fn row_norms_sq<S: Scalar>(w: &Mat<S>) -> Vec<f64> {
    let mut norms = vec![0.0; w.nrows()];
    for j in 0..w.ncols() {
        for (n, x) in norms.iter_mut().zip(w.col(j)) {
            *n += x.abs_sq();
        }
    }
    norms
}

/// Max-row-norm selection with deflation and the smallest-index tie rule:
/// in every step pick the smallest index attaining the maximal Euclidean
/// row norm, then remove that direction with a rank-1 projection.
pub fn select_qdeim<S: Scalar>(u: &Mat<S>) -> Result<Selection<S>, Error> {
    let indices = qdeim_indices(u)?;
    Selection::build(u, indices, SelectorKind::Qdeim)
}

fn qdeim_indices<S: Scalar>(u: &Mat<S>) -> Result<Vec<usize>, Error> {
    let (m, r) = u.shape();
    assert!(m >= r && r >= 1);
    let unorm = u.norm_fro();
    if unorm == 0.0 {
        return Err(Error::RankLoss { step: 1 });
    }
    let mut w = u.clone();
    let mut indices = Vec::with_capacity(r);
    for k in 0..r {
        let norms = row_norms_sq(&w);
        let mut best = (0usize, -1.0f64);
        for (i, &n) in norms.iter().enumerate() {
            if n > best.1 {
                best = (i, n);
            }
        }
        if best.1.sqrt() < 1e-14 * unorm {
            return Err(Error::RankLoss { step: k + 1 });
        }
        indices.push(best.0);
        deflate_row(&mut w, best.0);
    }
    Ok(indices)
}

/// Strong-RRQR style refinement: starting from the max-row-norm selection,
/// swap a selected against an unselected row while some coefficient of
/// B = U (S_U^T U)^{-1} exceeds eta in magnitude (each such swap multiplies
/// |det(S_U^T U)| by |B_ji| > eta). Terminates with
/// growth <= sqrt(1 + eta^2 r (m - r)).
pub fn select_srrqr<S: Scalar>(u: &Mat<S>, eta: f64) -> Result<Selection<S>, Error> {
    assert!(eta > 1.0, "srrqr requires eta > 1");
    let (m, r) = u.shape();
    let mut indices = qdeim_indices(u)?;
    let max_iters = ((r as f64) * (r as f64).log(eta).max(1.0) * 10.0).ceil() as usize;
    let max_iters = max_iters.max(64);
    let mut selected: Vec<bool> = vec![false; m];
    for &p in &indices {
        selected[p] = true;
    }
    let rebuild = |indices: &Vec<usize>| -> Result<Mat<S>, Error> {
        let inv = lu_inverse(&u.select_rows(indices))?;
        Ok(u.mul(&inv))
    };
    let mut b = rebuild(&indices)?;
    let mut swaps = 0usize;
    loop {
        // largest |B_ji| over unselected rows j
        let mut best = (0usize, 0usize, 0.0f64);
        for j in 0..m {
            if selected[j] {
                continue;
            }
            for i in 0..r {
                let a = b[(j, i)].abs();
                if a > best.2 {
                    best = (j, i, a);
                }
            }
        }
        if best.2 <= eta {
            break;
        }
        if swaps >= max_iters {
            return Err(Error::SwapBudget {
                iterations: max_iters,
            });
        }
        let (j, i, _) = best;
        selected[indices[i]] = false;
        selected[j] = true;
        indices[i] = j;
        swaps += 1;
        if swaps % 25 == 0 {
            b = rebuild(&indices)?;
        } else {
            // rank-1 update B <- B - B[:, i] (B[j, :] - e_i^T) / B[j, i]
            let pivot = b[(j, i)];
            let bcol: Vec<S> = (0..m).map(|t| b[(t, i)]).collect();
            let brow: Vec<S> = (0..r)
                .map(|l| {
                    if l == i {
                        b[(j, l)] - S::one()
                    } else {
                        b[(j, l)]
                    }
                })
                .collect();
            for l in 0..r {
                let f = brow[l] / pivot;
                if f.abs() == 0.0 {
                    continue;
                }
                for t in 0..m {
                    let v = b[(t, l)] - bcol[t] * f;
                    b[(t, l)] = v;
                }
            }
        }
    }
    Selection::build(u, indices, SelectorKind::Srrqr { eta })
}

/// Adaptive randomized pivoting: sample each pivot with probability
/// proportional to the current squared row norms (leverage scores), then
/// deflate exactly like the deterministic procedure. Sampling uses
/// inverse-CDF on the exact cumulative masses of the seeded stream, so a
/// fixed seed reproduces the selection bit for bit.
pub fn select_arp<S: Scalar>(u: &Mat<S>, seed: u64) -> Result<Selection<S>, Error> {
    let (m, r) = u.shape();
    assert!(m >= r && r >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = u.clone();
    let mut chosen = vec![false; m];
    let mut indices = Vec::with_capacity(r);
    for _k in 0..r {
        let mut masses = row_norms_sq(&w);
        let mut total = 0.0;
        for (i, mass) in masses.iter_mut().enumerate() {
            if chosen[i] || *mass < 0.0 {
                *mass = 0.0;
            }
            total += *mass;
        }
        if total < 1e-12 {
            return Err(Error::ProbabilityMassLost { total });
        }
        let t: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = usize::MAX;
        for (i, &mass) in masses.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            acc += mass;
            if t < acc {
                pick = i;
                break;
            }
        }
        if pick == usize::MAX {
            // rounding at the very top of the cdf
            pick = (0..m).rev().find(|&i| masses[i] > 0.0).unwrap();
        }
        chosen[pick] = true;
        indices.push(pick);
        deflate_row(&mut w, pick);
    }
    Selection::build(u, indices, SelectorKind::Arp { seed })
}

// ---------------------------------------------------------------------------
// Tie diagnostics and enumeration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct TieReport {
    pub tied: bool,
    /// 1-based iteration of the first tie.
    pub first_tie_iteration: Option<usize>,
}

/// Run the max-row-norm selection and report whether at some step two
/// distinct rows both attain the maximal norm within relative `tau`.
/// `tau = 0` reproduces the exact-tie condition of the continuity theorem.
pub fn detect_tie<S: Scalar>(u: &Mat<S>, tau: f64) -> TieReport {
    let (_, r) = u.shape();
    let mut w = u.clone();
    for k in 0..r {
        let norms: Vec<f64> = row_norms_sq(&w).iter().map(|x| x.sqrt()).collect();
        let mut mx = -1.0;
        let mut p = 0usize;
        for (i, &n) in norms.iter().enumerate() {
            if n > mx {
                mx = n;
                p = i;
            }
        }
        let near = norms
            .iter()
            .enumerate()
            .filter(|&(i, &n)| i != p && if tau > 0.0 { n >= mx * (1.0 - tau) } else { n == mx })
            .count();
        if near > 0 {
            return TieReport {
                tied: true,
                first_tie_iteration: Some(k + 1),
            };
        }
        deflate_row(&mut w, p);
    }
    TieReport {
        tied: false,
        first_tie_iteration: None,
    }
}

/// All pivot paths of the max-row-norm selection without tie-breaking:
/// every step may pick any row whose norm is within relative `tau` of the
/// maximum. Each path deflates with its own choice. Returns the distinct
/// terminal selections, sorted by index tuple.
pub fn enumerate_qdeim_selections<S: Scalar>(
    u: &Mat<S>,
    tau: f64,
) -> Result<Vec<Selection<S>>, Error> {
    const BUDGET: usize = 1_000_000;
    let (_, r) = u.shape();
    let unorm = u.norm_fro();
    if unorm == 0.0 {
        return Err(Error::RankLoss { step: 1 });
    }
    let mut nodes = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut stack: Vec<(Mat<S>, Vec<usize>)> = vec![(u.clone(), Vec::new())];
    while let Some((w, path)) = stack.pop() {
        if path.len() == r {
            if seen.insert(path.clone()) {
                out.push(path);
            }
            continue;
        }
        let norms: Vec<f64> = row_norms_sq(&w).iter().map(|x| x.sqrt()).collect();
        let mx = norms.iter().cloned().fold(-1.0, f64::max);
        if mx < 1e-14 * unorm {
            return Err(Error::RankLoss {
                step: path.len() + 1,
            });
        }
        let cands: Vec<usize> = (0..w.nrows())
            .filter(|&i| {
                let n = norms[i];
                if tau > 0.0 {
                    n >= mx * (1.0 - tau)
                } else {
                    n == mx
                }
            })
            .collect();
        for i in cands {
            nodes += 1;
            if nodes > BUDGET {
                return Err(Error::BranchBudget { budget: BUDGET });
            }
            let mut wc = w.clone();
            deflate_row(&mut wc, i);
            let mut pc = path.clone();
            pc.push(i);
            stack.push((wc, pc));
        }
    }
    out.sort();
    out.into_iter()
        .map(|idx| Selection::build(u, idx, SelectorKind::Qdeim))
        .collect()
}

// ---------------------------------------------------------------------------
// Known growth-factor bounds per selector
// ---------------------------------------------------------------------------

pub mod bounds {
    /// (1 + sqrt(2m))^{r-1} / ||u_1||_inf for the greedy procedure.
    pub fn greedy(m: usize, r: usize, u1_inf: f64) -> f64 {
        (1.0 + (2.0 * m as f64).sqrt()).powi(r as i32 - 1) / u1_inf
    }

    /// sqrt(m - r - 1) * sqrt(4^r + 6r - 1) / 3 for max-row-norm selection.
    pub fn qdeim(m: usize, r: usize) -> f64 {
        let lead = (m as f64 - r as f64 - 1.0).max(0.0).sqrt();
        (lead * (4f64.powi(r as i32) + 6.0 * r as f64 - 1.0).sqrt() / 3.0).max(1.0)
    }

    /// sqrt(1 + eta^2 r (m - r)) after strong-RRQR refinement.
    pub fn srrqr(m: usize, r: usize, eta: f64) -> f64 {
        (1.0 + eta * eta * (r * (m - r)) as f64).sqrt()
    }

    /// sqrt(1 + r (m - r)); holds in expectation for randomized pivoting.
    pub fn arp(m: usize, r: usize) -> f64 {
        (1.0 + (r * (m - r)) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use num_complex::Complex64;

    /// The 3 x 2 example basis [t, 0; sqrt(1-t^2), 0; 0, 1].
    fn example_u(t: f64) -> Mat<f64> {
        let mut u = Mat::zeros(3, 2);
        u[(0, 0)] = t;
        u[(1, 0)] = (1.0 - t * t).sqrt();
        u[(2, 1)] = 1.0;
        u
    }

    /// Same matrix with both leading entries bitwise equal (exact tie).
    fn example_u_tied() -> Mat<f64> {
        let t = 1.0 / 2f64.sqrt();
        let mut u = Mat::zeros(3, 2);
        u[(0, 0)] = t;
        u[(1, 0)] = t;
        u[(2, 1)] = 1.0;
        u
    }

    fn identity_cols(m: usize, r: usize) -> Mat<f64> {
        Mat::identity_cols(m, &(0..r).collect::<Vec<_>>())
    }

    #[test]
    fn greedy_identity_columns() {
        let u = identity_cols(8, 3);
        let s = select_greedy_deim(&u).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert!((s.growth - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_example_first_pivot() {
        let u = example_u(1.0 / 2f64.sqrt() + 0.1);
        let s = select_greedy_deim(&u).unwrap();
        assert_eq!(s.indices[0], 0);
        assert!(s.growth >= 1.0);
    }

    #[test]
    fn greedy_bound_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        for trial in 0..20 {
            let u = random_orthonormal::<f64, _>(50, 4, &mut rng);
            let s = select_greedy_deim(&u).unwrap();
            let u1_inf = (0..50).map(|i| u[(i, 0)].abs()).fold(0.0, f64::max);
            assert!(
                s.growth <= bounds::greedy(50, 4, u1_inf),
                "trial {trial}: {} > bound",
                s.growth
            );
        }
    }

    #[test]
    fn qdeim_example_left_and_right_of_the_tie() {
        let h = 0.01;
        let s_left = select_qdeim(&example_u(1.0 / 2f64.sqrt() - h)).unwrap();
        assert_eq!(s_left.indices, vec![2, 1]);
        let s_right = select_qdeim(&example_u(1.0 / 2f64.sqrt() + h)).unwrap();
        assert_eq!(s_right.indices, vec![2, 0]);
        // exact tie resolves to the smaller second index
        let s_tie = select_qdeim(&example_u_tied()).unwrap();
        assert_eq!(s_tie.indices, vec![2, 0]);
    }

    #[test]
    fn qdeim_rejects_zero_matrix() {
        let u = Mat::<f64>::zeros(5, 2);
        assert!(matches!(select_qdeim(&u), Err(Error::RankLoss { .. })));
    }

    #[test]
    fn qdeim_basis_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..10 {
            let u = random_orthonormal::<Complex64, _>(30, 4, &mut rng);
            let q = random_orthonormal::<Complex64, _>(4, 4, &mut rng);
            let a = select_qdeim(&u).unwrap();
            let b = select_qdeim(&u.mul(&q)).unwrap();
            assert_eq!(a.indices, b.indices);
        }
    }

    #[test]
    fn qdeim_continuity_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(203);
        let u = random_orthonormal::<f64, _>(25, 3, &mut rng);
        assert!(!detect_tie(&u, 0.0).tied);
        let base = select_qdeim(&u).unwrap();
        for _ in 0..100 {
            let e = random_normal::<f64, _>(25, 3, &mut rng).scaled(1e-10);
            let s = select_qdeim(&u.add(&e)).unwrap();
            assert_eq!(s.indices, base.indices);
        }
    }

    #[test]
    fn qdeim_bound_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(204);
        for &(m, r) in &[(20usize, 3usize), (50, 5), (100, 8)] {
            for _ in 0..25 {
                let u = random_orthonormal::<f64, _>(m, r, &mut rng);
                let s = select_qdeim(&u).unwrap();
                assert!(s.growth <= bounds::qdeim(m, r));
            }
        }
    }

    #[test]
    fn srrqr_identity_is_qdeim() {
        let u = identity_cols(9, 4);
        let a = select_qdeim(&u).unwrap();
        let b = select_srrqr(&u, 2.0).unwrap();
        assert_eq!(a.indices, b.indices);
        assert!((b.growth - 1.0).abs() < 1e-12);
    }

    /// Orthonormal 40 x 3 basis on which the max-row-norm start is
    /// measurably suboptimal (seed found by search; a swap with gain > eta
    /// exists from the initial pivot sequence).
    fn adversarial_basis(m: usize, r: usize) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        random_orthonormal::<f64, _>(m, r, &mut rng)
    }

    #[test]
    fn srrqr_improves_adversarial_and_meets_bound() {
        let (m, r) = (40, 3);
        let u = adversarial_basis(m, r);
        let eta = 1.05;
        let base = select_qdeim(&u).unwrap();
        let s = select_srrqr(&u, eta).unwrap();
        assert_ne!(s.indices, base.indices, "no swap happened");
        assert!(s.growth <= base.growth + 1e-12);
        assert!(s.growth <= bounds::srrqr(m, r, eta));
        // exhaustive certificate over all C(40,3) row triples
        let mut best = f64::INFINITY;
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    let g = growth_factor(&u, &[a, b, c]);
                    if g < best {
                        best = g;
                    }
                }
            }
        }
        assert!(best <= s.growth + 1e-12);
        assert!(bounds::srrqr(m, r, eta) >= best);
    }

    #[test]
    fn srrqr_bound_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(205);
        for _ in 0..10 {
            let u = random_orthonormal::<f64, _>(100, 5, &mut rng);
            let s = select_srrqr(&u, 2.0).unwrap();
            assert!(s.growth <= bounds::srrqr(100, 5, 2.0)); // ~43.6
        }
    }

    #[test]
    fn arp_identity_columns_growth_one() {
        let u = identity_cols(10, 3);
        for seed in 0..10 {
            let s = select_arp(&u, seed).unwrap();
            let mut idx = s.indices.clone();
            idx.sort();
            assert_eq!(idx, vec![0, 1, 2]);
            assert!((s.growth - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn arp_deterministic_under_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(206);
        let u = random_orthonormal::<Complex64, _>(60, 5, &mut rng);
        let a = select_arp(&u, 77).unwrap();
        let b = select_arp(&u, 77).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.growth, b.growth);
    }

    #[test]
    fn arp_median_growth_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(207);
        let (m, r) = (100, 5);
        let u = random_orthonormal::<f64, _>(m, r, &mut rng);
        let mut growths: Vec<f64> =
            (0..200).map(|s| select_arp(&u, s).unwrap().growth).collect();
        growths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = growths[growths.len() / 2];
        assert!(median <= bounds::arp(m, r), "median {median}");
        let p95 = growths[(growths.len() * 95) / 100];
        assert!(p95 <= 3.0 * bounds::arp(m, r), "p95 {p95}");
    }

    #[test]
    fn growth_factor_examples() {
        let u = identity_cols(7, 3);
        assert!((growth_factor(&u, &[0, 1, 2]) - 1.0).abs() < 1e-13);
        // example basis at t = 0.6, indices (2, 0): sigma_min = 0.6
        let g = growth_factor(&example_u(0.6), &[2, 0]);
        assert!((g - 1.0 / 0.6).abs() < 1e-12);
        // rows outside the column space give a singular block
        let gi = growth_factor(&u, &[3, 4, 5]);
        assert!(gi.is_infinite());
    }

    #[test]
    fn tie_detection_on_the_example() {
        let r = detect_tie(&example_u_tied(), 0.0);
        assert_eq!(
            r,
            TieReport {
                tied: true,
                first_tie_iteration: Some(2)
            }
        );
        // float 1/sqrt(2) differs in the last ulp; the diagnostic tolerance sees it
        let rf = detect_tie(&example_u(1.0 / 2f64.sqrt()), 1e-10);
        assert!(rf.tied && rf.first_tie_iteration == Some(2));
        let r06 = detect_tie(&example_u(0.6), 0.0);
        assert!(!r06.tied);
        // equal-norm unit rows are a genuine tie (the selection order flips
        // under perturbation); distinctly scaled rows are not
        assert!(detect_tie(&identity_cols(6, 2), 0.0).tied);
        let mut scaled = Mat::<f64>::zeros(6, 2);
        scaled[(0, 0)] = 1.0;
        scaled[(1, 1)] = 0.9;
        assert!(!detect_tie(&scaled, 0.0).tied);
    }

    #[test]
    fn enumerate_example_has_two_selections() {
        let sels = enumerate_qdeim_selections(&example_u_tied(), 0.0).unwrap();
        let idx: Vec<&[usize]> = sels.iter().map(|s| s.indices.as_slice()).collect();
        assert_eq!(idx, vec![&[2, 0][..], &[2, 1][..]]);
    }

    #[test]
    fn enumerate_generic_is_single_and_matches_qdeim() {
        let mut rng = ChaCha8Rng::seed_from_u64(208);
        let u = random_orthonormal::<f64, _>(20, 4, &mut rng);
        let sels = enumerate_qdeim_selections(&u, 0.0).unwrap();
        assert_eq!(sels.len(), 1);
        assert_eq!(sels[0].indices, select_qdeim(&u).unwrap().indices);
    }

    #[test]
    fn enumerate_three_way_tie() {
        // three rows of bitwise-equal norm in the first step
        let s = 1.0 / 2f64.sqrt();
        let mut u = Mat::<f64>::zeros(4, 2);
        u[(0, 0)] = s;
        u[(1, 0)] = s;
        u[(2, 1)] = s;
        u[(3, 0)] = 1e-3;
        let sels = enumerate_qdeim_selections(&u, 0.0).unwrap();
        assert!(sels.len() >= 3, "got {}", sels.len());
    }

    #[test]
    fn perturbed_selections_lie_in_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(209);
        let u = example_u(1.0 / 2f64.sqrt());
        let feasible: HashSet<Vec<usize>> = enumerate_qdeim_selections(&u, 1e-6)
            .unwrap()
            .into_iter()
            .map(|s| s.indices)
            .collect();
        assert_eq!(feasible.len(), 2);
        for _ in 0..50 {
            let e = random_normal::<f64, _>(3, 2, &mut rng).scaled(1e-8);
            let (q, _) = crate::la::thin_qr(&u.add(&e)); // orthonormal perturbation
            let s = select_qdeim(&q).unwrap();
            assert!(feasible.contains(&s.indices), "{:?}", s.indices);
        }
    }
}
