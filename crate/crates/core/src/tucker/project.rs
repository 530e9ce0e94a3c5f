//! Oblique and orthogonal tangent projections for Tucker tensors.
//!
//! At Y = C x1 U1 x2 U2 x3 U3 the unfoldings factor as Y_(i) = U_i S_i V_i^H
//! with implicit orthonormal right factors V_i built from the other two
//! factors and the QR of the transposed core unfolding. The oblique
//! projection replaces U_i U_i^H and V_i V_i^H by interpolatory projectors
//! whose indices come from a per-mode row selection and a composite
//! two-stage selection over the n^2 rows of V_i. One projection consumes
//! r fibers per mode plus one r x r x r entry block of the field.

use crate::deim::{self, Selection, SelectorKind};
use crate::error::Error;
use crate::la::{jacobi_svd, lu_inverse, thin_qr};
use crate::mat::Mat;
use crate::problems::TensorField;
use crate::scalar::Scalar;

use super::tensor::{Tensor3, TuckerSum, TuckerTensor};

/// Rank-r factorization data of one unfolding: C_(i)^H = Q_i S_i^H from an
/// economy QR, so that Y_(i) = U_i S_i V_i^H with V_i = (conj U_k (x) conj U_j) Q_i.
#[derive(Clone, Debug)]
pub struct ModeGram<S: Scalar> {
    pub q: Mat<S>,
    pub s: Mat<S>,
    pub sigma_min_ratio: f64,
    pub rank_deficient: bool,
}

pub fn build_mode_grams<S: Scalar>(y: &TuckerTensor<S>) -> [ModeGram<S>; 3] {
    let mut out = Vec::with_capacity(3);
    for mode in 0..3 {
        let ct = y.core.unfold(mode).adjoint(); // r^2 x r
        let (q, r) = thin_qr(&ct);
        let sig = jacobi_svd(&r).sigma;
        let ratio = if sig[0] > 0.0 {
            sig[sig.len() - 1] / sig[0]
        } else {
            0.0
        };
        out.push(ModeGram {
            q,
            s: r.adjoint(),
            sigma_min_ratio: ratio,
            rank_deficient: ratio < 1e-12,
        });
    }
    [out.remove(0), out.remove(0), out.remove(0)]
}

/// Composite selection over the rows of V = (ubar (x) utilde) Q:
/// row selections on the two side factors, then on an orthonormal basis of
/// the selected r^2 x r block; stored implicitly via row index pairs.
#[derive(Clone, Debug)]
pub struct VSelection<S: Scalar> {
    pub s1: Selection<S>,
    pub s2: Selection<S>,
    pub s12: Selection<S>,
    /// (slow, fast) row index pairs into (ubar, utilde).
    pub pairs: Vec<(usize, usize)>,
    /// S_V^T V, the r x r interpolation block.
    pub b: Mat<S>,
    /// (V^H S_V)^{-1}.
    pub m_v: Mat<S>,
    pub growth: f64,
}

pub fn sample_v_selection<S: Scalar>(
    ubar: &Mat<S>,
    utilde: &Mat<S>,
    q: &Mat<S>,
    kinds: (SelectorKind, SelectorKind, SelectorKind),
) -> Result<VSelection<S>, Error> {
    let r = q.ncols();
    let s1 = deim::select(kinds.0, ubar)?;
    let s2 = deim::select(kinds.1, utilde)?;
    // Q^ = orth([(S1^T ubar) (x) (S2^T utilde)] Q)
    let b1 = ubar.select_rows(&s1.indices);
    let b2 = utilde.select_rows(&s2.indices);
    let block = b1.kron(&b2).mul(q); // r^2 x r
    let sig = jacobi_svd(&block).sigma;
    if sig[r - 1] <= 1e-14 * sig[0].max(1e-300) {
        return Err(Error::InfeasibleSelection {
            context: "singular (S1^T U) (x) (S2^T U) block in the composite selection".into(),
        });
    }
    let (qhat, _) = thin_qr(&block);
    let s12 = deim::select(kinds.2, &qhat)?;
    // selected pairs: q-index t <-> (slow, fast) = (t / r, t % r)
    let pairs: Vec<(usize, usize)> = s12
        .indices
        .iter()
        .map(|&t| (s1.indices[t / r], s2.indices[t % r]))
        .collect();
    // B = S_V^T V: rows (ubar(a,:) (x) utilde(b,:)) Q
    let mut b = Mat::zeros(r, r);
    for (row, &(a, bf)) in pairs.iter().enumerate() {
        let wa = ubar.row(a);
        let wb = utilde.row(bf);
        for c in 0..r {
            let mut acc = S::zero();
            for al in 0..ubar.ncols() {
                for be in 0..utilde.ncols() {
                    acc += wa[al] * wb[be] * q[(al * utilde.ncols() + be, c)];
                }
            }
            b[(row, c)] = acc;
        }
    }
    let bs = jacobi_svd(&b).sigma;
    let growth = if bs[r - 1] > 0.0 { 1.0 / bs[r - 1] } else { f64::INFINITY };
    if !growth.is_finite() {
        return Err(Error::InfeasibleSelection {
            context: "composite selection block is singular".into(),
        });
    }
    let m_v = lu_inverse(&b)?.adjoint();
    Ok(VSelection {
        s1,
        s2,
        s12,
        pairs,
        b,
        m_v,
        growth,
    })
}

/// All selections needed by one oblique Tucker projection.
pub struct TuckerSelections<S: Scalar> {
    pub rows: [Selection<S>; 3],
    pub vs: [VSelection<S>; 3],
}

impl<S: Scalar> TuckerSelections<S> {
    pub fn growth_max(&self) -> f64 {
        (0..3)
            .map(|i| self.rows[i].growth * self.vs[i].growth)
            .fold(0.0, f64::max)
    }
}

/// The other two modes of `mode`, as (fast, slow) = (smaller, larger).
pub fn other_modes(mode: usize) -> (usize, usize) {
    match mode {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("mode out of range"),
    }
}

/// Fiber coordinates (ascending mode order) of the selected V rows.
fn fiber_coords(mode: usize, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    // pairs are (slow, fast); ascending mode order = (fast, slow)
    let _ = mode;
    pairs.iter().map(|&(slow, fast)| (fast, slow)).collect()
}

/// Build all selections from the CURRENT factors, retrying with srrqr(2)
/// and the deterministic max-row-norm selector when the per-mode growth
/// product exceeds `guard`.
pub fn build_tucker_selections<S: Scalar>(
    y: &TuckerTensor<S>,
    grams: &[ModeGram<S>; 3],
    kind: SelectorKind,
    guard: f64,
) -> Result<TuckerSelections<S>, Error> {
    let mut chain = vec![kind];
    if !matches!(kind, SelectorKind::Srrqr { .. }) {
        chain.push(SelectorKind::Srrqr { eta: 2.0 });
    }
    if !matches!(kind, SelectorKind::Qdeim) {
        chain.push(SelectorKind::Qdeim);
    }
    let mut worst = 0.0f64;
    'chain: for k in chain {
        let mut rows = Vec::with_capacity(3);
        let mut vs = Vec::with_capacity(3);
        let mut seed_stream = seed_of(k);
        for mode in 0..3 {
            let rk = next_kind(k, &mut seed_stream);
            let row_sel = match deim::select(rk, &y.factors[mode]) {
                Ok(s) => s,
                Err(Error::InfeasibleSelection { .. }) => continue 'chain,
                Err(e) => return Err(e),
            };
            let (fast, slow) = other_modes(mode);
            let ubar = y.factors[slow].conj();
            let utilde = y.factors[fast].conj();
            let kv = (
                next_kind(k, &mut seed_stream),
                next_kind(k, &mut seed_stream),
                next_kind(k, &mut seed_stream),
            );
            let vsel = match sample_v_selection(&ubar, &utilde, &grams[mode].q, kv) {
                Ok(s) => s,
                Err(Error::InfeasibleSelection { .. }) => continue 'chain,
                Err(e) => return Err(e),
            };
            worst = worst.max(row_sel.growth * vsel.growth);
            rows.push(row_sel);
            vs.push(vsel);
        }
        let sel = TuckerSelections {
            rows: [rows.remove(0), rows.remove(0), rows.remove(0)],
            vs: [vs.remove(0), vs.remove(0), vs.remove(0)],
        };
        if sel.growth_max() <= guard {
            return Ok(sel);
        }
        worst = worst.max(sel.growth_max());
    }
    Err(Error::GrowthGuard {
        growth: worst,
        guard,
        stage: None,
    })
}

fn seed_of(kind: SelectorKind) -> u64 {
    match kind {
        SelectorKind::Arp { seed } => seed,
        _ => 0,
    }
}

fn next_kind(kind: SelectorKind, stream: &mut u64) -> SelectorKind {
    match kind {
        SelectorKind::Arp { .. } => {
            *stream = stream.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d);
            SelectorKind::Arp { seed: *stream }
        }
        other => other,
    }
}

/// Oblique tangent projection of the field at Y, assembled from exactly
/// r fibers per mode at the composite V indices plus the r^3 block at the
/// selected row triples. Result has mode ranks <= 2r.
pub fn project_oblique_tucker<S: Scalar>(
    y: &TuckerTensor<S>,
    field: &dyn TensorField<S>,
    sels: &TuckerSelections<S>,
    grams: &[ModeGram<S>; 3],
) -> Result<TuckerTensor<S>, Error> {
    let r = y.mode_ranks().0;
    let mut ws: Vec<Mat<S>> = Vec::with_capacity(3);
    for mode in 0..3 {
        let coords = fiber_coords(mode, &sels.vs[mode].pairs);
        let g = field.eval_fibers(y, mode, &coords); // n x r
        if !g.all_finite() {
            return Err(Error::NonFinite {
                context: format!("sampled mode-{mode} fiber"),
            });
        }
        // W = (I - U M S^T) G, then apply N = (V^H S_V)^{-1}
        let su_g = g.select_rows(&sels.rows[mode].indices);
        let w = g.sub(&y.factors[mode].mul(&sels.rows[mode].m_inv.mul(&su_g)));
        ws.push(w.mul(&sels.vs[mode].m_v));
    }
    let block = field.eval_block(
        y,
        &sels.rows[0].indices,
        &sels.rows[1].indices,
        &sels.rows[2].indices,
    );
    if !block.all_finite() {
        return Err(Error::NonFinite {
            context: "sampled core block".into(),
        });
    }
    let bbar = block
        .mode_product(0, &sels.rows[0].m_inv)
        .mode_product(1, &sels.rows[1].m_inv)
        .mode_product(2, &sels.rows[2].m_inv);
    let corelets = [
        Tensor3::fold(&grams[0].q.adjoint(), 0, (r, r, r)),
        Tensor3::fold(&grams[1].q.adjoint(), 1, (r, r, r)),
        Tensor3::fold(&grams[2].q.adjoint(), 2, (r, r, r)),
    ];
    Ok(assemble_tangent(y, &ws, &corelets, &bbar))
}

/// Orthogonal tangent projection of a structured field value (sum of
/// Tucker terms), never densifying at full size.
pub fn project_orthogonal_tucker_sum<S: Scalar>(
    y: &TuckerTensor<S>,
    fsum: &TuckerSum<S>,
    grams: &[ModeGram<S>; 3],
) -> TuckerTensor<S> {
    let r = y.mode_ranks().0;
    let mut ws: Vec<Mat<S>> = Vec::with_capacity(3);
    let mut bbar = Tensor3::<S>::zeros((r, r, r));
    // P_t per term and mode: U_i^H A_{t,i}
    for t in fsum.terms() {
        let p: Vec<Mat<S>> = (0..3)
            .map(|i| y.factors[i].h_mul(&t.factors[i]))
            .collect();
        bbar = bbar.add(
            &t.core
                .mode_product(0, &p[0])
                .mode_product(1, &p[1])
                .mode_product(2, &p[2]),
        );
    }
    for mode in 0..3 {
        let (fast, slow) = other_modes(mode);
        let n = y.factors[mode].nrows();
        let mut fv = Mat::<S>::zeros(n, r);
        for t in fsum.terms() {
            let pj = y.factors[fast].h_mul(&t.factors[fast]);
            let pk = y.factors[slow].h_mul(&t.factors[slow]);
            let small = t.core.mode_product(fast, &pj).mode_product(slow, &pk);
            // F_(i) V_i = A_i * small_(i) * Q_i
            let contrib = t.factors[mode].mul(&small.unfold(mode).mul(&grams[mode].q));
            fv = fv.add(&contrib);
        }
        let w = fv.sub(&y.factors[mode].mul(&y.factors[mode].h_mul(&fv)));
        ws.push(w);
    }
    let corelets = [
        Tensor3::fold(&grams[0].q.adjoint(), 0, (r, r, r)),
        Tensor3::fold(&grams[1].q.adjoint(), 1, (r, r, r)),
        Tensor3::fold(&grams[2].q.adjoint(), 2, (r, r, r)),
    ];
    assemble_tangent(y, &ws, &corelets, &bbar)
}

/// Combine the three mode terms ten_i(W_i V_i^H) and the core block into a
/// single Tucker tensor with stacked factors [U_i, W_i] and a block core;
/// factors are re-orthonormalized by QR.
fn assemble_tangent<S: Scalar>(
    y: &TuckerTensor<S>,
    ws: &[Mat<S>],
    corelets: &[Tensor3<S>; 3],
    bbar: &Tensor3<S>,
) -> TuckerTensor<S> {
    let r = y.mode_ranks().0;
    let mut factors = Vec::with_capacity(3);
    let mut rs = Vec::with_capacity(3);
    for mode in 0..3 {
        let x = y.factors[mode].hstack(&ws[mode]);
        let (q, rr) = thin_qr(&x);
        factors.push(q);
        rs.push(rr);
    }
    let mut big = Tensor3::<S>::zeros((2 * r, 2 * r, 2 * r));
    for g in 0..r {
        for b in 0..r {
            for a in 0..r {
                *big.at_mut(a, b, g) = bbar.at(a, b, g);
            }
        }
    }
    for mode in 0..3 {
        let c = &corelets[mode];
        for g in 0..r {
            for b in 0..r {
                for a in 0..r {
                    let (i, j, k) = match mode {
                        0 => (r + a, b, g),
                        1 => (a, r + b, g),
                        _ => (a, b, r + g),
                    };
                    *big.at_mut(i, j, k) += c.at(a, b, g);
                }
            }
        }
    }
    let core = big
        .mode_product(0, &rs[0])
        .mode_product(1, &rs[1])
        .mode_product(2, &rs[2]);
    TuckerTensor::new(core, [factors.remove(0), factors.remove(0), factors.remove(0)])
}

/// Dense orthogonal tangent projection (diagnostic scale only).
pub fn project_orthogonal_tucker_dense<S: Scalar>(
    y: &TuckerTensor<S>,
    z: &Tensor3<S>,
) -> Tensor3<S> {
    let grams = build_mode_grams(y);
    let mut acc = z
        .mode_product(0, &y.factors[0].mul_h(&y.factors[0]))
        .mode_product(1, &y.factors[1].mul_h(&y.factors[1]))
        .mode_product(2, &y.factors[2].mul_h(&y.factors[2]));
    for mode in 0..3 {
        let (fast, slow) = other_modes(mode);
        let v = y.factors[slow]
            .conj()
            .kron(&y.factors[fast].conj())
            .mul(&grams[mode].q); // n^2 x r
        let unf = z.unfold(mode);
        let zv = unf.mul(&v);
        let w = zv.sub(&y.factors[mode].mul(&y.factors[mode].h_mul(&zv)));
        let term = w.mul_h(&v);
        let mut d = z.dims();
        match mode {
            0 => d.0 = w.nrows(),
            1 => d.1 = w.nrows(),
            _ => d.2 = w.nrows(),
        }
        acc = acc.add(&Tensor3::fold(&term, mode, z.dims()));
        let _ = d;
    }
    acc
}

/// Dense oblique tangent projection (test oracle; diagnostic scale only).
pub fn project_oblique_tucker_dense<S: Scalar>(
    y: &TuckerTensor<S>,
    z: &Tensor3<S>,
    sels: &TuckerSelections<S>,
) -> Tensor3<S> {
    let grams = build_mode_grams(y);
    let n = y.dims();
    let dims = [n.0, n.1, n.2];
    // Pbar = Z x_i (U_i M_i S_i^T)
    let mut acc = z.clone();
    for mode in 0..3 {
        let su = sels.rows[mode].matrix(dims[mode]);
        let pu = y.factors[mode].mul(&sels.rows[mode].m_inv).mul_h(&su);
        acc = acc.mode_product(mode, &pu);
    }
    for mode in 0..3 {
        let (fast, slow) = other_modes(mode);
        let v = y.factors[slow]
            .conj()
            .kron(&y.factors[fast].conj())
            .mul(&grams[mode].q); // n^2 x r
        let nn = dims[fast] * dims[slow];
        let n_fast = dims[fast];
        let mut sv = Mat::<S>::zeros(nn, y.mode_ranks().0);
        for (c, &(slow_i, fast_i)) in sels.vs[mode].pairs.iter().enumerate() {
            sv[(slow_i * n_fast + fast_i, c)] = S::one();
        }
        let su = sels.rows[mode].matrix(dims[mode]);
        let pu = y.factors[mode].mul(&sels.rows[mode].m_inv).mul_h(&su);
        let pv = sv.mul(&sels.vs[mode].m_v).mul(&v.adjoint()); // n^2 x n^2
        let unf = z.unfold(mode);
        let term = unf.sub(&pu.mul(&unf)).mul(&pv);
        acc = acc.add(&Tensor3::fold(&term, mode, z.dims()));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use crate::problems::{DenseTensorField, FieldStats, TensorField};
    use crate::scalar::Scalar;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state<S: Scalar>(n: usize, r: usize, seed: u64) -> TuckerTensor<S> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut core = Tensor3::zeros((r, r, r));
        for x in core.data_mut().iter_mut() {
            *x = S::standard_normal(&mut rng);
        }
        TuckerTensor::new(
            core,
            [
                random_orthonormal::<S, _>(n, r, &mut rng),
                random_orthonormal::<S, _>(n, r, &mut rng),
                random_orthonormal::<S, _>(n, r, &mut rng),
            ],
        )
    }

    fn random_dense(n: usize, seed: u64) -> Tensor3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor3::zeros((n, n, n));
        for x in t.data_mut().iter_mut() {
            *x = f64::standard_normal(&mut rng);
        }
        t
    }

    #[test]
    fn mode_grams_factor_the_unfoldings() {
        let n = 11;
        let y = random_state::<Complex64>(n, 3, 601);
        let grams = build_mode_grams(&y);
        for mode in 0..3 {
            // Y_(i) = U_i S_i V_i^H with V_i = (conj U_k (x) conj U_j) Q_i
            let (fast, slow) = other_modes(mode);
            let v = y.factors[slow]
                .conj()
                .kron(&y.factors[fast].conj())
                .mul(&grams[mode].q);
            assert!(v.orthonormality_defect() < 1e-11, "V_{mode} orthonormal");
            let want = y.dense().unfold(mode);
            let got = y.factors[mode].mul(&grams[mode].s).mul_h(&v);
            assert!(got.sub(&want).norm_fro() < 1e-11 * want.norm_fro());
        }
    }

    #[test]
    fn mode_grams_superdiagonal_core() {
        let r = 3;
        let mut core = Tensor3::<f64>::zeros((r, r, r));
        for i in 0..r {
            *core.at_mut(i, i, i) = (i + 1) as f64;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(602);
        let y = TuckerTensor::new(
            core,
            [
                random_orthonormal::<f64, _>(9, r, &mut rng),
                random_orthonormal::<f64, _>(9, r, &mut rng),
                random_orthonormal::<f64, _>(9, r, &mut rng),
            ],
        );
        let grams = build_mode_grams(&y);
        for mode in 0..3 {
            assert!(!grams[mode].rank_deficient);
            // each column of Q has a single unit entry; S is diagonal
            for c in 0..r {
                let col = grams[mode].q.col(c);
                let nnz = col.iter().filter(|x| x.abs() > 1e-12).count();
                assert_eq!(nnz, 1);
            }
            for i in 0..r {
                for j in 0..r {
                    if i != j {
                        assert!(grams[mode].s[(i, j)].abs() < 1e-12);
                    }
                }
            }
        }
        // a zero slice flags rank deficiency
        let mut core2 = Tensor3::<f64>::zeros((3, 3, 3));
        *core2.at_mut(0, 0, 0) = 1.0;
        *core2.at_mut(1, 1, 1) = 1.0;
        let y2 = TuckerTensor::new(
            core2,
            [
                random_orthonormal::<f64, _>(9, 3, &mut rng),
                random_orthonormal::<f64, _>(9, 3, &mut rng),
                random_orthonormal::<f64, _>(9, 3, &mut rng),
            ],
        );
        assert!(build_mode_grams(&y2)[0].rank_deficient);
    }

    #[test]
    fn v_selection_identity_case_and_determinism() {
        let n = 8;
        let r = 2;
        let ubar = Mat::<f64>::identity_cols(n, &[0, 1]);
        let utilde = Mat::<f64>::identity_cols(n, &[0, 1]);
        let q = Mat::<f64>::identity_cols(r * r, &[0, 3]); // embeds identity
        let kinds = (
            SelectorKind::Qdeim,
            SelectorKind::Qdeim,
            SelectorKind::Qdeim,
        );
        let v = sample_v_selection(&ubar, &utilde, &q, kinds).unwrap();
        assert!((v.growth - 1.0).abs() < 1e-12);
        let v2 = sample_v_selection(&ubar, &utilde, &q, kinds).unwrap();
        assert_eq!(v.pairs, v2.pairs);
    }

    #[test]
    fn v_selection_growth_bounded_by_stage_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(603);
        for trial in 0..10 {
            let n = 30;
            let r = 3;
            let ubar = random_orthonormal::<f64, _>(n, r, &mut rng);
            let utilde = random_orthonormal::<f64, _>(n, r, &mut rng);
            let q = random_orthonormal::<f64, _>(r * r, r, &mut rng);
            let v = sample_v_selection(
                &ubar,
                &utilde,
                &q,
                (
                    SelectorKind::Qdeim,
                    SelectorKind::Qdeim,
                    SelectorKind::Qdeim,
                ),
            )
            .unwrap();
            let bound = v.s1.growth * v.s2.growth * v.s12.growth;
            assert!(v.growth <= bound + 1e-9, "trial {trial}: {} vs {bound}", v.growth);
        }
    }

    #[test]
    fn oblique_projection_matches_dense_oracle_and_interpolates() {
        let n = 13;
        let r = 3;
        let y = random_state::<f64>(n, r, 604);
        let fixed = random_dense(n, 605);
        let fx = fixed.clone();
        let field = DenseTensorField::new((n, n, n), move |_a: &Tensor3<f64>| fx.clone());
        let grams = build_mode_grams(&y);
        let sels =
            build_tucker_selections(&y, &grams, SelectorKind::Qdeim, 1e8).unwrap();
        let got = project_oblique_tucker(&y, &field, &sels, &grams).unwrap();
        assert!(got.orthonormality_defect() < 1e-11);
        let want = project_oblique_tucker_dense(&y, &fixed, &sels);
        assert!(
            got.dense().sub(&want).norm_fro() < 1e-11 * want.norm_fro(),
            "factored vs dense oblique projection"
        );
        // interpolation at the sampled core block
        let gd = got.dense();
        for &i in &sels.rows[0].indices {
            for &j in &sels.rows[1].indices {
                for &k in &sels.rows[2].indices {
                    assert!(
                        (gd.at(i, j, k) - fixed.at(i, j, k)).abs() < 1e-10 * fixed.norm_fro(),
                        "core block interpolation"
                    );
                }
            }
        }
    }

    #[test]
    fn projector_identities_hold() {
        let n = 10;
        let r = 2;
        let y = random_state::<f64>(n, r, 606);
        let z = random_dense(n, 607);
        let grams = build_mode_grams(&y);
        let sels = build_tucker_selections(&y, &grams, SelectorKind::Qdeim, 1e8).unwrap();
        let pz = project_orthogonal_tucker_dense(&y, &z);
        let oz = project_oblique_tucker_dense(&y, &z, &sels);
        // oblique is idempotent
        let ooz = project_oblique_tucker_dense(&y, &oz, &sels);
        assert!(ooz.sub(&oz).norm_fro() < 1e-11 * oz.norm_fro());
        // orthogonal after oblique leaves it unchanged
        let poz = project_orthogonal_tucker_dense(&y, &oz);
        assert!(poz.sub(&oz).norm_fro() < 1e-11 * oz.norm_fro());
        // oblique after orthogonal reproduces the orthogonal projection
        let opz = project_oblique_tucker_dense(&y, &pz, &sels);
        assert!(opz.sub(&pz).norm_fro() < 1e-11 * pz.norm_fro());
    }

    #[test]
    fn oblique_projection_of_tangent_field_is_exact() {
        let n = 12;
        let r = 3;
        let y = random_state::<f64>(n, r, 608);
        let g = random_dense(n, 609);
        let tangent = project_orthogonal_tucker_dense(&y, &g);
        let tz = tangent.clone();
        let field = DenseTensorField::new((n, n, n), move |_a: &Tensor3<f64>| tz.clone());
        let grams = build_mode_grams(&y);
        let sels = build_tucker_selections(&y, &grams, SelectorKind::Qdeim, 1e8).unwrap();
        let got = project_oblique_tucker(&y, &field, &sels, &grams).unwrap();
        assert!(
            got.dense().sub(&tangent).norm_fro() < 1e-11 * tangent.norm_fro(),
            "tangent elements are preserved"
        );
        // zero field maps to zero
        let zf = DenseTensorField::new((n, n, n), |_a: &Tensor3<f64>| Tensor3::zeros((n, n, n)));
        let got0 = project_oblique_tucker(&y, &zf, &sels, &grams).unwrap();
        assert!(got0.dense().norm_fro() < 1e-14);
    }

    #[test]
    fn orthogonal_structured_projection_matches_dense() {
        let n = 12;
        let r = 2;
        let y = random_state::<f64>(n, r, 610);
        // structured field: one random Tucker term of rank 3
        let term = random_state::<f64>(n, 3, 611);
        let dense = term.dense();
        let grams = build_mode_grams(&y);
        let mut sum = TuckerSum::new((n, n, n));
        sum.push_scaled(&term, 1.0);
        let got = project_orthogonal_tucker_sum(&y, &sum, &grams);
        let want = project_orthogonal_tucker_dense(&y, &dense);
        assert!(got.dense().sub(&want).norm_fro() < 1e-11 * want.norm_fro());
    }

    #[test]
    fn sample_budget_is_3rn_plus_r3() {
        let n = 16;
        let r = 3;
        let y = random_state::<f64>(n, r, 612);
        let p = crate::problems::AllenCahn3d::new(n, 0.1);
        let grams = build_mode_grams(&y);
        let sels = build_tucker_selections(&y, &grams, SelectorKind::Qdeim, 1e8).unwrap();
        p.stats().reset();
        let _ = project_oblique_tucker(&y, &p, &sels, &grams).unwrap();
        let (_, _, _, fibers, entries) = p.stats().snapshot();
        assert!(fibers <= (3 * r * n) as u64, "fiber scalars {fibers}");
        assert!(entries <= (r * r * r) as u64, "block entries {entries}");
        let _ = FieldStats::default();
    }

    #[test]
    fn quasi_optimality_tucker_bound_with_measured_growths() {
        let n = 20;
        let r = 3;
        for trial in 0..25 {
            let y = random_state::<f64>(n, r, 700 + trial);
            let z = random_dense(n, 800 + trial);
            let grams = build_mode_grams(&y);
            let sels = build_tucker_selections(&y, &grams, SelectorKind::Qdeim, 1e8).unwrap();
            let pz = project_orthogonal_tucker_dense(&y, &z);
            let oz = project_oblique_tucker_dense(&y, &z, &sels);
            let num = oz.sub(&z).norm_fro();
            let den = pz.sub(&z).norm_fro();
            let bound: f64 = (0..3)
                .map(|i| sels.rows[i].growth * sels.vs[i].growth)
                .sum::<f64>()
                + sels.rows.iter().map(|s| s.growth).product::<f64>();
            assert!(num <= bound * den + 1e-9, "trial {trial}: {num} vs {}", bound * den);
        }
    }
}
