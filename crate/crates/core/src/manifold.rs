//! Tangent-space projections on the fixed-rank matrix manifold.
//!
//! The orthogonal projection at Y = U S V^H is
//!   P_Y[Z] = U U^H Z + Z V V^H - U U^H Z V V^H,
//! stored in the two-term form U A + B V^H. The oblique variant replaces
//! the side projectors by interpolatory ones built from row/column
//! selections and needs only r rows and r columns of Z.

use crate::deim::{self, Selection, SelectorKind};
use crate::error::Error;
use crate::kernels::{FactoredMatrix, OuterProductSum};
use crate::mat::Mat;
use crate::problems::MatrixField;
use crate::scalar::Scalar;

/// A tangent element U A + B V^H at the base point (U, V); rank <= 2r.
#[derive(Clone, Debug)]
pub struct TangentFactored<S: Scalar> {
    pub u: Mat<S>,
    pub a: Mat<S>,
    pub b: Mat<S>,
    pub v: Mat<S>,
}

impl<S: Scalar> TangentFactored<S> {
    pub fn dense(&self) -> Mat<S> {
        self.u.mul(&self.a).add(&self.b.mul_h(&self.v))
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// Push h * self onto an outer-product sum as two width-r terms.
    pub fn push_scaled(&self, sum: &mut OuterProductSum<S>, h: f64) -> Result<(), Error> {
        sum.push(self.u.clone(), self.a.adjoint().scaled(h))?;
        sum.push(self.b.scaled(h), self.v.clone())
    }
}

/// Row and column selections at a base point, with the cached interpolation
/// inverses M_U = (S_U^H U)^{-1} and M_V = (V^H S_V)^{-1}.
#[derive(Clone, Debug)]
pub struct ObliquePair<S: Scalar> {
    pub row_sel: Selection<S>,
    pub col_sel: Selection<S>,
    pub m_u: Mat<S>,
    pub m_v: Mat<S>,
}

impl<S: Scalar> ObliquePair<S> {
    pub fn growth_product(&self) -> f64 {
        self.row_sel.growth * self.col_sel.growth
    }

    pub fn from_selections(row_sel: Selection<S>, col_sel: Selection<S>) -> Self {
        let m_u = row_sel.m_inv.clone();
        let m_v = col_sel.m_inv.adjoint();
        ObliquePair {
            row_sel,
            col_sel,
            m_u,
            m_v,
        }
    }
}

/// Default guard on growth(S_U) * growth(S_V); beyond this the selection is
/// considered too ill-conditioned to step with.
pub const GROWTH_GUARD: f64 = 1e8;

/// Build selections from the CURRENT factors of `y`. When the requested
/// selector trips the growth guard, retries with srrqr(2) and then the
/// max-row-norm selector before giving up.
pub fn build_oblique_pair<S: Scalar>(
    y: &FactoredMatrix<S>,
    kind: SelectorKind,
    guard: f64,
) -> Result<ObliquePair<S>, Error> {
    let mut chain = vec![kind];
    if !matches!(kind, SelectorKind::Srrqr { .. }) {
        chain.push(SelectorKind::Srrqr { eta: 2.0 });
    }
    if !matches!(kind, SelectorKind::Qdeim) {
        chain.push(SelectorKind::Qdeim);
    }
    let mut worst = 0.0f64;
    for k in chain {
        let row_sel = deim::select(k, &y.u)?;
        let col_sel = deim::select(bump_seed(k), &y.v)?;
        let growth = row_sel.growth * col_sel.growth;
        if growth <= guard {
            return Ok(ObliquePair::from_selections(row_sel, col_sel));
        }
        worst = worst.max(growth);
    }
    Err(Error::GrowthGuard {
        growth: worst,
        guard,
        stage: None,
    })
}

/// The two selections of a pair must be independent draws for randomized
/// selectors; derive the column seed from the row seed.
fn bump_seed(kind: SelectorKind) -> SelectorKind {
    match kind {
        SelectorKind::Arp { seed } => SelectorKind::Arp {
            seed: seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1),
        },
        other => other,
    }
}

/// Orthogonal tangent projection of a dense Z.
pub fn project_orthogonal<S: Scalar>(y: &FactoredMatrix<S>, z: &Mat<S>) -> TangentFactored<S> {
    let a = y.u.h_mul(z); // r x n
    let zv = z.mul(&y.v); // m x r
    let b = zv.sub(&y.u.mul(&a.mul(&y.v)));
    TangentFactored {
        u: y.u.clone(),
        a,
        b,
        v: y.v.clone(),
    }
}

/// Orthogonal tangent projection of a factored Z, never densifying.
pub fn project_orthogonal_sum<S: Scalar>(
    y: &FactoredMatrix<S>,
    z: &OuterProductSum<S>,
) -> TangentFactored<S> {
    let (m, n) = z.shape();
    let r = y.rank();
    let mut a = Mat::zeros(r, n);
    let mut zv = Mat::zeros(m, r);
    for (l, rr) in z.terms() {
        a = a.add(&y.u.h_mul(l).mul_h(rr));
        zv = zv.add(&l.mul(&rr.h_mul(&y.v)));
    }
    let b = zv.sub(&y.u.mul(&a.mul(&y.v)));
    TangentFactored {
        u: y.u.clone(),
        a,
        b,
        v: y.v.clone(),
    }
}

/// Oblique tangent projection assembled from samples only: r rows of F(Y),
/// r columns of F(Y), and the r x r block where they cross (reused from the
/// rows). Never forms F(Y) densely.
pub fn project_oblique<S: Scalar>(
    y: &FactoredMatrix<S>,
    field: &dyn MatrixField<S>,
    pair: &ObliquePair<S>,
) -> Result<TangentFactored<S>, Error> {
    let rows = field.eval_rows(y, &pair.row_sel.indices);
    let cols = field.eval_cols(y, &pair.col_sel.indices);
    check_finite(&rows, &pair.row_sel.indices, true)?;
    check_finite(&cols, &pair.col_sel.indices, false)?;
    let w = rows.select_cols(&pair.col_sel.indices); // r x r crossing block
    // A = M_U R - (M_U W M_V) V^H ; B = C M_V
    let mur = pair.m_u.mul(&rows);
    let core = pair.m_u.mul(&w).mul(&pair.m_v);
    let a = mur.sub(&core.mul(&y.v.adjoint()));
    let b = cols.mul(&pair.m_v);
    Ok(TangentFactored {
        u: y.u.clone(),
        a,
        b,
        v: y.v.clone(),
    })
}

fn check_finite<S: Scalar>(block: &Mat<S>, indices: &[usize], rows: bool) -> Result<(), Error> {
    for j in 0..block.ncols() {
        for i in 0..block.nrows() {
            if !block[(i, j)].is_finite() {
                let which = if rows {
                    format!("row {} (entry {})", indices[i], j)
                } else {
                    format!("column {} (entry {})", indices[j], i)
                };
                return Err(Error::NonFinite {
                    context: format!("sampled field value at {which}"),
                });
            }
        }
    }
    Ok(())
}

/// The 3 x 3 rank-2 worked example: a tie among the first two rows of U,
/// none in V, so exactly two feasible selections exist on the U side.
pub fn small_worked_example() -> FactoredMatrix<f64> {
    let t = 1.0 / 2f64.sqrt();
    let mut u = Mat::<f64>::zeros(3, 2);
    u[(0, 0)] = t;
    u[(1, 0)] = t;
    u[(2, 1)] = 1.0;
    let mut s = Mat::<f64>::zeros(2, 2);
    s[(0, 0)] = 2.0;
    s[(1, 1)] = 1.0;
    let mut v = Mat::<f64>::zeros(3, 2);
    v[(0, 0)] = 0.5;
    v[(1, 0)] = 0.75f64.sqrt();
    v[(2, 1)] = 1.0;
    FactoredMatrix::new(u, s, v)
}

#[derive(Clone, Copy, Debug)]
pub struct QuasiOptReport {
    pub ratio: f64,
    /// Z itself lay in the tangent space (both errors ~ 0); ratio set to 1.
    pub exact_tangent: bool,
}

/// ||Z - P^oblique Z|| / ||Z - P Z||; bounded by the product of the two
/// growth factors. Diagnostic mode, takes a dense Z.
pub fn quasi_optimality_ratio<S: Scalar>(
    y: &FactoredMatrix<S>,
    z: &Mat<S>,
    pair: &ObliquePair<S>,
) -> QuasiOptReport {
    let orth = project_orthogonal(y, z).dense();
    let obl = oblique_apply_dense(y, z, pair);
    let num = z.sub(&obl).norm_fro();
    let den = z.sub(&orth).norm_fro();
    // effectively-zero denominator, relative to the input scale
    if den < 1e-13 * z.norm_fro().max(1e-2) {
        QuasiOptReport {
            ratio: 1.0,
            exact_tangent: true,
        }
    } else {
        QuasiOptReport {
            ratio: num / den,
            exact_tangent: false,
        }
    }
}

/// Dense evaluation of the oblique projection of a known matrix (diagnostic).
pub fn oblique_apply_dense<S: Scalar>(
    y: &FactoredMatrix<S>,
    z: &Mat<S>,
    pair: &ObliquePair<S>,
) -> Mat<S> {
    let rows = z.select_rows(&pair.row_sel.indices);
    let cols = z.select_cols(&pair.col_sel.indices);
    let w = rows.select_cols(&pair.col_sel.indices);
    let mur = pair.m_u.mul(&rows);
    let core = pair.m_u.mul(&w).mul(&pair.m_v);
    let a = mur.sub(&core.mul(&y.v.adjoint()));
    let b = cols.mul(&pair.m_v);
    y.u.mul(&a).add(&b.mul_h(&y.v))
}

/// Empirical size of the normal component ||F(Y) - P_Y F(Y)||_F at Y.
pub fn normal_residual<S: Scalar>(y: &FactoredMatrix<S>, field: &dyn MatrixField<S>) -> f64 {
    let f = field.eval_dense(&y.dense());
    f.sub(&project_orthogonal(y, &f).dense()).norm_fro()
}

/// Vertices of the selection polytope at Y: the oblique projections of FY
/// over all feasible selection pairs of the max-row-norm procedure without
/// tie-breaking. Duplicates are removed at Frobenius distance 1e-10; every
/// vertex is checked to lie in the tangent space.
pub fn polytope_vertices<S: Scalar>(
    y: &FactoredMatrix<S>,
    fy: &Mat<S>,
    tau: f64,
) -> Result<Vec<Mat<S>>, Error> {
    let us = deim::enumerate_qdeim_selections(&y.u, tau)?;
    let vs = deim::enumerate_qdeim_selections(&y.v, tau)?;
    let mut vertices: Vec<Mat<S>> = Vec::new();
    for su in &us {
        for sv in &vs {
            let pair = ObliquePair::from_selections(su.clone(), sv.clone());
            let vert = oblique_apply_dense(y, fy, &pair);
            let tangent_defect = vert.sub(&project_orthogonal(y, &vert).dense()).norm_fro();
            if tangent_defect > 1e-10 * vert.norm_fro().max(1.0) {
                return Err(Error::Numerical(format!(
                    "polytope vertex left the tangent space (defect {tangent_defect:.3e})"
                )));
            }
            if !vertices.iter().any(|w| w.sub(&vert).norm_fro() < 1e-10) {
                vertices.push(vert);
            }
        }
    }
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use crate::problems::DenseMatrixField;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point<S: Scalar>(
        m: usize,
        n: usize,
        r: usize,
        rng: &mut ChaCha8Rng,
    ) -> FactoredMatrix<S> {
        FactoredMatrix::new(
            random_orthonormal::<S, _>(m, r, rng),
            random_normal::<S, _>(r, r, rng),
            random_orthonormal::<S, _>(n, r, rng),
        )
    }

    fn orth_dense_oracle<S: Scalar>(y: &FactoredMatrix<S>, z: &Mat<S>) -> Mat<S> {
        let uu = y.u.mul_h(&y.u);
        let vv = y.v.mul_h(&y.v);
        uu.mul(z).add(&z.mul(&vv)).sub(&uu.mul(z).mul(&vv))
    }

    fn unit_perp<S: Scalar>(q: &Mat<S>, rng: &mut ChaCha8Rng) -> Mat<S> {
        let mut v = random_normal::<S, _>(q.nrows(), 1, rng);
        for _ in 0..2 {
            let c = q.h_mul(&v);
            v = v.sub(&q.mul(&c));
        }
        v.scaled(1.0 / v.norm_fro())
    }

    #[test]
    fn orthogonal_projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        let y = random_point::<f64>(20, 15, 3, &mut rng);
        // Z = Y stays fixed
        let t = project_orthogonal(&y, &y.dense());
        assert!(t.dense().sub(&y.dense()).norm_fro() < 1e-12 * y.norm_fro());
        // Z orthogonal to both ranges projects to zero
        let z = unit_perp(&y.u, &mut rng).mul_h(&unit_perp(&y.v, &mut rng));
        assert!(project_orthogonal(&y, &z).dense().norm_fro() < 1e-12);
        // random Z matches the dense formula
        let z = random_normal::<f64, _>(20, 15, &mut rng);
        let got = project_orthogonal(&y, &z).dense();
        assert!(got.sub(&orth_dense_oracle(&y, &z)).norm_fro() < 1e-12 * z.norm_fro());
    }

    #[test]
    fn orthogonal_projection_of_sum_matches_dense_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(302);
        let y = random_point::<Complex64>(18, 13, 4, &mut rng);
        let mut z = OuterProductSum::new(18, 13, 12);
        z.push(
            random_normal::<Complex64, _>(18, 3, &mut rng),
            random_normal::<Complex64, _>(13, 3, &mut rng),
        )
        .unwrap();
        z.push(
            random_normal::<Complex64, _>(18, 2, &mut rng),
            random_normal::<Complex64, _>(13, 2, &mut rng),
        )
        .unwrap();
        let got = project_orthogonal_sum(&y, &z).dense();
        let want = project_orthogonal(&y, &z.dense()).dense();
        assert!(got.sub(&want).norm_fro() < 1e-12 * want.norm_fro());
    }

    #[test]
    fn oblique_projection_matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let (m, n, r) = (30, 25, 4);
        let y = random_point::<f64>(m, n, r, &mut rng);
        let fixed = random_normal::<f64, _>(m, n, &mut rng);
        let fy = fixed.clone();
        let field = DenseMatrixField::new((m, n), move |_a: &Mat<f64>| fixed.clone());
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let got = project_oblique(&y, &field, &pair).unwrap().dense();
        // dense oracle: PU F - PU F PV + F PV
        let su = pair.row_sel.matrix(m);
        let sv = pair.col_sel.matrix(n);
        let pu = y.u.mul(&pair.m_u).mul_h(&su);
        let pv = sv.mul(&pair.m_v).mul(&y.v.adjoint());
        let want = pu.mul(&fy).sub(&pu.mul(&fy).mul(&pv)).add(&fy.mul(&pv));
        assert!(got.sub(&want).norm_fro() < 1e-12 * want.norm_fro());
        let _ = r;
    }

    #[test]
    fn oblique_projection_preserves_tangent_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(304);
        let y = random_point::<Complex64>(22, 17, 3, &mut rng);
        let g = random_normal::<Complex64, _>(22, 17, &mut rng);
        let tangent = project_orthogonal(&y, &g).dense();
        let field = DenseMatrixField::new((22, 17), move |_a: &Mat<Complex64>| tangent.clone());
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let out = project_oblique(&y, &field, &pair).unwrap().dense();
        let want = field.eval_dense(&y.dense());
        assert!(out.sub(&want).norm_fro() < 1e-12 * want.norm_fro());
    }

    #[test]
    fn oblique_projection_interpolates_at_selected_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(305);
        let y = random_point::<f64>(26, 19, 4, &mut rng);
        let fixed = random_normal::<f64, _>(26, 19, &mut rng);
        let fy = fixed.clone();
        let field = DenseMatrixField::new((26, 19), move |_a: &Mat<f64>| fixed.clone());
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let out = project_oblique(&y, &field, &pair).unwrap().dense();
        for &ri in &pair.row_sel.indices {
            for &cj in &pair.col_sel.indices {
                assert!(
                    (out[(ri, cj)] - fy[(ri, cj)]).abs() < 1e-12 * fy.norm_fro(),
                    "entry ({ri},{cj}) not interpolated"
                );
            }
        }
    }

    #[test]
    fn oblique_projection_is_idempotent_and_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(306);
        let y = random_point::<f64>(24, 21, 3, &mut rng);
        let z = random_normal::<f64, _>(24, 21, &mut rng);
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let once = oblique_apply_dense(&y, &z, &pair);
        let twice = oblique_apply_dense(&y, &once, &pair);
        assert!(twice.sub(&once).norm_fro() < 1e-12 * once.norm_fro());
        // P_Y [P^oblique Z] = P^oblique Z
        let compat = project_orthogonal(&y, &once).dense();
        assert!(compat.sub(&once).norm_fro() < 1e-12 * once.norm_fro());
    }

    #[test]
    fn oblique_operator_norm_bounded_by_growth_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(307);
        let y = random_point::<f64>(20, 20, 4, &mut rng);
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let bound = pair.growth_product();
        for _ in 0..50 {
            let z = random_normal::<f64, _>(20, 20, &mut rng);
            let z = z.scaled(1.0 / z.norm_fro());
            assert!(oblique_apply_dense(&y, &z, &pair).norm_fro() <= bound + 1e-10);
        }
    }

    #[test]
    fn quasi_optimality_bound_and_tangent_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(308);
        for _ in 0..100 {
            let y = random_point::<f64>(40, 40, 5, &mut rng);
            let z = random_normal::<f64, _>(40, 40, &mut rng);
            let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
            let rep = quasi_optimality_ratio(&y, &z, &pair);
            assert!(!rep.exact_tangent);
            assert!(rep.ratio <= pair.growth_product() + 1e-9, "{}", rep.ratio);
        }
        let y = random_point::<f64>(15, 15, 3, &mut rng);
        let z = project_orthogonal(&y, &random_normal::<f64, _>(15, 15, &mut rng)).dense();
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let rep = quasi_optimality_ratio(&y, &z, &pair);
        assert!(rep.exact_tangent && rep.ratio == 1.0);
    }

    #[test]
    fn quasi_optimality_normal_space_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(309);
        let y = random_point::<f64>(18, 16, 3, &mut rng);
        let g = random_normal::<f64, _>(18, 16, &mut rng);
        // normal-space element (I - UU^H) G (I - VV^H)
        let z = g.sub(&orth_dense_oracle(&y, &g));
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let obl = oblique_apply_dense(&y, &z, &pair);
        let num = z.sub(&obl).norm_fro();
        let rep = quasi_optimality_ratio(&y, &z, &pair);
        assert!((rep.ratio - num / z.norm_fro()).abs() < 1e-10);
    }

    #[test]
    fn normal_residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(310);
        let y = random_point::<f64>(16, 14, 3, &mut rng);
        let g = random_normal::<f64, _>(16, 14, &mut rng);
        let gproj = project_orthogonal(&y, &g).dense();
        let f1 = DenseMatrixField::new((16, 14), move |_a: &Mat<f64>| gproj.clone());
        assert!(normal_residual(&y, &f1) < 1e-12);
        let gn = g.clone();
        let f2 = DenseMatrixField::new((16, 14), move |_a: &Mat<f64>| gn.clone());
        let want = g.sub(&orth_dense_oracle(&y, &g)).norm_fro();
        assert!((normal_residual(&y, &f2) - want).abs() < 1e-12 * want);
        let f0 = DenseMatrixField::new((16, 14), |_a: &Mat<f64>| Mat::zeros(16, 14));
        assert!(normal_residual(&y, &f0) == 0.0);
    }

    use super::small_worked_example as small_example_point;

    #[test]
    fn polytope_of_the_small_example_has_two_vertices() {
        let y = small_example_point();
        let mut rng = ChaCha8Rng::seed_from_u64(311);
        let fy = random_normal::<f64, _>(3, 3, &mut rng);
        let verts = polytope_vertices(&y, &fy, 0.0).unwrap();
        assert_eq!(verts.len(), 2);
    }

    #[test]
    fn polytope_generic_point_single_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(312);
        let y = random_point::<f64>(8, 7, 2, &mut rng);
        let fy = random_normal::<f64, _>(8, 7, &mut rng);
        let verts = polytope_vertices(&y, &fy, 0.0).unwrap();
        assert_eq!(verts.len(), 1);
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let want = oblique_apply_dense(&y, &fy, &pair);
        assert!(verts[0].sub(&want).norm_fro() < 1e-12 * want.norm_fro());
    }

    #[test]
    fn polytope_tangent_input_collapses_to_it() {
        let y = small_example_point();
        let mut rng = ChaCha8Rng::seed_from_u64(313);
        let g = random_normal::<f64, _>(3, 3, &mut rng);
        let fy = project_orthogonal(&y, &g).dense();
        let verts = polytope_vertices(&y, &fy, 0.0).unwrap();
        assert_eq!(verts.len(), 1);
        assert!(verts[0].sub(&fy).norm_fro() < 1e-11 * fy.norm_fro());
    }
}
