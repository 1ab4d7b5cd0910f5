//! The Type III* construction for a designated effect.
//!
//! For a designated effect `j*` in one part of the model, the columns of
//! the model matrix X are split into `X1` (the effect's own block), `X2`
//! (same-part blocks whose tuples strictly contain `j*`), and `X0`
//! (everything else, including all other covariate parts — containment
//! never holds across parts). With `N01` spanning `sp(X0, X1)⊥ ∩ sp(X)`
//! and `X2* = X2 X2' N01`, the working model is `X* = (X0, X1, X2*)` and
//!
//!     P3 = P_{X*} - P_{(X0, X2*)}
//!
//! is the Type III* projector. `sp(X*)` equals `sp(X)` and is the direct
//! sum of `sp(X0, X1)` and `sp(X2*)`, which is what makes the Type III*
//! and Type II degrees of freedom coincide.

use std::collections::BTreeMap;

use crate::design::{
    closure, e_concat, effect_h, partition_for_effect, part_incidence, Covariates, Design,
    EffectTuple, FactorSpace, ModelSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_anchored, contains_span, hcat, intersect_bases, orthonormal_basis, quadratic_form,
    vcat, Basis, Col, Mat, Tol,
};

/// Everything derived from designating one effect in one part.
#[derive(Debug, Clone)]
pub struct EffectContext {
    space: FactorSpace,
    j_star: EffectTuple,
    part_index: usize,
    part_effects: Vec<EffectTuple>,
    j0: Vec<EffectTuple>,
    j2: Vec<EffectTuple>,

    x0: Mat,
    x1: Mat,
    x2: Mat,
    x1_adj: Mat,
    n01: Basis,
    x2_star: Mat,
    x_star: Mat,

    basis_x0: Basis,
    rank_x01: usize,
    rank_x: usize,
    p3: Mat,

    /// K_i of the designated part (n × a_*).
    part_k: Mat,
    /// E_{J_i} of the designated part.
    e_part: Mat,
    /// Projector onto sp(E_{J_i}) of the designated part.
    p_e_part: Mat,
    /// E_{J_2} of the designated part.
    e2: Mat,
    /// Whether all covariate parts meet pairwise only at 0; η-contrast
    /// extraction is only offered when they do.
    parts_direct_sum: bool,

    tol: Tol,
}

/// Build the effect context for `j_star` inside part `part_index`.
pub fn build_context(
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
    part_index: usize,
    j_star: &EffectTuple,
    tol: &Tol,
) -> Result<EffectContext> {
    tol.validate()?;
    if part_index >= spec.parts().len() {
        return Err(Error::input(format!(
            "part index {part_index} out of range for {} parts",
            spec.parts().len()
        )));
    }
    let space = design.space().clone();
    let n = design.n();
    let k0 = design.incidence_matrix();

    let mut part_ks = Vec::with_capacity(spec.parts().len());
    let mut blocks = Vec::with_capacity(spec.parts().len());
    for part in spec.parts() {
        let ki = part_incidence(&k0, part, covariates)?;
        blocks.push(&ki * e_concat(part.effects(), &space));
        part_ks.push(ki);
    }

    let part = spec.part(part_index);
    let (j0, _, j2) = partition_for_effect(part.effects(), j_star)?;
    let kp = &part_ks[part_index];

    let x1 = kp * e_concat(&[j_star.clone()], &space);
    let x2 = kp * e_concat(&j2, &space);
    let mut x0_blocks: Vec<Mat> = vec![kp * e_concat(&j0, &space)];
    for (q, block) in blocks.iter().enumerate() {
        if q != part_index {
            x0_blocks.push(block.clone());
        }
    }
    let x0_refs: Vec<&Mat> = x0_blocks.iter().collect();
    let x0 = hcat(&x0_refs);

    let x01 = hcat(&[&x0, &x1]);
    let x = hcat(&[&x01, &x2]);
    let scale = x.norm();

    let basis_x0 = basis_anchored(&x0, tol, 0.0);
    let basis_x01 = basis_anchored(&x01, tol, 0.0);
    let n01 = basis_anchored(&basis_x01.residual(&x), tol, scale);
    let x2_star = &x2 * (x2.transpose() * n01.vectors());
    let x_star = hcat(&[&x0, &x1, &x2_star]);

    let basis_star = basis_anchored(&x_star, tol, scale);
    let rank_x = basis_x01.rank() + n01.rank();
    if basis_star.rank() != rank_x {
        return Err(Error::Degeneracy(format!(
            "sp(X*) rank {} differs from sp(X) rank {}",
            basis_star.rank(),
            rank_x
        )));
    }
    let x0_x2star = hcat(&[&x0, &x2_star]);
    let basis_x0_x2star = basis_anchored(&x0_x2star, tol, scale);
    let p3 = basis_star.projector() - basis_x0_x2star.projector();

    let x1_adj = basis_x0.residual(&x1);

    let e_part = e_concat(part.effects(), &space);
    let p_e_part = basis_anchored(&e_part, tol, 0.0).projector();
    let e2 = e_concat(&j2, &space);

    // Pairwise meets of the covariate-part blocks.
    let mut parts_direct_sum = true;
    'outer: for i in 0..blocks.len() {
        for q in i + 1..blocks.len() {
            let bi = basis_anchored(&blocks[i], tol, 0.0);
            let bq = basis_anchored(&blocks[q], tol, 0.0);
            if !intersect_bases(&bi, &bq, tol).is_empty() {
                parts_direct_sum = false;
                break 'outer;
            }
        }
    }

    let rank_x01 = basis_x01.rank();
    debug_assert_eq!(x.nrows(), n);
    Ok(EffectContext {
        space,
        j_star: j_star.clone(),
        part_index,
        part_effects: part.effects().to_vec(),
        j0,
        j2,
        x0,
        x1,
        x2,
        x1_adj,
        n01,
        x2_star,
        x_star,
        basis_x0,
        rank_x01,
        rank_x,
        p3,
        part_k: part_ks[part_index].clone(),
        e_part,
        p_e_part,
        e2,
        parts_direct_sum,
        tol: *tol,
    })
}

/// The target ANOVA effect induced by a designated effect: the sum of the
/// `H_j` over `J* = closure({j*}) \ closure(J0)`.
#[derive(Debug, Clone)]
pub struct TargetEffect {
    pub j_star: EffectTuple,
    pub j_star_set: Vec<EffectTuple>,
    pub h_star: Mat,
}

/// Compute the target effect for `j_star` within an effect set.
pub fn target_effect(
    effects: &[EffectTuple],
    j_star: &EffectTuple,
    space: &FactorSpace,
) -> Result<TargetEffect> {
    let (j0, _, _) = partition_for_effect(effects, j_star)?;
    let f = space.f();
    let closed_1 = closure(std::iter::once(j_star), f);
    let closed_0 = closure(j0.iter(), f);
    let j_star_set: Vec<EffectTuple> = closed_1
        .into_iter()
        .filter(|j| !closed_0.contains(j))
        .collect();
    let a = space.a_star();
    let mut h_star = Mat::zeros(a, a);
    for j in &j_star_set {
        h_star += effect_h(j, space);
    }
    Ok(TargetEffect {
        j_star: j_star.clone(),
        j_star_set,
        h_star,
    })
}

/// Estimable/lagniappe decomposition of the tested degrees of freedom.
#[derive(Debug, Clone)]
pub struct EstimableSplit {
    pub estimable_df: usize,
    pub lagniappe_df: usize,
    pub estimable_basis: Basis,
    /// Orthonormal within the tested space and orthogonal to the estimable
    /// part; absent when η contrasts are unavailable.
    pub lagniappe_basis: Option<Basis>,
}

/// Result of a Type III* sum-of-squares computation for one effect.
#[derive(Debug, Clone)]
pub struct Type3Result {
    pub ss: f64,
    pub df: usize,
    pub estimable_df: usize,
    pub lagniappe_df: usize,
    /// Basis of the tested contrast space on the part's cell coefficients;
    /// `None` when covariate parts overlap.
    pub tested_contrasts: Option<Basis>,
    pub estimable_basis: Basis,
    pub lagniappe_basis: Option<Basis>,
    /// Squared-length proportions of each tested contrast across all
    /// ANOVA effects, aligned with the columns of `tested_contrasts`.
    pub decomposition: Option<Vec<BTreeMap<EffectTuple, f64>>>,
}

/// Round a projector trace to integer degrees of freedom; traces further
/// than 1e-6 from an integer mean the construction lost rank.
fn trace_df(p: &Mat, what: &str) -> Result<usize> {
    let t = p.trace();
    let r = t.round();
    if (t - r).abs() > 1e-6 || r < -0.5 {
        return Err(Error::Degeneracy(format!(
            "{what} trace {t} is not close to a nonnegative integer"
        )));
    }
    Ok(r as usize)
}

impl EffectContext {
    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn j_star(&self) -> &EffectTuple {
        &self.j_star
    }

    pub fn part_index(&self) -> usize {
        self.part_index
    }

    pub fn part_effects(&self) -> &[EffectTuple] {
        &self.part_effects
    }

    pub fn j0(&self) -> &[EffectTuple] {
        &self.j0
    }

    pub fn j2(&self) -> &[EffectTuple] {
        &self.j2
    }

    pub fn x0(&self) -> &Mat {
        &self.x0
    }

    pub fn x1(&self) -> &Mat {
        &self.x1
    }

    pub fn x2(&self) -> &Mat {
        &self.x2
    }

    /// `X_{1|0} = (I - P_{X0}) X1`.
    pub fn x1_adjusted(&self) -> &Mat {
        &self.x1_adj
    }

    pub fn n01(&self) -> &Basis {
        &self.n01
    }

    pub fn x2_star(&self) -> &Mat {
        &self.x2_star
    }

    pub fn x_star(&self) -> &Mat {
        &self.x_star
    }

    pub fn part_k(&self) -> &Mat {
        &self.part_k
    }

    /// `E_{J_i}` of the designated part.
    pub fn e_part(&self) -> &Mat {
        &self.e_part
    }

    pub fn e2(&self) -> &Mat {
        &self.e2
    }

    pub fn rank_x(&self) -> usize {
        self.rank_x
    }

    pub fn parts_direct_sum(&self) -> bool {
        self.parts_direct_sum
    }

    pub fn n(&self) -> usize {
        self.x_star.nrows()
    }

    /// The Type III* projector `P3 = P_{X*} - P_{(X0, X2*)}`.
    pub fn type3_projector(&self) -> &Mat {
        &self.p3
    }

    /// Type III* degrees of freedom `tr(P3)`.
    pub fn type3_df(&self) -> Result<usize> {
        trace_df(&self.p3, "type III* projector")
    }

    /// Type II degrees of freedom `rank(X0, X1) - rank(X0)`.
    pub fn type2_df(&self) -> usize {
        self.rank_x01 - self.basis_x0.rank()
    }

    /// Type II sum of squares `y' (P_{(X0,X1)} - P_{X0}) y` with its df.
    pub fn type2_ss(&self, y: &Col) -> Result<(f64, usize)> {
        let x01 = hcat(&[&self.x0, &self.x1]);
        let p01 = basis_anchored(&x01, &self.tol, 0.0).projector();
        let p2 = p01 - self.basis_x0.projector();
        let ss = quadratic_form(y, &p2)?.max(0.0);
        let df = trace_df(&p2, "type II projector")?;
        Ok((ss, df))
    }

    /// The Type III* sum of squares together with the tested contrasts,
    /// the estimable/lagniappe split, and the per-contrast decomposition
    /// across ANOVA effects.
    pub fn type3_ss(&self, y: &Col) -> Result<Type3Result> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response length {} does not match {} observations",
                y.len(),
                self.n()
            )));
        }
        let ss = quadratic_form(y, &self.p3)?.max(0.0);
        let df = self.type3_df()?;
        let target = target_effect(&self.part_effects, &self.j_star, &self.space)?;
        let split = self.estimable_split(&target)?;
        let tested = self.tested_eta_contrasts().ok();
        let decomposition = tested.as_ref().map(|basis| {
            (0..basis.rank())
                .map(|i| contrast_decomposition(&basis.column(i), &self.space))
                .collect::<Result<Vec<_>>>()
        });
        let decomposition = match decomposition {
            Some(r) => Some(r?),
            None => None,
        };
        Ok(Type3Result {
            ss,
            df,
            estimable_df: split.estimable_df,
            lagniappe_df: split.lagniappe_df,
            tested_contrasts: tested,
            estimable_basis: split.estimable_basis,
            lagniappe_basis: split.lagniappe_basis,
            decomposition,
        })
    }

    /// Basis of the Type III* estimable functions `sp(X*' P3)`, checked
    /// against its closed form `sp((0; X_{1|0}'; 0))`.
    pub fn estimable_functions_basis(&self) -> Result<Basis> {
        let lhs_m = self.x_star.transpose() * &self.p3;
        let anchor = self.x_star.norm().max(1.0);
        let lhs = basis_anchored(&lhs_m, &self.tol, anchor);

        let n = self.n();
        let p0 = self.x0.ncols();
        let p2 = self.x_star.ncols() - p0 - self.x1.ncols();
        let stacked = vcat(&[
            &Mat::zeros(p0, n),
            &self.x1_adj.transpose(),
            &Mat::zeros(p2, n),
        ]);
        let rhs = basis_anchored(&stacked, &self.tol, anchor);
        if (lhs.projector() - rhs.projector()).norm() >= self.tol.subspace_abs {
            return Err(Error::Degeneracy(
                "estimable-function span disagrees with its closed form".into(),
            ));
        }
        Ok(lhs)
    }

    /// Basis of the tested contrast space on the designated part's cell
    /// coefficients: the span of `P_{E_J} K_i' P3`, whose joint vanishing
    /// is equivalent to a zero non-centrality parameter. Representing the
    /// contrasts inside `sp(E_J)` makes the span invariant to positive
    /// cell counts and to other covariate parts that meet this one at 0.
    pub fn tested_eta_contrasts(&self) -> Result<Basis> {
        if !self.parts_direct_sum {
            return Err(Error::Precondition(
                "η contrasts are only defined when covariate parts meet pairwise at 0".into(),
            ));
        }
        let kp_p3 = self.part_k.transpose() * &self.p3;
        let m = &self.p_e_part * kp_p3;
        Ok(basis_anchored(&m, &self.tol, 1.0))
    }

    /// Split the tested degrees of freedom into the estimable part of the
    /// target effect and the lagniappe remainder.
    pub fn estimable_split(&self, target: &TargetEffect) -> Result<EstimableSplit> {
        let h_basis = basis_anchored(&target.h_star, &self.tol, 1.0);
        let reach = &self.p_e_part * self.part_k.transpose();
        let reach_basis = basis_anchored(&reach, &self.tol, 1.0);
        let estimable_basis = intersect_bases(&h_basis, &reach_basis, &self.tol);
        let estimable_df = estimable_basis.rank();
        let df = self.type3_df()?;
        if estimable_df > df {
            return Err(Error::Degeneracy(format!(
                "estimable df {estimable_df} exceeds tested df {df}"
            )));
        }
        let lagniappe_df = df - estimable_df;
        let lagniappe_basis = match self.tested_eta_contrasts() {
            Ok(tested) => {
                if !estimable_basis.is_empty()
                    && !contains_span(tested.vectors(), estimable_basis.vectors(), &self.tol)?
                {
                    return Err(Error::Degeneracy(
                        "estimable part escapes the tested contrast space".into(),
                    ));
                }
                Some(basis_anchored(
                    &estimable_basis.residual(tested.vectors()),
                    &self.tol,
                    1.0,
                ))
            }
            Err(_) => None,
        };
        Ok(EstimableSplit {
            estimable_df,
            lagniappe_df,
            estimable_basis,
            lagniappe_basis,
        })
    }

    /// Non-centrality parameter of the Type III* statistic at mean `mu`.
    pub fn type3_ncp(&self, mu: &Col, sigma2: f64) -> Result<f64> {
        ncp(&self.p3, mu, sigma2)
    }
}

/// Proportions of the squared length of a contrast falling in each ANOVA
/// effect space: `c' H_j c` over all `j` after normalizing `c`.
pub fn contrast_decomposition(
    c: &Col,
    space: &FactorSpace,
) -> Result<BTreeMap<EffectTuple, f64>> {
    if c.len() != space.a_star() {
        return Err(Error::Dimension(format!(
            "contrast length {} does not match {} cells",
            c.len(),
            space.a_star()
        )));
    }
    let norm = c.norm();
    if norm == 0.0 {
        return Err(Error::input("cannot decompose the zero contrast"));
    }
    let unit = c / norm;
    let mut out = BTreeMap::new();
    for j in EffectTuple::all(space.f()) {
        let h = effect_h(&j, space);
        out.insert(j, quadratic_form(&unit, &h)?.max(0.0));
    }
    Ok(out)
}

/// Non-centrality parameter `mu' P mu / sigma^2`.
pub fn ncp(p: &Mat, mu: &Col, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::input(format!(
            "variance must be positive, got {sigma2}"
        )));
    }
    Ok(quadratic_form(mu, p)? / sigma2)
}

/// General-linear-hypothesis sum of squares for `G'β` in the model `Xβ`,
/// using the Moore–Penrose choice `A = (X⁺)'` so that `XA' = P_X`.
/// Requires `sp(G) ⊆ sp(X')`.
pub fn glh_ss(y: &Col, x: &Mat, g: &Mat, tol: &Tol) -> Result<(f64, usize)> {
    if g.nrows() != x.ncols() {
        return Err(Error::Dimension(format!(
            "hypothesis matrix has {} rows for {} model columns",
            g.nrows(),
            x.ncols()
        )));
    }
    if y.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "response length {} does not match {} rows of X",
            y.len(),
            x.nrows()
        )));
    }
    if !contains_span(&x.transpose(), g, tol)? {
        return Err(Error::Estimability(
            "G'β is not estimable: sp(G) is not contained in sp(X')".into(),
        ));
    }
    // Gate the hypothesis rank at the scale of X so that an all-roundoff G
    // (an empty hypothesis) yields SS = 0 rather than noise.
    let g_basis = basis_anchored(g, tol, x.norm());
    if g_basis.is_empty() {
        return Ok((0.0, 0));
    }
    let a = crate::linalg::generalized_inverse(x, tol)?.transpose();
    let ag = &a * g_basis.vectors();
    let p_ag = basis_anchored(&ag, tol, 0.0).projector();
    let ss = quadratic_form(y, &p_ag)?.max(0.0);
    Ok((ss, g_basis.rank()))
}

/// Restricted-model-minus-full-model sum of squares
/// `y'(P_full - P_restricted)y`, requiring span nesting.
pub fn rmfm_ss(y: &Col, x_full: &Mat, x_restricted: &Mat, tol: &Tol) -> Result<(f64, usize)> {
    if !contains_span(x_full, x_restricted, tol)? {
        return Err(Error::Precondition(
            "restricted model must be nested in the full model".into(),
        ));
    }
    let b_full = orthonormal_basis(x_full, tol)?;
    let b_restr = basis_anchored(x_restricted, tol, x_full.norm());
    let p = b_full.projector() - b_restr.projector();
    let ss = quadratic_form(y, &p)?.max(0.0);
    Ok((ss, b_full.rank() - b_restr.rank()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Design;

    fn tol() -> Tol {
        Tol::default()
    }

    fn t(s: &str) -> EffectTuple {
        EffectTuple::parse(s).unwrap()
    }

    fn saturated_two_way() -> Vec<EffectTuple> {
        vec![t("00"), t("10"), t("01"), t("11")]
    }

    fn balanced_2x2() -> (Design, ModelSpec) {
        let space = FactorSpace::new(vec![2, 2]).unwrap();
        let design = Design::from_cell_counts(space, vec![1, 1, 1, 1]).unwrap();
        let spec = ModelSpec::single_part(2, saturated_two_way()).unwrap();
        (design, spec)
    }

    /// The 3×3 layout with an empty diagonal and one observation per
    /// off-diagonal cell.
    fn zero_diagonal_3x3() -> (Design, ModelSpec) {
        let space = FactorSpace::new(vec![3, 3]).unwrap();
        let counts: Vec<usize> = (0..9).map(|c| usize::from(c % 4 != 0)).collect();
        let design = Design::from_cell_counts(space, counts).unwrap();
        let spec = ModelSpec::single_part(2, saturated_two_way()).unwrap();
        (design, spec)
    }

    fn ctx(design: &Design, spec: &ModelSpec, j: &str) -> EffectContext {
        build_context(design, spec, &Covariates::new(), 0, &t(j), &tol()).unwrap()
    }

    #[test]
    fn saturated_two_way_x2_is_the_interaction_block() {
        let (design, spec) = balanced_2x2();
        let c = ctx(&design, &spec, "10");
        assert_eq!(c.x2().ncols(), 4);
        assert_eq!(c.j2(), &[t("11")]);
        // sp(X*) = sp(X)
        let x = hcat(&[c.x0(), c.x1(), c.x2()]);
        assert!(crate::linalg::subspace_equal(c.x_star(), &x, &tol()).unwrap());
    }

    #[test]
    fn maximal_effect_has_empty_x2_star_and_type2_projector() {
        let (design, spec) = balanced_2x2();
        let c = ctx(&design, &spec, "11");
        assert_eq!(c.n01().rank(), 0);
        assert_eq!(c.x2_star().ncols(), 0);
        // P3 reduces to P_{(X0,X1)} - P_{X0}.
        let x01 = hcat(&[c.x0(), c.x1()]);
        let p01 = crate::linalg::projector(&x01, &tol()).unwrap();
        let p0 = crate::linalg::projector(c.x0(), &tol()).unwrap();
        assert!((c.type3_projector() - (p01 - p0)).norm() < 1e-10);
    }

    #[test]
    fn projector_annihilates_x0_and_x2_star() {
        let (design, spec) = zero_diagonal_3x3();
        for j in ["10", "01", "11"] {
            let c = ctx(&design, &spec, j);
            let p3 = c.type3_projector();
            assert!((p3 * c.x0()).norm() < 1e-9);
            assert!((p3 * c.x2_star()).norm() < 1e-9);
            assert!(((p3 * p3) - p3).norm() < 1e-9);
            assert!((p3 - p3.transpose()).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_diagonal_design_has_two_df_main_effects() {
        let (design, spec) = zero_diagonal_3x3();
        let c = ctx(&design, &spec, "10");
        assert_eq!(c.type3_df().unwrap(), 2);
        assert_eq!(c.type2_df(), 2);
        let c = ctx(&design, &spec, "11");
        assert_eq!(c.type3_df().unwrap(), 1);
    }

    #[test]
    fn balanced_hand_values() {
        let (design, spec) = balanced_2x2();
        let y = Col::from_column_slice(&[1.0, 2.0, 3.0, 5.0]);
        let expect = [("10", 6.25), ("01", 2.25), ("11", 0.25)];
        for (j, ss) in expect {
            let c = ctx(&design, &spec, j);
            let r = c.type3_ss(&y).unwrap();
            assert!(
                (r.ss - ss).abs() < 1e-12,
                "effect {j}: got {} expected {ss}",
                r.ss
            );
            assert_eq!(r.df, 1);
        }
    }

    #[test]
    fn restricted_mean_gives_zero_ss() {
        let (design, spec) = balanced_2x2();
        let c = ctx(&design, &spec, "10");
        // Any response inside sp(X0, X2*) fits the restricted model exactly.
        let combined = hcat(&[c.x0(), c.x2_star()]);
        let y = Col::from_iterator(4, combined.column(0).iter().cloned());
        let r = c.type3_ss(&y).unwrap();
        assert!(r.ss.abs() < 1e-18);
    }

    #[test]
    fn type2_equals_type3_when_nothing_contains_the_effect() {
        let (design, spec) = zero_diagonal_3x3();
        let c = ctx(&design, &spec, "11");
        let y = Col::from_column_slice(&[2.0, -1.0, 0.5, 3.0, 1.0, -2.0]);
        let (ss2, df2) = c.type2_ss(&y).unwrap();
        let r3 = c.type3_ss(&y).unwrap();
        assert!((ss2 - r3.ss).abs() < 1e-10);
        assert_eq!(df2, r3.df);
    }

    #[test]
    fn x1_inside_x0_gives_zero_type2() {
        // Diagonal 2×2 design (cells (0,0) and (1,1) only): the A dummies
        // coincide with the B dummies, so X1 for effect 10 sits inside
        // sp(X0) and the additive model leaves nothing to test.
        let space = FactorSpace::new(vec![2, 2]).unwrap();
        let design = Design::from_cell_counts(space, vec![1, 0, 0, 1]).unwrap();
        let spec = ModelSpec::single_part(2, vec![t("00"), t("10"), t("01")]).unwrap();
        let c = build_context(&design, &spec, &Covariates::new(), 0, &t("10"), &tol()).unwrap();
        assert_eq!(c.type2_df(), 0);
        let y = Col::from_column_slice(&[1.0, 4.0]);
        let (ss, df) = c.type2_ss(&y).unwrap();
        assert!(ss.abs() < 1e-12);
        assert_eq!(df, 0);
        assert_eq!(c.type3_df().unwrap(), 0);
    }

    #[test]
    fn estimable_functions_match_closed_form() {
        let (design, spec) = zero_diagonal_3x3();
        for j in ["10", "01", "11"] {
            let c = ctx(&design, &spec, j);
            let b = c.estimable_functions_basis().unwrap();
            assert_eq!(b.rank(), c.type3_df().unwrap());
        }
    }

    #[test]
    fn estimable_functions_rank_one_in_balanced_2x2() {
        let (design, spec) = balanced_2x2();
        let c = ctx(&design, &spec, "10");
        assert_eq!(c.estimable_functions_basis().unwrap().rank(), 1);
    }

    #[test]
    fn target_effect_examples() {
        let space = FactorSpace::new(vec![2, 2]).unwrap();
        let full = saturated_two_way();
        let te = target_effect(&full, &t("10"), &space).unwrap();
        assert_eq!(te.j_star_set, vec![t("10")]);
        assert!((te.h_star - effect_h(&t("10"), &space)).norm() < 1e-14);

        // J = {00, 10, 11}, designating 11: the target pools 01 and 11,
        // i.e. I_a ⊗ S_b.
        let js = vec![t("00"), t("10"), t("11")];
        let te = target_effect(&js, &t("11"), &space).unwrap();
        assert_eq!(te.j_star_set, vec![t("01"), t("11")]);
        let s2 = Mat::identity(2, 2) - Mat::from_element(2, 2, 0.5);
        let expect = Mat::identity(2, 2).kronecker(&s2);
        assert!((te.h_star - expect).norm() < 1e-14);

        // Self-contained models keep only the designated tuple.
        let js = vec![t("00"), t("10"), t("01"), t("11")];
        for j in &js {
            let te = target_effect(&js, j, &space).unwrap();
            assert_eq!(te.j_star_set, vec![j.clone()]);
        }
    }

    #[test]
    fn zero_diagonal_split_is_pure_lagniappe_for_mains() {
        let (design, spec) = zero_diagonal_3x3();
        let space = design.space().clone();
        for (j, est, lag) in [("10", 0, 2), ("01", 0, 2), ("11", 1, 0)] {
            let c = ctx(&design, &spec, j);
            let target = target_effect(&saturated_two_way(), &t(j), &space).unwrap();
            let split = c.estimable_split(&target).unwrap();
            assert_eq!(split.estimable_df, est, "effect {j}");
            assert_eq!(split.lagniappe_df, lag, "effect {j}");
        }
    }

    #[test]
    fn full_design_split_is_fully_estimable() {
        let (design, spec) = balanced_2x2();
        let space = design.space().clone();
        for j in ["10", "01", "11"] {
            let c = ctx(&design, &spec, j);
            let target = target_effect(&saturated_two_way(), &t(j), &space).unwrap();
            let split = c.estimable_split(&target).unwrap();
            assert_eq!(split.lagniappe_df, 0);
            // Tested space coincides with sp(H*).
            let tested = c.tested_eta_contrasts().unwrap();
            let ph = crate::linalg::projector(&target.h_star, &tol()).unwrap();
            assert!((tested.projector() - ph).norm() < 1e-9);
        }
    }

    #[test]
    fn tested_contrasts_sum_to_zero_over_cells() {
        let (design, spec) = zero_diagonal_3x3();
        for j in ["10", "01", "11"] {
            let c = ctx(&design, &spec, j);
            let tested = c.tested_eta_contrasts().unwrap();
            for i in 0..tested.rank() {
                assert!(tested.column(i).sum().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn decomposition_proportions_sum_to_one() {
        let (design, spec) = zero_diagonal_3x3();
        let c = ctx(&design, &spec, "10");
        let tested = c.tested_eta_contrasts().unwrap();
        for i in 0..tested.rank() {
            let d = contrast_decomposition(&tested.column(i), design.space()).unwrap();
            let total: f64 = d.values().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_of_pure_effect_direction() {
        let space = FactorSpace::new(vec![3, 3]).unwrap();
        let h10 = effect_h(&t("10"), &space);
        // Any column of H_10 lies in sp(H_10) exactly.
        let c = Col::from_iterator(9, h10.column(1).iter().cloned());
        let d = contrast_decomposition(&c, &space).unwrap();
        assert!((d[&t("10")] - 1.0).abs() < 1e-12);
        assert!(d[&t("11")].abs() < 1e-12);
    }

    #[test]
    fn ncp_basics() {
        let (design, spec) = balanced_2x2();
        let c = ctx(&design, &spec, "10");
        // mu inside the restricted span has zero ncp.
        let combined = hcat(&[c.x0(), c.x2_star()]);
        let mu = Col::from_iterator(4, combined.column(0).iter().cloned());
        assert!(c.type3_ncp(&mu, 1.0).unwrap().abs() < 1e-12);

        // Doubling mu quadruples the ncp.
        let mu = Col::from_column_slice(&[1.0, 2.0, 0.0, -1.0]);
        let base = c.type3_ncp(&mu, 1.0).unwrap();
        let twice = c.type3_ncp(&(&mu * 2.0), 1.0).unwrap();
        assert!((twice - 4.0 * base).abs() < 1e-10);

        assert!(c.type3_ncp(&mu, 0.0).is_err());
    }

    #[test]
    fn glh_with_full_row_space_reproduces_projection_ss() {
        let (design, spec) = balanced_2x2();
        let covs = Covariates::new();
        let x = crate::design::model_matrix(&design, &spec, &covs).unwrap();
        let y = Col::from_column_slice(&[1.0, 2.0, 3.0, 5.0]);
        let g = x.transpose();
        let (ss, df) = glh_ss(&y, &x, &g, &tol()).unwrap();
        let px = crate::linalg::projector(&x, &tol()).unwrap();
        let expect = quadratic_form(&y, &px).unwrap();
        assert!((ss - expect).abs() < 1e-10);
        assert_eq!(df, 4);
    }

    #[test]
    fn glh_matches_type3_through_its_estimable_functions() {
        let (design, spec) = zero_diagonal_3x3();
        let y = Col::from_column_slice(&[2.0, -1.0, 0.5, 3.0, 1.0, -2.0]);
        for j in ["10", "01", "11"] {
            let c = ctx(&design, &spec, j);
            let g3 = c.estimable_functions_basis().unwrap();
            let (ss, df) = glh_ss(&y, c.x_star(), g3.vectors(), &tol()).unwrap();
            let r3 = c.type3_ss(&y).unwrap();
            assert!(
                (ss - r3.ss).abs() <= 1e-8 * r3.ss.abs().max(1.0),
                "effect {j}: glh {ss} vs type3 {}",
                r3.ss
            );
            assert_eq!(df, r3.df);
        }
    }

    #[test]
    fn glh_scalar_contrast_in_balanced_one_factor_model() {
        // One factor at 2 levels, n per cell, model {00, 10}: the contrast
        // (1, -1) on the two cell means has SS (c'η̂)² / (c'c / n).
        let space = FactorSpace::new(vec![2]).unwrap();
        let design = Design::from_cell_counts(space.clone(), vec![3, 3]).unwrap();
        let spec = ModelSpec::single_part(1, vec![t("0"), t("1")]).unwrap();
        let covs = Covariates::new();
        let x = crate::design::model_matrix(&design, &spec, &covs).unwrap();
        let y = Col::from_column_slice(&[1.0, 2.0, 3.0, 7.0, 8.0, 6.0]);
        // β = (β_00, β_1, β_2) with η_i = β_00 + β_i; c'η = η_1 - η_2
        // corresponds to G' = (0, 1, -1).
        let g = Mat::from_column_slice(3, 1, &[0.0, 1.0, -1.0]);
        let (ss, df) = glh_ss(&y, &x, &g, &tol()).unwrap();
        let mean1: f64 = 2.0;
        let mean2: f64 = 7.0;
        let expect = (mean1 - mean2).powi(2) / (2.0 / 3.0);
        assert!((ss - expect).abs() < 1e-10);
        assert_eq!(df, 1);
    }

    #[test]
    fn glh_rejects_non_estimable_hypotheses() {
        let (design, spec) = zero_diagonal_3x3();
        let covs = Covariates::new();
        let x = crate::design::model_matrix(&design, &spec, &covs).unwrap();
        let y = Col::zeros(6);
        // A main-effect contrast on η is not estimable here; lift it to β.
        let mut g = Mat::zeros(x.ncols(), 1);
        g[(1, 0)] = 1.0; // β for level 1 of factor A alone
        assert!(matches!(
            glh_ss(&y, &x, &g, &tol()),
            Err(Error::Estimability(_))
        ));
    }

    #[test]
    fn rmfm_basics() {
        let mut rng_state = 17u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let y = Col::from_fn(6, |_, _| next());

        let x = Mat::identity(6, 6);
        let ones = Mat::from_element(6, 1, 1.0);
        // Restricted = full gives zero.
        let (ss, df) = rmfm_ss(&y, &x, &x, &tol()).unwrap();
        assert!(ss.abs() < 1e-12);
        assert_eq!(df, 0);

        // Full = identity span, restricted = 1_n gives the corrected total SS.
        let (ss, df) = rmfm_ss(&y, &x, &ones, &tol()).unwrap();
        let mean = y.sum() / 6.0;
        let total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((ss - total).abs() < 1e-10);
        assert_eq!(df, 5);

        // Nesting violations are rejected.
        assert!(matches!(
            rmfm_ss(&y, &ones, &x, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rmfm_equals_sse_difference() {
        let (design, spec) = zero_diagonal_3x3();
        let covs = Covariates::new();
        let x = crate::design::model_matrix(&design, &spec, &covs).unwrap();
        let y = Col::from_column_slice(&[2.0, -1.0, 0.5, 3.0, 1.0, -2.0]);
        let restricted = x.columns(0, 3).into_owned();
        let (ss, _) = rmfm_ss(&y, &x, &restricted, &tol()).unwrap();
        let p_full = crate::linalg::projector(&x, &tol()).unwrap();
        let p_restr = crate::linalg::projector(&restricted, &tol()).unwrap();
        let sse_full = (&y - &p_full * &y).norm_squared();
        let sse_restr = (&y - &p_restr * &y).norm_squared();
        assert!((ss - (sse_restr - sse_full)).abs() < 1e-10);
    }
}
