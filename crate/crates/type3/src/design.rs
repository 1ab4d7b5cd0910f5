//! The factorial universe: cell indexing, incidence matrices, the
//! Kronecker effect matrices `E_j` / `H_j`, the containment ordering on
//! effect tuples, and model specifications with covariate parts.
//!
//! Cells are indexed lexicographically with factor 1 slowest, matching the
//! Kronecker factor order of the effect matrices, so that the projector
//! onto `sp(E_J)` is exactly the sum of the `H_j` over the closure of `J`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{hcat, Mat};

/// Per-observation covariate columns, keyed by covariate name.
pub type Covariates = BTreeMap<String, Vec<f64>>;

/// The set of factors with their level counts `a_1..a_f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSpace {
    levels: Vec<usize>,
}

impl FactorSpace {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::input("a factor space needs at least one factor"));
        }
        if let Some(&bad) = levels.iter().find(|&&a| a < 2) {
            return Err(Error::input(format!(
                "every factor needs at least 2 levels, got {bad}"
            )));
        }
        Ok(FactorSpace { levels })
    }

    /// Number of factors.
    pub fn f(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Total number of cells `a_* = a_1 × ... × a_f`.
    pub fn a_star(&self) -> usize {
        self.levels.iter().product()
    }

    /// Lexicographic cell index of a 0-based level combination.
    pub fn cell_index(&self, combo: &[usize]) -> Result<usize> {
        if combo.len() != self.f() {
            return Err(Error::Dimension(format!(
                "level combination has {} entries for {} factors",
                combo.len(),
                self.f()
            )));
        }
        let mut idx = 0usize;
        for (k, (&l, &a)) in combo.iter().zip(&self.levels).enumerate() {
            if l >= a {
                return Err(Error::input(format!(
                    "level {l} out of range for factor {k} with {a} levels"
                )));
            }
            idx = idx * a + l;
        }
        Ok(idx)
    }

    /// 0-based level combination of a lexicographic cell index.
    pub fn cell_levels(&self, mut idx: usize) -> Vec<usize> {
        let mut combo = vec![0; self.f()];
        for k in (0..self.f()).rev() {
            combo[k] = idx % self.levels[k];
            idx /= self.levels[k];
        }
        combo
    }
}

/// A binary f-tuple naming an effect: bit k set means factor k enters.
/// The all-zero tuple is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EffectTuple {
    bits: Vec<bool>,
}

impl EffectTuple {
    pub fn new(bits: Vec<bool>) -> Self {
        EffectTuple { bits }
    }

    /// Parse from a string of 0s and 1s, e.g. `"10"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!("invalid tuple character '{other}'"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if bits.is_empty() {
            return Err(Error::input("empty effect tuple"));
        }
        Ok(EffectTuple { bits })
    }

    pub fn intercept(f: usize) -> Self {
        EffectTuple {
            bits: vec![false; f],
        }
    }

    pub fn f(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn is_intercept(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }

    /// Number of factors entering the effect (its order).
    pub fn order(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Containment: `self ⪰ other` componentwise.
    pub fn contains(&self, other: &EffectTuple) -> bool {
        debug_assert_eq!(self.f(), other.f());
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(&a, &b)| a || !b)
    }

    pub fn strictly_contains(&self, other: &EffectTuple) -> bool {
        self.contains(other) && self != other
    }

    /// All `2^f` tuples in canonical order (by order, then leading factors
    /// first: 00, 10, 01, 11 for two factors).
    pub fn all(f: usize) -> Vec<EffectTuple> {
        let mut out: Vec<EffectTuple> = (0..1usize << f)
            .map(|mask| {
                EffectTuple::new((0..f).map(|k| mask >> k & 1 == 1).collect())
            })
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for EffectTuple {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(w, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl Ord for EffectTuple {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| {
                // Same order: the tuple whose set bits come first is smaller
                // (10 sorts before 01).
                for (a, b) in self.bits.iter().zip(&other.bits) {
                    match (a, b) {
                        (true, false) => return std::cmp::Ordering::Less,
                        (false, true) => return std::cmp::Ordering::Greater,
                        _ => {}
                    }
                }
                std::cmp::Ordering::Equal
            })
    }
}

impl PartialOrd for EffectTuple {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Containment check `j2 ⪰ j1` with a length guard.
pub fn contains(j1: &EffectTuple, j2: &EffectTuple) -> Result<bool> {
    if j1.f() != j2.f() {
        return Err(Error::Dimension(format!(
            "tuple lengths differ: {} vs {}",
            j1.f(),
            j2.f()
        )));
    }
    Ok(j2.contains(j1))
}

/// All tuples contained in at least one member of `set`.
pub fn closure<'a, I>(set: I, f: usize) -> BTreeSet<EffectTuple>
where
    I: IntoIterator<Item = &'a EffectTuple>,
{
    let members: Vec<&EffectTuple> = set.into_iter().collect();
    EffectTuple::all(f)
        .into_iter()
        .filter(|cand| members.iter().any(|m| m.contains(cand)))
        .collect()
}

/// Split `effects` by containment of `j_star`:
/// `J1 = {j_star}`, `J2 = {j ≻ j_star}`, `J0` = everything else.
pub fn partition_for_effect(
    effects: &[EffectTuple],
    j_star: &EffectTuple,
) -> Result<(Vec<EffectTuple>, Vec<EffectTuple>, Vec<EffectTuple>)> {
    if !effects.contains(j_star) {
        return Err(Error::input(format!(
            "designated effect {j_star} is not in the model"
        )));
    }
    let mut j0 = Vec::new();
    let mut j2 = Vec::new();
    for j in effects {
        if j == j_star {
            continue;
        }
        if j.contains(j_star) {
            j2.push(j.clone());
        } else {
            j0.push(j.clone());
        }
    }
    Ok((j0, vec![j_star.clone()], j2))
}

fn kronecker_chain<F>(space: &FactorSpace, factor_block: F) -> Mat
where
    F: Fn(usize, usize) -> Mat,
{
    let mut out = Mat::from_element(1, 1, 1.0);
    for (k, &a) in space.levels().iter().enumerate() {
        out = out.kronecker(&factor_block(k, a));
    }
    out
}

/// Dummy-variable block for effect `j`: the Kronecker product over factors
/// of `1_{a_k}` (factor absent) or `I_{a_k}` (factor present). `a_*` rows.
pub fn effect_e(j: &EffectTuple, space: &FactorSpace) -> Mat {
    debug_assert_eq!(j.f(), space.f());
    kronecker_chain(space, |k, a| {
        if j.bit(k) {
            Mat::identity(a, a)
        } else {
            Mat::from_element(a, 1, 1.0)
        }
    })
}

/// ANOVA-effect projector for `j`: the Kronecker product over factors of
/// the averaging block `U_{a_k}` (factor absent) or the centering block
/// `S_{a_k}` (factor present). Symmetric idempotent of size `a_* × a_*`.
pub fn effect_h(j: &EffectTuple, space: &FactorSpace) -> Mat {
    debug_assert_eq!(j.f(), space.f());
    kronecker_chain(space, |k, a| {
        let u = Mat::from_element(a, a, 1.0 / a as f64);
        if j.bit(k) {
            Mat::identity(a, a) - u
        } else {
            u
        }
    })
}

/// Rank of `H_j`: the product of `(a_k - 1)` over factors in the effect.
pub fn effect_h_rank(j: &EffectTuple, space: &FactorSpace) -> usize {
    space
        .levels()
        .iter()
        .enumerate()
        .map(|(k, &a)| if j.bit(k) { a - 1 } else { 1 })
        .product()
}

/// Concatenation of `E_j` blocks over an effect set, in the given order.
pub fn e_concat(effects: &[EffectTuple], space: &FactorSpace) -> Mat {
    let blocks: Vec<Mat> = effects.iter().map(|j| effect_e(j, space)).collect();
    let refs: Vec<&Mat> = blocks.iter().collect();
    if refs.is_empty() {
        Mat::zeros(space.a_star(), 0)
    } else {
        hcat(&refs)
    }
}

/// Observations laid out over the cells of a factor space. Empty cells
/// (`n_ℓ = 0`) are allowed; rows keep their original order.
#[derive(Debug, Clone)]
pub struct Design {
    space: FactorSpace,
    cell_counts: Vec<usize>,
    row_cells: Vec<usize>,
}

impl Design {
    pub fn new(space: FactorSpace, row_cells: Vec<usize>) -> Result<Self> {
        let a_star = space.a_star();
        let mut cell_counts = vec![0usize; a_star];
        for &c in &row_cells {
            if c >= a_star {
                return Err(Error::input(format!(
                    "cell index {c} out of range for {a_star} cells"
                )));
            }
            cell_counts[c] += 1;
        }
        Ok(Design {
            space,
            cell_counts,
            row_cells,
        })
    }

    /// Build from per-cell counts with rows laid out in lexicographic cell
    /// order.
    pub fn from_cell_counts(space: FactorSpace, cell_counts: Vec<usize>) -> Result<Self> {
        if cell_counts.len() != space.a_star() {
            return Err(Error::Dimension(format!(
                "expected {} cell counts, got {}",
                space.a_star(),
                cell_counts.len()
            )));
        }
        let mut row_cells = Vec::with_capacity(cell_counts.iter().sum());
        for (cell, &count) in cell_counts.iter().enumerate() {
            row_cells.extend(std::iter::repeat(cell).take(count));
        }
        Ok(Design {
            space,
            cell_counts,
            row_cells,
        })
    }

    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.row_cells.len()
    }

    pub fn cell_counts(&self) -> &[usize] {
        &self.cell_counts
    }

    pub fn row_cells(&self) -> &[usize] {
        &self.row_cells
    }

    pub fn nonempty_cells(&self) -> Vec<usize> {
        (0..self.cell_counts.len())
            .filter(|&c| self.cell_counts[c] > 0)
            .collect()
    }

    /// The n × a_* 0/1 incidence matrix: row r has a single 1 in the column
    /// of the cell observation r falls in. Column sums are the cell counts;
    /// empty cells keep their (zero) columns.
    pub fn incidence_matrix(&self) -> Mat {
        let mut k = Mat::zeros(self.n(), self.space.a_star());
        for (r, &c) in self.row_cells.iter().enumerate() {
            k[(r, c)] = 1.0;
        }
        k
    }

    /// The same cell pattern with every positive count replaced by 1.
    pub fn collapsed_to_single_replicate(&self) -> Design {
        let counts: Vec<usize> = self.cell_counts.iter().map(|&c| c.min(1)).collect();
        Design::from_cell_counts(self.space.clone(), counts)
            .expect("collapsed design is valid by construction")
    }
}

/// One covariate part of a model: an effect set for the cell-by-cell
/// coefficients of a single covariate (or of the cell means themselves for
/// part 0, which has no covariate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovariatePart {
    pub covariate: Option<String>,
    effects: Vec<EffectTuple>,
}

impl CovariatePart {
    pub fn new(covariate: Option<String>, mut effects: Vec<EffectTuple>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::input("a covariate part needs at least one effect"));
        }
        effects.sort();
        let before = effects.len();
        effects.dedup();
        if effects.len() != before {
            return Err(Error::input("duplicate effect tuples within a part"));
        }
        Ok(CovariatePart { covariate, effects })
    }

    pub fn effects(&self) -> &[EffectTuple] {
        &self.effects
    }
}

/// A mean model as an ordered list of covariate parts; part 0 is the
/// intercept part (cell means), later parts carry one covariate each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    parts: Vec<CovariatePart>,
}

impl ModelSpec {
    pub fn new(f: usize, parts: Vec<CovariatePart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::input("a model needs at least one part"));
        }
        if parts[0].covariate.is_some() {
            return Err(Error::input("part 0 must be the intercept part"));
        }
        let mut seen = BTreeSet::new();
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                match &part.covariate {
                    None => {
                        return Err(Error::input(
                            "only part 0 may omit the covariate name",
                        ))
                    }
                    Some(name) => {
                        if !seen.insert(name.clone()) {
                            return Err(Error::input(format!(
                                "covariate {name} appears in more than one part"
                            )));
                        }
                    }
                }
            }
            for j in part.effects() {
                if j.f() != f {
                    return Err(Error::Dimension(format!(
                        "effect tuple {j} has {} bits for {f} factors",
                        j.f()
                    )));
                }
            }
        }
        Ok(ModelSpec { parts })
    }

    /// Single-part model over the given effect set.
    pub fn single_part(f: usize, effects: Vec<EffectTuple>) -> Result<Self> {
        ModelSpec::new(f, vec![CovariatePart::new(None, effects)?])
    }

    pub fn parts(&self) -> &[CovariatePart] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &CovariatePart {
        &self.parts[i]
    }
}

/// Incidence matrix of one part: `K_0` for part 0, `Diag(x_i) K_0` for a
/// covariate part. A cell whose covariate values are all zero yields an
/// all-zero column.
pub fn part_incidence(
    k0: &Mat,
    part: &CovariatePart,
    covariates: &Covariates,
) -> Result<Mat> {
    match &part.covariate {
        None => Ok(k0.clone()),
        Some(name) => {
            let x = covariates
                .get(name)
                .ok_or_else(|| Error::input(format!("missing covariate column {name}")))?;
            if x.len() != k0.nrows() {
                return Err(Error::Dimension(format!(
                    "covariate {name} has {} values for {} observations",
                    x.len(),
                    k0.nrows()
                )));
            }
            if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "covariate {name} has non-finite value {bad}"
                )));
            }
            let mut ki = k0.clone();
            for (r, &v) in x.iter().enumerate() {
                ki.row_mut(r).scale_mut(v);
            }
            Ok(ki)
        }
    }
}

/// The design-matrix block of one part: `K_i E_{J_i}`.
pub fn part_block(
    design: &Design,
    part: &CovariatePart,
    covariates: &Covariates,
) -> Result<Mat> {
    let k0 = design.incidence_matrix();
    let ki = part_incidence(&k0, part, covariates)?;
    Ok(&ki * e_concat(part.effects(), design.space()))
}

/// Design-matrix blocks of every part, in part order.
pub fn part_blocks(
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
) -> Result<Vec<Mat>> {
    let k0 = design.incidence_matrix();
    spec.parts()
        .iter()
        .map(|part| {
            let ki = part_incidence(&k0, part, covariates)?;
            Ok(&ki * e_concat(part.effects(), design.space()))
        })
        .collect()
}

/// The full model matrix: column-wise concatenation of `K_i E_{J_i}` over
/// parts, with effects inside each part in canonical order.
pub fn model_matrix(
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
) -> Result<Mat> {
    let blocks = part_blocks(design, spec, covariates)?;
    let refs: Vec<&Mat> = blocks.iter().collect();
    Ok(hcat(&refs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projector, subspace_equal, Col, Tol};

    fn space2x2() -> FactorSpace {
        FactorSpace::new(vec![2, 2]).unwrap()
    }

    fn t(s: &str) -> EffectTuple {
        EffectTuple::parse(s).unwrap()
    }

    #[test]
    fn factor_space_validation() {
        assert!(FactorSpace::new(vec![]).is_err());
        assert!(FactorSpace::new(vec![2, 1]).is_err());
        let s = FactorSpace::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.a_star(), 12);
        assert_eq!(s.cell_index(&[1, 2, 0]).unwrap(), 10);
        assert_eq!(s.cell_levels(10), vec![1, 2, 0]);
    }

    #[test]
    fn containment_ordering() {
        assert!(t("11").contains(&t("10")));
        assert!(!t("10").contains(&t("01")));
        for j in EffectTuple::all(3) {
            assert!(j.contains(&j));
        }
        assert!(matches!(
            contains(&t("10"), &t("011")),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn canonical_tuple_order() {
        let all = EffectTuple::all(2);
        let strs: Vec<String> = all.iter().map(|j| j.to_string()).collect();
        assert_eq!(strs, ["00", "10", "01", "11"]);
    }

    #[test]
    fn closure_examples() {
        let f = 2;
        let c = closure([t("11")].iter(), f);
        assert_eq!(c.len(), 4);

        let c = closure([t("00")].iter(), f);
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![t("00")]);

        let set = [t("10"), t("01")];
        let c = closure(set.iter(), f);
        assert_eq!(
            c.into_iter().collect::<Vec<_>>(),
            vec![t("00"), t("10"), t("01")]
        );
    }

    #[test]
    fn partition_examples() {
        let j = [t("00"), t("10"), t("01"), t("11")];
        let (j0, j1, j2) = partition_for_effect(&j, &t("10")).unwrap();
        assert_eq!(j0, vec![t("00"), t("01")]);
        assert_eq!(j1, vec![t("10")]);
        assert_eq!(j2, vec![t("11")]);

        let j = [t("00"), t("10"), t("11")];
        let (j0, _, j2) = partition_for_effect(&j, &t("11")).unwrap();
        assert_eq!(j0, vec![t("00"), t("10")]);
        assert!(j2.is_empty());

        let j = [t("10")];
        let (j0, _, j2) = partition_for_effect(&j, &t("10")).unwrap();
        assert!(j0.is_empty() && j2.is_empty());

        assert!(partition_for_effect(&j, &t("01")).is_err());
    }

    #[test]
    fn effect_e_shapes() {
        let s = space2x2();
        let e00 = effect_e(&t("00"), &s);
        assert_eq!(e00.shape(), (4, 1));
        assert!(e00.iter().all(|&v| v == 1.0));

        let e10 = effect_e(&t("10"), &s);
        assert_eq!(e10.shape(), (4, 2));
        // I_2 ⊗ 1_2 with factor 1 slowest.
        let expect = Mat::from_row_slice(4, 2, &[1., 0., 1., 0., 0., 1., 0., 1.]);
        assert_eq!(e10, expect);

        let s23 = FactorSpace::new(vec![2, 3]).unwrap();
        assert_eq!(effect_e(&t("11"), &s23), Mat::identity(6, 6));
    }

    #[test]
    fn effect_h_overall_mean_and_dot_bar_pattern() {
        let s = space2x2();
        let h00 = effect_h(&t("00"), &s);
        assert!((h00 - Mat::from_element(4, 4, 0.25)).norm() < 1e-14);

        // H_10 applied to eta gives the row-mean-minus-grand-mean pattern.
        let h10 = effect_h(&t("10"), &s);
        let eta = Col::from_column_slice(&[1.0, 2.0, 3.0, 5.0]);
        let got = &h10 * &eta;
        let row_means = [1.5, 1.5, 4.0, 4.0];
        let grand = 2.75;
        for i in 0..4 {
            assert!((got[i] - (row_means[i] - grand)).abs() < 1e-12);
        }
    }

    #[test]
    fn effect_h_complete_expansion_sums_to_identity() {
        let s = FactorSpace::new(vec![2, 3]).unwrap();
        let mut sum = Mat::zeros(6, 6);
        for j in EffectTuple::all(2) {
            sum += effect_h(&j, &s);
        }
        assert!((sum - Mat::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn effect_h_mutually_orthogonal_idempotents() {
        let s = FactorSpace::new(vec![3, 2]).unwrap();
        let all = EffectTuple::all(2);
        for a in &all {
            let ha = effect_h(a, &s);
            assert!((&ha * &ha - &ha).norm() < 1e-12);
            let trace = ha.trace();
            assert!((trace - effect_h_rank(a, &s) as f64).abs() < 1e-10);
            for b in &all {
                if a != b {
                    let hb = effect_h(b, &s);
                    assert!((&ha * &hb).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn span_of_e_set_equals_sum_of_h_over_closure() {
        let tol = Tol::default();
        let s = FactorSpace::new(vec![2, 2]).unwrap();
        let set = [t("10"), t("01")];
        let e = e_concat(&set, &s);
        let p = projector(&e, &tol).unwrap();
        let mut h_sum = Mat::zeros(4, 4);
        for j in closure(set.iter(), 2) {
            h_sum += effect_h(&j, &s);
        }
        assert!((p - &h_sum).norm() < 1e-10);

        // And as spans: E_J vs concatenated H_j over the closure.
        let blocks: Vec<Mat> = closure(set.iter(), 2)
            .into_iter()
            .map(|j| effect_h(&j, &s))
            .collect();
        let refs: Vec<&Mat> = blocks.iter().collect();
        assert!(subspace_equal(&e, &hcat(&refs), &tol).unwrap());
    }

    #[test]
    fn incidence_basics() {
        let s = space2x2();
        let d = Design::from_cell_counts(s.clone(), vec![1, 1, 1, 1]).unwrap();
        assert_eq!(d.incidence_matrix(), Mat::identity(4, 4));

        let d = Design::from_cell_counts(s, vec![2, 1, 1, 1]).unwrap();
        let k = d.incidence_matrix();
        assert_eq!(k.shape(), (5, 4));
        assert_eq!(k.column(0).sum(), 2.0);
        for r in 0..5 {
            assert_eq!(k.row(r).sum(), 1.0);
        }
    }

    #[test]
    fn incidence_zero_columns_for_empty_cells() {
        // 3×3 with an empty diagonal.
        let s = FactorSpace::new(vec![3, 3]).unwrap();
        let counts: Vec<usize> = (0..9).map(|c| if c % 4 == 0 { 0 } else { 1 }).collect();
        let d = Design::from_cell_counts(s, counts).unwrap();
        let k = d.incidence_matrix();
        assert_eq!(k.shape(), (6, 9));
        for diag in [0, 4, 8] {
            assert_eq!(k.column(diag).sum(), 0.0);
        }
    }

    #[test]
    fn design_rejects_bad_cell_index() {
        let s = space2x2();
        assert!(Design::new(s, vec![0, 4]).is_err());
    }

    #[test]
    fn model_matrix_single_intercept_part() {
        let s = space2x2();
        let d = Design::from_cell_counts(s, vec![1, 1, 1, 1]).unwrap();
        let spec = ModelSpec::single_part(2, vec![t("00")]).unwrap();
        let x = model_matrix(&d, &spec, &Covariates::new()).unwrap();
        assert_eq!(x.shape(), (4, 1));
        assert!(x.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn model_matrix_with_covariate_part() {
        let s = space2x2();
        let d = Design::from_cell_counts(s, vec![1, 1, 1, 1]).unwrap();
        let spec = ModelSpec::new(
            2,
            vec![
                CovariatePart::new(None, EffectTuple::all(2)).unwrap(),
                CovariatePart::new(
                    Some("x1".into()),
                    vec![t("00"), t("10"), t("01")],
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let mut covs = Covariates::new();
        covs.insert("x1".into(), vec![0.5, -1.0, 2.0, 0.0]);
        let x = model_matrix(&d, &spec, &covs).unwrap();
        // 1 + 2 + 2 + 4 columns for part 0, then 1 + 2 + 2 for x1.
        assert_eq!(x.shape(), (4, 14));
        // Covariate part block starts at column 9; its first column is x itself.
        for r in 0..4 {
            assert_eq!(x[(r, 9)], covs["x1"][r]);
        }

        // Covariate identically zero in a cell zeroes that cell's column of K_i.
        let k0 = d.incidence_matrix();
        let ki = part_incidence(&k0, spec.part(1), &covs).unwrap();
        assert_eq!(ki.column(3).sum(), 0.0);

        // Missing covariate is an input error.
        assert!(model_matrix(&d, &spec, &Covariates::new()).is_err());
    }

    #[test]
    fn model_spec_validation() {
        assert!(CovariatePart::new(None, vec![]).is_err());
        assert!(CovariatePart::new(None, vec![t("10"), t("10")]).is_err());
        let p0 = CovariatePart::new(None, vec![t("00")]).unwrap();
        let px = CovariatePart::new(Some("x".into()), vec![t("00")]).unwrap();
        assert!(ModelSpec::new(2, vec![px.clone()]).is_err());
        assert!(ModelSpec::new(2, vec![p0.clone(), px.clone(), px.clone()]).is_err());
        assert!(ModelSpec::new(2, vec![p0, px]).is_ok());
    }
}
