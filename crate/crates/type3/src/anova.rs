//! ANOVA tables and per-effect estimability reports.

use std::fmt;

use crate::design::{
    e_concat, model_matrix, part_incidence, Covariates, Design, EffectTuple, ModelSpec,
};
use crate::dist::f_upper_tail;
use crate::engine::{build_context, target_effect, EffectContext};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_anchored, hcat, intersect_bases, null_space, orthonormal_basis, Basis, Col, Mat, Tol,
};

/// Which sum-of-squares construction a table row reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsMethod {
    Type2,
    Type3Star,
    /// Restricted-model SS for the estimable part of the target ANOVA
    /// effect only (0 df when none of it is estimable).
    AnovaEstimable,
}

impl SsMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SsMethod::Type2 => "type2",
            SsMethod::Type3Star => "type3star",
            SsMethod::AnovaEstimable => "anova-estimable",
        }
    }
}

impl fmt::Display for SsMethod {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        w.write_str(self.as_str())
    }
}

impl std::str::FromStr for SsMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "type2" => Ok(SsMethod::Type2),
            "type3star" => Ok(SsMethod::Type3Star),
            "anova-estimable" => Ok(SsMethod::AnovaEstimable),
            other => Err(Error::input(format!(
                "unknown method {other}; expected type2, type3star, or anova-estimable"
            ))),
        }
    }
}

/// Human-readable label for an effect: factor names of the set bits joined
/// by `:`, prefixed by the covariate name for covariate parts.
pub fn effect_label(
    covariate: Option<&str>,
    tuple: &EffectTuple,
    factor_names: &[String],
) -> String {
    let factors: Vec<&str> = factor_names
        .iter()
        .enumerate()
        .filter(|(k, _)| tuple.bit(*k))
        .map(|(_, name)| name.as_str())
        .collect();
    match (covariate, factors.is_empty()) {
        (None, true) => "1".to_string(),
        (None, false) => factors.join(":"),
        (Some(cov), true) => cov.to_string(),
        (Some(cov), false) => format!("{cov}:{}", factors.join(":")),
    }
}

/// One effect row of an ANOVA table.
#[derive(Debug, Clone)]
pub struct AnovaRow {
    pub label: String,
    pub part_index: usize,
    pub tuple: EffectTuple,
    pub method: SsMethod,
    pub ss: f64,
    pub df: usize,
    pub estimable_df: usize,
    pub lagniappe_df: usize,
    pub f_stat: Option<f64>,
    pub p_value: Option<f64>,
}

/// An assembled ANOVA table with its error line.
#[derive(Debug, Clone)]
pub struct AnovaTable {
    pub method: SsMethod,
    pub rows: Vec<AnovaRow>,
    pub sse: f64,
    pub df_error: usize,
    pub sigma2_hat: Option<f64>,
    pub warnings: Vec<String>,
}

/// F statistic and upper-tail p-value for one SS against the error line.
pub fn f_test(ss: f64, df: usize, sse: f64, df_error: usize) -> Result<(f64, f64)> {
    if df == 0 || df_error == 0 {
        return Err(Error::input("F test needs positive numerator and error df"));
    }
    if !(sse > 0.0) {
        return Err(Error::input("F test needs a positive error sum of squares"));
    }
    let f = (ss / df as f64) / (sse / df_error as f64);
    let p = f_upper_tail(f, df as f64, df_error as f64);
    Ok((f, p))
}

/// β-space hypothesis matrix expressing contrasts `C'η_p = 0` on the cells
/// of part `p`: zero blocks for other parts, `E_{J_p}' C` for part `p`.
fn lift_contrasts_to_beta(
    spec: &ModelSpec,
    design: &Design,
    part_index: usize,
    contrasts: &Basis,
) -> Mat {
    let space = design.space();
    let total_cols: usize = spec
        .parts()
        .iter()
        .map(|p| e_concat(p.effects(), space).ncols())
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let mut g = Mat::zeros(total_cols, contrasts.rank());
    let mut at = 0;
    for (i, part) in spec.parts().iter().enumerate() {
        let e = e_concat(part.effects(), space);
        if i == part_index {
            g.view_mut((at, 0), (e.ncols(), contrasts.rank()))
                .copy_from(&(e.transpose() * contrasts.vectors()));
        }
        at += e.ncols();
    }
    g
}

/// Assemble the ANOVA table for a model: one row per effect per part
/// (part 0's intercept suppressed unless `include_intercept`), plus the
/// error line `SSE` on `n - rank(X)` degrees of freedom.
#[allow(clippy::too_many_arguments)]
pub fn build_table(
    y: &Col,
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
    factor_names: &[String],
    method: SsMethod,
    tol: &Tol,
    include_intercept: bool,
) -> Result<AnovaTable> {
    if y.len() != design.n() {
        return Err(Error::Dimension(format!(
            "response length {} does not match {} observations",
            y.len(),
            design.n()
        )));
    }
    let x = model_matrix(design, spec, covariates)?;
    let x_basis = orthonormal_basis(&x, tol)?;
    let resid = y - x_basis.vectors() * (x_basis.vectors().transpose() * y);
    let sse = resid.norm_squared();
    let df_error = design.n() - x_basis.rank();
    let sigma2_hat = if df_error > 0 {
        Some(sse / df_error as f64)
    } else {
        None
    };

    let mut warnings = Vec::new();
    if df_error == 0 {
        warnings.push("zero error degrees of freedom: F statistics and p-values omitted".into());
    }

    let mut rows = Vec::new();
    for (part_index, part) in spec.parts().iter().enumerate() {
        for tuple in part.effects() {
            if part_index == 0 && tuple.is_intercept() && !include_intercept {
                continue;
            }
            let ctx = build_context(design, spec, covariates, part_index, tuple, tol)?;
            let label = effect_label(part.covariate.as_deref(), tuple, factor_names);
            let row = build_row(
                y, design, spec, covariates, &ctx, method, label, part_index, tuple, sse,
                df_error, tol,
            )?;
            rows.push(row);
        }
    }

    Ok(AnovaTable {
        method,
        rows,
        sse,
        df_error,
        sigma2_hat,
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_row(
    y: &Col,
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
    ctx: &EffectContext,
    method: SsMethod,
    label: String,
    part_index: usize,
    tuple: &EffectTuple,
    sse: f64,
    df_error: usize,
    tol: &Tol,
) -> Result<AnovaRow> {
    let target = target_effect(ctx.part_effects(), tuple, design.space())?;
    let split = ctx.estimable_split(&target)?;
    let (ss, df, est_df, lag_df) = match method {
        SsMethod::Type3Star => {
            let r = ctx.type3_ss(y)?;
            (r.ss, r.df, r.estimable_df, r.lagniappe_df)
        }
        SsMethod::Type2 => {
            let (ss, df) = ctx.type2_ss(y)?;
            (ss, df, split.estimable_df, df - split.estimable_df)
        }
        SsMethod::AnovaEstimable => {
            if split.estimable_df == 0 {
                (0.0, 0, 0, 0)
            } else {
                let g = lift_contrasts_to_beta(spec, design, part_index, &split.estimable_basis);
                let n_basis = null_space(&g.transpose(), tol);
                let x = model_matrix(design, spec, covariates)?;
                let x_restricted = &x * n_basis.vectors();
                let (ss, df) = crate::engine::rmfm_ss(y, &x, &x_restricted, tol)?;
                (ss, df, df, 0)
            }
        }
    };
    let (f_stat, p_value) = if df > 0 && df_error > 0 && sse > 0.0 {
        let (f, p) = f_test(ss, df, sse, df_error)?;
        (Some(f), Some(p))
    } else {
        (None, None)
    };
    Ok(AnovaRow {
        label,
        part_index,
        tuple: tuple.clone(),
        method,
        ss,
        df,
        estimable_df: est_df,
        lagniappe_df: lag_df,
        f_stat,
        p_value,
    })
}

/// Per-effect estimability summary plus whole-design diagnostics.
#[derive(Debug, Clone)]
pub struct EffectEstimability {
    pub label: String,
    pub part_index: usize,
    pub tuple: EffectTuple,
    /// The ANOVA effects pooled into the target.
    pub target_set: Vec<EffectTuple>,
    /// Rank of the target-effect projector.
    pub target_df: usize,
    pub tested_df: usize,
    pub estimable_df: usize,
    pub lagniappe_df: usize,
}

/// Diagnostics over one covariate part's tested spans.
#[derive(Debug, Clone)]
pub struct PartDiagnostics {
    pub part_index: usize,
    pub covariate: Option<String>,
    /// Ranks of pairwise intersections of the tested spans (labels refer
    /// to effect rows of this part).
    pub pairwise_meets: Vec<(String, String, usize)>,
    /// Dimension of the full contrast space available on this part.
    pub contrast_df: usize,
    /// Rank of the union of the tested spans.
    pub accounted_df: usize,
    pub unaccounted_df: usize,
    /// Basis of the unaccounted directions.
    pub residual_basis: Basis,
}

#[derive(Debug, Clone)]
pub struct EstimabilityReport {
    pub effects: Vec<EffectEstimability>,
    pub parts: Vec<PartDiagnostics>,
    /// False when covariate parts overlap, in which case tested spans (and
    /// the diagnostics that need them) are unavailable.
    pub contrasts_available: bool,
}

/// Summarize, for every effect, how much of its target is estimable and
/// how much of the tested space is lagniappe; report per-part span
/// diagnostics (pairwise meets, unaccounted contrast directions).
pub fn estimability_report(
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
    factor_names: &[String],
    tol: &Tol,
) -> Result<EstimabilityReport> {
    let space = design.space();
    let k0 = design.incidence_matrix();
    let mut effects = Vec::new();
    let mut parts = Vec::new();
    let mut contrasts_available = true;

    for (part_index, part) in spec.parts().iter().enumerate() {
        let mut labels = Vec::new();
        let mut tested_spans: Vec<Basis> = Vec::new();
        for tuple in part.effects() {
            if part_index == 0 && tuple.is_intercept() {
                continue;
            }
            let ctx = build_context(design, spec, covariates, part_index, tuple, tol)?;
            let target = target_effect(part.effects(), tuple, space)?;
            let split = ctx.estimable_split(&target)?;
            let label = effect_label(part.covariate.as_deref(), tuple, factor_names);
            let tested_df = ctx.type3_df()?;
            effects.push(EffectEstimability {
                label: label.clone(),
                part_index,
                tuple: tuple.clone(),
                target_set: target.j_star_set.clone(),
                target_df: target
                    .j_star_set
                    .iter()
                    .map(|j| crate::design::effect_h_rank(j, space))
                    .sum(),
                tested_df,
                estimable_df: split.estimable_df,
                lagniappe_df: split.lagniappe_df,
            });
            match ctx.tested_eta_contrasts() {
                Ok(basis) => {
                    labels.push(label);
                    tested_spans.push(basis);
                }
                Err(_) => contrasts_available = false,
            }
        }
        if !contrasts_available {
            continue;
        }

        let mut pairwise = Vec::new();
        for i in 0..tested_spans.len() {
            for j in i + 1..tested_spans.len() {
                let meet = intersect_bases(&tested_spans[i], &tested_spans[j], tol);
                pairwise.push((labels[i].clone(), labels[j].clone(), meet.rank()));
            }
        }

        // Full contrast space on this part: everything reachable within
        // the part's model span, minus the overall-mean direction when the
        // part's model contains the intercept (whose row is suppressed).
        let ki = part_incidence(&k0, part, covariates)?;
        let e_part = e_concat(part.effects(), space);
        let p_e = basis_anchored(&e_part, tol, 0.0).projector();
        let reach = &p_e * ki.transpose();
        let reach_basis = basis_anchored(&reach, tol, 1.0);
        let has_intercept = part_index == 0
            && crate::design::closure(part.effects().iter(), space.f())
                .contains(&EffectTuple::intercept(space.f()));
        let full_space = if has_intercept {
            let a = space.a_star();
            let centering = Mat::identity(a, a) - Mat::from_element(a, a, 1.0 / a as f64);
            let centering_basis = basis_anchored(&centering, tol, 1.0);
            intersect_bases(&reach_basis, &centering_basis, tol)
        } else {
            reach_basis
        };

        let union = if tested_spans.is_empty() {
            Basis::empty(space.a_star())
        } else {
            let mats: Vec<&Mat> = tested_spans.iter().map(|b| b.vectors()).collect();
            basis_anchored(&hcat(&mats), tol, 1.0)
        };
        let residual_basis = basis_anchored(&union.residual(full_space.vectors()), tol, 1.0);
        parts.push(PartDiagnostics {
            part_index,
            covariate: part.covariate.clone(),
            pairwise_meets: pairwise,
            contrast_df: full_space.rank(),
            accounted_df: union.rank(),
            unaccounted_df: full_space.rank() - union.rank().min(full_space.rank()),
            residual_basis,
        });
    }

    Ok(EstimabilityReport {
        effects,
        parts,
        contrasts_available,
    })
}

/// Tested (or estimable-part) contrast bases per effect, for rendering.
#[derive(Debug, Clone)]
pub struct EffectContrasts {
    pub label: String,
    pub part_index: usize,
    pub tuple: EffectTuple,
    pub df: usize,
    pub estimable_df: usize,
    pub lagniappe_df: usize,
    pub basis: Basis,
    pub decomposition: Vec<std::collections::BTreeMap<EffectTuple, f64>>,
}

/// Contrast bases for every effect row under the given method:
/// the tested span for `type3star`, the Type II analogue for `type2`, and
/// the estimable part of the target for `anova-estimable`.
pub fn effect_contrasts(
    design: &Design,
    spec: &ModelSpec,
    covariates: &Covariates,
    factor_names: &[String],
    method: SsMethod,
    tol: &Tol,
) -> Result<Vec<EffectContrasts>> {
    let space = design.space();
    let mut out = Vec::new();
    for (part_index, part) in spec.parts().iter().enumerate() {
        for tuple in part.effects() {
            if part_index == 0 && tuple.is_intercept() {
                continue;
            }
            let ctx = build_context(design, spec, covariates, part_index, tuple, tol)?;
            let target = target_effect(part.effects(), tuple, space)?;
            let split = ctx.estimable_split(&target)?;
            let basis = match method {
                SsMethod::Type3Star => ctx.tested_eta_contrasts()?,
                SsMethod::Type2 => {
                    // Same construction, with the Type II projector.
                    let x01 = hcat(&[ctx.x0(), ctx.x1()]);
                    let p01 = basis_anchored(&x01, tol, 0.0).projector();
                    let p0 = orthonormal_basis(ctx.x0(), tol)?.projector();
                    let p2 = p01 - p0;
                    let e_part = e_concat(ctx.part_effects(), space);
                    let p_e = basis_anchored(&e_part, tol, 0.0).projector();
                    let m = &p_e * (ctx.part_k().transpose() * p2);
                    basis_anchored(&m, tol, 1.0)
                }
                SsMethod::AnovaEstimable => split.estimable_basis.clone(),
            };
            let decomposition = (0..basis.rank())
                .map(|i| crate::engine::contrast_decomposition(&basis.column(i), space))
                .collect::<Result<Vec<_>>>()?;
            out.push(EffectContrasts {
                label: effect_label(part.covariate.as_deref(), tuple, factor_names),
                part_index,
                tuple: tuple.clone(),
                df: basis.rank(),
                estimable_df: split.estimable_df,
                lagniappe_df: split.lagniappe_df,
                basis,
                decomposition,
            });
        }
    }
    Ok(out)
}
