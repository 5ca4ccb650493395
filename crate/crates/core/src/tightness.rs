//! Rank-1 detection and solution extraction from solved Gram matrices,
//! collinearity measurement, the closed-form two-stage projection value,
//! the exact single-neuron bound, sufficient-condition checking per case,
//! and stationarity/complementarity residuals for the ellipsoid case.

use crate::linalg::{dot, eig_sym, norm2, numeric_rank, SymMat};
use crate::network::{
    check_assumptions, normalize_diagonal_weight, InputSet, ReluNetwork, SafetySpec, TightnessCase,
};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TightnessError {
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),
    #[error("condition not met: {0}")]
    ConditionNotMet(String),
}

/// Outcome ladder. The sufficient conditions are not necessary, so an
/// instance failing them may still be tight and must not be reported loose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedTight,
    NumericallyTight,
    GapDetected,
    Unknown,
}

/// Per-direction tightness analysis of a solved instance.
#[derive(Debug, Clone, Serialize)]
pub struct TightnessReport {
    pub direction_index: usize,
    pub case: TightnessCase,
    pub eigen_spectrum: Vec<f64>,
    pub numeric_rank: usize,
    pub extracted_x: Vec<f64>,
    pub gram_residual: f64,
    pub collinearity_residual: f64,
    pub d_sdp: f64,
    pub d_oracle: Option<f64>,
    /// |d_sdp − d_oracle| / (1 + |d_sdp|)
    pub oracle_gap: Option<f64>,
    pub condition_flags: BTreeMap<String, bool>,
    pub verdict: Verdict,
    pub kkt: Option<KktReport>,
}

#[derive(Debug, Clone)]
pub struct Rank1Extraction {
    /// First column of G below the corner.
    pub x: Vec<f64>,
    /// ‖G[1:,1:] − xxᵀ‖_F
    pub gram_residual: f64,
    pub rank: usize,
    pub spectrum: Vec<f64>,
}

/// Reads the candidate optimizer off a (near) rank-1 Gram matrix with unit
/// corner.
pub fn extract_rank1(g: &SymMat, rel_tol: f64) -> Result<Rank1Extraction, TightnessError> {
    if (g.get(0, 0) - 1.0).abs() > 1e-6 {
        return Err(TightnessError::InvalidGram(format!(
            "corner entry is {}, expected 1",
            g.get(0, 0)
        )));
    }
    let n = g.dim() - 1;
    let x: Vec<f64> = (0..n).map(|i| g.get(1 + i, 0)).collect();
    let mut resid2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = g.get(1 + i, 1 + j) - x[i] * x[j];
            resid2 += d * d;
        }
    }
    let eig = eig_sym(g).map_err(|e| TightnessError::InvalidGram(e.to_string()))?;
    Ok(Rank1Extraction {
        x,
        gram_residual: resid2.sqrt(),
        rank: numeric_rank(g, rel_tol),
        spectrum: eig.values,
    })
}

/// max_i (‖uⁱ‖ − |eᵀuⁱ|); zero exactly when every vector is collinear
/// with the unit vector e. Empty input gives zero.
pub fn collinearity_residual(vectors: &[Vec<f64>], e: &[f64]) -> f64 {
    debug_assert!((norm2(e) - 1.0).abs() <= 1e-9, "e must be a unit vector");
    vectors
        .iter()
        .map(|u| norm2(u) - dot(e, u).abs())
        .fold(0.0, f64::max)
}

/// Gram factor of a PSD matrix with unit corner, rotated so the corner
/// vector is the first coordinate axis. Returns (e, vectors) where
/// Gram(e, vectors…) reproduces G.
pub fn gram_factor_vectors(g: &SymMat) -> Result<(Vec<f64>, Vec<Vec<f64>>), TightnessError> {
    if (g.get(0, 0) - 1.0).abs() > 1e-6 {
        return Err(TightnessError::InvalidGram("corner entry must be 1".into()));
    }
    let n = g.dim();
    let eig = eig_sym(g).map_err(|e| TightnessError::InvalidGram(e.to_string()))?;
    // rows of Q·diag(sqrt(λ₊)) are Gram vectors
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| eig.vectors.get(i, k) * eig.values[k].max(0.0).sqrt())
                .collect()
        })
        .collect();
    // Householder sending the corner vector to e¹
    let v0 = &rows[0];
    let mut h = v0.clone();
    h[0] -= 1.0;
    let hn2 = dot(&h, &h);
    let reflect = |u: &[f64]| -> Vec<f64> {
        if hn2 <= 1e-28 {
            return u.to_vec();
        }
        let f = 2.0 * dot(&h, u) / hn2;
        u.iter().zip(&h).map(|(ui, hi)| ui - f * hi).collect()
    };
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let vectors = rows[1..].iter().map(|r| reflect(r)).collect();
    Ok((e1, vectors))
}

/// Value and minimizer of the second-stage projection problem in closed
/// form: the inner problem over u given an outer point z.
#[derive(Debug, Clone)]
pub struct TwoStageValue {
    pub phi_value: f64,
    pub argmin_u: Vec<f64>,
    pub stage1_argmin_v: Vec<f64>,
}

/// Closed-form projection value Φ(z) = ‖z − (b⁰ + x̂)e‖² with minimizer
/// u* = z − b⁰e, valid when x̂ ≥ −b⁰ and z is first-stage feasible
/// (eᵀz ≥ 0).
pub fn phi_closed_form(
    z: &[f64],
    e: &[f64],
    b0: f64,
    xhat: f64,
) -> Result<TwoStageValue, TightnessError> {
    if (norm2(e) - 1.0).abs() > 1e-9 {
        return Err(TightnessError::ConditionNotMet(
            "e must be a unit vector".into(),
        ));
    }
    if z.len() != e.len() {
        return Err(TightnessError::ConditionNotMet(
            "z and e dimensions differ".into(),
        ));
    }
    if xhat < -b0 - 1e-12 {
        return Err(TightnessError::ConditionNotMet(format!(
            "requires x̂ ≥ −b⁰, got x̂ = {xhat}, b⁰ = {b0}"
        )));
    }
    if dot(e, z) < -1e-12 {
        return Err(TightnessError::ConditionNotMet(
            "z is not first-stage feasible (eᵀz < 0)".into(),
        ));
    }
    let argmin_u: Vec<f64> = z.iter().zip(e).map(|(zi, ei)| zi - b0 * ei).collect();
    let shift = b0 + xhat;
    let phi_value: f64 = z
        .iter()
        .zip(e)
        .map(|(zi, ei)| {
            let d = zi - shift * ei;
            d * d
        })
        .sum();
    Ok(TwoStageValue {
        phi_value,
        argmin_u,
        stage1_argmin_v: z.to_vec(),
    })
}

/// Exact half-space offset for the scalar network max(0, x + b⁰) on a
/// closed interval, available when x̂ ≥ −b⁰. Equals the exact extreme of
/// the ReLU range in the direction c.
pub fn single_neuron_analytic(lo: f64, hi: f64, b0: f64, c: f64) -> Result<f64, TightnessError> {
    if !(lo <= hi) {
        return Err(TightnessError::ConditionNotMet("needs lo ≤ hi".into()));
    }
    if c == 0.0 {
        return Err(TightnessError::ConditionNotMet(
            "direction must be ±1".into(),
        ));
    }
    let xhat = 0.5 * (lo + hi);
    if xhat < -b0 - 1e-12 {
        return Err(TightnessError::ConditionNotMet(format!(
            "requires x̂ ≥ −b⁰, got x̂ = {xhat}, b⁰ = {b0}"
        )));
    }
    let w_lo = lo + b0;
    let w_hi = hi + b0;
    Ok(if c > 0.0 {
        w_lo.max(0.0)
    } else {
        -w_hi.max(0.0)
    })
}

/// Evaluates every structural sufficient condition for the selected case,
/// attempting the diagonal-weight reduction first in the rectangle case.
/// Numerical flags (observed duality gap) are appended by the caller.
///
/// Beyond the polytope/identity-layer/no-cuts assumptions, certification
/// requires the pre-activations at the input-set center to be nonnegative
/// (the scalar condition x̂ ≥ −b⁰ generalized componentwise), and in the
/// ellipsoid case an identity first layer. Random instances violating
/// either exhibit genuine relaxation gaps, so the weaker assumption set
/// alone must not certify.
pub fn check_condition(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &SafetySpec,
    case: TightnessCase,
    cuts_enabled: bool,
) -> BTreeMap<String, bool> {
    let mut flags = BTreeMap::new();
    let (net_eff, input_eff) = match case {
        TightnessCase::Rectangle => match normalize_diagonal_weight(net, input) {
            Ok(pair) => pair,
            Err(_) => (net.clone(), input.clone()),
        },
        _ => (net.clone(), input.clone()),
    };
    for check in check_assumptions(&net_eff, &input_eff, spec, case, cuts_enabled) {
        flags.insert(check.id, check.holds);
    }
    if case == TightnessCase::SingleNeuron {
        let ok = match (input, flags.get("single_neuron_structure")) {
            (InputSet::Interval { lo, hi }, Some(true)) => {
                let xhat = 0.5 * (lo + hi);
                let b0 = net.layers()[0].b[0];
                xhat >= -b0 - 1e-12
            }
            _ => false,
        };
        flags.insert("xhat_ge_minus_b0".to_string(), ok);
    } else {
        if case == TightnessCase::Ellipsoid {
            flags.insert(
                "first_layer_identity".to_string(),
                net_eff.first_layer_is_identity(1e-12),
            );
        }
        let center = match &input_eff {
            InputSet::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            InputSet::Rectangle { center, .. } | InputSet::Ellipsoid { center, .. } => {
                center.clone()
            }
        };
        let alive = if center.len() == net_eff.input_dim() && net_eff.depth() >= 1 {
            let mut w = net_eff.layers()[0].w.matvec(&center);
            for (wi, bi) in w.iter_mut().zip(&net_eff.layers()[0].b) {
                *wi += bi;
            }
            w.iter().all(|&v| v >= -1e-9)
        } else {
            false
        };
        flags.insert("center_preactivations_nonneg".to_string(), alive);
    }
    flags
}

/// The flag ids that must all hold for the case's theorem to apply.
pub fn required_condition_ids(case: TightnessCase) -> &'static [&'static str] {
    match case {
        TightnessCase::SingleNeuron => &[
            "single_neuron_structure",
            "input_closed_interval",
            "safety_set_polytope",
            "xhat_ge_minus_b0",
        ],
        TightnessCase::Ellipsoid => &[
            "safety_set_polytope",
            "last_layer_identity",
            "no_repeated_nonlinearity_cuts",
            "input_ellipsoid",
            "first_layer_identity",
            "center_preactivations_nonneg",
        ],
        TightnessCase::Rectangle => &[
            "safety_set_polytope",
            "last_layer_identity",
            "no_repeated_nonlinearity_cuts",
            "first_layer_identity",
            "input_rectangle",
            "center_preactivations_nonneg",
        ],
    }
}

pub fn theorem_precondition(case: TightnessCase, flags: &BTreeMap<String, bool>) -> bool {
    required_condition_ids(case)
        .iter()
        .all(|id| flags.get(*id).copied().unwrap_or(false))
}

/// Verdict ladder: a confirmed oracle gap dominates, a satisfied theorem
/// precondition with numeric rank 1 certifies, and rank-1 or a vanishing
/// gap without a theorem stays a numerical observation.
pub fn verdict(theorem_ok: bool, rank: usize, oracle_gap_rel: Option<f64>, tol: f64) -> Verdict {
    if let Some(gap) = oracle_gap_rel {
        if gap > 10.0 * tol {
            return Verdict::GapDetected;
        }
    }
    if theorem_ok && rank == 1 {
        return Verdict::CertifiedTight;
    }
    if rank == 1 || oracle_gap_rel.is_some_and(|g| g <= tol) {
        return Verdict::NumericallyTight;
    }
    Verdict::Unknown
}

/// Residuals of the second-stage optimality system at a scalarized
/// (collinear) solution of an ellipsoid instance.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub complementarity_value: f64,
    pub complementarity_either: f64,
    pub primal_feasibility: f64,
    pub multiplier_negativity: f64,
    pub max_residual: f64,
}

/// Evaluates the stationarity, complementary-slackness, and feasibility
/// residuals for given multipliers (ν, λ). Reports residuals regardless of
/// their size.
pub fn ellipsoid_kkt_check(
    u: &[f64],
    v: &[f64],
    nu: &[f64],
    lambda: &[f64],
    net: &ReluNetwork,
    input: &InputSet,
) -> Result<KktReport, TightnessError> {
    let (center, radius) = match input {
        InputSet::Ellipsoid { center, radius } => (center, radius),
        _ => {
            return Err(TightnessError::ConditionNotMet(
                "KKT check applies to ellipsoid inputs".into(),
            ))
        }
    };
    if net.depth() != 1 {
        return Err(TightnessError::ConditionNotMet(
            "KKT check applies to single-layer networks".into(),
        ));
    }
    let w0 = &net.layers()[0].w;
    let b0 = &net.layers()[0].b;
    let n0 = net.input_dim();
    let n1 = net.hidden_dim(0);
    if u.len() != n0 || v.len() != n1 || nu.len() != n1 || lambda.len() != n1 {
        return Err(TightnessError::ConditionNotMet(
            "dimension mismatch in KKT data".into(),
        ));
    }

    let mut w = w0.matvec(u);
    for (wi, bi) in w.iter_mut().zip(b0) {
        *wi += bi;
    }

    let mut stationarity = 0.0_f64;
    for j in 0..n0 {
        let mut r = u[j] - center[j];
        for i in 0..n1 {
            r += 0.5 * w0.get(i, j) * (nu[i] - lambda[i] * v[i]);
        }
        stationarity = stationarity.max(r.abs());
    }

    let mut comp_value = 0.0_f64;
    let mut comp_either = 0.0_f64;
    let mut pfeas = 0.0_f64;
    for i in 0..n1 {
        comp_value = comp_value.max((nu[i] * (w[i] - v[i])).abs());
        comp_either = comp_either.max((lambda[i] * (v[i] * v[i] - w[i] * v[i])).abs());
        pfeas = pfeas
            .max(w[i] - v[i])
            .max(-v[i])
            .max(v[i] * v[i] - w[i] * v[i]);
    }
    let dist2: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    pfeas = pfeas.max(dist2 - radius * radius).max(0.0);

    let neg = nu.iter().chain(lambda).fold(0.0_f64, |acc, &m| acc.max(-m));

    let max_residual = stationarity
        .max(comp_value)
        .max(comp_either)
        .max(pfeas)
        .max(neg);
    Ok(KktReport {
        stationarity,
        complementarity_value: comp_value,
        complementarity_either: comp_either,
        primal_feasibility: pfeas,
        multiplier_negativity: neg,
        max_residual,
    })
}

/// Nonnegative least squares by Lawson-Hanson active sets: minimizes
/// ‖A m − b‖ over m ≥ 0. Sized for a handful of unknowns.
pub fn nnls(a: &crate::linalg::Mat, b: &[f64]) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    assert_eq!(b.len(), rows);
    let mut x = vec![0.0_f64; cols];
    let mut passive = vec![false; cols];
    let tol = 1e-12 * (1.0 + norm2(b));

    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = a.matvec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let solve_passive = |passive: &[bool]| -> Option<Vec<f64>> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        if idx.is_empty() {
            return Some(vec![0.0; cols]);
        }
        let k = idx.len();
        let mut ata = SymMat::zeros(k);
        let mut atb = vec![0.0; k];
        for (p, &jp) in idx.iter().enumerate() {
            let col_p = a.column(jp);
            atb[p] = dot(&col_p, b);
            for (q, &jq) in idx.iter().enumerate().take(p + 1) {
                ata.set(p, q, dot(&col_p, &a.column(jq)));
            }
        }
        let l = crate::linalg::chol_psd(&ata, 1e-12 * (1.0 + ata.frob_norm())).ok()?;
        let z = crate::linalg::chol_solve(&l, &atb);
        let mut full = vec![0.0; cols];
        for (p, &jp) in idx.iter().enumerate() {
            full[jp] = z[p];
        }
        Some(full)
    };

    for _ in 0..3 * cols.max(1) {
        let r = residual(&x);
        let grad = a.tr_matvec(&r);
        let candidate = (0..cols)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].partial_cmp(&grad[j]).unwrap());
        let j = match candidate {
            Some(j) => j,
            None => break,
        };
        passive[j] = true;
        loop {
            let z = match solve_passive(&passive) {
                Some(z) => z,
                None => {
                    passive[j] = false;
                    break;
                }
            };
            if (0..cols).all(|k| !passive[k] || z[k] > 0.0) {
                x = z;
                break;
            }
            // shrink toward the infeasible coordinates
            let mut alpha = f64::INFINITY;
            for k in 0..cols {
                if passive[k] && z[k] <= 0.0 && x[k] - z[k] > 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            if !alpha.is_finite() {
                x = z.iter().map(|v| v.max(0.0)).collect();
                break;
            }
            for k in 0..cols {
                if passive[k] {
                    x[k] += alpha * (z[k] - x[k]);
                    if x[k] <= tol {
                        x[k] = 0.0;
                        passive[k] = false;
                    }
                }
            }
        }
    }
    x
}

/// Fits second-stage multipliers (ν, λ) ≥ 0 to the stationarity system at a
/// scalarized solution, honoring complementary slackness on the value
/// constraints. Used to feed [`ellipsoid_kkt_check`].
pub fn fit_stage2_multipliers(
    u: &[f64],
    v: &[f64],
    net: &ReluNetwork,
    input: &InputSet,
) -> Result<(Vec<f64>, Vec<f64>), TightnessError> {
    let center = match input {
        InputSet::Ellipsoid { center, .. } => center,
        _ => {
            return Err(TightnessError::ConditionNotMet(
                "multiplier fit applies to ellipsoid inputs".into(),
            ))
        }
    };
    let w0 = &net.layers()[0].w;
    let b0 = &net.layers()[0].b;
    let n0 = net.input_dim();
    let n1 = net.hidden_dim(0);
    let mut w = w0.matvec(u);
    for (wi, bi) in w.iter_mut().zip(b0) {
        *wi += bi;
    }
    // generous activation window: certificate points carry extraction
    // noise around kinks, and a wrongly excluded column shows up as a
    // large stationarity residual while a wrongly included one only
    // contributes noise × multiplier to the complementarity residual
    let act_tol = 1e-4 * (1.0 + norm2(&w) + norm2(v));

    // stationarity: Σ_i W_ij (λ_i v_i − ν_i)/2 = u_j − x̂_j
    // unknown columns: ν_i (value-active only) then λ_i (always admissible:
    // the either-constraint is an identity at true ReLU points)
    let mut col_kinds = Vec::new();
    for i in 0..n1 {
        if (w[i] - v[i]).abs() <= act_tol {
            col_kinds.push((i, true)); // ν_i
        }
    }
    for i in 0..n1 {
        col_kinds.push((i, false)); // λ_i
    }
    let a = crate::linalg::Mat::from_fn(n0, col_kinds.len(), |j, k| {
        let (i, is_nu) = col_kinds[k];
        if is_nu {
            -0.5 * w0.get(i, j)
        } else {
            0.5 * w0.get(i, j) * v[i]
        }
    });
    let rhs: Vec<f64> = (0..n0).map(|j| u[j] - center[j]).collect();
    let m = nnls(&a, &rhs);
    let mut nu = vec![0.0; n1];
    let mut lambda = vec![0.0; n1];
    for (k, &(i, is_nu)) in col_kinds.iter().enumerate() {
        if is_nu {
            nu[i] = m[k];
        } else {
            lambda[i] = m[k];
        }
    }
    Ok((nu, lambda))
}
