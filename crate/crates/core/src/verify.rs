//! Verification pipelines: per-direction half-space offsets from the
//! DeepSDP dual with primal cross-checks, certificate extraction via a
//! second solve over the optimal face, oracle comparison, condition flags,
//! and machine-readable reports.

use crate::conic::{solve, ConicSolution, SolveOptions, SolveStatus};
use crate::formulation::{
    assemble_primal, build_deepsdp_dual, primal_parts, FormulationError, FormulationOptions,
    LiftedConstraint, PrimalParts, Sense,
};
use crate::linalg::{dot, SymMat};
use crate::network::{InputSet, NetworkError, ReluNetwork, SafetySpec, TightnessCase};
use crate::oracle::{exact_minimize, sample_bound, OracleError, OracleResult, OracleStatus};
use crate::tightness::{
    check_condition, collinearity_residual, ellipsoid_kkt_check, extract_rank1,
    fit_stage2_multipliers, gram_factor_vectors, theorem_precondition, verdict, KktReport,
    TightnessError, TightnessReport, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tightness(#[from] TightnessError),
    #[error("solver failed on {context}: status {status:?}")]
    Solver {
        context: String,
        status: SolveStatus,
    },
}

/// Options shared by every pipeline entry point.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub cuts: bool,
    /// interior-point stopping tolerance
    pub tol: f64,
    /// relative eigenvalue threshold for numeric rank
    pub rank_tol: f64,
    /// relative oracle-gap tolerance feeding the verdict ladder
    pub gap_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub pattern_cap: usize,
    pub trace: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            cuts: false,
            tol: 1e-8,
            rank_tol: 1e-6,
            gap_tol: 1e-6,
            samples: 10_000,
            seed: 0,
            pattern_cap: crate::oracle::DEFAULT_PATTERN_CAP,
            trace: false,
        }
    }
}

impl PipelineOptions {
    fn solve_opts(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: 200,
            trace: self.trace,
        }
    }
}

/// Per-direction verification outcome. Objective values are on the conic
/// 2cᵀy scale; `d_star` is the half-space offset (half the optimum).
#[derive(Debug, Clone, Serialize)]
pub struct VerificationResult {
    pub direction_index: usize,
    pub direction: Vec<f64>,
    pub d_star: f64,
    /// {y | cᵀy ≥ d_star}
    pub halfspace: Halfspace,
    pub primal_obj: f64,
    /// maximization-form dual value 2d*, when the explicit dual was built
    pub dual_obj: Option<f64>,
    /// |primal − dual| / (1 + |primal|), when both solved
    pub duality_gap: Option<f64>,
    pub primal_status: SolveStatus,
    pub dual_status: Option<SolveStatus>,
    /// smallest sampled value of the certificate quadratic form
    /// 2(cᵀf(x) − d*); nonnegative up to tolerance when sound
    pub soundness_margin: f64,
    pub soundness_ok: bool,
    pub iterations: usize,
    /// solver iteration traces, populated when tracing is on; kept out of
    /// serialized reports
    #[serde(skip)]
    pub traces: Vec<SolverTrace>,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub stage: &'static str,
    pub records: Vec<crate::conic::TraceRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Halfspace {
    pub c: Vec<f64>,
    pub d: f64,
}

fn require_usable(sol: &ConicSolution, tol: f64, context: &str) -> Result<(), PipelineError> {
    let ok = match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::MaxIter | SolveStatus::NumericalFail => {
            let loose = 100.0 * tol;
            sol.residuals.primal_feas <= loose
                && sol.residuals.dual_feas <= loose
                && sol.residuals.gap <= loose
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Solver {
            context: context.to_string(),
            status: sol.status,
        })
    }
}

/// Picks the tightness case matching the instance shape.
pub fn select_case(net: &ReluNetwork, input: &InputSet) -> Option<TightnessCase> {
    if net.depth() != 1 {
        return None;
    }
    match input {
        InputSet::Interval { .. } if net.input_dim() == 1 && net.total_neurons() == 1 => {
            Some(TightnessCase::SingleNeuron)
        }
        InputSet::Ellipsoid { .. } => Some(TightnessCase::Ellipsoid),
        InputSet::Rectangle { .. } | InputSet::Interval { .. } => Some(TightnessCase::Rectangle),
    }
}

fn input_center(input: &InputSet) -> Vec<f64> {
    match input {
        InputSet::Interval { lo, hi } => vec![0.5 * (lo + hi)],
        InputSet::Rectangle { center, .. } => center.clone(),
        InputSet::Ellipsoid { center, .. } => center.clone(),
    }
}

/// Linear functional selecting, among optimal Gram matrices, the one whose
/// factor vectors minimize Σ_j ‖u^j − x̂_j e‖² + Σ_i ‖v^i‖². This mirrors
/// the two-stage projection objective and steers the face solve toward the
/// collinear (rank-1) extreme point.
fn anchor_objective(dim: usize, n0: usize, center: &[f64]) -> SymMat {
    let mut a = SymMat::zeros(dim);
    for j in 0..n0 {
        a.set(1 + j, 1 + j, 1.0);
        a.set(0, 1 + j, -center[j]);
    }
    for k in (1 + n0)..dim {
        a.set(k, k, 1.0);
    }
    a
}

/// Second solve over a thin slice of the near-optimal set of the primal
/// relaxation, minimizing the anchored norm functional. The path-following
/// solver alone converges to the analytic center of the optimal face, which
/// has maximal rank; this face solve recovers the extreme rank-1 optimizer
/// that the tightness analysis certifies. The slice is pinned by an
/// equality row slightly above the optimum so it keeps a relative interior.
pub fn purified_gram(
    parts: &PrimalParts,
    input: &InputSet,
    primal_opt: f64,
    opts: &PipelineOptions,
) -> Result<(SymMat, ConicSolution), PipelineError> {
    let dim = parts.maps.lifted_dim();
    let eps_pin = 1e-7 * (1.0 + primal_opt.abs());
    let mut face_parts = parts.clone();
    face_parts.constraints.push(LiftedConstraint {
        matrix: parts.objective.clone(),
        sense: Sense::Eq,
        rhs: primal_opt + eps_pin,
        tag: "optimal_face_pin".into(),
    });
    face_parts.objective = anchor_objective(dim, parts.maps.n0, &input_center(input));
    let prob = assemble_primal(&face_parts);
    let sol = solve(&prob, &opts.solve_opts())?;
    require_usable(&sol, opts.tol, "optimal-face certificate solve")?;
    let mut g = sol.psd_value(0).clone();
    // the face solve may stop with a slightly drifted corner; rescale
    let corner = g.get(0, 0);
    if (corner - 1.0).abs() <= 1e-4 && corner > 0.0 {
        g = g.scale(1.0 / corner);
    }
    Ok((g, sol))
}

/// Solves one direction: dual offset (single-layer) with primal
/// cross-check, plus the sampled soundness margin.
pub fn verify_direction(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    direction_index: usize,
    opts: &PipelineOptions,
) -> Result<VerificationResult, PipelineError> {
    verify_inner(net, input, c, direction_index, opts).map(|(r, _, _)| r)
}

fn verify_inner(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    direction_index: usize,
    opts: &PipelineOptions,
) -> Result<(VerificationResult, PrimalParts, ConicSolution), PipelineError> {
    let form_opts = FormulationOptions { cuts: opts.cuts };
    let parts = primal_parts(net, input, c, form_opts)?;
    let primal = assemble_primal(&parts);
    let psol = solve(&primal, &opts.solve_opts())?;
    require_usable(&psol, opts.tol, "primal relaxation solve")?;
    let mut traces = Vec::new();
    if opts.trace {
        traces.push(SolverTrace {
            stage: "primal",
            records: psol.trace.clone(),
        });
    }

    let (dual_obj, dual_status, d_star, iterations) = if net.depth() == 1 {
        let dual = build_deepsdp_dual(net, input, c, form_opts)?;
        let dsol = solve(&dual, &opts.solve_opts())?;
        require_usable(&dsol, opts.tol, "dual solve")?;
        if opts.trace {
            traces.push(SolverTrace {
                stage: "dual",
                records: dsol.trace.clone(),
            });
        }
        let max_form = -dsol.primal_obj;
        (
            Some(max_form),
            Some(dsol.status),
            max_form / 2.0,
            psol.iterations + dsol.iterations,
        )
    } else {
        (None, None, psol.primal_obj / 2.0, psol.iterations)
    };

    let duality_gap = dual_obj.map(|d| (psol.primal_obj - d).abs() / (1.0 + psol.primal_obj.abs()));

    // sampled certificate soundness: the quadratic form 2(cᵀf(x) − d*)
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut margin = f64::INFINITY;
    for _ in 0..opts.samples {
        let x = input.sample(&mut rng);
        let y = net.forward(&x)?;
        margin = margin.min(2.0 * (dot(c, &y) - d_star));
    }
    if opts.samples == 0 {
        margin = 0.0;
    }

    let result = VerificationResult {
        direction_index,
        direction: c.to_vec(),
        d_star,
        halfspace: Halfspace {
            c: c.to_vec(),
            d: d_star,
        },
        primal_obj: psol.primal_obj,
        dual_obj,
        duality_gap,
        primal_status: psol.status,
        dual_status,
        soundness_margin: margin,
        soundness_ok: margin >= -1e-6,
        iterations,
        traces,
    };
    Ok((result, parts, psol))
}

/// Full per-direction analysis: verification, certificate extraction from
/// the purified Gram matrix, oracle gap, condition flags, verdict, and the
/// stationarity check on certified ellipsoid instances.
pub fn analyze_direction(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &SafetySpec,
    c: &[f64],
    direction_index: usize,
    opts: &PipelineOptions,
) -> Result<(VerificationResult, TightnessReport), PipelineError> {
    let case = select_case(net, input);

    // rectangle analysis runs on the diagonal-normalized instance
    let (net_a, input_a, _reduced) = match case {
        Some(TightnessCase::Rectangle) if !net.first_layer_is_identity(1e-12) => {
            match crate::network::normalize_diagonal_weight(net, input) {
                Ok((n, x)) => (n, x, true),
                Err(_) => (net.clone(), input.clone(), false),
            }
        }
        Some(TightnessCase::Rectangle) => {
            // interval instances analyzed under the rectangle case use the
            // box form so the generator family matches the case
            (net.clone(), input.to_rectangle(), false)
        }
        _ => (net.clone(), input.clone(), false),
    };

    let (result, parts, raw) = verify_inner(&net_a, &input_a, c, direction_index, opts)?;

    // reuse the raw optimal point when it is already an extreme (rank-1)
    // optimizer, otherwise run the face solve
    let raw_g = {
        let mut g = raw.psd_value(0).clone();
        let corner = g.get(0, 0);
        if (corner - 1.0).abs() <= 1e-4 && corner > 0.0 {
            g = g.scale(1.0 / corner);
        }
        g
    };
    let raw_extraction = extract_rank1(&raw_g, opts.rank_tol)?;
    let (g_star, extraction) = if raw_extraction.rank == 1 && raw_extraction.gram_residual <= 1e-6 {
        (raw_g, raw_extraction)
    } else {
        // a failed face solve downgrades the certificate to the raw
        // (max-rank) point instead of aborting the analysis
        match purified_gram(&parts, &input_a, result.primal_obj, opts) {
            Ok((g, _face_sol)) => {
                let ext = extract_rank1(&g, opts.rank_tol)?;
                (g, ext)
            }
            Err(_) => (raw_g, raw_extraction),
        }
    };
    let (e, vectors) = gram_factor_vectors(&g_star)?;
    let coll = collinearity_residual(&vectors, &e);

    let n = net_a.total_neurons();
    let oracle = if (n as u32) < 63 && (1u64 << n) as usize <= opts.pattern_cap {
        Some(exact_minimize(&net_a, &input_a, c, opts.pattern_cap)?)
    } else {
        None
    };
    let d_oracle = oracle
        .as_ref()
        .and_then(|o| (o.status == OracleStatus::Exact).then_some(o.opt_value / 2.0));
    let oracle_gap = d_oracle.map(|d| (result.d_star - d).abs() / (1.0 + result.d_star.abs()));

    let mut flags = match case {
        Some(case) => check_condition(&net_a, &input_a, spec, case, opts.cuts),
        None => Default::default(),
    };
    if let Some(gap) = result.duality_gap {
        flags.insert("lemma21_gap_within_tol".into(), gap <= opts.gap_tol);
    }
    let theorem_ok = case.is_some_and(|cs| theorem_precondition(cs, &flags));
    let v = verdict(theorem_ok, extraction.rank, oracle_gap, opts.gap_tol);

    let kkt = build_kkt_report(&net_a, &input_a, case, v, &extraction.x);

    let report = TightnessReport {
        direction_index,
        case: case.unwrap_or(TightnessCase::Rectangle),
        eigen_spectrum: extraction.spectrum,
        numeric_rank: extraction.rank,
        extracted_x: extraction.x,
        gram_residual: extraction.gram_residual,
        collinearity_residual: coll,
        d_sdp: result.d_star,
        d_oracle,
        oracle_gap,
        condition_flags: flags,
        verdict: v,
        kkt,
    };
    Ok((result, report))
}

fn build_kkt_report(
    net: &ReluNetwork,
    input: &InputSet,
    case: Option<TightnessCase>,
    v: Verdict,
    extracted: &[f64],
) -> Option<KktReport> {
    if case != Some(TightnessCase::Ellipsoid) || v != Verdict::CertifiedTight {
        return None;
    }
    let n0 = net.input_dim();
    let n1 = net.hidden_dim(0);
    if extracted.len() != n0 + n1 {
        return None;
    }
    let u = &extracted[..n0];
    let vv = &extracted[n0..];
    let (nu, lambda) = fit_stage2_multipliers(u, vv, net, input).ok()?;
    ellipsoid_kkt_check(u, vv, &nu, &lambda, net, input).ok()
}

/// Oracle-only run for one direction.
pub fn oracle_direction(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    opts: &PipelineOptions,
) -> Result<(OracleResult, f64), PipelineError> {
    let exact = exact_minimize(net, input, c, opts.pattern_cap)?;
    let sampled = sample_bound(net, input, c, opts.samples, opts.seed);
    Ok((exact, sampled))
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub per_direction_ms: Vec<f64>,
}

/// Report payload with the fixed top-level shape
/// {config, results, tightness, timings}.
#[derive(Debug, Clone, Serialize)]
pub struct Report<C: Serialize> {
    pub config: C,
    pub results: Vec<VerificationResult>,
    pub tightness: Vec<TightnessReport>,
    pub timings: Timings,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Verifies every direction of the spec, filling its solved offsets.
pub fn run_verify(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &mut SafetySpec,
    opts: &PipelineOptions,
) -> Result<(Vec<VerificationResult>, Timings), PipelineError> {
    let t0 = Instant::now();
    let mut per = Vec::new();
    let mut results = Vec::new();
    for i in 0..spec.directions.len() {
        let t = Instant::now();
        let c = spec.directions[i].clone();
        let r = verify_direction(net, input, &c, i, opts)?;
        spec.offsets[i] = Some(r.d_star);
        results.push(r);
        per.push(elapsed_ms(t));
    }
    Ok((
        results,
        Timings {
            total_ms: elapsed_ms(t0),
            per_direction_ms: per,
        },
    ))
}

/// Verifies and analyzes every direction: offsets, certificates, oracle
/// gaps, condition flags, and verdicts.
pub fn run_compare(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &mut SafetySpec,
    opts: &PipelineOptions,
) -> Result<(Vec<VerificationResult>, Vec<TightnessReport>, Timings), PipelineError> {
    let t0 = Instant::now();
    let mut per = Vec::new();
    let mut results = Vec::new();
    let mut reports = Vec::new();
    for i in 0..spec.directions.len() {
        let t = Instant::now();
        let c = spec.directions[i].clone();
        let (r, rep) = analyze_direction(net, input, spec, &c, i, opts)?;
        spec.offsets[i] = Some(r.d_star);
        results.push(r);
        reports.push(rep);
        per.push(elapsed_ms(t));
    }
    Ok((
        results,
        reports,
        Timings {
            total_ms: elapsed_ms(t0),
            per_direction_ms: per,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::network::Layer;

    fn opts() -> PipelineOptions {
        PipelineOptions::default()
    }

    #[test]
    fn verify_single_neuron_range() {
        let net = ReluNetwork::single_neuron(0.0);
        let input = InputSet::Interval { lo: -1.0, hi: 3.0 };
        let up = verify_direction(&net, &input, &[1.0], 0, &opts()).unwrap();
        assert!((up.d_star - 0.0).abs() <= 1e-6);
        assert!(up.duality_gap.unwrap() <= 1e-6);
        assert!(up.soundness_ok);
        let dn = verify_direction(&net, &input, &[-1.0], 1, &opts()).unwrap();
        assert!((dn.d_star + 3.0).abs() <= 1e-6);
        assert!(dn.soundness_ok);
    }

    #[test]
    fn purification_recovers_rank1_on_flat_face() {
        // φ on [−1, 3] attains its minimum on the whole segment [−1, 0],
        // so the path-following solve alone lands on a high-rank point of
        // the optimal face; the face solve must still certify rank 1.
        let net = ReluNetwork::single_neuron(0.0);
        let input = InputSet::Interval { lo: -1.0, hi: 3.0 };
        let spec = SafetySpec::new(vec![vec![1.0]]).unwrap();
        let (res, rep) = analyze_direction(&net, &input, &spec, &[1.0], 0, &opts()).unwrap();
        assert!((res.d_star - 0.0).abs() <= 1e-6);
        assert_eq!(rep.numeric_rank, 1, "spectrum: {:?}", rep.eigen_spectrum);
        assert!(rep.gram_residual <= 1e-5, "{}", rep.gram_residual);
        assert_eq!(rep.verdict, Verdict::CertifiedTight);
        assert!(rep.oracle_gap.unwrap() <= 1e-6);
        // extracted minimizer reproduces the optimum through the network
        let y = net.forward(&rep.extracted_x[..1]).unwrap();
        assert!((2.0 * y[0] - res.primal_obj).abs() <= 1e-5);
    }

    #[test]
    fn unique_optimum_certifies_directly() {
        let net = ReluNetwork::single_neuron(0.0);
        let input = InputSet::Interval { lo: 1.0, hi: 2.0 };
        let spec = SafetySpec::new(vec![vec![1.0]]).unwrap();
        let (res, rep) = analyze_direction(&net, &input, &spec, &[1.0], 0, &opts()).unwrap();
        assert!((res.d_star - 1.0).abs() <= 1e-6);
        assert_eq!(rep.numeric_rank, 1);
        assert_eq!(rep.verdict, Verdict::CertifiedTight);
        assert!((rep.extracted_x[0] - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn violated_condition_never_certifies() {
        let net = ReluNetwork::single_neuron(0.0);
        let input = InputSet::Interval { lo: -3.0, hi: 1.0 };
        let spec = SafetySpec::new(vec![vec![1.0]]).unwrap();
        let (_, rep) = analyze_direction(&net, &input, &spec, &[1.0], 0, &opts()).unwrap();
        assert!(!rep.condition_flags["xhat_ge_minus_b0"]);
        assert_ne!(rep.verdict, Verdict::CertifiedTight);
    }

    #[test]
    fn ellipsoid_identity_instance_certifies_with_kkt() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(2), vec![0.1, -0.2]).unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Ellipsoid {
            center: vec![0.5, 0.5],
            radius: 1.0,
        };
        let spec = SafetySpec::new(vec![vec![1.0, 1.0]]).unwrap();
        let c = [
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ];
        let (res, rep) = analyze_direction(&net, &input, &spec, &c, 0, &opts()).unwrap();
        assert_eq!(rep.verdict, Verdict::CertifiedTight, "{rep:?}");
        assert!(rep.oracle_gap.unwrap() <= 1e-6);
        let kkt = rep.kkt.expect("certified ellipsoid instance carries KKT");
        assert!(kkt.max_residual <= 1e-5, "{kkt:?}");
        assert!(res.soundness_ok);
    }

    #[test]
    fn rectangle_diagonal_instance_reduces_and_certifies() {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, -1.0]]),
                vec![0.2, 0.1],
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![1.0, -1.0],
            radii: vec![0.5, 0.5],
        };
        let spec = SafetySpec::new(vec![vec![1.0, 0.0]]).unwrap();
        let (res, rep) = analyze_direction(&net, &input, &spec, &[1.0, 0.0], 0, &opts()).unwrap();
        assert!(rep.condition_flags["first_layer_identity"]);
        assert_eq!(rep.verdict, Verdict::CertifiedTight, "{rep:?}");
        // exact: min φ(2x₁ + 0.2) over x₁ ∈ [0.5, 1.5] is 1.2
        assert!((res.d_star - 1.2).abs() <= 1e-6, "{}", res.d_star);
    }

    #[test]
    fn two_layer_network_skips_dual_but_reports() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::from_rows(&[vec![1.0], vec![-1.0]]), vec![0.0, 0.0]).unwrap(),
            Layer::new(Mat::from_rows(&[vec![1.0, 1.0]]), vec![0.0]).unwrap(),
            Layer::new(Mat::from_rows(&[vec![1.0]]), vec![0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Interval { lo: -1.0, hi: 1.0 };
        let spec = SafetySpec::new(vec![vec![1.0]]).unwrap();
        let (res, rep) = analyze_direction(&net, &input, &spec, &[1.0], 0, &opts()).unwrap();
        assert!(res.dual_obj.is_none());
        assert!(res.soundness_ok);
        // |x| has exact minimum 0 on [−1,1]; the relaxation is a lower bound
        assert!(res.d_star <= 1e-6);
        assert!(!rep.condition_flags.contains_key("xhat_ge_minus_b0"));
    }
}
