//! The bundled acceptance suite: ten criteria covering single-neuron,
//! ellipsoid, and rectangle tightness, strong-duality consistency,
//! certificate soundness, cut monotonicity, the closed-form projection
//! value, stationarity residuals, solver regression, and negative-control
//! honesty. Shared by the `acceptance` integration test target and the
//! `selftest` command; fully deterministic for a fixed base seed.

use crate::conic::{
    solve, sym_basis, to_standard_form, Coeff, ConeBlock, ConicProblem, LinRow, SolveOptions,
};
use crate::formulation::{build_deepsdp_dual, FormulationOptions};
use crate::linalg::{dot, norm2, Mat, SymMat};
use crate::network::{InputSet, Layer, ReluNetwork, SafetySpec};
use crate::oracle::exact_minimize;
use crate::tightness::{phi_closed_form, single_neuron_analytic, Verdict};
use crate::verify::{analyze_direction, PipelineOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub details: String,
    pub duration_ms: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} — {} ({:.0} ms): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.description,
            self.duration_ms,
            self.details
        )
    }
}

/// One solved instance retained for the cross-cutting criteria.
struct Record {
    primal_obj: f64,
    dual_obj: Option<f64>,
    soundness_margin: f64,
}

struct Harvest {
    records: Vec<Record>,
    kkt_residuals: Vec<f64>,
}

fn pipeline_opts(seed: u64) -> PipelineOptions {
    PipelineOptions {
        seed,
        ..PipelineOptions::default()
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs())
}

/// Checks that a rank-1 certificate decodes to an actual network
/// input-output pair attaining the relaxation optimum: the extracted
/// neuron values match a forward pass of the extracted input, and the
/// objective at the decoded output matches the solved optimum.
fn extraction_inconsistency(
    net: &ReluNetwork,
    c: &[f64],
    rep: &crate::tightness::TightnessReport,
    primal_obj: f64,
) -> Option<String> {
    if rep.numeric_rank != 1 {
        return None;
    }
    let n0 = net.input_dim();
    let x0 = &rep.extracted_x[..n0];
    let trace = net.forward_trace(x0).ok()?;
    let acts = &rep.extracted_x[n0..];
    let max_dev = trace
        .activations
        .iter()
        .zip(acts)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if max_dev > 1e-5 {
        return Some(format!("extracted activations deviate by {max_dev:.2e}"));
    }
    let val = 2.0 * dot(c, &trace.output);
    if (val - primal_obj).abs() > 1e-5 * (1.0 + primal_obj.abs()) {
        return Some(format!(
            "decoded objective {val:.9} vs optimum {primal_obj:.9}"
        ));
    }
    None
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = norm2(&v);
        if nv > 1e-3 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

fn identity_last(n: usize) -> Layer {
    Layer::new(Mat::identity(n), vec![0.0; n]).unwrap()
}

/// Runs every criterion in order, sharing the instances of criteria 1-3
/// and the supplementary identity-weight ellipsoid family with criteria 4,
/// 5, and 8. Two supplementary checks (S1, S2) pin down the boundary of
/// the certified regime; see the README for the analysis behind them.
pub fn run_acceptance(base_seed: u64) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut harvest = Harvest {
        records: Vec::new(),
        kkt_residuals: Vec::new(),
    };
    out.push(criterion1_single_neuron(base_seed, &mut harvest));
    out.push(criterion2_ellipsoid(base_seed, &mut harvest));
    out.push(criterion3_rectangle(base_seed, &mut harvest));
    let s1 = supplementary_identity_ellipsoid(base_seed, &mut harvest);
    let s2 = supplementary_counterexample();
    out.push(criterion4_strong_duality(&harvest));
    out.push(criterion5_soundness(&harvest));
    out.push(criterion6_cut_monotonicity(base_seed));
    out.push(criterion7_phi_agreement(base_seed));
    out.push(criterion8_kkt(&harvest));
    out.push(criterion9_solver_regression());
    out.push(criterion10_negative_controls(base_seed));
    out.push(s1);
    out.push(s2);
    out
}

fn criterion1_single_neuron(base_seed: u64, harvest: &mut Harvest) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(101));
    let opts = pipeline_opts(base_seed);
    let mut worst_gap = 0.0_f64;
    let mut worst_gram = 0.0_f64;
    let mut failures = Vec::new();

    for k in 0..200 {
        let (lo, hi, b0) = loop {
            let lo = rng.gen_range(-3.0..3.0);
            let hi = lo + rng.gen_range(0.05..3.0);
            let b0 = rng.gen_range(-2.0..2.0);
            if 0.5 * (lo + hi) >= -b0 {
                break (lo, hi, b0);
            }
        };
        let c = if k % 2 == 0 { 1.0 } else { -1.0 };
        let net = ReluNetwork::single_neuron(b0);
        let input = InputSet::Interval { lo, hi };
        let spec = SafetySpec::new(vec![vec![c]]).unwrap();
        let (res, rep) = match analyze_direction(&net, &input, &spec, &[c], 0, &opts) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let d = res.d_star;
        let gap = rep.oracle_gap.unwrap_or(f64::INFINITY);
        worst_gap = worst_gap.max(gap);
        worst_gram = worst_gram.max(rep.gram_residual);
        if gap > 1e-6 {
            failures.push(format!("instance {k}: oracle gap {gap:.2e}"));
        }
        if rep.numeric_rank != 1 {
            failures.push(format!("instance {k}: rank {}", rep.numeric_rank));
        }
        if rep.gram_residual > 1e-5 {
            failures.push(format!(
                "instance {k}: gram residual {:.2e}",
                rep.gram_residual
            ));
        }
        let analytic = single_neuron_analytic(lo, hi, b0, c).unwrap();
        if (d - analytic).abs() > 1e-6 * (1.0 + d.abs()) {
            failures.push(format!("instance {k}: d* {d:.9} vs analytic {analytic:.9}"));
        }
        if let Some(msg) = extraction_inconsistency(&net, &[c], &rep, res.primal_obj) {
            failures.push(format!("instance {k}: {msg}"));
        }
        harvest.records.push(Record {
            primal_obj: res.primal_obj,
            dual_obj: res.dual_obj,
            soundness_margin: res.soundness_margin,
        });
    }

    CriterionResult {
        id: "C1".into(),
        description:
            "single-neuron tightness: oracle gap, rank-1, analytic agreement (200 instances)".into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!("max oracle gap {worst_gap:.2e}, max gram residual {worst_gram:.2e}")
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion2_ellipsoid(base_seed: u64, harvest: &mut Harvest) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(202));
    let opts = pipeline_opts(base_seed);
    let mut worst_gap = 0.0_f64;
    let mut gapped = 0usize;
    let mut spurious = Vec::new();
    let mut errors = Vec::new();

    for k in 0..100 {
        let n = 1 + (k % 4);
        let w = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = ReluNetwork::new(vec![Layer::new(w, b).unwrap(), identity_last(n)]).unwrap();
        let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let radius = rng.gen_range(0.3..1.5);
        let input = InputSet::Ellipsoid { center, radius };
        let c = random_unit(&mut rng, n);
        let spec = SafetySpec::new(vec![c.clone()]).unwrap();
        let (res, rep) = match analyze_direction(&net, &input, &spec, &c, 0, &opts) {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let gap = rep.oracle_gap.unwrap_or(f64::INFINITY);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-6 || rep.numeric_rank != 1 {
            gapped += 1;
            // a gapped instance must never be certified
            if rep.verdict == Verdict::CertifiedTight {
                spurious.push(format!("instance {k}: certified despite gap {gap:.2e}"));
            }
        }
        if rep.verdict == Verdict::CertifiedTight {
            if let Some(kkt) = &rep.kkt {
                harvest.kkt_residuals.push(kkt.max_residual);
            }
        }
        harvest.records.push(Record {
            primal_obj: res.primal_obj,
            dual_obj: res.dual_obj,
            soundness_margin: res.soundness_margin,
        });
    }

    // Dense random first layers genuinely gap on a sizable fraction of
    // instances (see S2 for a pinned witness), so this criterion cannot
    // pass as stated; it is reported honestly and the provable regime is
    // exercised by S1.
    let passed = gapped == 0 && errors.is_empty() && spurious.is_empty();
    CriterionResult {
        id: "C2".into(),
        description: "ellipsoid single-layer tightness with dense random first layers (100 instances)"
            .into(),
        passed,
        details: format!(
            "{gapped}/100 instances exceed the gap/rank tolerance (max relative gap {worst_gap:.2e}); \
             every gapped instance was reported without a certificate{}{}",
            if spurious.is_empty() {
                String::new()
            } else {
                format!("; SPURIOUS: {}", spurious.join("; "))
            },
            if errors.is_empty() {
                String::new()
            } else {
                format!("; errors: {}", errors.join("; "))
            }
        ),
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Supplementary: the regime where the ellipsoid analysis is actually
/// sound — identity first layer and nonnegative center pre-activations —
/// with radii large enough that most instances have ReLU kinks inside the
/// ball. Also feeds the stationarity-residual pool of C8.
fn supplementary_identity_ellipsoid(base_seed: u64, harvest: &mut Harvest) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(11));
    let opts = pipeline_opts(base_seed);
    let mut worst_gap = 0.0_f64;
    let mut kinked = 0usize;
    let mut certified = 0usize;
    let mut failures = Vec::new();

    for k in 0..100 {
        let n = 1 + (k % 4);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(n), b.clone()).unwrap(),
            identity_last(n),
        ])
        .unwrap();
        // center pre-activations nonnegative: x̂_j + b_j ≥ 0
        let center: Vec<f64> = (0..n).map(|j| rng.gen_range(0.0..1.5) - b[j]).collect();
        let radius = rng.gen_range(0.5..2.0);
        if (0..n).any(|j| center[j] + b[j] < radius) {
            kinked += 1;
        }
        let input = InputSet::Ellipsoid { center, radius };
        let c = random_unit(&mut rng, n);
        let spec = SafetySpec::new(vec![c.clone()]).unwrap();
        let (res, rep) = match analyze_direction(&net, &input, &spec, &c, 0, &opts) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let gap = rep.oracle_gap.unwrap_or(f64::INFINITY);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-6 {
            failures.push(format!("instance {k} (n={n}): oracle gap {gap:.2e}"));
        }
        if rep.numeric_rank != 1 {
            failures.push(format!(
                "instance {k} (n={n}): rank {} spectrum {:?}",
                rep.numeric_rank, rep.eigen_spectrum
            ));
        }
        if rep.verdict == Verdict::CertifiedTight {
            certified += 1;
            if let Some(kkt) = &rep.kkt {
                harvest.kkt_residuals.push(kkt.max_residual);
            }
        } else {
            failures.push(format!("instance {k}: verdict {:?}", rep.verdict));
        }
        if let Some(msg) = extraction_inconsistency(&net, &c, &rep, res.primal_obj) {
            failures.push(format!("instance {k}: {msg}"));
        }
        harvest.records.push(Record {
            primal_obj: res.primal_obj,
            dual_obj: res.dual_obj,
            soundness_margin: res.soundness_margin,
        });
    }

    CriterionResult {
        id: "S1".into(),
        description:
            "ellipsoid tightness on the certified regime: identity first layer, center pre-activations ≥ 0 (100 instances)"
                .into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!(
                "max oracle gap {worst_gap:.2e}; {certified}/100 certified, {kinked} with kinks inside the ball"
            )
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Supplementary: a pinned witness that dense first layers break the
/// unconditional ellipsoid claim. The network max(0, −0.482·x − 0.634) on
/// the ball |x − 0.669| ≤ 0.965 is identically zero (every pre-activation
/// is negative), yet the relaxation admits rank-2 points with a strictly
/// better objective; the tool must measure the gap and refuse to certify.
fn supplementary_counterexample() -> CriterionResult {
    let start = Instant::now();
    let w = -0.48233042842612406;
    let b = -0.6343608690520863;
    let net = ReluNetwork::new(vec![
        Layer::new(Mat::from_rows(&[vec![w]]), vec![b]).unwrap(),
        identity_last(1),
    ])
    .unwrap();
    let input = InputSet::Ellipsoid {
        center: vec![0.668706300546245],
        radius: 0.9650016279237701,
    };
    let spec = SafetySpec::new(vec![vec![-1.0]]).unwrap();
    let opts = pipeline_opts(0);
    let (res, rep) = match analyze_direction(&net, &input, &spec, &[-1.0], 0, &opts) {
        Ok(v) => v,
        Err(e) => {
            return CriterionResult {
                id: "S2".into(),
                description: "dense-first-layer ellipsoid witness has a measured gap".into(),
                passed: false,
                details: format!("pipeline error: {e}"),
                duration_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        }
    };
    let gap = rep.oracle_gap.unwrap_or(0.0);
    let mut failures = Vec::new();
    // d* ≈ −0.0566 while the exact extreme is 0
    if (res.d_star + 0.0566).abs() > 1e-3 {
        failures.push(format!("unexpected bound d* = {}", res.d_star));
    }
    if rep.d_oracle.unwrap_or(f64::NAN).abs() > 1e-7 {
        failures.push(format!("oracle value {:?} should be 0", rep.d_oracle));
    }
    if gap < 1e-3 {
        failures.push(format!("gap {gap:.2e} not detected"));
    }
    if rep.verdict != Verdict::GapDetected {
        failures.push(format!(
            "verdict {:?}, expected a detected gap",
            rep.verdict
        ));
    }
    CriterionResult {
        id: "S2".into(),
        description: "dense-first-layer ellipsoid witness has a measured gap".into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!(
                "bound {:.6} vs exact 0, relative gap {gap:.2e}, verdict {:?}",
                res.d_star, rep.verdict
            )
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion3_rectangle(base_seed: u64, harvest: &mut Harvest) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(303));
    let opts = pipeline_opts(base_seed);
    let mut worst_gap = 0.0_f64;
    let mut failures = Vec::new();

    for k in 0..100 {
        let n = 1 + (k % 4);
        let diag: Vec<f64> = (0..n)
            .map(|_| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * rng.gen_range(0.3..1.2)
            })
            .collect();
        let mut w = Mat::zeros(n, n);
        for i in 0..n {
            w.set(i, i, diag[i]);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net =
            ReluNetwork::new(vec![Layer::new(w, b.clone()).unwrap(), identity_last(n)]).unwrap();
        // center chosen so the reduced instance has nonnegative center
        // pre-activations (the hypothesis the per-coordinate reduction
        // needs); radii are unrestricted, so kinks still occur
        let center: Vec<f64> = (0..n)
            .map(|j| (rng.gen_range(0.0..1.5) - b[j]) / diag[j])
            .collect();
        let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
        let input = InputSet::Rectangle { center, radii };
        let c = random_unit(&mut rng, n);
        let spec = SafetySpec::new(vec![c.clone()]).unwrap();
        let (res, rep) = match analyze_direction(&net, &input, &spec, &c, 0, &opts) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let gap = rep.oracle_gap.unwrap_or(f64::INFINITY);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-6 {
            failures.push(format!("instance {k} (n={n}): oracle gap {gap:.2e}"));
        }
        if rep.numeric_rank != 1 {
            failures.push(format!(
                "instance {k} (n={n}): rank {} spectrum {:?}",
                rep.numeric_rank, rep.eigen_spectrum
            ));
        }
        harvest.records.push(Record {
            primal_obj: res.primal_obj,
            dual_obj: res.dual_obj,
            soundness_margin: res.soundness_margin,
        });
    }

    CriterionResult {
        id: "C3".into(),
        description: "rectangle single-layer tightness after diagonal reduction (100 instances)"
            .into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!(
                "max oracle gap {worst_gap:.2e} (centers satisfy the reduced-instance \
                 nonnegativity hypothesis)"
            )
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion4_strong_duality(harvest: &Harvest) -> CriterionResult {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut checked = 0usize;
    let mut failures = 0usize;
    for r in &harvest.records {
        if let Some(dual) = r.dual_obj {
            checked += 1;
            let gap = rel_gap(r.primal_obj, dual);
            worst = worst.max(gap);
            if gap > 1e-6 {
                failures += 1;
            }
        }
    }
    CriterionResult {
        id: "C4".into(),
        description: "strong-duality consistency across criteria 1-3 instances".into(),
        passed: failures == 0 && checked > 0,
        details: format!("{checked} instance pairs, worst relative gap {worst:.2e}"),
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion5_soundness(harvest: &Harvest) -> CriterionResult {
    let start = Instant::now();
    let worst = harvest
        .records
        .iter()
        .map(|r| r.soundness_margin)
        .fold(f64::INFINITY, f64::min);
    let passed = !harvest.records.is_empty() && worst >= -1e-6;
    CriterionResult {
        id: "C5".into(),
        description: "certificate soundness: sampled quadratic form ≥ −1e-6 (10000 samples each)"
            .into(),
        passed,
        details: format!(
            "{} instances, smallest sampled margin {worst:.2e}",
            harvest.records.len()
        ),
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion6_cut_monotonicity(base_seed: u64) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(606));
    // the 1e-8 monotonicity margin needs optima resolved beyond it
    let solve_opts = SolveOptions {
        tol: 1e-9,
        ..SolveOptions::default()
    };
    let mut failures = Vec::new();
    let mut worst_drop = 0.0_f64;

    for k in 0..50 {
        let n = 2 + (k % 2);
        let w = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = ReluNetwork::new(vec![Layer::new(w, b).unwrap(), identity_last(n)]).unwrap();
        let input = if k % 2 == 0 {
            InputSet::Rectangle {
                center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                radii: (0..n).map(|_| rng.gen_range(0.2..1.2)).collect(),
            }
        } else {
            InputSet::Ellipsoid {
                center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                radius: rng.gen_range(0.3..1.2),
            }
        };
        let c = random_unit(&mut rng, n);

        let solve_dual = |cuts: bool| -> Option<f64> {
            let prob = build_deepsdp_dual(&net, &input, &c, FormulationOptions { cuts }).ok()?;
            let sol = solve(&prob, &solve_opts).ok()?;
            sol.is_optimal().then_some(-sol.primal_obj)
        };
        let (no_cuts, with_cuts) = match (solve_dual(false), solve_dual(true)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                failures.push(format!("instance {k}: dual solve failed"));
                continue;
            }
        };
        let drop = no_cuts - with_cuts;
        worst_drop = worst_drop.max(drop);
        if with_cuts < no_cuts - 1e-8 {
            failures.push(format!(
                "instance {k}: cuts lowered the dual optimum by {drop:.2e}"
            ));
        }
        // tight instances stay tight when cuts are added
        let oracle = exact_minimize(&net, &input, &c, 1 << 16).unwrap();
        let d_oracle = oracle.opt_value / 2.0;
        let gap_no = rel_gap(no_cuts / 2.0, d_oracle);
        let gap_cut = rel_gap(with_cuts / 2.0, d_oracle);
        if gap_no <= 1e-6 && gap_cut > 1e-6 + 1e-8 {
            failures.push(format!(
                "instance {k}: tightness lost with cuts (gap {gap_cut:.2e})"
            ));
        }
    }

    CriterionResult {
        id: "C6".into(),
        description: "cut monotonicity and tightness preservation (50 instances)".into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!("largest observed decrease {worst_drop:.2e} (within 1e-8)")
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Independent conic solve of the second-stage projection problem:
/// minimize ‖u − x̂e‖² subject to the value and either-condition
/// constraints at a fixed outer point z.
pub fn phi_second_stage_solve(z: &[f64], e: &[f64], b0: f64, xhat: f64) -> Option<f64> {
    let p = z.len();
    let blocks = vec![
        ConeBlock::free(p, "u"),
        ConeBlock::free(1, "t"),
        ConeBlock::psd(p + 1, "epi"),
    ];
    let mut objective: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
    objective[1] = Coeff::Dense(vec![1.0]);

    let mut eq = Vec::new();
    // epigraph Schur block: [[I, u − x̂e],[(u − x̂e)ᵀ, t]]
    for a in 0..=p {
        for bidx in 0..=a {
            let mut coeffs: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
            coeffs[2] = Coeff::Sym(sym_basis(p + 1, a, bidx));
            let mut rhs = 0.0;
            if a < p {
                rhs = if a == bidx { 1.0 } else { 0.0 };
            } else if bidx < p {
                // Z_{b,p} = u_b − x̂ e_b
                let mut uc = vec![0.0; p];
                uc[bidx] = -1.0;
                coeffs[0] = Coeff::Dense(uc);
                rhs = -xhat * e[bidx];
            } else {
                coeffs[1] = Coeff::Dense(vec![-1.0]);
            }
            eq.push(LinRow { coeffs, rhs });
        }
    }
    let mut ineq = Vec::new();
    // eᵀ(u + b0 e) ≤ eᵀz
    ineq.push(LinRow {
        coeffs: {
            let mut cs: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
            cs[0] = Coeff::Dense(e.to_vec());
            cs
        },
        rhs: dot(e, z) - b0,
    });
    // ‖z‖² ≤ (u + b0 e)ᵀ z
    ineq.push(LinRow {
        coeffs: {
            let mut cs: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
            cs[0] = Coeff::Dense(z.iter().map(|v| -v).collect());
            cs
        },
        rhs: b0 * dot(e, z) - dot(z, z),
    });

    let prob: ConicProblem = to_standard_form(blocks, objective, eq, ineq);
    let sol = solve(&prob, &SolveOptions::default()).ok()?;
    sol.is_optimal().then_some(sol.primal_obj)
}

fn criterion7_phi_agreement(base_seed: u64) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(707));
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();

    for k in 0..100 {
        let p = 3;
        let e = random_unit(&mut rng, p);
        let z: Vec<f64> = loop {
            let cand: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if dot(&e, &cand) >= 0.0 {
                break cand;
            }
        };
        let b0 = rng.gen_range(-2.0..2.0);
        let xhat = -b0 + rng.gen_range(0.0..3.0);
        let closed = phi_closed_form(&z, &e, b0, xhat).unwrap().phi_value;
        let solved = match phi_second_stage_solve(&z, &e, b0, xhat) {
            Some(v) => v,
            None => {
                failures.push(format!("instance {k}: projection solve failed"));
                continue;
            }
        };
        let err = (closed - solved).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            failures.push(format!(
                "instance {k}: closed {closed:.9} vs solve {solved:.9}"
            ));
        }
    }

    CriterionResult {
        id: "C7".into(),
        description: "closed-form projection value vs direct conic solve (100 instances)".into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!("max |Φ_closed − Φ_solve| = {worst:.2e}")
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn criterion8_kkt(harvest: &Harvest) -> CriterionResult {
    let start = Instant::now();
    let worst = harvest.kkt_residuals.iter().fold(0.0_f64, |a, &b| a.max(b));
    let passed = !harvest.kkt_residuals.is_empty() && worst <= 1e-5;
    CriterionResult {
        id: "C8".into(),
        description: "stationarity/complementarity residuals on certified ellipsoid instances"
            .into(),
        passed,
        details: format!(
            "{} certified instances, max residual {worst:.2e}",
            harvest.kkt_residuals.len()
        ),
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn regression_problems() -> Vec<(&'static str, ConicProblem, f64)> {
    let mut probs = Vec::new();

    // 1: trace minimization with pinned corner
    let blocks = vec![ConeBlock::psd(2, "X")];
    probs.push((
        "psd trace corner",
        ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Sym(SymMat::identity(2))],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Sym(SymMat::outer(&[1.0, 0.0])),
                1.0,
            )],
        },
        1.0,
    ));

    // 2: mass shifts to the unpenalized diagonal
    let mut c = SymMat::zeros(2);
    c.set(0, 0, 1.0);
    probs.push((
        "psd partial trace",
        ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Sym(c)],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Sym(SymMat::identity(2)),
                1.0,
            )],
        },
        0.0,
    ));

    // 3: plain LP
    let lp_blocks = vec![ConeBlock::nonneg(2, "x")];
    probs.push((
        "lp basic",
        ConicProblem {
            blocks: lp_blocks.clone(),
            objective: vec![Coeff::Dense(vec![1.0, 0.0])],
            rows: vec![LinRow::single(
                &lp_blocks,
                0,
                Coeff::Dense(vec![1.0, 1.0]),
                1.0,
            )],
        },
        0.0,
    ));

    // 4: linear objective over the unit ball via a Schur block
    {
        let p = 2;
        let blocks = vec![ConeBlock::free(p, "x"), ConeBlock::psd(p + 1, "ball")];
        let mut objective: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
        objective[0] = Coeff::Dense(vec![1.0, 1.0]);
        let mut eq = Vec::new();
        for a in 0..=p {
            for b in 0..=a {
                let mut coeffs: Vec<Coeff> =
                    blocks.iter().map(|bk| Coeff::zero_for(&bk.kind)).collect();
                coeffs[1] = Coeff::Sym(sym_basis(p + 1, a, b));
                let mut rhs = 0.0;
                if a < p || a == b {
                    rhs = if a == b { 1.0 } else { 0.0 };
                }
                if a == p && b < p {
                    let mut xc = vec![0.0; p];
                    xc[b] = -1.0;
                    coeffs[0] = Coeff::Dense(xc);
                    rhs = 0.0;
                }
                eq.push(LinRow { coeffs, rhs });
            }
        }
        probs.push((
            "ball lmi",
            ConicProblem {
                blocks,
                objective,
                rows: eq,
            },
            -std::f64::consts::SQRT_2,
        ));
    }

    // 5: free variable pinned through a slack
    {
        let blocks = vec![ConeBlock::free(1, "d"), ConeBlock::nonneg(1, "s")];
        probs.push((
            "free split",
            ConicProblem {
                blocks,
                objective: vec![Coeff::Dense(vec![1.0]), Coeff::Dense(vec![0.0])],
                rows: vec![LinRow {
                    coeffs: vec![Coeff::Dense(vec![1.0]), Coeff::Dense(vec![-1.0])],
                    rhs: 3.0,
                }],
            },
            3.0,
        ));
    }

    // 6: trace minimization with an off-diagonal pin
    {
        let blocks = vec![ConeBlock::psd(2, "X")];
        let mut pin = SymMat::zeros(2);
        pin.set(0, 1, 0.5); // ⟨pin, X⟩ = X₁₂
        probs.push((
            "psd offdiag pin",
            ConicProblem {
                blocks: blocks.clone(),
                objective: vec![Coeff::Sym(SymMat::identity(2))],
                rows: vec![LinRow::single(&blocks, 0, Coeff::Sym(pin), 1.0)],
            },
            2.0,
        ));
    }

    // 7: mixed PSD and nonnegative blocks
    {
        let blocks = vec![ConeBlock::psd(2, "X"), ConeBlock::nonneg(2, "y")];
        let obj = vec![
            Coeff::Sym(SymMat::diag(&[1.0, 2.0])),
            Coeff::Dense(vec![1.0, 0.0]),
        ];
        let rows = vec![
            LinRow {
                coeffs: vec![
                    Coeff::Sym(SymMat::identity(2)),
                    Coeff::Dense(vec![0.0, 0.0]),
                ],
                rhs: 1.0,
            },
            LinRow {
                coeffs: vec![Coeff::Sym(SymMat::zeros(2)), Coeff::Dense(vec![1.0, 1.0])],
                rhs: 1.0,
            },
        ];
        probs.push((
            "mixed blocks",
            ConicProblem {
                blocks,
                objective: obj,
                rows,
            },
            1.0,
        ));
    }

    // 8: inequality routed through the slack transform
    {
        let blocks = vec![ConeBlock::nonneg(1, "x")];
        let obj = vec![Coeff::Dense(vec![-1.0])];
        let ineq = vec![LinRow::single(&blocks, 0, Coeff::Dense(vec![1.0]), 2.0)];
        probs.push((
            "slacked bound",
            to_standard_form(blocks, obj, vec![], ineq),
            -2.0,
        ));
    }

    // 9: smallest eigenvalue as an SDP
    {
        let blocks = vec![ConeBlock::psd(2, "X")];
        probs.push((
            "lambda min",
            ConicProblem {
                blocks: blocks.clone(),
                objective: vec![Coeff::Sym(SymMat::from_rows(&[
                    vec![2.0, 1.0],
                    vec![1.0, 2.0],
                ]))],
                rows: vec![LinRow::single(
                    &blocks,
                    0,
                    Coeff::Sym(SymMat::identity(2)),
                    1.0,
                )],
            },
            1.0,
        ));
    }

    // 10: one-dimensional ball in Schur form
    {
        let blocks = vec![ConeBlock::free(1, "x"), ConeBlock::psd(2, "ball")];
        let mut objective: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
        objective[0] = Coeff::Dense(vec![1.0]);
        let mut eq = Vec::new();
        // [[0.5, x − 1],[x − 1, 0.5]] ⪰ 0 ⟺ |x − 1| ≤ 0.5
        for (a, b, tie_x, rhs) in [
            (0usize, 0usize, false, 0.5),
            (1, 0, true, -1.0),
            (1, 1, false, 0.5),
        ] {
            let mut coeffs: Vec<Coeff> =
                blocks.iter().map(|bk| Coeff::zero_for(&bk.kind)).collect();
            coeffs[1] = Coeff::Sym(sym_basis(2, a, b));
            if tie_x {
                coeffs[0] = Coeff::Dense(vec![-1.0]);
            }
            eq.push(LinRow { coeffs, rhs });
        }
        probs.push((
            "interval lmi",
            ConicProblem {
                blocks,
                objective,
                rows: eq,
            },
            0.5,
        ));
    }

    probs
}

fn criterion9_solver_regression() -> CriterionResult {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    let problems = regression_problems();
    let count = problems.len();
    for (name, prob, expected) in problems {
        match solve(&prob, &opts) {
            Ok(sol) if sol.is_optimal() => {
                let err = (sol.primal_obj - expected).abs();
                worst = worst.max(err);
                if err > 1e-7 {
                    failures.push(format!("{name}: |err| = {err:.2e}"));
                }
            }
            Ok(sol) => failures.push(format!("{name}: status {:?}", sol.status)),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > 5.0 {
        failures.push(format!("regression set took {elapsed:.2}s (> 5s)"));
    }
    CriterionResult {
        id: "C9".into(),
        description: format!("solver regression: {count} hand-built problems to 1e-7"),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!("max |err| = {worst:.2e} in {:.2}s", elapsed)
        } else {
            failures.join("; ")
        },
        duration_ms: elapsed * 1e3,
    }
}

fn criterion10_negative_controls(base_seed: u64) -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(1010));
    let opts = pipeline_opts(base_seed);
    let mut failures = Vec::new();
    let mut gap_detected = 0usize;

    for k in 0..50 {
        let (net, input, c) = if k < 25 {
            // single-neuron with the condition violated: x̂ < −b⁰
            let (lo, hi, b0) = loop {
                let lo = rng.gen_range(-3.0..3.0);
                let hi = lo + rng.gen_range(0.05..3.0);
                let b0 = rng.gen_range(-2.0..2.0);
                if 0.5 * (lo + hi) < -b0 - 1e-6 {
                    break (lo, hi, b0);
                }
            };
            (
                ReluNetwork::single_neuron(b0),
                InputSet::Interval { lo, hi },
                vec![if k % 2 == 0 { 1.0 } else { -1.0 }],
            )
        } else {
            // dense non-diagonal first layer, rectangle input
            let n = 2 + (k % 2);
            let w = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    rng.gen_range(0.5..1.0)
                } else {
                    rng.gen_range(0.2..0.8)
                }
            });
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let net = ReluNetwork::new(vec![Layer::new(w, b).unwrap(), identity_last(n)]).unwrap();
            let input = InputSet::Rectangle {
                center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                radii: (0..n).map(|_| rng.gen_range(0.2..1.0)).collect(),
            };
            let c = random_unit(&mut rng, n);
            (net, input, c)
        };
        let spec = SafetySpec::new(vec![c.clone()]).unwrap();
        let (_res, rep) = match analyze_direction(&net, &input, &spec, &c, 0, &opts) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        if rep.verdict == Verdict::CertifiedTight {
            failures.push(format!(
                "instance {k}: CERTIFIED_TIGHT despite violated conditions ({:?})",
                rep.condition_flags
            ));
        }
        if rep.verdict == Verdict::GapDetected {
            gap_detected += 1;
            let gap = rep.oracle_gap.unwrap_or(0.0);
            if gap <= 10.0 * 1e-6 {
                failures.push(format!(
                    "instance {k}: GAP_DETECTED with unconfirmed gap {gap:.2e}"
                ));
            }
        }
    }

    CriterionResult {
        id: "C10".into(),
        description: "negative controls: violated conditions never certify (50 instances)".into(),
        passed: failures.is_empty(),
        details: if failures.is_empty() {
            format!("0 spurious certificates, {gap_detected} confirmed gap verdicts")
        } else {
            failures.join("; ")
        },
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}
