//! Library-level end-to-end checks: JSON problem files through the run
//! drivers, primal/dual consistency on a fixed regression family, and the
//! sampled-output-set invariance of the diagonal reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relusdp::conic::{solve, SolveOptions};
use relusdp::formulation::{build_deepsdp_dual, build_primal_relaxation, FormulationOptions};
use relusdp::linalg::Mat;
use relusdp::network::{InputSet, Layer, ReluNetwork};
use relusdp::problem::ProblemFile;
use relusdp::verify::{run_compare, run_verify, PipelineOptions};

#[test]
fn problem_file_through_verify_driver() {
    let text = r#"{
        "network": {"layers": [
            {"W": [[1.0]], "b": [0.5]},
            {"W": [[1.0]], "b": [0.0]}
        ]},
        "input_set": {"type": "interval", "lo": -1.0, "hi": 2.0},
        "directions": [[1.0], [-1.0]],
        "options": {"seed": 3}
    }"#;
    let (net, input, mut spec) = ProblemFile::from_json(text).unwrap().to_domain().unwrap();
    let opts = PipelineOptions::default();
    let (results, timings) = run_verify(&net, &input, &mut spec, &opts).unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(timings.per_direction_ms.len(), 2);
    // φ([−0.5, 2.5]) = [0, 2.5]
    assert!(results[0].d_star.abs() <= 1e-6);
    assert!((results[1].d_star + 2.5).abs() <= 1e-6);
    assert_eq!(spec.offsets[0].unwrap(), results[0].d_star);
    assert!(results.iter().all(|r| r.soundness_ok));
}

#[test]
fn compare_driver_attaches_tightness() {
    let text = r#"{
        "network": {"layers": [
            {"W": [[1.0, 0.0], [0.0, 1.0]], "b": [0.2, 0.1]},
            {"W": [[1.0, 0.0], [0.0, 1.0]], "b": [0.0, 0.0]}
        ]},
        "input_set": {"type": "ellipsoid", "center": [0.5, 0.5], "radius": 1.0},
        "directions": [[0.6, 0.8]]
    }"#;
    let (net, input, mut spec) = ProblemFile::from_json(text).unwrap().to_domain().unwrap();
    let opts = PipelineOptions::default();
    let (results, tightness, _) = run_compare(&net, &input, &mut spec, &opts).unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(tightness.len(), 1);
    assert_eq!(tightness[0].numeric_rank, 1);
    assert!(tightness[0].oracle_gap.unwrap() <= 1e-6);
}

/// The explicit dual assembly and the primal relaxation are hand-built
/// conjugates; their independently solved optima must agree on a
/// regression family well beyond ten instances.
#[test]
fn primal_dual_pairs_agree_on_regression_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let opts = SolveOptions::default();
    let mut checked = 0;
    for k in 0..12 {
        let n = 1 + (k % 3);
        let w = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = ReluNetwork::new(vec![
            Layer::new(w, b).unwrap(),
            Layer::new(Mat::identity(n), vec![0.0; n]).unwrap(),
        ])
        .unwrap();
        let input = if k % 2 == 0 {
            InputSet::Rectangle {
                center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                radii: (0..n).map(|_| rng.gen_range(0.3..1.2)).collect(),
            }
        } else {
            InputSet::Ellipsoid {
                center: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                radius: rng.gen_range(0.3..1.2),
            }
        };
        let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if c.iter().all(|v| v.abs() < 1e-3) {
            c[0] = 1.0;
        }
        let fo = FormulationOptions { cuts: k % 3 == 0 };
        let p = build_primal_relaxation(&net, &input, &c, fo).unwrap();
        let d = build_deepsdp_dual(&net, &input, &c, fo).unwrap();
        let ps = solve(&p, &opts).unwrap();
        let ds = solve(&d, &opts).unwrap();
        if !(ps.is_optimal() && ds.is_optimal()) {
            continue;
        }
        checked += 1;
        let dual_maxform = -ds.primal_obj;
        assert!(
            (ps.primal_obj - dual_maxform).abs() <= 1e-6 * (1.0 + ps.primal_obj.abs()),
            "instance {k}: primal {} vs dual {}",
            ps.primal_obj,
            dual_maxform
        );
    }
    assert!(checked >= 10, "only {checked} pairs reached optimality");
}

#[test]
fn cuts_never_hurt_the_dual_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = SolveOptions {
        tol: 1e-9,
        ..SolveOptions::default()
    };
    for k in 0..10 {
        let n = 2 + (k % 2);
        let w = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = ReluNetwork::new(vec![
            Layer::new(w, b).unwrap(),
            Layer::new(Mat::identity(n), vec![0.0; n]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            radii: (0..n).map(|_| rng.gen_range(0.3..1.0)).collect(),
        };
        let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        c[0] += 1.0;
        let base =
            build_deepsdp_dual(&net, &input, &c, FormulationOptions { cuts: false }).unwrap();
        let cut = build_deepsdp_dual(&net, &input, &c, FormulationOptions { cuts: true }).unwrap();
        let b_ = solve(&base, &opts).unwrap();
        let c_ = solve(&cut, &opts).unwrap();
        if b_.is_optimal() && c_.is_optimal() {
            assert!(-c_.primal_obj >= -b_.primal_obj - 1e-8);
        }
    }
}

#[test]
fn diagonal_reduction_preserves_offsets() {
    let net = ReluNetwork::new(vec![
        Layer::new(
            Mat::from_rows(&[vec![-1.5, 0.0], vec![0.0, 0.75]]),
            vec![0.9, 0.4],
        )
        .unwrap(),
        Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
    ])
    .unwrap();
    let input = InputSet::Rectangle {
        center: vec![-0.4, 0.2],
        radii: vec![0.6, 0.8],
    };
    let opts = PipelineOptions::default();
    let (reduced_net, reduced_input) =
        relusdp::network::normalize_diagonal_weight(&net, &input).unwrap();
    for c in [[1.0, 0.3], [-0.7, 0.4]] {
        let a = relusdp::verify::verify_direction(&net, &input, &c, 0, &opts).unwrap();
        let b =
            relusdp::verify::verify_direction(&reduced_net, &reduced_input, &c, 0, &opts).unwrap();
        assert!(
            (a.d_star - b.d_star).abs() <= 1e-6 * (1.0 + a.d_star.abs()),
            "offsets diverge: {} vs {}",
            a.d_star,
            b.d_star
        );
    }
}

/// Both sides are exact for the scalar network, so they agree to solver
/// tolerance on every interval satisfying the analytic condition.
#[test]
fn oracle_matches_analytic_on_single_neurons() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for k in 0..20 {
        let (lo, hi, b0) = loop {
            let lo = rng.gen_range(-3.0..3.0);
            let hi = lo + rng.gen_range(0.1..3.0);
            let b0 = rng.gen_range(-2.0..2.0);
            if 0.5 * (lo + hi) >= -b0 {
                break (lo, hi, b0);
            }
        };
        let c = if k % 2 == 0 { 1.0 } else { -1.0 };
        let net = ReluNetwork::single_neuron(b0);
        let input = InputSet::Interval { lo, hi };
        let oracle = relusdp::oracle::exact_minimize(&net, &input, &[c], 1 << 16).unwrap();
        let analytic = relusdp::tightness::single_neuron_analytic(lo, hi, b0, c).unwrap();
        assert!(
            (oracle.opt_value / 2.0 - analytic).abs() <= 1e-7,
            "oracle {} vs analytic {analytic}",
            oracle.opt_value / 2.0
        );
    }
}
