//! Exact ground-truth optimization of cᵀf(x⁰) over the input region by
//! enumerating ReLU activation patterns. Fixing a pattern makes the network
//! affine, so each pattern yields a convex subproblem: a linear program for
//! interval/rectangle inputs, plus one exact ball constraint (in
//! Schur-complement form) for ellipsoids. A seeded sampling bound
//! complements the enumeration.

use crate::conic::{
    solve, sym_basis, to_standard_form, Coeff, ConeBlock, ConicProblem, LinRow, SolveOptions,
    SolveStatus,
};
use crate::linalg::Mat;
use crate::network::{InputSet, ReluNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no activation pattern admits a feasible point")]
    EmptyInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleStatus {
    /// Every activation pattern was enumerated.
    Exact,
    /// The pattern budget was exhausted; the value is the best found.
    Capped,
}

/// Result of the enumeration, with the objective on the 2cᵀy scale used by
/// the semidefinite relaxation.
#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub opt_value: f64,
    pub argmin_x0: Vec<f64>,
    pub pattern: Vec<bool>,
    pub subproblems_solved: usize,
    pub status: OracleStatus,
}

pub const DEFAULT_PATTERN_CAP: usize = 1 << 16;

/// Affine image of the network under a fixed activation pattern:
/// x^k = M x⁰ + m with per-neuron sign constraints collected along the way.
struct PatternModel {
    /// rows aᵢᵀx + βᵢ of every pre-activation, stacked across layers
    pre_rows: Vec<(Vec<f64>, f64)>,
    /// final affine output map
    out_m: Mat,
    out_b: Vec<f64>,
}

fn pattern_model(net: &ReluNetwork, pattern: u64) -> PatternModel {
    let n0 = net.input_dim();
    let mut m = Mat::identity(n0);
    let mut off = vec![0.0; n0];
    let mut pre_rows = Vec::with_capacity(net.total_neurons());
    let mut bit = 0usize;
    for k in 0..net.depth() {
        let layer = &net.layers()[k];
        let wm = layer.w.matmul(&m);
        let mut wb = layer.w.matvec(&off);
        for (v, b) in wb.iter_mut().zip(&layer.b) {
            *v += b;
        }
        let rows_out = layer.out_dim();
        let mut next_m = Mat::zeros(rows_out, n0);
        let mut next_b = vec![0.0; rows_out];
        for i in 0..rows_out {
            pre_rows.push((wm.row(i).to_vec(), wb[i]));
            let active = (pattern >> (bit + i)) & 1 == 1;
            if active {
                for j in 0..n0 {
                    next_m.set(i, j, wm.get(i, j));
                }
                next_b[i] = wb[i];
            }
        }
        bit += rows_out;
        m = next_m;
        off = next_b;
    }
    let last = net.layers().last().unwrap();
    let out_m = last.w.matmul(&m);
    let mut out_b = last.w.matvec(&off);
    for (v, b) in out_b.iter_mut().zip(&last.b) {
        *v += b;
    }
    PatternModel {
        pre_rows,
        out_m,
        out_b,
    }
}

/// Conic subproblem for one pattern: minimize the affine objective over the
/// sign region intersected with the input set.
fn pattern_subproblem(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    pattern: u64,
) -> (ConicProblem, f64) {
    let n0 = net.input_dim();
    let model = pattern_model(net, pattern);

    // objective over x⁰ (factor 2 keeps the relaxation scale)
    let g = {
        let mut g = vec![0.0; n0];
        for i in 0..c.len() {
            for j in 0..n0 {
                g[j] += 2.0 * c[i] * model.out_m.get(i, j);
            }
        }
        g
    };
    let const_term = 2.0 * crate::linalg::dot(c, &model.out_b);

    let mut blocks = vec![ConeBlock::free(n0, "x")];
    let ellipsoid = matches!(input, InputSet::Ellipsoid { .. });
    if ellipsoid {
        blocks.push(ConeBlock::psd(n0 + 1, "ball"));
    }
    let mut objective: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
    objective[0] = Coeff::Dense(g);

    let mut ineq = Vec::new();
    let mut eq = Vec::new();

    for (i, (row, beta)) in model.pre_rows.iter().enumerate() {
        let active = (pattern >> i) & 1 == 1;
        // active: −(aᵀx + β) ≤ 0; inactive: aᵀx + β ≤ 0
        let (coeff, rhs) = if active {
            (row.iter().map(|v| -v).collect::<Vec<f64>>(), *beta)
        } else {
            (row.clone(), -beta)
        };
        ineq.push(LinRow::single(&blocks, 0, Coeff::Dense(coeff), rhs));
    }

    match input {
        InputSet::Interval { lo, hi } => {
            ineq.push(LinRow::single(&blocks, 0, Coeff::Dense(vec![1.0]), *hi));
            ineq.push(LinRow::single(&blocks, 0, Coeff::Dense(vec![-1.0]), -lo));
        }
        InputSet::Rectangle { center, radii } => {
            for j in 0..n0 {
                let mut e = vec![0.0; n0];
                e[j] = 1.0;
                ineq.push(LinRow::single(
                    &blocks,
                    0,
                    Coeff::Dense(e.clone()),
                    center[j] + radii[j],
                ));
                e[j] = -1.0;
                ineq.push(LinRow::single(
                    &blocks,
                    0,
                    Coeff::Dense(e),
                    -(center[j] - radii[j]),
                ));
            }
        }
        InputSet::Ellipsoid { center, radius } => {
            // Z = [[ρI, x−x̂],[(x−x̂)ᵀ, ρ]] ⪰ 0  ⟺  ‖x − x̂‖ ≤ ρ
            for a in 0..=n0 {
                for b in 0..=a {
                    let mut coeffs: Vec<Coeff> =
                        blocks.iter().map(|bk| Coeff::zero_for(&bk.kind)).collect();
                    coeffs[1] = Coeff::Sym(sym_basis(n0 + 1, a, b));
                    let rhs = if a == b {
                        *radius
                    } else if a == n0 {
                        // tied to x_b below
                        -center[b]
                    } else {
                        0.0
                    };
                    if a == n0 && b < n0 {
                        let mut xc = vec![0.0; n0];
                        xc[b] = -1.0;
                        coeffs[0] = Coeff::Dense(xc);
                    }
                    eq.push(LinRow { coeffs, rhs });
                }
            }
        }
    }

    (to_standard_form(blocks, objective, eq, ineq), const_term)
}

/// Minimizes 2cᵀf(x⁰) over the input region exactly, visiting every
/// activation pattern up to `cap`. The minimum over feasible patterns is
/// deterministic: ties keep the lexicographically earlier pattern.
pub fn exact_minimize(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    cap: usize,
) -> Result<OracleResult, OracleError> {
    if c.len() != net.output_dim() {
        return Err(OracleError::InvalidInput(
            "direction length does not match output dimension".into(),
        ));
    }
    input
        .validate(net.input_dim())
        .map_err(|e| OracleError::InvalidInput(e.to_string()))?;
    let n = net.total_neurons();
    let total: u128 = if n < 127 { 1u128 << n } else { u128::MAX };
    let visits = total.min(cap.max(1) as u128) as u64;
    let status = if (visits as u128) == total {
        OracleStatus::Exact
    } else {
        OracleStatus::Capped
    };

    let opts = SolveOptions {
        tol: 1e-9,
        max_iter: 200,
        trace: false,
    };
    let mut best: Option<(f64, Vec<f64>, u64)> = None;
    let mut solved = 0usize;
    for pattern in 0..visits {
        let (prob, const_term) = pattern_subproblem(net, input, c, pattern);
        let sol = solve(&prob, &opts).expect("pattern subproblem is well-formed");
        solved += 1;
        let usable = match sol.status {
            SolveStatus::Optimal => true,
            SolveStatus::MaxIter | SolveStatus::NumericalFail => {
                sol.residuals.primal_feas <= 1e-7 && sol.residuals.gap <= 1e-7
            }
            SolveStatus::InfeasiblePrimal | SolveStatus::InfeasibleDual => false,
        };
        if !usable {
            continue;
        }
        let value = sol.primal_obj + const_term;
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, sol.dense_value(0).to_vec(), pattern));
        }
    }

    let (opt_value, argmin_x0, pattern_bits) = best.ok_or(OracleError::EmptyInput)?;
    let pattern = (0..n).map(|i| (pattern_bits >> i) & 1 == 1).collect();
    Ok(OracleResult {
        opt_value,
        argmin_x0,
        pattern,
        subproblems_solved: solved,
        status,
    })
}

/// Minimum of 2cᵀf(x) over `n_samples` seeded uniform draws from the input
/// region. Always an upper bound on the exact minimum; +∞ for zero samples.
pub fn sample_bound(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    n_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..n_samples {
        let x = input.sample(&mut rng);
        let y = net.forward(&x).expect("sample matches input dimension");
        best = best.min(2.0 * crate::linalg::dot(c, &y));
    }
    best
}
