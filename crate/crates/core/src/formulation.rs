//! Builds every coefficient matrix of the relaxation: per-neuron ReLU
//! quadratic constraints, input-set generator matrices, pairwise
//! repeated-nonlinearity cuts, and the block lifting maps — then assembles
//! the primal semidefinite relaxation and the DeepSDP dual as standard-form
//! conic programs.
//!
//! Lifted coordinates are [1; x⁰; x¹; …; x^L] of dimension 1 + n₀ + N,
//! where N is the total neuron count.

use crate::conic::{to_standard_form, Coeff, ConeBlock, ConicProblem, LinRow};
use crate::linalg::{Mat, SymMat};
use crate::network::{InputSet, ReluNetwork};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

/// A single lifted constraint ⟨matrix, G⟩ (= | ≤) rhs.
#[derive(Debug, Clone)]
pub struct LiftedConstraint {
    pub matrix: SymMat,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

/// Block embedding data shared by the three lifting maps.
///
/// `w_bar`/`b_bar` express the stacked pre-activations as an affine map of
/// [x⁰; …; x^L]; `e_bar` selects the stacked activations.
#[derive(Debug, Clone)]
pub struct LiftingMaps {
    pub n0: usize,
    pub n_out: usize,
    pub total_neurons: usize,
    pub w_bar: Mat,
    pub b_bar: Vec<f64>,
    pub e_bar: Mat,
    b_in: Mat,
    b_mid: Mat,
    b_out: Mat,
}

impl LiftingMaps {
    pub fn new(net: &ReluNetwork) -> LiftingMaps {
        let n0 = net.input_dim();
        let n_out = net.output_dim();
        let depth = net.depth();
        let n_total = net.total_neurons();
        let var_dim = n0 + n_total; // [x⁰; x¹; …; x^L]
        let lifted = 1 + var_dim;

        // offsets of x^k within the variable stack (x⁰ at 0)
        let mut offsets = vec![0usize; depth + 1];
        offsets[0] = 0;
        for k in 0..depth {
            offsets[k + 1] = if k == 0 {
                n0
            } else {
                offsets[k] + net.hidden_dim(k - 1)
            };
        }

        let mut w_bar = Mat::zeros(n_total, var_dim);
        let mut b_bar = vec![0.0; n_total];
        let mut e_bar = Mat::zeros(n_total, var_dim);
        let mut row = 0usize;
        for k in 0..depth {
            let layer = &net.layers()[k];
            for i in 0..layer.out_dim() {
                for j in 0..layer.in_dim() {
                    w_bar.set(row + i, offsets[k] + j, layer.w.get(i, j));
                }
                b_bar[row + i] = layer.b[i];
                e_bar.set(row + i, offsets[k + 1] + i, 1.0);
            }
            row += layer.out_dim();
        }

        let mut b_in = Mat::zeros(1 + n0, lifted);
        b_in.set(0, 0, 1.0);
        for j in 0..n0 {
            b_in.set(1 + j, 1 + j, 1.0);
        }

        let mut b_mid = Mat::zeros(1 + 2 * n_total, lifted);
        b_mid.set(0, 0, 1.0);
        for i in 0..n_total {
            b_mid.set(1 + i, 0, b_bar[i]);
            for j in 0..var_dim {
                b_mid.set(1 + i, 1 + j, w_bar.get(i, j));
                b_mid.set(1 + n_total + i, 1 + j, e_bar.get(i, j));
            }
        }

        let last = net.layers().last().unwrap();
        let last_in_offset = offsets[depth];
        let mut b_out = Mat::zeros(1 + n0 + n_out, lifted);
        b_out.set(0, 0, 1.0);
        for j in 0..n0 {
            b_out.set(1 + j, 1 + j, 1.0);
        }
        for i in 0..n_out {
            b_out.set(1 + n0 + i, 0, last.b[i]);
            for j in 0..last.in_dim() {
                b_out.set(1 + n0 + i, 1 + last_in_offset + j, last.w.get(i, j));
            }
        }

        LiftingMaps {
            n0,
            n_out,
            total_neurons: n_total,
            w_bar,
            b_bar,
            e_bar,
            b_in,
            b_mid,
            b_out,
        }
    }

    pub fn lifted_dim(&self) -> usize {
        1 + self.n0 + self.total_neurons
    }
}

/// Congruence through the input embedding: pads an input-space quadratic
/// form with zeros over the neuron block.
pub fn lift_in(m: &SymMat, maps: &LiftingMaps) -> Result<SymMat, FormulationError> {
    if m.dim() != 1 + maps.n0 {
        return Err(FormulationError::InvalidInput(format!(
            "lift_in expects dim {}, got {}",
            1 + maps.n0,
            m.dim()
        )));
    }
    Ok(m.congruence(&maps.b_in))
}

/// Congruence through the pre-activation/activation embedding
/// [1; w; φ(w)] = B·[1; x⁰; …; x^L].
pub fn lift_mid(m: &SymMat, maps: &LiftingMaps) -> Result<SymMat, FormulationError> {
    if m.dim() != 1 + 2 * maps.total_neurons {
        return Err(FormulationError::InvalidInput(format!(
            "lift_mid expects dim {}, got {}",
            1 + 2 * maps.total_neurons,
            m.dim()
        )));
    }
    Ok(m.congruence(&maps.b_mid))
}

/// Congruence through the output embedding [1; x⁰; W^L x^L + b^L].
/// Reduces to the identity when the last layer is the identity.
pub fn lift_out(m: &SymMat, maps: &LiftingMaps) -> Result<SymMat, FormulationError> {
    if m.dim() != 1 + maps.n0 + maps.n_out {
        return Err(FormulationError::InvalidInput(format!(
            "lift_out expects dim {}, got {}",
            1 + maps.n0 + maps.n_out,
            m.dim()
        )));
    }
    Ok(m.congruence(&maps.b_out))
}

/// Raw (unlifted) quadratic forms on [1; w; φ] for neuron `i` of `n` total.
fn relu_q_matrices(i: usize, n: usize) -> (SymMat, SymMat, SymMat) {
    let dim = 1 + 2 * n;
    // complementarity: φ_i(φ_i − w_i) = 0
    let mut qa = SymMat::zeros(dim);
    qa.set(1 + n + i, 1 + n + i, 2.0);
    qa.set(1 + i, 1 + n + i, -1.0);
    // value bound: φ_i ≥ w_i written as 2w_i − 2φ_i ≤ 0
    let mut qb = SymMat::zeros(dim);
    qb.set(0, 1 + i, 1.0);
    qb.set(0, 1 + n + i, -1.0);
    // sign bound: φ_i ≥ 0 written as −2φ_i ≤ 0
    let mut qc = SymMat::zeros(dim);
    qc.set(0, 1 + n + i, -1.0);
    (qa, qb, qc)
}

/// The 3N lifted ReLU constraints: per neuron one equality
/// (complementarity) and two inequalities (φ ≥ w and φ ≥ 0).
pub fn relu_constraints(net: &ReluNetwork) -> Vec<LiftedConstraint> {
    let maps = LiftingMaps::new(net);
    relu_constraints_with(&maps)
}

pub fn relu_constraints_with(maps: &LiftingMaps) -> Vec<LiftedConstraint> {
    let n = maps.total_neurons;
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (qa, qb, qc) = relu_q_matrices(i, n);
        out.push(LiftedConstraint {
            matrix: lift_mid(&qa, maps).unwrap(),
            sense: Sense::Eq,
            rhs: 0.0,
            tag: format!("relu_complementarity[{i}]"),
        });
        out.push(LiftedConstraint {
            matrix: lift_mid(&qb, maps).unwrap(),
            sense: Sense::Le,
            rhs: 0.0,
            tag: format!("relu_geq_preactivation[{i}]"),
        });
        out.push(LiftedConstraint {
            matrix: lift_mid(&qc, maps).unwrap(),
            sense: Sense::Le,
            rhs: 0.0,
            tag: format!("relu_nonneg[{i}]"),
        });
    }
    out
}

/// Finite generator matrices of the input region, normalized to unit
/// multipliers: one matrix for interval/ellipsoid inputs, n₀ matrices for
/// rectangles. Each satisfies [1; x]ᵀ P [1; x] ≤ 0 on the region.
pub fn input_generators(input: &InputSet, n0: usize) -> Vec<SymMat> {
    match input {
        InputSet::Interval { lo, hi } => {
            debug_assert_eq!(n0, 1);
            let mut p = SymMat::zeros(2);
            p.set(0, 0, 2.0 * lo * hi);
            p.set(0, 1, -(lo + hi));
            p.set(1, 1, 2.0);
            vec![p]
        }
        InputSet::Ellipsoid { center, radius } => {
            let n = center.len();
            let mut p = SymMat::zeros(1 + n);
            p.set(0, 0, crate::linalg::dot(center, center) - radius * radius);
            for j in 0..n {
                p.set(0, 1 + j, -center[j]);
                p.set(1 + j, 1 + j, 1.0);
            }
            vec![p]
        }
        InputSet::Rectangle { center, radii } => {
            let n = center.len();
            (0..n)
                .map(|j| {
                    let mut p = SymMat::zeros(1 + n);
                    p.set(0, 0, center[j] * center[j] - radii[j] * radii[j]);
                    p.set(0, 1 + j, -center[j]);
                    p.set(1 + j, 1 + j, 1.0);
                    p
                })
                .collect()
        }
    }
}

/// Pairwise valid cuts between neurons sharing the ReLU nonlinearity.
/// Empty for N = 1.
pub fn repeated_nonlinearity_cuts(net: &ReluNetwork) -> Vec<LiftedConstraint> {
    let maps = LiftingMaps::new(net);
    repeated_nonlinearity_cuts_with(&maps)
}

pub fn repeated_nonlinearity_cuts_with(maps: &LiftingMaps) -> Vec<LiftedConstraint> {
    let n = maps.total_neurons;
    let dim = 1 + 2 * n;
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut q = SymMat::zeros(dim);
            // D = e_i − e_j; blocks −DDᵀ (w,φ) and 2DDᵀ (φ,φ)
            let upper = [(i, i, 1.0), (j, j, 1.0), (i, j, -1.0)];
            for &(a, b, v) in &upper {
                q.set(1 + n + a, 1 + n + b, 2.0 * v);
                q.set(1 + a, 1 + n + b, -v);
                q.set(1 + b, 1 + n + a, -v);
            }
            out.push(LiftedConstraint {
                matrix: lift_mid(&q, maps).unwrap(),
                sense: Sense::Le,
                rhs: 0.0,
                tag: format!("cut[{i},{j}]"),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FormulationOptions {
    pub cuts: bool,
}

/// Objective matrix on the output space encoding 2cᵀy (the half-space
/// pattern with zero offset).
pub fn objective_matrix(c: &[f64], n0: usize) -> SymMat {
    let n_out = c.len();
    let mut h = SymMat::zeros(1 + n0 + n_out);
    for (i, &ci) in c.iter().enumerate() {
        h.set(0, 1 + n0 + i, ci);
    }
    h
}

/// Everything needed to assemble (and re-assemble, with a modified
/// objective or extra rows) the primal relaxation of one direction.
#[derive(Debug, Clone)]
pub struct PrimalParts {
    pub maps: LiftingMaps,
    pub objective: SymMat,
    pub constraints: Vec<LiftedConstraint>,
}

pub fn primal_parts(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    opts: FormulationOptions,
) -> Result<PrimalParts, FormulationError> {
    if c.len() != net.output_dim() {
        return Err(FormulationError::InvalidInput(format!(
            "direction length {} does not match output dim {}",
            c.len(),
            net.output_dim()
        )));
    }
    input
        .validate(net.input_dim())
        .map_err(|e| FormulationError::InvalidInput(e.to_string()))?;
    let maps = LiftingMaps::new(net);
    let mut constraints = Vec::new();
    for (j, p) in input_generators(input, maps.n0).iter().enumerate() {
        constraints.push(LiftedConstraint {
            matrix: lift_in(p, &maps)?,
            sense: Sense::Le,
            rhs: 0.0,
            tag: format!("input_gen[{j}]"),
        });
    }
    constraints.extend(relu_constraints_with(&maps));
    if opts.cuts {
        constraints.extend(repeated_nonlinearity_cuts_with(&maps));
    }
    let objective = lift_out(&objective_matrix(c, maps.n0), &maps)?;
    Ok(PrimalParts {
        maps,
        objective,
        constraints,
    })
}

/// Assembles the parts into a standard-form conic program: one PSD block G
/// with the corner pinned to 1 by an equality row, equality rows for EQ
/// constraints, and slack-backed rows for LE constraints. The conic optimum
/// equals 2cᵀx¹ at the minimum, i.e. twice the reported half-space offset.
pub fn assemble_primal(parts: &PrimalParts) -> ConicProblem {
    let dim = parts.maps.lifted_dim();
    let blocks = vec![ConeBlock::psd(dim, "G")];
    let objective = vec![Coeff::Sym(parts.objective.clone())];

    let mut corner = SymMat::zeros(dim);
    corner.set(0, 0, 1.0);
    let mut eq = vec![LinRow::single(&blocks, 0, Coeff::Sym(corner), 1.0)];
    let mut ineq = Vec::new();
    for con in &parts.constraints {
        let row = LinRow::single(&blocks, 0, Coeff::Sym(con.matrix.clone()), con.rhs);
        match con.sense {
            Sense::Eq => eq.push(row),
            Sense::Le => ineq.push(row),
        }
    }
    to_standard_form(blocks, objective, eq, ineq)
}

/// Builds the primal semidefinite relaxation for one half-space direction.
pub fn build_primal_relaxation(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    opts: FormulationOptions,
) -> Result<ConicProblem, FormulationError> {
    Ok(assemble_primal(&primal_parts(net, input, c, opts)?))
}

/// Names of the multiplier blocks of the dual program.
pub mod dual_blocks {
    pub const LMI: &str = "R";
    pub const GAMMA: &str = "gamma";
    pub const LAMBDA: &str = "lambda";
    pub const NU: &str = "nu";
    pub const ETA: &str = "eta";
    pub const MU: &str = "mu";
    pub const OFFSET: &str = "d";
}

/// Builds the DeepSDP dual for a single-layer network: maximize 2d over
/// nonnegative multipliers (γ for the input generators, λ/ν/η per neuron,
/// μ per cut pair when enabled) and free offset d, subject to the linear
/// matrix inequality tying them to the lifted constraint matrices.
///
/// Returned in minimization form (objective −2d); the optimal half-space
/// offset is d* = −(conic optimum)/2.
pub fn build_deepsdp_dual(
    net: &ReluNetwork,
    input: &InputSet,
    c: &[f64],
    opts: FormulationOptions,
) -> Result<ConicProblem, FormulationError> {
    if net.depth() != 1 {
        return Err(FormulationError::InvalidInput(
            "explicit dual assembly is restricted to single-layer networks".into(),
        ));
    }
    let parts = primal_parts(net, input, c, opts)?;
    let maps = &parts.maps;
    let n = maps.total_neurons;
    let dim = maps.lifted_dim();

    let gamma_mats: Vec<&SymMat> = parts
        .constraints
        .iter()
        .filter(|c| c.tag.starts_with("input_gen"))
        .map(|c| &c.matrix)
        .collect();
    let lambda_mats: Vec<&SymMat> = parts
        .constraints
        .iter()
        .filter(|c| c.tag.starts_with("relu_complementarity"))
        .map(|c| &c.matrix)
        .collect();
    let nu_mats: Vec<&SymMat> = parts
        .constraints
        .iter()
        .filter(|c| c.tag.starts_with("relu_geq_preactivation"))
        .map(|c| &c.matrix)
        .collect();
    let eta_mats: Vec<&SymMat> = parts
        .constraints
        .iter()
        .filter(|c| c.tag.starts_with("relu_nonneg"))
        .map(|c| &c.matrix)
        .collect();
    let mu_mats: Vec<&SymMat> = parts
        .constraints
        .iter()
        .filter(|c| c.tag.starts_with("cut"))
        .map(|c| &c.matrix)
        .collect();

    let mut blocks = vec![
        ConeBlock::psd(dim, dual_blocks::LMI),
        ConeBlock::nonneg(gamma_mats.len(), dual_blocks::GAMMA),
        ConeBlock::nonneg(n, dual_blocks::LAMBDA),
        ConeBlock::nonneg(n, dual_blocks::NU),
        ConeBlock::nonneg(n, dual_blocks::ETA),
    ];
    if !mu_mats.is_empty() {
        blocks.push(ConeBlock::nonneg(mu_mats.len(), dual_blocks::MU));
    }
    blocks.push(ConeBlock::free(1, dual_blocks::OFFSET));

    let mut objective: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
    let d_idx = blocks.len() - 1;
    objective[d_idx] = Coeff::Dense(vec![-2.0]);

    // One equality row per upper-triangular entry of the LMI:
    //   Z_ij − Σ multipliers·M_ij + 2d·[corner]_ij = [objective matrix]_ij
    let mut rows = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in 0..=i {
            let mut coeffs: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
            coeffs[0] = Coeff::Sym(crate::conic::sym_basis(dim, i, j));
            coeffs[1] = Coeff::Dense(gamma_mats.iter().map(|m| -m.get(i, j)).collect());
            coeffs[2] = Coeff::Dense(lambda_mats.iter().map(|m| -m.get(i, j)).collect());
            coeffs[3] = Coeff::Dense(nu_mats.iter().map(|m| -m.get(i, j)).collect());
            coeffs[4] = Coeff::Dense(eta_mats.iter().map(|m| -m.get(i, j)).collect());
            if !mu_mats.is_empty() {
                coeffs[5] = Coeff::Dense(mu_mats.iter().map(|m| -m.get(i, j)).collect());
            }
            coeffs[d_idx] = Coeff::Dense(vec![if i == 0 && j == 0 { 2.0 } else { 0.0 }]);
            rows.push(LinRow {
                coeffs,
                rhs: parts.objective.get(i, j),
            });
        }
    }

    Ok(ConicProblem {
        blocks,
        objective,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, SolveOptions};
    use crate::network::Layer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_neuron_interval(b0: f64, lo: f64, hi: f64) -> (ReluNetwork, InputSet) {
        (
            ReluNetwork::single_neuron(b0),
            InputSet::Interval { lo, hi },
        )
    }

    /// Lifted coordinates [1; x⁰; activations] of a forward pass.
    fn lifted_point(net: &ReluNetwork, x0: &[f64]) -> Vec<f64> {
        let trace = net.forward_trace(x0).unwrap();
        let mut z = vec![1.0];
        z.extend_from_slice(&trace.input);
        z.extend_from_slice(&trace.activations);
        z
    }

    #[test]
    fn relu_constraint_count() {
        let net = ReluNetwork::single_neuron(0.0);
        assert_eq!(relu_constraints(&net).len(), 3);
    }

    #[test]
    fn single_neuron_complementarity_pattern() {
        let net = ReluNetwork::single_neuron(0.0);
        let cons = relu_constraints(&net);
        let comp = &cons[0];
        assert_eq!(comp.tag, "relu_complementarity[0]");
        assert_eq!(comp.sense, Sense::Eq);
        let expect = SymMat::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        assert!(comp.matrix.add(&expect.scale(-1.0)).frob_norm() <= 1e-14);
    }

    #[test]
    fn single_neuron_complementarity_with_bias() {
        let net = ReluNetwork::single_neuron(0.7);
        let comp = &relu_constraints(&net)[0];
        let expect = SymMat::from_rows(&[
            vec![0.0, 0.0, -0.7],
            vec![0.0, 0.0, -1.0],
            vec![-0.7, -1.0, 2.0],
        ]);
        assert!(comp.matrix.add(&expect.scale(-1.0)).frob_norm() <= 1e-14);
    }

    #[test]
    fn interval_generator_matches_closed_form() {
        let gens = input_generators(&InputSet::Interval { lo: -1.0, hi: 3.0 }, 1);
        assert_eq!(gens.len(), 1);
        let expect = SymMat::from_rows(&[vec![-6.0, -2.0], vec![-2.0, 2.0]]);
        assert!(gens[0].add(&expect.scale(-1.0)).frob_norm() <= 1e-14);
    }

    #[test]
    fn unit_ball_generator() {
        let gens = input_generators(
            &InputSet::Ellipsoid {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            2,
        );
        let expect = SymMat::from_rows(&[
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert!(gens[0].add(&expect.scale(-1.0)).frob_norm() <= 1e-14);
    }

    #[test]
    fn generators_nonpositive_on_samples() {
        let sets = [
            InputSet::Interval { lo: -1.0, hi: 3.0 },
            InputSet::Rectangle {
                center: vec![1.0, -1.0],
                radii: vec![0.5, 0.5],
            },
            InputSet::Ellipsoid {
                center: vec![0.3, 0.7],
                radius: 1.2,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for set in &sets {
            let n0 = set.dim();
            let gens = input_generators(set, n0);
            for _ in 0..1000 {
                let x = set.sample(&mut rng);
                let mut z = vec![1.0];
                z.extend_from_slice(&x);
                for p in &gens {
                    assert!(p.quad_form(&z) <= 1e-9, "{set:?}");
                }
            }
        }
    }

    #[test]
    fn cuts_empty_for_single_neuron() {
        let net = ReluNetwork::single_neuron(0.0);
        assert!(repeated_nonlinearity_cuts(&net).is_empty());
    }

    #[test]
    fn cuts_count_pairs() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(3), vec![0.0; 3]).unwrap(),
            Layer::new(Mat::identity(3), vec![0.0; 3]).unwrap(),
        ])
        .unwrap();
        assert_eq!(repeated_nonlinearity_cuts(&net).len(), 3);
    }

    fn random_net(rng: &mut ChaCha8Rng, dims: &[usize]) -> ReluNetwork {
        let mut layers = Vec::new();
        for k in 0..dims.len() - 1 {
            let w = Mat::from_fn(dims[k + 1], dims[k], |_, _| rng.gen_range(-1.0..1.0));
            let b = (0..dims[k + 1]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            layers.push(Layer::new(w, b).unwrap());
        }
        ReluNetwork::new(layers).unwrap()
    }

    #[test]
    fn constraints_hold_on_lifted_forward_traces() {
        // EQ rows vanish and LE rows stay nonpositive on lifted rank-1
        // points, for both one- and two-layer networks.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dims in [vec![2usize, 2, 2], vec![2, 3, 2, 1]] {
            let net = random_net(&mut rng, &dims);
            let input = InputSet::Rectangle {
                center: vec![0.2; dims[0]],
                radii: vec![1.0; dims[0]],
            };
            let maps = LiftingMaps::new(&net);
            let mut cons = relu_constraints_with(&maps);
            cons.extend(repeated_nonlinearity_cuts_with(&maps));
            for (j, p) in input_generators(&input, maps.n0).iter().enumerate() {
                cons.push(LiftedConstraint {
                    matrix: lift_in(p, &maps).unwrap(),
                    sense: Sense::Le,
                    rhs: 0.0,
                    tag: format!("input_gen[{j}]"),
                });
            }
            for _ in 0..1000 {
                let x = input.sample(&mut rng);
                let z = lifted_point(&net, &x);
                for con in &cons {
                    let v = con.matrix.quad_form(&z);
                    match con.sense {
                        Sense::Eq => assert!(v.abs() <= 1e-9, "{} -> {v}", con.tag),
                        Sense::Le => assert!(v <= 1e-9, "{} -> {v}", con.tag),
                    }
                }
            }
        }
    }

    #[test]
    fn lift_in_pads_neuron_block_with_zeros() {
        let net = ReluNetwork::single_neuron(0.0);
        let maps = LiftingMaps::new(&net);
        let p = SymMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]);
        let lifted = lift_in(&p, &maps).unwrap();
        assert_eq!(lifted.dim(), 3);
        for k in 0..3 {
            assert_eq!(lifted.get(2, k), 0.0);
        }
        assert_eq!(lifted.get(0, 0), 1.0);
        assert_eq!(lifted.get(1, 1), 3.0);
    }

    #[test]
    fn lift_out_is_identity_under_identity_last_layer() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(2), vec![0.1, -0.3]).unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let maps = LiftingMaps::new(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SymMat::from_raw(5, (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let lifted = lift_out(&s, &maps).unwrap();
        assert!(lifted.add(&s.scale(-1.0)).frob_norm() <= 1e-13);
    }

    #[test]
    fn lift_dimension_mismatch_is_rejected() {
        let net = ReluNetwork::single_neuron(0.0);
        let maps = LiftingMaps::new(&net);
        assert!(lift_in(&SymMat::identity(5), &maps).is_err());
        assert!(lift_mid(&SymMat::identity(5), &maps).is_err());
        assert!(lift_out(&SymMat::identity(5), &maps).is_err());
    }

    #[test]
    fn primal_relaxation_single_neuron_values() {
        let opts = SolveOptions::default();
        // φ([−1,3]) = [0,3]: min 2y = 0, min −2y = −6
        let (net, input) = single_neuron_interval(0.0, -1.0, 3.0);
        let p =
            build_primal_relaxation(&net, &input, &[1.0], FormulationOptions::default()).unwrap();
        let sol = solve(&p, &opts).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.primal_obj.abs() <= 1e-6, "{}", sol.primal_obj);

        let p =
            build_primal_relaxation(&net, &input, &[-1.0], FormulationOptions::default()).unwrap();
        let sol = solve(&p, &opts).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.primal_obj + 6.0).abs() <= 1e-6, "{}", sol.primal_obj);

        // ReLU is the identity on [1,2]: min 2y = 2
        let (net, input) = single_neuron_interval(0.0, 1.0, 2.0);
        let p =
            build_primal_relaxation(&net, &input, &[1.0], FormulationOptions::default()).unwrap();
        let sol = solve(&p, &opts).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.primal_obj - 2.0).abs() <= 1e-6, "{}", sol.primal_obj);
    }

    #[test]
    fn dual_matches_primal_on_single_neuron() {
        let opts = SolveOptions::default();
        let (net, input) = single_neuron_interval(0.0, -1.0, 3.0);
        let d = build_deepsdp_dual(&net, &input, &[1.0], FormulationOptions::default()).unwrap();
        let sol = solve(&d, &opts).unwrap();
        assert!(sol.is_optimal());
        // max 2d = 0 for the lower bound of φ([−1,3])
        assert!(sol.primal_obj.abs() <= 1e-6);

        let d = build_deepsdp_dual(&net, &input, &[-1.0], FormulationOptions::default()).unwrap();
        let sol = solve(&d, &opts).unwrap();
        assert!(sol.is_optimal());
        let max_form = -sol.primal_obj;
        assert!((max_form + 6.0).abs() <= 1e-6, "{max_form}");
    }

    #[test]
    fn dual_offset_is_sound_on_samples() {
        let opts = SolveOptions::default();
        let (net, input) = single_neuron_interval(0.4, -1.5, 2.0);
        for c in [1.0, -1.0] {
            let d = build_deepsdp_dual(&net, &input, &[c], FormulationOptions::default()).unwrap();
            let sol = solve(&d, &opts).unwrap();
            assert!(sol.is_optimal());
            let d_star = -sol.primal_obj / 2.0;
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..1000 {
                let x = input.sample(&mut rng);
                let y = net.forward(&x).unwrap();
                assert!(c * y[0] >= d_star - 1e-6);
            }
        }
    }

    #[test]
    fn cuts_are_inert_for_single_neuron() {
        let opts = SolveOptions::default();
        let (net, input) = single_neuron_interval(0.0, -1.0, 3.0);
        let base =
            build_deepsdp_dual(&net, &input, &[1.0], FormulationOptions { cuts: false }).unwrap();
        let cut =
            build_deepsdp_dual(&net, &input, &[1.0], FormulationOptions { cuts: true }).unwrap();
        let a = solve(&base, &opts).unwrap();
        let b = solve(&cut, &opts).unwrap();
        assert!((a.primal_obj - b.primal_obj).abs() <= 1e-7);
    }
}
