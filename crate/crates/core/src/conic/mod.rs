//! Standard-form conic programs and their primal-dual solutions.
//!
//! A problem is
//!
//! ```text
//! minimize    Σ_B ⟨c_B, x_B⟩
//! subject to  Σ_B ⟨a_{k,B}, x_B⟩ = b_k,   k = 1..m
//!             x_B in cone(B) for every block B
//! ```
//!
//! with blocks drawn from PSD(dim), NONNEG(len), and FREE(len). Inequality
//! rows enter through [`to_standard_form`], which appends a NONNEG slack
//! block. The solver lives in [`solver`].

mod solver;

pub use solver::solve;

use crate::linalg::SymMat;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// Symmetric basis element with ⟨basis(i,j), Z⟩ = Z_ij for symmetric Z.
pub fn sym_basis(dim: usize, i: usize, j: usize) -> SymMat {
    let mut b = SymMat::zeros(dim);
    b.set(i, j, if i == j { 1.0 } else { 0.5 });
    b
}

/// Cone of one variable block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockKind {
    Psd(usize),
    Nonneg(usize),
    Free(usize),
}

impl BlockKind {
    /// Scalar degrees of freedom of the block (full matrix entries are not
    /// counted twice; a PSD(d) block has d(d+1)/2).
    pub fn tri_len(&self) -> usize {
        match self {
            BlockKind::Psd(d) => d * (d + 1) / 2,
            BlockKind::Nonneg(l) | BlockKind::Free(l) => *l,
        }
    }
}

/// A variable block plus a short label for diagnostics.
#[derive(Debug, Clone)]
pub struct ConeBlock {
    pub kind: BlockKind,
    pub label: String,
}

impl ConeBlock {
    pub fn psd(dim: usize, label: &str) -> Self {
        ConeBlock {
            kind: BlockKind::Psd(dim),
            label: label.to_string(),
        }
    }

    pub fn nonneg(len: usize, label: &str) -> Self {
        ConeBlock {
            kind: BlockKind::Nonneg(len),
            label: label.to_string(),
        }
    }

    pub fn free(len: usize, label: &str) -> Self {
        ConeBlock {
            kind: BlockKind::Free(len),
            label: label.to_string(),
        }
    }
}

/// Per-block coefficient: a symmetric matrix for PSD blocks, a dense vector
/// for NONNEG and FREE blocks.
#[derive(Debug, Clone)]
pub enum Coeff {
    Sym(SymMat),
    Dense(Vec<f64>),
}

impl Coeff {
    pub fn zero_for(kind: &BlockKind) -> Coeff {
        match kind {
            BlockKind::Psd(d) => Coeff::Sym(SymMat::zeros(*d)),
            BlockKind::Nonneg(l) | BlockKind::Free(l) => Coeff::Dense(vec![0.0; *l]),
        }
    }

    pub fn matches(&self, kind: &BlockKind) -> bool {
        match (self, kind) {
            (Coeff::Sym(m), BlockKind::Psd(d)) => m.dim() == *d,
            (Coeff::Dense(v), BlockKind::Nonneg(l)) | (Coeff::Dense(v), BlockKind::Free(l)) => {
                v.len() == *l
            }
            _ => false,
        }
    }

    pub fn as_sym(&self) -> &SymMat {
        match self {
            Coeff::Sym(m) => m,
            Coeff::Dense(_) => panic!("expected symmetric-matrix coefficient"),
        }
    }

    pub fn as_dense(&self) -> &[f64] {
        match self {
            Coeff::Dense(v) => v,
            Coeff::Sym(_) => panic!("expected dense-vector coefficient"),
        }
    }

    /// Frobenius/dot pairing against a value of the same shape.
    pub fn inner(&self, other: &Coeff) -> f64 {
        match (self, other) {
            (Coeff::Sym(a), Coeff::Sym(b)) => a.inner(b),
            (Coeff::Dense(a), Coeff::Dense(b)) => crate::linalg::dot(a, b),
            _ => panic!("coefficient shape mismatch"),
        }
    }
}

/// One linear row Σ_B ⟨coeffs[B], x_B⟩ (= or ≤) rhs.
#[derive(Debug, Clone)]
pub struct LinRow {
    pub coeffs: Vec<Coeff>,
    pub rhs: f64,
}

impl LinRow {
    /// A row touching a single block, zero elsewhere.
    pub fn single(blocks: &[ConeBlock], idx: usize, coeff: Coeff, rhs: f64) -> Self {
        let mut coeffs: Vec<Coeff> = blocks.iter().map(|b| Coeff::zero_for(&b.kind)).collect();
        coeffs[idx] = coeff;
        LinRow { coeffs, rhs }
    }
}

/// Minimization-sense standard-form conic program.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub blocks: Vec<ConeBlock>,
    pub objective: Vec<Coeff>,
    pub rows: Vec<LinRow>,
}

impl ConicProblem {
    pub fn validate(&self) -> Result<(), ConicError> {
        if self.blocks.is_empty() {
            return Err(ConicError::InvalidProblem("no blocks".into()));
        }
        for b in &self.blocks {
            if b.kind.tri_len() == 0 {
                return Err(ConicError::InvalidProblem(format!(
                    "block '{}' has zero size",
                    b.label
                )));
            }
        }
        if self.objective.len() != self.blocks.len() {
            return Err(ConicError::InvalidProblem(
                "objective does not cover every block".into(),
            ));
        }
        for (c, b) in self.objective.iter().zip(&self.blocks) {
            if !c.matches(&b.kind) {
                return Err(ConicError::InvalidProblem(format!(
                    "objective shape mismatch on block '{}'",
                    b.label
                )));
            }
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != self.blocks.len() {
                return Err(ConicError::InvalidProblem(format!(
                    "row {k} does not cover every block"
                )));
            }
            for (c, b) in row.coeffs.iter().zip(&self.blocks) {
                if !c.matches(&b.kind) {
                    return Err(ConicError::InvalidProblem(format!(
                        "row {k} shape mismatch on block '{}'",
                        b.label
                    )));
                }
            }
            if !row.rhs.is_finite() {
                return Err(ConicError::InvalidProblem(format!(
                    "row {k} rhs not finite"
                )));
            }
        }
        Ok(())
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }
}

/// Turns a block structure with both inequality (≤) and equality rows into
/// pure equality standard form by appending one NONNEG slack block.
///
/// Slack values at a solution equal `rhs − ⟨a_k, x⟩` for each inequality row.
/// With no inequalities the problem is returned unchanged.
pub fn to_standard_form(
    blocks: Vec<ConeBlock>,
    objective: Vec<Coeff>,
    eq_constraints: Vec<LinRow>,
    ineq_constraints: Vec<LinRow>,
) -> ConicProblem {
    if ineq_constraints.is_empty() {
        return ConicProblem {
            blocks,
            objective,
            rows: eq_constraints,
        };
    }
    let n_slack = ineq_constraints.len();
    let mut blocks = blocks;
    blocks.push(ConeBlock::nonneg(n_slack, "slack"));
    let mut objective = objective;
    objective.push(Coeff::Dense(vec![0.0; n_slack]));

    let mut rows = Vec::with_capacity(eq_constraints.len() + n_slack);
    for mut row in eq_constraints {
        row.coeffs.push(Coeff::Dense(vec![0.0; n_slack]));
        rows.push(row);
    }
    for (k, mut row) in ineq_constraints.into_iter().enumerate() {
        let mut slack = vec![0.0; n_slack];
        slack[k] = 1.0;
        row.coeffs.push(Coeff::Dense(slack));
        rows.push(row);
    }
    ConicProblem {
        blocks,
        objective,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    InfeasiblePrimal,
    InfeasibleDual,
    MaxIter,
    NumericalFail,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub primal_feas: f64,
    pub dual_feas: f64,
    pub gap: f64,
}

/// One line of the optional iteration trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub mu: f64,
    pub primal_feas: f64,
    pub dual_feas: f64,
    pub gap: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 200,
            trace: false,
        }
    }
}

/// Primal-dual solution. Block values mirror the problem's block list;
/// `eq_duals` pairs with the rows. Weak duality holds on OPTIMAL exits:
/// `dual_obj ≤ primal_obj + tol·(1+|primal_obj|)`.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: Vec<Coeff>,
    pub dual_slack: Vec<Coeff>,
    pub eq_duals: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

impl ConicSolution {
    pub fn psd_value(&self, block: usize) -> &SymMat {
        self.primal[block].as_sym()
    }

    pub fn dense_value(&self, block: usize) -> &[f64] {
        self.primal[block].as_dense()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psd_only(dim: usize) -> Vec<ConeBlock> {
        vec![ConeBlock::psd(dim, "X")]
    }

    #[test]
    fn standard_form_appends_slack() {
        let blocks = psd_only(2);
        let obj = vec![Coeff::Sym(SymMat::identity(2))];
        let ineq = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::identity(2)),
            2.0,
        )];
        let prob = to_standard_form(blocks, obj, vec![], ineq);
        assert_eq!(prob.blocks.len(), 2);
        assert!(matches!(prob.blocks[1].kind, BlockKind::Nonneg(1)));
        assert_eq!(prob.rows.len(), 1);
        assert_eq!(prob.rows[0].rhs, 2.0);
        // slack coefficient is the appended identity entry
        assert_eq!(prob.rows[0].coeffs[1].as_dense(), &[1.0]);
        prob.validate().unwrap();
    }

    #[test]
    fn standard_form_identity_when_no_inequalities() {
        let blocks = psd_only(2);
        let obj = vec![Coeff::Sym(SymMat::identity(2))];
        let eq = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::outer(&[1.0, 0.0])),
            1.0,
        )];
        let prob = to_standard_form(blocks, obj, eq, vec![]);
        assert_eq!(prob.blocks.len(), 1);
        assert_eq!(prob.rows.len(), 1);
        prob.validate().unwrap();
    }

    #[test]
    fn standard_form_counts_slacks() {
        let blocks = psd_only(3);
        let obj = vec![Coeff::Sym(SymMat::identity(3))];
        let m = 5;
        let ineq: Vec<LinRow> = (0..m)
            .map(|k| LinRow::single(&blocks, 0, Coeff::Sym(SymMat::identity(3)), k as f64))
            .collect();
        let prob = to_standard_form(blocks, obj, vec![], ineq);
        assert!(matches!(prob.blocks[1].kind, BlockKind::Nonneg(5)));
        assert_eq!(prob.rows.len(), m);
    }

    #[test]
    fn validate_rejects_shape_mismatch() {
        let prob = ConicProblem {
            blocks: psd_only(2),
            objective: vec![Coeff::Dense(vec![1.0])],
            rows: vec![],
        };
        assert!(prob.validate().is_err());
    }
}
