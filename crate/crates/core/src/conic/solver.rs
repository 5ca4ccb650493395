//! Primal-dual path-following interior-point method on the homogeneous
//! self-dual embedding, with Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector step. Dense normal equations are factored by
//! Cholesky. FREE blocks are split into differences of NONNEG pairs.
//!
//! Designed for small dense problems (cone dimension ≤ ~200 scalars); the
//! iterate sequence is deterministic for identical inputs.

use super::{
    BlockKind, Coeff, ConicError, ConicProblem, ConicSolution, Residuals, SolveOptions,
    SolveStatus, TraceRecord,
};
use crate::linalg::{chol_psd, chol_solve, dot, eig_sym, norm2, EigSym, Mat, SymMat};

/// Ratio τ/κ below which the iterate is declared an infeasibility
/// certificate.
const INFEAS_RATIO: f64 = 1e-8;
/// Fraction of the distance to the cone boundary taken each step.
const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone)]
enum Cone {
    Nonneg(usize),
    Psd(usize),
}

impl Cone {
    fn barrier_degree(&self) -> f64 {
        match self {
            Cone::Nonneg(l) => *l as f64,
            Cone::Psd(d) => *d as f64,
        }
    }
}

/// Value living in the product of the internal cones.
#[derive(Debug, Clone)]
enum Val {
    Vec(Vec<f64>),
    Mat(SymMat),
}

#[derive(Debug, Clone)]
struct Point(Vec<Val>);

impl Point {
    fn zeros(cones: &[Cone]) -> Point {
        Point(
            cones
                .iter()
                .map(|c| match c {
                    Cone::Nonneg(l) => Val::Vec(vec![0.0; *l]),
                    Cone::Psd(d) => Val::Mat(SymMat::zeros(*d)),
                })
                .collect(),
        )
    }

    fn cone_identity(cones: &[Cone], scale: f64) -> Point {
        Point(
            cones
                .iter()
                .map(|c| match c {
                    Cone::Nonneg(l) => Val::Vec(vec![scale; *l]),
                    Cone::Psd(d) => Val::Mat(SymMat::identity(*d).scale(scale)),
                })
                .collect(),
        )
    }

    fn dot(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| match (a, b) {
                (Val::Vec(x), Val::Vec(y)) => dot(x, y),
                (Val::Mat(x), Val::Mat(y)) => x.inner(y),
                _ => unreachable!("cone shape mismatch"),
            })
            .sum()
    }

    fn axpy(&mut self, alpha: f64, other: &Point) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            match (a, b) {
                (Val::Vec(x), Val::Vec(y)) => crate::linalg::axpy(x, alpha, y),
                (Val::Mat(x), Val::Mat(y)) => x.axpy(alpha, y),
                _ => unreachable!(),
            }
        }
    }

    fn scale_mut(&mut self, alpha: f64) {
        for a in self.0.iter_mut() {
            match a {
                Val::Vec(x) => x.iter_mut().for_each(|v| *v *= alpha),
                Val::Mat(x) => *x = x.scale(alpha),
            }
        }
    }

    fn scaled(&self, alpha: f64) -> Point {
        let mut p = self.clone();
        p.scale_mut(alpha);
        p
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Largest step β with `self + β·dir` remaining in the cone closure.
    fn step_to_boundary(&self, dir: &Point) -> f64 {
        let mut beta = f64::INFINITY;
        for (v, d) in self.0.iter().zip(&dir.0) {
            match (v, d) {
                (Val::Vec(x), Val::Vec(dx)) => {
                    for (xi, di) in x.iter().zip(dx) {
                        if *di < 0.0 {
                            beta = beta.min(-xi / di);
                        }
                    }
                }
                (Val::Mat(x), Val::Mat(dx)) => {
                    beta = beta.min(psd_step_to_boundary(x, dx));
                }
                _ => unreachable!(),
            }
        }
        beta
    }
}

fn psd_step_to_boundary(x: &SymMat, dx: &SymMat) -> f64 {
    let n = x.dim();
    // C = L⁻¹ dX L⁻ᵀ with X = LLᵀ; boundary at -1/λmin(C) when λmin < 0.
    let l = match chol_psd(x, 0.0) {
        Ok(l) => l,
        Err(_) => return 0.0, // iterate already at the boundary
    };
    // Y = L⁻¹ dX  (forward substitution on each column)
    let mut y = Mat::zeros(n, n);
    for col in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| dx.get(i, col)).collect();
        for i in 0..n {
            for k in 0..i {
                v[i] -= l.get(i, k) * v[k];
            }
            v[i] /= l.get(i, i);
        }
        for i in 0..n {
            y.set(i, col, v[i]);
        }
    }
    // C = Y L⁻ᵀ, i.e. solve L Cᵀ = Yᵀ column-wise; C is symmetric in exact
    // arithmetic, symmetrize against roundoff.
    let mut c = Mat::zeros(n, n);
    for row in 0..n {
        let mut v: Vec<f64> = (0..n).map(|j| y.get(row, j)).collect();
        for i in 0..n {
            for k in 0..i {
                v[i] -= l.get(i, k) * v[k];
            }
            v[i] /= l.get(i, i);
        }
        for j in 0..n {
            c.set(row, j, v[j]);
        }
    }
    let c_sym = SymMat::from_raw(n, (0..n * n).map(|k| c.get(k / n, k % n)).collect());
    let eig = match eig_sym(&c_sym) {
        Ok(e) => e,
        Err(_) => return 0.0,
    };
    let lam_min = eig.values.last().copied().unwrap_or(0.0);
    if lam_min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}

/// Nesterov-Todd scaling data for one cone.
enum Scaling {
    Nonneg {
        w: Vec<f64>,      // sqrt(x/s)
        lambda: Vec<f64>, // sqrt(x·s)
    },
    Psd {
        w_hat: SymMat, // symmetric W with W S W = X
        r: SymMat,     // W^{1/2}
        r_inv: SymMat,
        lambda: SymMat, // R S R = R⁻¹ X R⁻¹
        lambda_eig: EigSym,
    },
}

impl Scaling {
    fn compute(x: &Val, s: &Val) -> Option<Scaling> {
        match (x, s) {
            (Val::Vec(xv), Val::Vec(sv)) => {
                let mut w = Vec::with_capacity(xv.len());
                let mut lambda = Vec::with_capacity(xv.len());
                for (&xi, &si) in xv.iter().zip(sv) {
                    if xi <= 0.0 || si <= 0.0 {
                        return None;
                    }
                    w.push((xi / si).sqrt());
                    lambda.push((xi * si).sqrt());
                }
                Some(Scaling::Nonneg { w, lambda })
            }
            (Val::Mat(xm), Val::Mat(sm)) => {
                let es = eig_sym(sm).ok()?;
                if es.values.iter().any(|&v| v <= 0.0) {
                    return None;
                }
                let s_half = es.map_spectrum(f64::sqrt);
                let s_inv_half = es.map_spectrum(|v| 1.0 / v.sqrt());
                let b = xm.sandwich(&s_half); // S^{1/2} X S^{1/2}
                let eb = eig_sym(&b).ok()?;
                if eb.values.iter().any(|&v| v <= 0.0) {
                    return None;
                }
                let b_half = eb.map_spectrum(f64::sqrt);
                let w_hat = b_half.sandwich(&s_inv_half);
                let ew = eig_sym(&w_hat).ok()?;
                if ew.values.iter().any(|&v| v <= 0.0) {
                    return None;
                }
                let r = ew.map_spectrum(f64::sqrt);
                let r_inv = ew.map_spectrum(|v| 1.0 / v.sqrt());
                let lambda = sm.sandwich(&r);
                let lambda_eig = eig_sym(&lambda).ok()?;
                Some(Scaling::Psd {
                    w_hat,
                    r,
                    r_inv,
                    lambda,
                    lambda_eig,
                })
            }
            _ => unreachable!(),
        }
    }
}

struct ScalingSet(Vec<Scaling>);

impl ScalingSet {
    fn compute(x: &Point, s: &Point) -> Option<ScalingSet> {
        let mut out = Vec::with_capacity(x.0.len());
        for (xv, sv) in x.0.iter().zip(&s.0) {
            out.push(Scaling::compute(xv, sv)?);
        }
        Some(ScalingSet(out))
    }

    /// H(u) = W² u  (maps dual-like to primal-like; H(s) = x at the NT point).
    fn apply_h(&self, p: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&p.0)
                .map(|(sc, v)| match (sc, v) {
                    (Scaling::Nonneg { w, .. }, Val::Vec(x)) => {
                        Val::Vec(x.iter().zip(w).map(|(xi, wi)| xi * wi * wi).collect())
                    }
                    (Scaling::Psd { w_hat, .. }, Val::Mat(m)) => Val::Mat(m.sandwich(w_hat)),
                    _ => unreachable!(),
                })
                .collect(),
        )
    }

    fn apply_w(&self, p: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&p.0)
                .map(|(sc, v)| match (sc, v) {
                    (Scaling::Nonneg { w, .. }, Val::Vec(x)) => {
                        Val::Vec(x.iter().zip(w).map(|(xi, wi)| xi * wi).collect())
                    }
                    (Scaling::Psd { r, .. }, Val::Mat(m)) => Val::Mat(m.sandwich(r)),
                    _ => unreachable!(),
                })
                .collect(),
        )
    }

    fn apply_w_inv(&self, p: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&p.0)
                .map(|(sc, v)| match (sc, v) {
                    (Scaling::Nonneg { w, .. }, Val::Vec(x)) => {
                        Val::Vec(x.iter().zip(w).map(|(xi, wi)| xi / wi).collect())
                    }
                    (Scaling::Psd { r_inv, .. }, Val::Mat(m)) => Val::Mat(m.sandwich(r_inv)),
                    _ => unreachable!(),
                })
                .collect(),
        )
    }

    fn lambda(&self) -> Point {
        Point(
            self.0
                .iter()
                .map(|sc| match sc {
                    Scaling::Nonneg { lambda, .. } => Val::Vec(lambda.clone()),
                    Scaling::Psd { lambda, .. } => Val::Mat(lambda.clone()),
                })
                .collect(),
        )
    }

    /// Jordan square λ∘λ.
    fn lambda_sq(&self) -> Point {
        Point(
            self.0
                .iter()
                .map(|sc| match sc {
                    Scaling::Nonneg { lambda, .. } => {
                        Val::Vec(lambda.iter().map(|l| l * l).collect())
                    }
                    Scaling::Psd { lambda, .. } => Val::Mat(lambda.jordan(lambda)),
                })
                .collect(),
        )
    }

    /// Solves L(λ) q = d, the linearized complementarity operator.
    fn lambda_solve(&self, d: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&d.0)
                .map(|(sc, v)| match (sc, v) {
                    (Scaling::Nonneg { lambda, .. }, Val::Vec(x)) => {
                        Val::Vec(x.iter().zip(lambda).map(|(xi, li)| xi / li).collect())
                    }
                    (Scaling::Psd { lambda_eig, .. }, Val::Mat(m)) => {
                        let q = &lambda_eig.vectors;
                        let d_rot = m.congruence(q); // Qᵀ m Q
                        let n = d_rot.dim();
                        let mut z = SymMat::zeros(n);
                        for i in 0..n {
                            for j in 0..=i {
                                let denom = lambda_eig.values[i] + lambda_eig.values[j];
                                z.set(i, j, 2.0 * d_rot.get(i, j) / denom);
                            }
                        }
                        Val::Mat(z.congruence(&q.transpose())) // Q z Qᵀ
                    }
                    _ => unreachable!(),
                })
                .collect(),
        )
    }
}

/// Jordan product u∘v blockwise.
fn jordan(a: &Point, b: &Point) -> Point {
    Point(
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| match (x, y) {
                (Val::Vec(u), Val::Vec(v)) => {
                    Val::Vec(u.iter().zip(v).map(|(a, b)| a * b).collect())
                }
                (Val::Mat(u), Val::Mat(v)) => Val::Mat(u.jordan(v)),
                _ => unreachable!(),
            })
            .collect(),
    )
}

/// How each problem block maps into the internal cone list.
enum BlockMap {
    Direct(usize),
    Split { pos: usize, neg: usize },
}

struct Internal {
    cones: Vec<Cone>,
    map: Vec<BlockMap>,
    rows: Vec<Point>,
    b: Vec<f64>,
    c: Point,
    barrier_degree: f64,
}

impl Internal {
    fn build(prob: &ConicProblem) -> Internal {
        let mut cones = Vec::new();
        let mut map = Vec::new();
        for block in &prob.blocks {
            match block.kind {
                BlockKind::Psd(d) => {
                    map.push(BlockMap::Direct(cones.len()));
                    cones.push(Cone::Psd(d));
                }
                BlockKind::Nonneg(l) => {
                    map.push(BlockMap::Direct(cones.len()));
                    cones.push(Cone::Nonneg(l));
                }
                BlockKind::Free(l) => {
                    let pos = cones.len();
                    cones.push(Cone::Nonneg(l));
                    let neg = cones.len();
                    cones.push(Cone::Nonneg(l));
                    map.push(BlockMap::Split { pos, neg });
                }
            }
        }
        let lift = |coeffs: &[Coeff]| -> Point {
            let mut p = Point::zeros(&cones);
            for (coeff, bm) in coeffs.iter().zip(&map) {
                match (coeff, bm) {
                    (Coeff::Sym(m), BlockMap::Direct(k)) => p.0[*k] = Val::Mat(m.clone()),
                    (Coeff::Dense(v), BlockMap::Direct(k)) => p.0[*k] = Val::Vec(v.clone()),
                    (Coeff::Dense(v), BlockMap::Split { pos, neg }) => {
                        p.0[*pos] = Val::Vec(v.clone());
                        p.0[*neg] = Val::Vec(v.iter().map(|x| -x).collect());
                    }
                    _ => unreachable!("validated problem"),
                }
            }
            p
        };
        let rows: Vec<Point> = prob.rows.iter().map(|r| lift(&r.coeffs)).collect();
        let b: Vec<f64> = prob.rows.iter().map(|r| r.rhs).collect();
        let c = lift(&prob.objective);
        let barrier_degree = cones.iter().map(|c| c.barrier_degree()).sum();
        Internal {
            cones,
            map,
            rows,
            b,
            c,
            barrier_degree,
        }
    }

    fn apply_a(&self, x: &Point) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(x)).collect()
    }

    fn apply_at(&self, y: &[f64]) -> Point {
        let mut p = Point::zeros(&self.cones);
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                p.axpy(yi, row);
            }
        }
        p
    }

    /// Recovers per-block primal values (merging FREE splits) scaled by 1/τ.
    fn extract_primal(&self, prob: &ConicProblem, x: &Point, tau: f64) -> Vec<Coeff> {
        prob.blocks
            .iter()
            .zip(&self.map)
            .map(|(block, bm)| match (&block.kind, bm) {
                (BlockKind::Psd(_), BlockMap::Direct(k)) => match &x.0[*k] {
                    Val::Mat(m) => Coeff::Sym(m.scale(1.0 / tau)),
                    _ => unreachable!(),
                },
                (BlockKind::Nonneg(_), BlockMap::Direct(k)) => match &x.0[*k] {
                    Val::Vec(v) => Coeff::Dense(v.iter().map(|a| a / tau).collect()),
                    _ => unreachable!(),
                },
                (BlockKind::Free(_), BlockMap::Split { pos, neg }) => {
                    match (&x.0[*pos], &x.0[*neg]) {
                        (Val::Vec(p), Val::Vec(n)) => {
                            Coeff::Dense(p.iter().zip(n).map(|(a, b)| (a - b) / tau).collect())
                        }
                        _ => unreachable!(),
                    }
                }
                _ => unreachable!(),
            })
            .collect()
    }

    /// Dual slack per block at y: c − Aᵀy (FREE blocks report the raw
    /// residual, which tends to zero at optimality).
    fn extract_dual_slack(&self, prob: &ConicProblem, y: &[f64]) -> Vec<Coeff> {
        let aty = self.apply_at(y);
        prob.blocks
            .iter()
            .zip(&self.map)
            .map(|(block, bm)| {
                let k = match bm {
                    BlockMap::Direct(k) => *k,
                    BlockMap::Split { pos, .. } => *pos,
                };
                match (&self.c.0[k], &aty.0[k]) {
                    (Val::Mat(cm), Val::Mat(am)) => {
                        let mut s = cm.clone();
                        s.axpy(-1.0, am);
                        Coeff::Sym(s)
                    }
                    (Val::Vec(cv), Val::Vec(av)) => {
                        let _ = block;
                        Coeff::Dense(cv.iter().zip(av).map(|(c, a)| c - a).collect())
                    }
                    _ => unreachable!(),
                }
            })
            .collect()
    }
}

struct Iterate {
    x: Point,
    y: Vec<f64>,
    s: Point,
    tau: f64,
    kappa: f64,
}

struct Metrics {
    pfeas: f64,
    dfeas: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    mu: f64,
}

fn metrics(int: &Internal, it: &Iterate) -> Metrics {
    let tau = it.tau;
    let mut rp = int.apply_a(&it.x);
    for (r, &bi) in rp.iter_mut().zip(&int.b) {
        *r -= bi * tau;
    }
    let mut rd = int.c.scaled(tau);
    rd.axpy(-1.0, &it.s);
    rd.axpy(-1.0, &int.apply_at(&it.y));

    let cx = int.c.dot(&it.x);
    let by = dot(&int.b, &it.y);
    let pobj = cx / tau;
    let dobj = by / tau;
    let obj_scale = 1.0 + pobj.abs() + dobj.abs();
    let compl = it.x.dot(&it.s) / (tau * tau) / obj_scale;
    let objgap = (pobj - dobj).abs() / obj_scale;
    Metrics {
        pfeas: norm2(&rp) / (tau * (1.0 + norm2(&int.b))),
        dfeas: rd.norm() / (tau * (1.0 + int.c.norm())),
        gap: compl.max(objgap),
        pobj,
        dobj,
        mu: (it.x.dot(&it.s) + tau * it.kappa) / (int.barrier_degree + 1.0),
    }
}

/// Solves a standard-form conic program.
///
/// Shape errors return `InvalidProblem`; every other outcome (including an
/// exhausted iteration budget, reported as `MaxIter` with the best iterate
/// attached) is encoded in the solution status.
pub fn solve(prob: &ConicProblem, opts: &SolveOptions) -> Result<ConicSolution, ConicError> {
    prob.validate()?;
    let int = Internal::build(prob);
    let m = int.rows.len();

    let init_scale = 1.0 + int.b.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let mut it = Iterate {
        x: Point::cone_identity(&int.cones, init_scale),
        y: vec![0.0; m],
        s: Point::cone_identity(&int.cones, init_scale),
        tau: 1.0,
        kappa: 1.0,
    };

    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut last_step = 0.0;

    for iter in 0..opts.max_iter {
        let met = metrics(&int, &it);
        if opts.trace {
            trace.push(TraceRecord {
                iter,
                mu: met.mu,
                primal_feas: met.pfeas,
                dual_feas: met.dfeas,
                gap: met.gap,
                tau: it.tau,
                kappa: it.kappa,
                step: last_step,
            });
        }
        let score = met.pfeas.max(met.dfeas).max(met.gap);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((
                score,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    s: it.s.clone(),
                    tau: it.tau,
                    kappa: it.kappa,
                },
                iter,
            ));
        }

        if met.pfeas <= opts.tol && met.dfeas <= opts.tol && met.gap <= opts.tol {
            return Ok(finish(prob, &int, &it, SolveStatus::Optimal, iter, trace));
        }

        // Infeasibility certificate: τ collapses relative to κ.
        if it.tau <= INFEAS_RATIO * it.kappa {
            let by = dot(&int.b, &it.y);
            let cx = int.c.dot(&it.x);
            let status = if by > 1e-12 * (1.0 + norm2(&int.b)) {
                SolveStatus::InfeasiblePrimal
            } else if cx < -1e-12 * (1.0 + int.c.norm()) {
                SolveStatus::InfeasibleDual
            } else {
                SolveStatus::NumericalFail
            };
            return Ok(finish(prob, &int, &it, status, iter, trace));
        }

        let scal = match ScalingSet::compute(&it.x, &it.s) {
            Some(s) => s,
            None => {
                let (_, b, i) = best.unwrap();
                return Ok(finish(prob, &int, &b, SolveStatus::NumericalFail, i, trace));
            }
        };

        // residual vectors for the Newton systems
        let mut rp = int.apply_a(&it.x);
        for (r, &bi) in rp.iter_mut().zip(&int.b) {
            *r -= bi * it.tau;
        }
        let mut rd = int.c.scaled(it.tau);
        rd.axpy(-1.0, &it.s);
        rd.axpy(-1.0, &int.apply_at(&it.y));
        let rg = dot(&int.b, &it.y) - int.c.dot(&it.x) - it.kappa;

        // normal matrix M = A H Aᵀ, factored once per iteration
        let h_rows: Vec<Point> = int.rows.iter().map(|r| scal.apply_h(r)).collect();
        let mut m_mat = SymMat::zeros(m.max(1));
        for i in 0..m {
            for j in 0..=i {
                m_mat.set(i, j, h_rows[i].dot(&int.rows[j]));
            }
        }
        let m_chol = if m == 0 {
            None
        } else {
            match chol_psd(&m_mat, 0.0) {
                Ok(l) => Some(l),
                Err(_) => {
                    // tiny regularization against near-dependent rows
                    let shift = 1e-12 * (1.0 + m_mat.frob_norm());
                    match chol_psd(&m_mat, shift) {
                        Ok(l) => Some(l),
                        Err(_) => {
                            let (_, b, i) = best.unwrap();
                            return Ok(finish(
                                prob,
                                &int,
                                &b,
                                SolveStatus::NumericalFail,
                                i,
                                trace,
                            ));
                        }
                    }
                }
            }
        };
        let m_solve = |v: &[f64]| -> Vec<f64> {
            match &m_chol {
                Some(l) => chol_solve(l, v),
                None => vec![],
            }
        };

        let hc = scal.apply_h(&int.c);
        let ahc_plus_b: Vec<f64> = int
            .apply_a(&hc)
            .iter()
            .zip(&int.b)
            .map(|(a, b)| a + b)
            .collect();
        let u1 = m_solve(&ahc_plus_b);
        let hat_u1 = scal.apply_h(&int.apply_at(&u1));
        let mut x1 = hat_u1;
        x1.axpy(-1.0, &hc);

        let lam = scal.lambda();
        let lam_sq = scal.lambda_sq();
        let mu = (it.x.dot(&it.s) + it.tau * it.kappa) / (int.barrier_degree + 1.0);

        let newton = |eta: f64, dcomp: &Point, dtk: f64| -> (Point, Vec<f64>, Point, f64, f64) {
            let q = scal.lambda_solve(dcomp);
            let mut h0 = scal.apply_w(&q);
            h0.axpy(-eta, &scal.apply_h(&rd));
            // rhs = −η rp − A h0
            let ah0 = int.apply_a(&h0);
            let rhs: Vec<f64> = rp
                .iter()
                .zip(&ah0)
                .map(|(rpk, ak)| -eta * rpk - ak)
                .collect();
            let u2 = m_solve(&rhs);
            let mut x2 = scal.apply_h(&int.apply_at(&u2));
            x2.axpy(1.0, &h0);

            let denom = dot(&int.b, &u1) - int.c.dot(&x1) + it.kappa / it.tau;
            let numer = -eta * rg + int.c.dot(&x2) + dtk / it.tau - dot(&int.b, &u2);
            let dtau = if denom.abs() > 1e-300 {
                numer / denom
            } else {
                0.0
            };

            let dy: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a * dtau + b).collect();
            let mut dx = x1.scaled(dtau);
            dx.axpy(1.0, &x2);
            let mut ds = int.c.scaled(dtau);
            ds.axpy(-1.0, &int.apply_at(&dy));
            ds.axpy(eta, &rd);
            let dkappa = (dtk - it.kappa * dtau) / it.tau;
            (dx, dy, ds, dtau, dkappa)
        };

        // predictor
        let neg_lam_sq = lam_sq.scaled(-1.0);
        let (dx_a, _dy_a, ds_a, dtau_a, dkappa_a) = newton(1.0, &neg_lam_sq, -it.tau * it.kappa);
        let mut alpha_a =
            it.x.step_to_boundary(&dx_a)
                .min(it.s.step_to_boundary(&ds_a));
        if dtau_a < 0.0 {
            alpha_a = alpha_a.min(-it.tau / dtau_a);
        }
        if dkappa_a < 0.0 {
            alpha_a = alpha_a.min(-it.kappa / dkappa_a);
        }
        let alpha_a = alpha_a.min(1.0);

        let mut x_trial = it.x.clone();
        x_trial.axpy(alpha_a, &dx_a);
        let mut s_trial = it.s.clone();
        s_trial.axpy(alpha_a, &ds_a);
        let mu_aff = (x_trial.dot(&s_trial)
            + (it.tau + alpha_a * dtau_a) * (it.kappa + alpha_a * dkappa_a))
            / (int.barrier_degree + 1.0);
        let sigma = ((mu_aff / mu).max(0.0).powi(3)).clamp(0.0, 1.0);

        // corrector
        let winv_dx = scal.apply_w_inv(&dx_a);
        let w_ds = scal.apply_w(&ds_a);
        let corr = jordan(&winv_dx, &w_ds);
        let mut dcomp = Point::cone_identity(&int.cones, sigma * mu);
        dcomp.axpy(-1.0, &lam_sq);
        dcomp.axpy(-1.0, &corr);
        let dtk = sigma * mu - it.tau * it.kappa - dtau_a * dkappa_a;
        let _ = &lam;
        let (dx, dy, ds, dtau, dkappa) = newton(1.0 - sigma, &dcomp, dtk);

        let mut alpha = it.x.step_to_boundary(&dx).min(it.s.step_to_boundary(&ds));
        if dtau < 0.0 {
            alpha = alpha.min(-it.tau / dtau);
        }
        if dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / dkappa);
        }
        let alpha = (STEP_FRACTION * alpha).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-14 {
            let (_, b, i) = best.unwrap();
            return Ok(finish(prob, &int, &b, SolveStatus::NumericalFail, i, trace));
        }

        it.x.axpy(alpha, &dx);
        for (yi, di) in it.y.iter_mut().zip(&dy) {
            *yi += alpha * di;
        }
        it.s.axpy(alpha, &ds);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
        last_step = alpha;
    }

    let (_, b, _) = best.unwrap();
    Ok(finish(
        prob,
        &int,
        &b,
        SolveStatus::MaxIter,
        opts.max_iter,
        trace,
    ))
}

fn finish(
    prob: &ConicProblem,
    int: &Internal,
    it: &Iterate,
    status: SolveStatus,
    iterations: usize,
    trace: Vec<TraceRecord>,
) -> ConicSolution {
    let met = metrics(int, it);
    let tau = it.tau.max(1e-300);
    let y_scaled: Vec<f64> = it.y.iter().map(|v| v / tau).collect();
    ConicSolution {
        status,
        primal: int.extract_primal(prob, &it.x, tau),
        dual_slack: int.extract_dual_slack(prob, &y_scaled),
        eq_duals: y_scaled,
        primal_obj: met.pobj,
        dual_obj: met.dobj,
        residuals: Residuals {
            primal_feas: met.pfeas,
            dual_feas: met.dfeas,
            gap: met.gap,
        },
        iterations,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{to_standard_form, ConeBlock, LinRow};

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn trace_minimization_pins_corner() {
        // min ⟨I, X⟩ s.t. X₁₁ = 1, X ⪰ 0 → 1, X* = e¹(e¹)ᵀ
        let blocks = vec![ConeBlock::psd(2, "X")];
        let obj = vec![Coeff::Sym(SymMat::identity(2))];
        let rows = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::outer(&[1.0, 0.0])),
            1.0,
        )];
        let prob = ConicProblem {
            blocks,
            objective: obj,
            rows,
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_obj - 1.0).abs() <= 1e-7);
        let x = sol.psd_value(0);
        assert!((x.get(0, 0) - 1.0).abs() <= 1e-6);
        assert!(x.get(1, 1).abs() <= 1e-6);
        assert!(x.get(0, 1).abs() <= 1e-6);
    }

    #[test]
    fn mass_shifts_to_free_diagonal() {
        // min X₁₁ s.t. X₁₁ + X₂₂ = 1, X ⪰ 0 → 0
        let blocks = vec![ConeBlock::psd(2, "X")];
        let mut c = SymMat::zeros(2);
        c.set(0, 0, 1.0);
        let prob = ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Sym(c)],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Sym(SymMat::identity(2)),
                1.0,
            )],
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.primal_obj.abs() <= 1e-7);
    }

    #[test]
    fn embedded_lp() {
        // min x₁ s.t. x₁ + x₂ = 1, x ≥ 0 → 0
        let blocks = vec![ConeBlock::nonneg(2, "x")];
        let prob = ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Dense(vec![1.0, 0.0])],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Dense(vec![1.0, 1.0]),
                1.0,
            )],
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.primal_obj.abs() <= 1e-8);
        assert!((sol.dual_obj - sol.primal_obj).abs() <= 1e-7);
    }

    #[test]
    fn free_variable_split() {
        // min d s.t. d − s = 3, s ≥ 0 → d* = 3 at s = 0
        let blocks = vec![ConeBlock::free(1, "d"), ConeBlock::nonneg(1, "s")];
        let prob = ConicProblem {
            blocks,
            objective: vec![Coeff::Dense(vec![1.0]), Coeff::Dense(vec![0.0])],
            rows: vec![LinRow {
                coeffs: vec![Coeff::Dense(vec![1.0]), Coeff::Dense(vec![-1.0])],
                rhs: 3.0,
            }],
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_obj - 3.0).abs() <= 1e-7);
        assert!((sol.dense_value(0)[0] - 3.0).abs() <= 1e-6);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x ≥ 0 with x₁ + x₂ = −1 is infeasible
        let blocks = vec![ConeBlock::nonneg(2, "x")];
        let prob = ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Dense(vec![1.0, 1.0])],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Dense(vec![1.0, 1.0]),
                -1.0,
            )],
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::InfeasiblePrimal);
    }

    #[test]
    fn detects_dual_infeasibility() {
        // min −x₁ with x ≥ 0 and no rows tying it: unbounded below
        let blocks = vec![ConeBlock::nonneg(1, "x"), ConeBlock::nonneg(1, "y")];
        let prob = ConicProblem {
            blocks,
            objective: vec![Coeff::Dense(vec![-1.0]), Coeff::Dense(vec![0.0])],
            rows: vec![LinRow {
                coeffs: vec![Coeff::Dense(vec![0.0]), Coeff::Dense(vec![1.0])],
                rhs: 1.0,
            }],
        };
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::InfeasibleDual);
    }

    #[test]
    fn slack_values_match_inequality_gap() {
        // min ⟨I,X⟩ s.t. ⟨I,X⟩ ≤ 2, X₁₁ = 1 → X = e¹e¹ᵀ, slack = 1
        let blocks = vec![ConeBlock::psd(2, "X")];
        let obj = vec![Coeff::Sym(SymMat::identity(2))];
        let eq = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::outer(&[1.0, 0.0])),
            1.0,
        )];
        let ineq = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::identity(2)),
            2.0,
        )];
        let prob = to_standard_form(blocks, obj, eq, ineq);
        let sol = solve(&prob, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let slack_idx = prob.block_index("slack").unwrap();
        assert!((sol.dense_value(slack_idx)[0] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn deterministic_iterates() {
        let blocks = vec![ConeBlock::psd(3, "X")];
        let obj = vec![Coeff::Sym(SymMat::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.0, -0.2],
            vec![0.1, -0.2, 1.5],
        ]))];
        let rows = vec![LinRow::single(
            &blocks,
            0,
            Coeff::Sym(SymMat::identity(3)),
            1.0,
        )];
        let prob = ConicProblem {
            blocks,
            objective: obj,
            rows,
        };
        let mut o = opts();
        o.trace = true;
        let a = solve(&prob, &o).unwrap();
        let b = solve(&prob, &o).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.primal_obj.to_bits(), b.primal_obj.to_bits());
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(ra.mu.to_bits(), rb.mu.to_bits());
            assert_eq!(ra.gap.to_bits(), rb.gap.to_bits());
        }
    }

    #[test]
    fn weak_duality_along_trace() {
        // dual_obj ≤ primal_obj + slack at every recorded iterate
        let blocks = vec![ConeBlock::psd(2, "X"), ConeBlock::nonneg(2, "z")];
        let mut c = SymMat::zeros(2);
        c.set(0, 1, 1.0);
        let prob = ConicProblem {
            blocks,
            objective: vec![Coeff::Sym(c), Coeff::Dense(vec![1.0, 0.5])],
            rows: vec![
                LinRow {
                    coeffs: vec![
                        Coeff::Sym(SymMat::identity(2)),
                        Coeff::Dense(vec![1.0, 0.0]),
                    ],
                    rhs: 2.0,
                },
                LinRow {
                    coeffs: vec![
                        Coeff::Sym(SymMat::outer(&[1.0, 0.0])),
                        Coeff::Dense(vec![0.0, 1.0]),
                    ],
                    rhs: 1.0,
                },
            ],
        };
        let mut o = opts();
        o.trace = true;
        let sol = solve(&prob, &o).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.dual_obj <= sol.primal_obj + 10.0 * o.tol * (1.0 + sol.primal_obj.abs()));
    }

    #[test]
    fn exhausted_budget_returns_best_iterate() {
        let blocks = vec![ConeBlock::psd(3, "X")];
        let prob = ConicProblem {
            blocks: blocks.clone(),
            objective: vec![Coeff::Sym(SymMat::identity(3))],
            rows: vec![LinRow::single(
                &blocks,
                0,
                Coeff::Sym(SymMat::outer(&[1.0, 1.0, 0.0])),
                2.0,
            )],
        };
        let o = SolveOptions {
            max_iter: 3,
            ..opts()
        };
        let sol = solve(&prob, &o).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIter);
        // the attached iterate is still a meaningful approximation
        assert!(sol.primal_obj.is_finite());
        assert!(sol.residuals.primal_feas.is_finite());
    }
}
