//! Property tests for the numerical invariants: eigendecomposition
//! reconstruction, rank detection, factorization on constructed PD
//! matrices, and constraint soundness on lifted forward traces.

use proptest::prelude::*;
use relusdp::formulation::{
    input_generators, lift_in, relu_constraints_with, repeated_nonlinearity_cuts_with,
    LiftedConstraint, LiftingMaps, Sense,
};
use relusdp::linalg::{chol_psd, eig_sym, numeric_rank, Mat, SymMat};
use relusdp::network::{InputSet, Layer, ReluNetwork};

fn sym_strategy(max_dim: usize) -> impl Strategy<Value = SymMat> {
    (1..=max_dim).prop_flat_map(|d| {
        proptest::collection::vec(-5.0..5.0f64, d * d).prop_map(move |raw| SymMat::from_raw(d, raw))
    })
}

proptest! {
    #[test]
    fn eig_reconstruction_and_orthonormality(a in sym_strategy(12)) {
        let e = eig_sym(&a).unwrap();
        let rec = e.reconstruct();
        let err = rec.add(&a.scale(-1.0)).frob_norm();
        prop_assert!(err <= 1e-9 * (1.0 + a.frob_norm()), "reconstruction error {err}");
        let n = a.dim();
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = (0..n)
                    .map(|k| e.vectors.get(k, i) * e.vectors.get(k, j))
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-10);
            }
        }
        // eigenvalues sorted descending
        for w in e.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rank_one_outer_products(x in proptest::collection::vec(-10.0..10.0f64, 1..10)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        prop_assert_eq!(numeric_rank(&SymMat::outer(&x), 1e-6), 1);
    }

    #[test]
    fn cholesky_succeeds_on_constructed_pd(
        a in sym_strategy(8),
        eigs in proptest::collection::vec(0.1..10.0f64, 8)
    ) {
        // Q from the eigenvectors of a random symmetric matrix, positive
        // spectrum by construction
        let e = eig_sym(&a).unwrap();
        let n = a.dim();
        let pd = e.map_spectrum(|_| 0.0).add(&{
            let mut m = SymMat::zeros(n);
            for i in 0..n {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += eigs[k % eigs.len()] * e.vectors.get(i, k) * e.vectors.get(j, k);
                    }
                    m.set(i, j, acc);
                }
            }
            m
        });
        let l = chol_psd(&pd, 0.0).unwrap();
        // L Lᵀ reproduces the matrix
        let mut err = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += l.get(i, k) * l.get(j, k);
                }
                err = err.max((acc - pd.get(i, j)).abs());
            }
        }
        prop_assert!(err <= 1e-9 * (1.0 + pd.frob_norm()));
    }

    #[test]
    fn lifted_constraints_hold_on_forward_traces(
        weights in proptest::collection::vec(-1.5..1.5f64, 4),
        biases in proptest::collection::vec(-1.0..1.0f64, 2),
        samples in proptest::collection::vec(-1.0..1.0f64, 16),
    ) {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[weights[0..2].to_vec(), weights[2..4].to_vec()]),
                biases.clone(),
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![0.0, 0.0],
            radii: vec![1.0, 1.0],
        };
        let maps = LiftingMaps::new(&net);
        let mut cons: Vec<LiftedConstraint> = relu_constraints_with(&maps);
        cons.extend(repeated_nonlinearity_cuts_with(&maps));
        for (j, p) in input_generators(&input, 2).iter().enumerate() {
            cons.push(LiftedConstraint {
                matrix: lift_in(p, &maps).unwrap(),
                sense: Sense::Le,
                rhs: 0.0,
                tag: format!("input_gen[{j}]"),
            });
        }
        for x in samples.chunks(2) {
            let trace = net.forward_trace(x).unwrap();
            let mut z = vec![1.0];
            z.extend_from_slice(&trace.input);
            z.extend_from_slice(&trace.activations);
            for con in &cons {
                let v = con.matrix.quad_form(&z);
                match con.sense {
                    Sense::Eq => prop_assert!(v.abs() <= 1e-9, "{} -> {v}", con.tag),
                    Sense::Le => prop_assert!(v <= 1e-9, "{} -> {v}", con.tag),
                }
            }
        }
    }

    #[test]
    fn generator_forms_nonpositive_inside_regions(
        cx in -2.0..2.0f64,
        cy in -2.0..2.0f64,
        r in 0.1..2.0f64,
        points in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8),
    ) {
        let sets = [
            InputSet::Rectangle { center: vec![cx, cy], radii: vec![r, r] },
            InputSet::Ellipsoid { center: vec![cx, cy], radius: r },
        ];
        for set in &sets {
            for (a, b) in &points {
                // map the unit square sample into the region
                let x = match set {
                    InputSet::Rectangle { center, radii } => {
                        vec![center[0] + a * radii[0], center[1] + b * radii[1]]
                    }
                    InputSet::Ellipsoid { center, radius } => {
                        let norm = (a * a + b * b).sqrt().max(1.0);
                        vec![center[0] + a / norm * radius, center[1] + b / norm * radius]
                    }
                    InputSet::Interval { .. } => unreachable!(),
                };
                let mut z = vec![1.0];
                z.extend_from_slice(&x);
                for p in input_generators(set, 2) {
                    prop_assert!(p.quad_form(&z) <= 1e-9);
                }
            }
        }
    }
}
