//! Properties of vectors, operators and Grassmannian geometry on random data.

use grassdyn::grassmann::{grassmann_distance, pi_n, push_forward};
use grassdyn::space::{gaussian_scalar, sample_vector_with, seeded_rng};
use grassdyn::{DirectSumVector, Field, OperatorSpec, Scalar, Subspace, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vector(dim: usize, seed: u64, field: Field) -> Vector {
    let mut rng = seeded_rng(seed, 1);
    sample_vector_with(field, dim, 0..dim, &mut rng).unwrap()
}

fn scalar(seed: u64) -> Scalar {
    gaussian_scalar(Field::Complex, &mut seeded_rng(seed, 2))
}

/// One operator per supported variant, with seeded parameters.
fn operator(variant: u8, dim: usize, seed: u64) -> OperatorSpec {
    let mut rng = seeded_rng(seed, 3);
    let mut positive = |n: usize| (0..n).map(|_| 0.5 + gaussian_scalar(Field::Real, &mut rng).re.abs()).collect::<Vec<_>>();
    match variant % 6 {
        0 => OperatorSpec::diagonal((0..dim).map(|i| scalar(seed + i as u64)).collect()),
        1 => OperatorSpec::BackwardShift { dim, weights: positive(dim - 1) },
        2 => OperatorSpec::ForwardShift { dim, weights: positive(dim) },
        3 => OperatorSpec::adjoint_multiplication(scalar(seed), dim),
        4 => OperatorSpec::scaled(scalar(seed ^ 5), OperatorSpec::backward_shift(dim)),
        _ => {
            let split = dim / 2;
            OperatorSpec::direct_sum(vec![
                OperatorSpec::forward_shift(split),
                OperatorSpec::adjoint_multiplication(scalar(seed), dim - split),
            ])
        }
    }
}

fn rel_close(a: &Vector, b: &Vector, tol: f64) -> bool {
    let scale = a.l2_norm().max(b.l2_norm()).max(f64::MIN_POSITIVE);
    a.distance(b).unwrap() <= tol * scale
}

fn invertible(n: usize, seed: u64) -> DMatrix<Scalar> {
    let mut rng = seeded_rng(seed, 4);
    loop {
        let a = DMatrix::from_fn(n, n, |_, _| gaussian_scalar(Field::Real, &mut rng));
        if a.determinant().norm() > 1e-3 {
            return a;
        }
    }
}

fn tuple_of(m: &DMatrix<Scalar>) -> Vec<Vector> {
    m.column_iter().map(|c| Vector::from_dense(c.as_slice())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn norms_are_norms(dim in 1usize..24, s in any::<u64>(), t in any::<u64>(), c in any::<u64>()) {
        let (x, y, c) = (vector(dim, s, Field::Complex), vector(dim, t, Field::Complex), scalar(c));
        let sum = x.add(&y).unwrap();
        prop_assert!(sum.l1_norm() <= (x.l1_norm() + y.l1_norm()) * (1.0 + 1e-12));
        prop_assert!(sum.l2_norm() <= (x.l2_norm() + y.l2_norm()) * (1.0 + 1e-12));
        let cx = x.scale(c);
        prop_assert!((cx.l1_norm() - c.norm() * x.l1_norm()).abs() <= 1e-12 * cx.l1_norm());
        prop_assert!((cx.l2_norm() - c.norm() * x.l2_norm()).abs() <= 1e-12 * cx.l2_norm());
    }

    #[test]
    fn norm_sandwich(dim in 1usize..64, s in any::<u64>()) {
        let x = vector(dim, s, Field::Complex);
        let (l1, l2) = (x.l1_norm(), x.l2_norm());
        prop_assert!(l1 >= l2 * (1.0 - 1e-12));
        prop_assert!(l2 >= l1 / (dim as f64).sqrt() * (1.0 - 1e-12));
    }

    #[test]
    fn direct_sum_norm_is_concatenated_norm(dims in prop::collection::vec(1usize..10, 1..5), s in any::<u64>()) {
        let blocks: Vec<Vector> = dims.iter().enumerate().map(|(i, &d)| vector(d, s ^ i as u64, Field::Real)).collect();
        let v = DirectSumVector::new(blocks);
        let flat = v.concat().l2_norm();
        prop_assert!((v.l2_norm() - flat).abs() <= 1e-12 * flat);
    }

    #[test]
    fn apply_matches_matrix(variant in 0u8..6, dim in 2usize..16, s in any::<u64>(), t in any::<u64>()) {
        let op = operator(variant, dim, s);
        let x = vector(dim, t, Field::Complex);
        let direct = op.apply(&x).unwrap().image;
        let dense = Vector::from_dvector(&(op.truncated_matrix().unwrap() * x.to_dvector()));
        prop_assert!(rel_close(&direct, &dense, 1e-12));
    }

    #[test]
    fn apply_is_linear(variant in 0u8..6, dim in 2usize..16, s in any::<u64>(), t in any::<u64>(), u in any::<u64>()) {
        let op = operator(variant, dim, s);
        let (x, y) = (vector(dim, t, Field::Complex), vector(dim, u, Field::Complex));
        let (a, b) = (scalar(t ^ u), scalar(t.wrapping_add(u)));
        let lhs = op.apply(&x.scale(a).add(&y.scale(b)).unwrap()).unwrap().image;
        let rhs = op.apply(&x).unwrap().image.scale(a).add(&op.apply(&y).unwrap().image.scale(b)).unwrap();
        prop_assert!(rel_close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn scaled_action_is_exact(variant in 0u8..6, dim in 2usize..16, s in any::<u64>(), t in any::<u64>()) {
        let op = operator(variant, dim, s);
        let c = scalar(t);
        let x = vector(dim, t, Field::Complex);
        let scaled = OperatorSpec::scaled(c, op.clone()).apply(&x).unwrap().image;
        prop_assert_eq!(scaled, op.apply(&x).unwrap().image.scale(c));
    }

    #[test]
    fn direct_sum_acts_blockwise(a in 0u8..5, b in 0u8..5, da in 2usize..8, db in 2usize..8, s in any::<u64>()) {
        let (p, q) = (operator(a, da, s), operator(b, db, s ^ 9));
        let sum = OperatorSpec::direct_sum(vec![p.clone(), q.clone()]);
        let v = DirectSumVector::new(vec![vector(da, s, Field::Complex), vector(db, s ^ 1, Field::Complex)]);
        let image = sum.apply_direct_sum(&v).unwrap().image;
        prop_assert_eq!(&image.blocks()[0], &p.apply(&v.blocks()[0]).unwrap().image);
        prop_assert_eq!(&image.blocks()[1], &q.apply(&v.blocks()[1]).unwrap().image);
    }

    #[test]
    fn distance_is_a_metric(dim in 3usize..12, n in 1usize..3, s in any::<u64>()) {
        let span = |seed: u64| pi_n(&(0..n).map(|j| vector(dim, seed ^ (j as u64) << 32, Field::Real)).collect::<Vec<_>>()).unwrap();
        let (a, b, c) = (span(s), span(s ^ 0xa), span(s ^ 0xb));
        let ab = grassmann_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, grassmann_distance(&b, &a).unwrap());
        prop_assert!(grassmann_distance(&a, &a).unwrap() < 1e-8);
        let (ac, cb) = (grassmann_distance(&a, &c).unwrap(), grassmann_distance(&c, &b).unwrap());
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&ab));
    }

    #[test]
    fn pi_n_ignores_mixing(dim in 3usize..16, n in 1usize..4, s in any::<u64>()) {
        let frame = DMatrix::from_fn(dim, n, |i, j| vector(dim, s ^ j as u64, Field::Complex).get(i));
        let mixed = &frame * invertible(n, s);
        let d = grassmann_distance(&pi_n(&tuple_of(&frame)).unwrap(), &pi_n(&tuple_of(&mixed)).unwrap()).unwrap();
        prop_assert!(d < 1e-10, "{}", d);
    }

    #[test]
    fn push_forward_is_span_of_images(variant in 0u8..6, dim in 4usize..16, n in 1usize..3, s in any::<u64>()) {
        let op = operator(variant, dim, s);
        let tuple: Vec<Vector> = (0..n).map(|j| vector(dim, s ^ (j as u64 + 1), Field::Complex)).collect();
        let l = pi_n(&tuple).unwrap();
        let images: Vec<Vector> = tuple.iter().map(|x| op.apply(x).unwrap().image).collect();
        if let Ok(expected) = pi_n(&images) {
            let pushed = push_forward(&op, &l).unwrap();
            prop_assert!(grassmann_distance(&pushed, &expected).unwrap() < 1e-10);
        }
    }

    #[test]
    fn subspace_frames_are_orthonormal(dim in 2usize..20, n in 1usize..4, s in any::<u64>()) {
        prop_assume!(n <= dim);
        let l: Subspace = pi_n(&(0..n).map(|j| vector(dim, s ^ j as u64, Field::Complex)).collect::<Vec<_>>()).unwrap();
        let gram = l.frame().adjoint() * l.frame();
        prop_assert!((gram - DMatrix::<Scalar>::identity(n, n)).norm() < 1e-10);
    }
}
