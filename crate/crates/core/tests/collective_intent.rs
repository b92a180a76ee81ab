use irt_core::completion::*;
use irt_core::rng::seeded;
use irt_core::trajectory::{KernelSpec, Point, TimeGrid};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

fn rank_one(u: &[f64], v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
}

fn random_factor(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    // Bounded away from zero so relative errors stay meaningful.
    (0..n)
        .map(|_| {
            let m: f64 = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect()
}

fn masked(x: &DMatrix<f64>, mask: &[bool]) -> PreferenceMatrix<f64> {
    let mut m = PreferenceMatrix::new(x.nrows(), x.ncols()).unwrap();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if mask[i * x.ncols() + j] {
                m.observe(i, j, x[(i, j)]).unwrap();
            }
        }
    }
    m
}

#[test]
fn rank_one_recovery_from_sixty_percent() {
    let mut rng = seeded(40);
    let (rows, cols) = (5, 8);
    let observed = (rows * cols * 3) / 5;
    let mut recovered = 0;
    let mut trials = 0;
    while trials < 100 {
        let x = rank_one(&random_factor(&mut rng, rows), &random_factor(&mut rng, cols));
        let mut mask = vec![false; rows * cols];
        mask[..observed].iter_mut().for_each(|m| *m = true);
        mask.shuffle(&mut rng);
        let covered = (0..rows).all(|i| (0..cols).any(|j| mask[i * cols + j]))
            && (0..cols).all(|j| (0..rows).any(|i| mask[i * cols + j]));
        if !covered {
            continue;
        }
        trials += 1;
        let r = matrix_complete(&masked(&x, &mask), 1, 500, 1e-14).unwrap();
        let worst = (0..rows * cols)
            .filter(|&e| !mask[e])
            .map(|e| {
                let (i, j) = (e / cols, e % cols);
                ((r.completed[(i, j)] - x[(i, j)]) / x[(i, j)]).abs()
            })
            .fold(0.0, f64::max);
        if worst < 1e-6 {
            recovered += 1;
        }
    }
    assert!(recovered >= 95, "{recovered}/100");
}

#[test]
fn under_sampled_matrix_is_flagged() {
    let mut rng = seeded(41);
    let u = DMatrix::<f64>::from_fn(20, 2, |_, _| rng.random_range(-1.0..1.0));
    let v = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
    let x = &u * v.transpose();
    let mut m = PreferenceMatrix::new(20, 30).unwrap();
    m.observe(3, 7, x[(3, 7)]).unwrap();
    m.observe(11, 20, x[(11, 20)]).unwrap();
    let r = matrix_complete(&m, 2, 200, 1e-12).unwrap();
    let hidden_err = (0..20)
        .flat_map(|i| (0..30).map(move |j| (i, j)))
        .filter(|&(i, j)| !m.is_observed(i, j))
        .map(|(i, j)| (r.completed[(i, j)] - x[(i, j)]).abs())
        .fold(0.0, f64::max);
    assert!(!r.converged || hidden_err > 0.5, "converged with hidden error {hidden_err}");
    assert!(!r.unrecoverable_rows.is_empty());
}

#[test]
fn objective_never_increases() {
    let mut rng = seeded(42);
    for _ in 0..20 {
        let u = DMatrix::from_fn(8, 2, |_, _| rng.random_range(-1.0..1.0));
        let v = DMatrix::from_fn(10, 2, |_, _| rng.random_range(-1.0..1.0));
        let x = &u * v.transpose() + DMatrix::from_fn(8, 10, |_, _| rng.random_range(-0.05..0.05));
        let mask: Vec<bool> = (0..80).map(|_| rng.random_bool(0.5)).collect();
        let r = matrix_complete(&masked(&x, &mask), 2, 100, 0.0).unwrap();
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn completed_rank_is_bounded() {
    let mut rng = seeded(43);
    let x = DMatrix::from_fn(7, 9, |_, _| rng.random_range(-1.0..1.0));
    let mask: Vec<bool> = (0..63).map(|_| rng.random_bool(0.7)).collect();
    for rank in 1..=3 {
        let r = matrix_complete(&masked(&x, &mask), rank, 200, 1e-12).unwrap();
        let sv = r.completed.singular_values();
        let lead = sv.max();
        assert!(sv.iter().filter(|s| **s > 1e-8 * lead).count() <= rank);
        assert_eq!(r.rank_used, rank);
    }
}

#[test]
fn row_permutation_commutes() {
    let mut rng = seeded(44);
    let x = rank_one(&random_factor(&mut rng, 6), &random_factor(&mut rng, 7));
    let mask: Vec<bool> = (0..42).map(|_| rng.random_bool(0.7)).collect();
    let mut perm: Vec<usize> = (0..6).collect();
    perm.shuffle(&mut rng);
    let px = DMatrix::from_fn(6, 7, |i, j| x[(perm[i], j)]);
    let pmask: Vec<bool> = (0..42).map(|e| mask[perm[e / 7] * 7 + e % 7]).collect();
    let a = matrix_complete(&masked(&x, &mask), 1, 500, 1e-14).unwrap();
    let b = matrix_complete(&masked(&px, &pmask), 1, 500, 1e-14).unwrap();
    for i in 0..6 {
        for j in 0..7 {
            assert!((a.completed[(perm[i], j)] - b.completed[(i, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn sample_complexity_properties() {
    let base = sample_complexity(10, 100, 1, 0, 0.1, 0).unwrap();
    assert_eq!(base.required_n, 8);
    let doubled = sample_complexity(10, 100, 2, 0, 0.1, 0).unwrap();
    assert!(doubled.required_n + 1 >= 2 * base.required_n);
    for n1 in [1usize, 5, 20] {
        for n in [2usize, 10, 200] {
            for k in [0usize, 3, 50] {
                let r1 = sample_complexity(n1, n, 1, k, 1.0, 0).unwrap().required_n;
                assert!(sample_complexity(n1 + 1, n, 1, k, 1.0, 0).unwrap().required_n >= r1);
                assert!(sample_complexity(n1, n + 1, 1, k, 1.0, 0).unwrap().required_n >= r1);
                assert!(sample_complexity(n1, n, 2, k, 1.0, 0).unwrap().required_n >= r1);
                assert!(sample_complexity(n1, n, 1, k + 1, 1.0, 0).unwrap().required_n <= r1);
            }
        }
    }
}

fn lift() -> LiftSpec<f64> {
    LiftSpec {
        grid: TimeGrid::new(0.0, 0.5, 10).unwrap(),
        start: Point::new(0.0, 0.0),
        kernel: KernelSpec::default(),
        constant_c: 1.0,
    }
}

#[test]
fn new_operator_completed_from_rank_one_history() {
    let pattern: Vec<Point<f64>> = (0..10).map(|j| Point::new(1.0 + j as f64, 0.5 - 0.3 * j as f64)).collect();
    let scales = [1.0, 1.5, -0.5, 2.0, 0.8];
    let hist = |axis: usize| {
        let x = DMatrix::from_fn(scales.len(), 10, |i, j| scales[i] * pattern[j][axis]);
        PreferenceMatrix::from_dense(x).unwrap()
    };
    let truth = 1.3;
    let inputs = vec![(2, pattern[2] * truth), (7, pattern[7] * truth)];
    let out = complete_operator_intent(&[hist(0), hist(1)], &inputs, 1, &lift()).unwrap();
    for j in 0..10 {
        assert!((out.waypoints[j] - pattern[j] * truth).norm() < 1e-4, "platform {j}");
    }
    assert_eq!(out.intent.len(), 10);
    assert!(out.intent.weights().iter().all(|w| (*w - 0.1).abs() < 1e-15));
}

#[test]
fn single_history_row_scaled_through_one_input() {
    let row: Vec<Point<f64>> = vec![Point::new(2.0, 1.0), Point::new(-1.0, 4.0), Point::new(3.0, -2.0), Point::new(0.5, 0.5)];
    let hx = PreferenceMatrix::from_dense(DMatrix::from_fn(1, 4, |_, j| row[j].x)).unwrap();
    let hy = PreferenceMatrix::from_dense(DMatrix::from_fn(1, 4, |_, j| row[j].y)).unwrap();
    let input = Point::new(6.0, -4.0);
    let out = complete_operator_intent(&[hx, hy], &[(2, input)], 1, &lift()).unwrap();
    // Closed form: the new row is the history row scaled by input / row[2], per axis.
    let (sx, sy) = (input.x / row[2].x, input.y / row[2].y);
    for j in 0..4 {
        let want = Point::new(row[j].x * sx, row[j].y * sy);
        assert!((out.waypoints[j] - want).norm() < 1e-6, "{j}: {:?} vs {want:?}", out.waypoints[j]);
    }
    assert_eq!(out.waypoints[2], input);
}

#[test]
fn infeasible_completion_still_returns() {
    let hx = PreferenceMatrix::from_dense(DMatrix::from_element(3, 50, 1.0)).unwrap();
    let hy = PreferenceMatrix::from_dense(DMatrix::from_element(3, 50, 2.0)).unwrap();
    let mut c = lift();
    c.constant_c = 1e3;
    let out = complete_operator_intent(&[hx, hy], &[(0, Point::new(2.0, 4.0))], 1, &c).unwrap();
    assert!(!out.report.feasible);
    assert!((out.waypoints[10] - Point::new(2.0, 4.0)).norm() < 1e-6);
}
