mod oracle;

use irt_core::rng::seeded;
use irt_core::trajectory::*;
use nalgebra::DMatrix;
use rand::Rng;

fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

fn to_mat(m: &DMatrix<f64>) -> oracle::Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[test]
fn gp_posterior_matches_dense_oracle() {
    let mut rng = seeded(20);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let steps = rng.random_range(3..12);
        let grid = TimeGrid::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..0.8), steps).unwrap();
        let mut times: Vec<f64> = (0..5).map(|_| rng.random_range(grid.t0..grid.end())).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let values: Vec<Point<f64>> = times
            .iter()
            .map(|_| Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
            .collect();
        let noise: Vec<f64> = times.iter().map(|_| rng.random_range(0.05..0.5)).collect();
        let obs = ObservationSet::new(times.clone(), values.clone(), noise.clone()).unwrap();
        let kernel = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let with_goal = rng.random_bool(0.5);
        let goal = GoalConstraint::new(Point::new(4.0, -1.0));
        let post = gp_posterior(&kernel, &obs, &grid, with_goal.then_some(&goal)).unwrap();

        let (mut tt, mut nn) = (times.clone(), noise.clone());
        let mut ys = values.clone();
        if with_goal {
            tt.push(grid.end());
            nn.push(0.1);
            ys.push(goal.position);
        }
        for axis in 0..2 {
            let y: Vec<f64> = ys.iter().map(|p| p[axis]).collect();
            let (mean, cov) = oracle::gp_axis(&grid.times(), &tt, &y, &nn, 1.0, 1.0, 1e-9);
            for k in 0..grid.len() {
                worst = worst.max((post.mean().point(k)[axis] - mean[k]).abs());
                for l in 0..grid.len() {
                    worst = worst.max((post.covariance(axis)[(k, l)] - cov[k][l]).abs());
                }
            }
        }
    }
    assert!(worst < 1e-8, "max abs diff {worst:e}");
}

#[test]
fn log_density_matches_dense_oracle() {
    let mut rng = seeded(21);
    for _ in 0..100 {
        let steps = rng.random_range(1..9);
        let grid = TimeGrid::new(0.0, 0.5, steps).unwrap();
        let n = grid.len();
        let mean = Trajectory::from_fn(grid, |_, _| Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).unwrap();
        let covs = [random_spd(&mut rng, n), random_spd(&mut rng, n)];
        let belief = GaussianTrajectoryBelief::new(mean.clone(), covs.clone(), None).unwrap();
        let traj = Trajectory::from_fn(grid, |k, _| mean.point(k) + Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap();
        let got = belief.log_density(&traj).unwrap();
        let mut want = 0.0;
        for axis in 0..2 {
            let x: Vec<f64> = traj.points().iter().map(|p| p[axis]).collect();
            let m: Vec<f64> = mean.points().iter().map(|p| p[axis]).collect();
            want += oracle::gauss_logpdf(&x, &m, &to_mat(&covs[axis]));
        }
        assert!(!got.rank_deficient);
        assert!((got.value - want).abs() < 1e-8, "{} vs {}", got.value, want);
    }
}

#[test]
fn unit_variance_point_density() {
    let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
    let mean = Trajectory::constant(grid, Point::new(0.5, -0.5)).unwrap();
    let b = GaussianTrajectoryBelief::new(mean.clone(), [DMatrix::identity(2, 2), DMatrix::identity(2, 2)], None).unwrap();
    let v = b.log_density(&mean).unwrap().value;
    assert!((v - (-2.0 * (2.0 * std::f64::consts::PI).ln())).abs() < 1e-12);
}

#[test]
fn no_observations_gives_prior() {
    let grid = TimeGrid::new(0.0, 0.5, 6).unwrap();
    let kernel = KernelSpec::default();
    let b = gp_posterior(&kernel, &ObservationSet::empty(), &grid, None).unwrap();
    let kss = kernel.matrix(&grid.times(), &grid.times());
    assert_eq!(b.covariance(0), &kss);
    assert!(b.mean().points().iter().all(|p| *p == Point::zeros()));
}

#[test]
fn near_noiseless_observation_is_interpolated() {
    let grid = TimeGrid::new(0.0, 0.5, 6).unwrap();
    let obs = ObservationSet::single(0.0, Point::new(1.0, 2.0), 1e-6).unwrap();
    let b = gp_posterior(&KernelSpec::default(), &obs, &grid, None).unwrap();
    assert!((b.mean().point(0) - Point::new(1.0, 2.0)).norm() < 1e-4);
}

fn side_prior(grid: TimeGrid<f64>) -> MixtureTrajectoryBelief<f64> {
    let kernel = KernelSpec::default();
    let start = ObservationSet::single(0.0, Point::new(0.0, 0.0), 0.05).unwrap();
    let left = gp_posterior(&kernel, &start, &grid, Some(&GoalConstraint::new(Point::new(6.0, 2.0)))).unwrap();
    let right = gp_posterior(&kernel, &start, &grid, Some(&GoalConstraint::new(Point::new(6.0, -2.0)))).unwrap();
    MixtureTrajectoryBelief::new(vec![0.5, 0.5], vec![left, right]).unwrap()
}

#[test]
fn observations_on_left_path_select_left_mode() {
    let grid = TimeGrid::new(0.0, 0.5, 12).unwrap();
    let prior = side_prior(grid);
    let left_mean = prior.components()[0].mean().clone();
    let noise = 0.1;
    let mut obs = ObservationSet::empty();
    for k in 4..=8 {
        obs.push(grid.time(k), left_mean.point(k), noise).unwrap();
    }
    let post = mixture_posterior(&prior, &obs).unwrap();

    // Marginal likelihood of the stacked observations under each component:
    // z ~ N(mu[idx], Sigma[idx, idx] + noise^2 I), per axis.
    let idx: Vec<usize> = (4..=8).collect();
    let mut log_ml = [0.0; 2];
    for (c, comp) in prior.components().iter().enumerate() {
        for axis in 0..2 {
            let z: Vec<f64> = idx.iter().map(|&k| left_mean.point(k)[axis]).collect();
            let mu: Vec<f64> = idx.iter().map(|&k| comp.mean().point(k)[axis]).collect();
            let cov: oracle::Mat = idx
                .iter()
                .map(|&a| {
                    idx.iter()
                        .map(|&b| comp.covariance(axis)[(a, b)] + if a == b { noise * noise } else { 0.0 })
                        .collect()
                })
                .collect();
            log_ml[c] += oracle::gauss_logpdf(&z, &mu, &cov);
        }
    }
    let want_left = 1.0 / (1.0 + (log_ml[1] - log_ml[0]).exp());
    let got = post.belief.weights();
    assert!((got[0] - want_left).abs() < 1e-9, "{} vs {}", got[0], want_left);
    assert!(got[0] > 0.9, "left weight {}", got[0]);
    assert!((got[0] + got[1] - 1.0).abs() < 1e-9);
}

#[test]
fn single_component_mixture_matches_conditioning() {
    let grid = TimeGrid::new(0.0, 0.5, 8).unwrap();
    let prior = side_prior(grid);
    let single = MixtureTrajectoryBelief::single(prior.components()[0].clone());
    let obs = ObservationSet::new(vec![0.5, 1.0], vec![Point::new(0.4, 0.1), Point::new(0.9, 0.3)], vec![0.2, 0.2]).unwrap();
    let post = mixture_posterior(&single, &obs).unwrap();
    let (direct, _) = prior.components()[0].condition(&obs).unwrap();
    assert_eq!(post.belief.weights(), &[1.0]);
    let a = post.belief.components()[0].mean();
    assert_eq!(a, direct.mean());
}

#[test]
fn sampling_law_of_large_numbers() {
    let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
    let mean = Trajectory::new(grid, vec![Point::new(1.0, -1.0), Point::new(2.0, 3.0)]).unwrap();
    let cov = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, 0.8]);
    let b = GaussianTrajectoryBelief::new(mean.clone(), [cov.clone(), cov.clone()], None).unwrap();
    let n = 10_000;
    let samples = sample_trajectories(&b, n, 5).unwrap();
    for k in 0..2 {
        for axis in 0..2 {
            let xs: Vec<f64> = samples.iter().map(|s| s.point(k)[axis]).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let var = cov[(k, k)];
            assert!((m - mean.point(k)[axis]).abs() < 4.0 * var.sqrt() / 100.0);
            assert!((v - var).abs() < 0.1 * var);
        }
    }
}

#[test]
fn zero_covariance_samples_equal_mean() {
    let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
    let mean = Trajectory::from_fn(grid, |k, _| Point::new(k as f64, 1.0)).unwrap();
    let b = GaussianTrajectoryBelief::degenerate(mean.clone());
    for s in sample_trajectories(&b, 20, 1).unwrap() {
        assert_eq!(s, mean);
    }
}

#[test]
fn seeded_sampling_is_bitwise_repeatable_and_prefix_stable() {
    let grid = TimeGrid::new(0.0, 0.5, 10).unwrap();
    let prior = side_prior(grid);
    let a = sample_trajectories(&prior, 50, 77).unwrap();
    let b = sample_trajectories(&prior, 50, 77).unwrap();
    let c = sample_trajectories(&prior, 80, 77).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[..], c[..50]);
}

#[test]
fn mean_log_density_of_samples_is_negative_entropy() {
    let grid = TimeGrid::new(0.0, 0.5, 6).unwrap();
    let obs = ObservationSet::single(0.0, Point::new(0.0, 0.0), 0.1).unwrap();
    let b = gp_posterior(&KernelSpec::default(), &obs, &grid, Some(&GoalConstraint::new(Point::new(3.0, 1.0)))).unwrap();
    let n = 4000;
    let lds: Vec<f64> = sample_trajectories(&b, n, 3)
        .unwrap()
        .iter()
        .map(|s| b.log_density(s).unwrap().value)
        .collect();
    let m = lds.iter().sum::<f64>() / n as f64;
    let sd = (lds.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    assert!((m + b.entropy()).abs() < 3.0 * se, "mean {m}, -H {}, se {se}", -b.entropy());
}

#[test]
fn f32_beliefs_agree_with_f64() {
    let g64 = TimeGrid::new(0.0, 0.5, 6).unwrap();
    let g32 = TimeGrid::new(0.0f32, 0.5, 6).unwrap();
    let o64 = ObservationSet::single(0.5, Point::new(1.0, -1.0), 0.2).unwrap();
    let o32 = ObservationSet::single(0.5f32, Point::new(1.0, -1.0), 0.2).unwrap();
    let b64 = gp_posterior(&KernelSpec::default(), &o64, &g64, None).unwrap();
    let b32 = gp_posterior(&KernelSpec::default(), &o32, &g32, None).unwrap();
    for k in 0..g64.len() {
        assert!((b64.mean().point(k).x - b32.mean().point(k).x as f64).abs() < 1e-4);
    }
}
