//! Reference implementations on plain `Vec<Vec<f64>>`, sharing no code with
//! the library: Gauss-Jordan inversion, LU determinants, scalar loops.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn se(a: f64, b: f64, ell: f64, var: f64) -> f64 {
    let d = (a - b) / ell;
    var * (-0.5 * d * d).exp()
}

pub fn kernel(rows: &[f64], cols: &[f64], ell: f64, var: f64) -> Mat {
    rows.iter().map(|&a| cols.iter().map(|&b| se(a, b, ell, var)).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Gauss-Jordan with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| aug[x][c].abs().total_cmp(&aug[y][c].abs())).unwrap();
        aug.swap(c, p);
        let d = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = aug[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `ln |det A|` by Gaussian elimination.
pub fn log_abs_det(a: &Mat) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        acc += m[c][c].abs().ln();
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

/// Posterior mean and covariance of one GP axis on `grid` given noisy
/// training points, with `jitter` on the training diagonal.
pub fn gp_axis(
    grid: &[f64],
    train_t: &[f64],
    train_y: &[f64],
    noise: &[f64],
    ell: f64,
    var: f64,
    jitter: f64,
) -> (Vec<f64>, Mat) {
    let mut ktt = kernel(train_t, train_t, ell, var);
    for i in 0..train_t.len() {
        ktt[i][i] += noise[i] * noise[i] + jitter;
    }
    let inv = inverse(&ktt);
    let kst = kernel(grid, train_t, ell, var);
    let kss = kernel(grid, grid, ell, var);
    let gain = matmul(&kst, &inv);
    let mean = matvec(&gain, train_y);
    let reduce = matmul(&gain, &transpose(&kst));
    let cov = kss
        .iter()
        .zip(&reduce)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    (mean, cov)
}

/// Full-rank Gaussian log density of `x` for one axis.
pub fn gauss_logpdf(x: &[f64], mean: &[f64], cov: &Mat) -> f64 {
    let n = x.len();
    let r: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let inv = inverse(cov);
    let quad: f64 = r.iter().zip(matvec(&inv, &r)).map(|(a, b)| a * b).sum();
    -0.5 * (quad + log_abs_det(cov) + n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Sum over unordered pairs and steps of `ln(1 - alpha exp(-d^2 / 2r^2))`.
pub fn pair_potential(paths: &[Vec<(f64, f64)>], radius: f64, alpha: f64) -> f64 {
    let mut total = 0.0;
    for a in 0..paths.len() {
        for b in (a + 1)..paths.len() {
            for k in 0..paths[a].len() {
                let dx = paths[a][k].0 - paths[b][k].0;
                let dy = paths[a][k].1 - paths[b][k].1;
                let d2 = dx * dx + dy * dy;
                total += (1.0 - alpha * (-d2 / (2.0 * radius * radius)).exp()).ln();
            }
        }
    }
    total
}

/// `-c * sum_k |h_k - m_k|^2`.
pub fn cohesion(h: &[(f64, f64)], m: &[(f64, f64)], c: f64) -> f64 {
    -c * h
        .iter()
        .zip(m)
        .map(|(a, b)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2))
        .sum::<f64>()
}
