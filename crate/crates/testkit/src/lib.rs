//! Slow, obviously-correct reference implementations for tests.
//!
//! Nothing here calls into `pnsm-core`: eigenvectors come from cyclic Jacobi
//! rotations, shortest paths from Floyd–Warshall, and every sum is a plain
//! double loop over `Vec<Vec<f64>>` rows. Intended for clouds of a few dozen
//! points; the fixed-point check also scales to a few thousand.

pub type Row = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// No sample strictly inside the weighting ball.
    EmptyBall,
    /// Top two eigenvalues of an aggregated projector sum too close.
    AmbiguousDirection,
}

fn sq(x: f64) -> f64 {
    x * x
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| sq(x - y)).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and matching unit eigenvectors.
pub fn jacobi_eigen(matrix: &[Row]) -> (Vec<f64>, Vec<Row>) {
    let n = matrix.len();
    let mut a: Vec<Row> = matrix.to_vec();
    let mut v: Vec<Row> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| sq(a[i][j]))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    (values, vectors)
}

/// Radius-r covariance centered at sample `i`, self included.
pub fn local_covariance(points: &[Row], i: usize, r: f64) -> Vec<Row> {
    let dim = points[i].len();
    let mut sigma = vec![vec![0.0; dim]; dim];
    let mut count = 0.0;
    for x in points {
        if distance(x, &points[i]) <= r {
            count += 1.0;
            for a in 0..dim {
                for b in 0..dim {
                    sigma[a][b] += (x[a] - points[i][a]) * (x[b] - points[i][b]);
                }
            }
        }
    }
    for row in sigma.iter_mut() {
        for v in row.iter_mut() {
            *v /= count;
        }
    }
    sigma
}

/// Ascending eigenvectors of every local covariance.
pub fn frames(points: &[Row], r: f64) -> Vec<Vec<Row>> {
    (0..points.len())
        .map(|i| jacobi_eigen(&local_covariance(points, i, r)).1)
        .collect()
}

/// Normalized bump weights `(1 - d²/r²)^β` inside the ball.
pub fn weights(z: &[f64], points: &[Row], r: f64, beta: u32) -> Result<Vec<f64>, OracleError> {
    let raw: Vec<f64> = points
        .iter()
        .map(|x| {
            let d = distance(z, x);
            if d <= r {
                (1.0 - d * d / (r * r)).powi(beta as i32)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(OracleError::EmptyBall);
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Bias sum `Σ_{k<K} u_k u_kᵀ (z - μ)` from first principles, frames
/// computed on `points` at radius `r`.
pub fn bias_sum(z: &[f64], points: &[Row], r: f64, beta: u32, codim: usize) -> Result<Row, OracleError> {
    let f = frames(points, r);
    bias_sum_with_frames(z, points, &f, r, beta, codim)
}

pub fn bias_sum_with_frames(
    z: &[f64],
    points: &[Row],
    frames: &[Vec<Row>],
    r: f64,
    beta: u32,
    codim: usize,
) -> Result<Row, OracleError> {
    let dim = z.len();
    let w = weights(z, points, r, beta)?;
    let mut mu = vec![0.0; dim];
    for (x, wi) in points.iter().zip(&w) {
        for a in 0..dim {
            mu[a] += wi * x[a];
        }
    }
    let mut out = vec![0.0; dim];
    for k in 0..codim {
        let mut m = vec![vec![0.0; dim]; dim];
        for (frame, wi) in frames.iter().zip(&w) {
            if *wi == 0.0 {
                continue;
            }
            let v = &frame[k];
            for a in 0..dim {
                for b in 0..dim {
                    m[a][b] += wi * v[a] * v[b];
                }
            }
        }
        let (vals, vecs) = jacobi_eigen(&m);
        if dim >= 2 && vals[dim - 1] - vals[dim - 2] < 1e-10 {
            return Err(OracleError::AmbiguousDirection);
        }
        let u = &vecs[dim - 1];
        let coef: f64 = (0..dim).map(|a| u[a] * (z[a] - mu[a])).sum();
        for a in 0..dim {
            out[a] += coef * u[a];
        }
    }
    Ok(out)
}

/// `‖bias sum‖` at each of `projected`, against frames of `points`.
pub fn fixed_point_check(projected: &[Row], points: &[Row], r: f64, beta: u32, codim: usize) -> Vec<f64> {
    let f = frames(points, r);
    projected
        .iter()
        .map(|z| match bias_sum_with_frames(z, points, &f, r, beta, codim) {
            Ok(b) => b.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Err(_) => f64::INFINITY,
        })
        .collect()
}

/// Minimum over base points of the sum of squared shortest-path lengths on
/// the symmetrized kNN graph, restricted to the largest component.
pub fn geodesic_variation(points: &[Row], k: usize) -> f64 {
    let n = points.len();
    let mut g = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (distance(&points[i], &points[j]), j))
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d, j) in others.iter().take(k) {
            g[i][j] = g[i][j].min(d);
            g[j][i] = g[j][i].min(d);
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = g[i][m] + g[m][j];
                if via < g[i][j] {
                    g[i][j] = via;
                }
            }
        }
    }
    // Component of each vertex = set of reachable vertices.
    let reach: Vec<usize> = (0..n).map(|i| g[i].iter().filter(|d| d.is_finite()).count()).collect();
    let biggest = reach.iter().copied().max().unwrap_or(0);
    let first = reach.iter().position(|&c| c == biggest).unwrap_or(0);
    let members: Vec<usize> = (0..n).filter(|&j| g[first][j].is_finite()).collect();
    members
        .iter()
        .map(|&j| members.iter().map(|&i| sq(g[j][i])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Silhouette straight from the definition.
pub fn silhouette(points: &[Row], labels: &[i64]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| distance(&points[i], &points[j])).sum::<f64>() / own.len() as f64;
        let mut others: Vec<i64> = labels.iter().copied().filter(|&l| l != labels[i]).collect();
        others.sort_unstable();
        others.dedup();
        let b = others
            .iter()
            .map(|&l| {
                let members: Vec<usize> = (0..n).filter(|&j| labels[j] == l).collect();
                members.iter().map(|&j| distance(&points[i], &points[j])).sum::<f64>() / members.len() as f64
            })
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

/// Value, first and second derivative of `f` at `x0` from samples on one
/// side only: `x0, x0 + h, ..., x0 + 4h` (use a negative `h` for the left
/// side). The stencils are exact for polynomials up to degree four.
pub fn one_sided_derivatives(f: impl Fn(f64) -> f64, x0: f64, h: f64) -> [f64; 3] {
    let s: Vec<f64> = (0..5).map(|j| f(x0 + j as f64 * h)).collect();
    let d1 = (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) / (12.0 * h);
    let d2 = (35.0 * s[0] - 104.0 * s[1] + 114.0 * s[2] - 56.0 * s[3] + 11.0 * s[4]) / (12.0 * h * h);
    [s[0], d1, d2]
}

pub fn mse(a: &[Row], b: &[Row]) -> f64 {
    a.iter().zip(b).map(|(x, y)| sq(distance(x, y))).sum::<f64>() / a.len() as f64
}
