use crate::losses::MIN_NORM;
use crate::net::Matrix;
use crate::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Euclidean norm of every frame.
fn norms(x: &Matrix, which: &str) -> Result<Vec<f64>> {
    (0..x.rows())
        .map(|t| {
            let n = dot(x.row(t), x.row(t)).sqrt();
            if !(n >= MIN_NORM) {
                return Err(Error::Degenerate {
                    norm: n,
                    context: format!("in frame {t} of sequence {which}"),
                });
            }
            Ok(n)
        })
        .collect()
}

/// Identical frames are exactly 0 apart; otherwise `(1 − x·y / |x||y|) / 2`.
fn local_distance(x: &[f64], y: &[f64], nx: f64, ny: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    (1.0 - (dot(x, y) / (nx * ny)).clamp(-1.0, 1.0)) / 2.0
}

/// Dynamic time warping between two `T × b` frame sequences with steps
/// `(1,0)`, `(0,1)` and `(1,1)` over per-frame cosine distances.
///
/// Returns the cost of the cheapest alignment path divided by its length
/// (number of aligned frame pairs). Among equally cheap paths the shortest
/// is used.
pub fn dtw_distance(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "DTW between frame dimensions {} and {}",
            x.cols(),
            y.cols()
        )));
    }
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::Dimension("DTW needs at least one frame per sequence".into()));
    }
    let xs = norms(x, "x")?;
    let ys = norms(y, "y")?;
    let m = ys.len();

    // Rolling rows of (accumulated cost, path length).
    let mut prev = vec![(f64::INFINITY, 0usize); m];
    let mut cur = vec![(f64::INFINITY, 0usize); m];
    for (i, &xn) in xs.iter().enumerate() {
        for (j, &yn) in ys.iter().enumerate() {
            let local = local_distance(x.row(i), y.row(j), xn, yn);
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, usize::MAX);
                let mut consider = |c: (f64, usize)| {
                    if c.0 < best.0 || (c.0 == best.0 && c.1 < best.1) {
                        best = c;
                    }
                };
                if i > 0 && j > 0 {
                    consider(prev[j - 1]);
                }
                if i > 0 {
                    consider(prev[j]);
                }
                if j > 0 {
                    consider(cur[j - 1]);
                }
                best
            };
            cur[j] = (best.0 + local, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, len) = prev[m - 1];
    Ok(cost / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::cosine_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every monotone path from (0,0) to (n-1,m-1), cost summed in path
    /// order; the cheapest (then shortest) wins.
    fn exhaustive_dtw(x: &Matrix, y: &Matrix) -> f64 {
        let (n, m) = (x.rows(), y.rows());
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| cosine_distance(x.row(i), y.row(j)).unwrap())
                    .collect()
            })
            .collect();
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![(0usize, 0usize, cost[0][0], 1usize)];
        while let Some((i, j, c, len)) = stack.pop() {
            if i == n - 1 && j == m - 1 {
                if c < best.0 || (c == best.0 && len < best.1) {
                    best = (c, len);
                }
                continue;
            }
            if i + 1 < n && j + 1 < m {
                stack.push((i + 1, j + 1, c + cost[i + 1][j + 1], len + 1));
            }
            if i + 1 < n {
                stack.push((i + 1, j, c + cost[i + 1][j], len + 1));
            }
            if j + 1 < m {
                stack.push((i, j + 1, c + cost[i][j + 1], len + 1));
            }
        }
        best.0 / best.1 as f64
    }

    fn random_seq(rng: &mut ChaCha8Rng, t: usize, b: usize) -> Matrix {
        Matrix::from_vec(t, b, (0..t * b).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn identical_sequences_cost_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..40 {
            let x = random_seq(&mut rng, t, 13);
            assert_eq!(dtw_distance(&x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_frames_reduce_to_cosine_distance() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let y = Matrix::from_rows(&[vec![0.0, 2.0]]);
        assert_eq!(dtw_distance(&x, &y).unwrap(), 0.5);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let tx = rng.random_range(1..7);
            let x = random_seq(&mut rng, tx, 3);
            let ty = rng.random_range(1..7);
            let y = random_seq(&mut rng, ty, 3);
            let fast = dtw_distance(&x, &y).unwrap();
            assert!((fast - exhaustive_dtw(&x, &y)).abs() < 1e-12);
            assert!((fast - dtw_distance(&y, &x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_and_degenerate_frames() {
        let x = Matrix::zeros(2, 3);
        let y = Matrix::from_rows(&[vec![1.0, 0.0]]);
        assert!(matches!(dtw_distance(&x, &y), Err(Error::Dimension(_))));
        let z = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(dtw_distance(&z, &y), Err(Error::Degenerate { .. })));
    }
}
