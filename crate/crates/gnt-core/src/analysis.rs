//! Post-hoc metrics: stable rank, learning-curve aggregation, and
//! discovered-subgoal histograms.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;

use crate::auxdiscovery::SubgoalSpec;
use crate::runlog::RunLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisError {
    /// Stable rank of the zero matrix is undefined.
    ZeroMatrix,
    /// Aggregation needs at least one run.
    NoRuns,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::ZeroMatrix => write!(f, "stable rank undefined for the zero matrix"),
            AnalysisError::NoRuns => write!(f, "no runs to aggregate"),
        }
    }
}

/// Gram matrix of the smaller side: `A A^T` if rows <= cols, else `A^T A`.
fn small_gram(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = rows.len();
    let n = rows[0].len();
    if m <= n {
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                g[i][j] = dot;
                g[j][i] = dot;
            }
        }
        g
    } else {
        let mut g = vec![vec![0.0; n]; n];
        for row in rows {
            for i in 0..n {
                for j in i..n {
                    g[i][j] += row[i] * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i][j] = g[j][i];
            }
        }
        g
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// deterministic start vector.
fn largest_eigenvalue(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    // mildly uneven start so it is not orthogonal to typical top eigenvectors
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = g[i].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let norm = sqrt(w.iter().map(|x| x * x).sum());
        if norm == 0.0 {
            return 0.0;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        let next: f64 = {
            // Rayleigh quotient of the normalized iterate
            let mut gv = vec![0.0; n];
            for (i, gvi) in gv.iter_mut().enumerate() {
                *gvi = g[i].iter().zip(&w).map(|(a, b)| a * b).sum();
            }
            gv.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let converged = libm::fabs(next - lambda) <= 1e-13 * libm::fabs(next).max(1.0);
        lambda = next;
        v = w;
        if converged {
            break;
        }
    }
    lambda
}

/// Stable rank: sum of squared singular values over the largest, computed as
/// squared Frobenius norm over the top eigenvalue of the smaller Gram matrix.
pub fn stable_rank(rows: &[Vec<f64>]) -> Result<f64, AnalysisError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(AnalysisError::ZeroMatrix);
    }
    let frob_sq: f64 = rows.iter().flatten().map(|x| x * x).sum();
    if frob_sq == 0.0 {
        return Err(AnalysisError::ZeroMatrix);
    }
    let g = small_gram(rows);
    let lambda_max = largest_eigenvalue(&g);
    Ok(frob_sq / lambda_max)
}

/// Mean and standard error of steps-per-episode across runs, truncated to the
/// shortest run, plus per-run AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub auc_per_run: Vec<f64>,
}

impl LearningCurve {
    pub fn mean_auc(&self) -> f64 {
        self.auc_per_run.iter().sum::<f64>() / self.auc_per_run.len() as f64
    }

    pub fn auc_stderr(&self) -> f64 {
        stderr_of(&self.auc_per_run)
    }
}

fn stderr_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    sqrt(var / n)
}

pub fn learning_curve(logs: &[RunLog]) -> Result<LearningCurve, AnalysisError> {
    if logs.is_empty() {
        return Err(AnalysisError::NoRuns);
    }
    let shortest = logs.iter().map(|l| l.episodes.len()).min().unwrap();
    let mut mean = Vec::with_capacity(shortest);
    let mut stderr = Vec::with_capacity(shortest);
    for e in 0..shortest {
        let steps: Vec<f64> = logs.iter().map(|l| l.episodes[e].steps as f64).collect();
        mean.push(steps.iter().sum::<f64>() / steps.len() as f64);
        stderr.push(stderr_of(&steps));
    }
    Ok(LearningCurve {
        mean,
        stderr,
        auc_per_run: logs.iter().map(|l| l.auc()).collect(),
    })
}

fn bin_key(subgoal: &SubgoalSpec, bins: usize) -> (usize, usize) {
    match *subgoal {
        SubgoalSpec::Cell { row, col, .. } => (row, col),
        SubgoalSpec::Region { x, y, .. } => {
            let clamp_bin = |v: f64| {
                let b = (v * bins as f64) as usize;
                b.min(bins - 1)
            };
            (clamp_bin(y), clamp_bin(x))
        }
    }
}

/// Counts of retained-at-end subgoals per grid cell (gridworlds) or per 2-D
/// bin (pinball, `bins` x `bins`).
pub fn subgoal_histogram(logs: &[RunLog], bins: usize) -> BTreeMap<(usize, usize), usize> {
    let mut hist = BTreeMap::new();
    for log in logs {
        for subgoal in &log.final_tasks {
            *hist.entry(bin_key(subgoal, bins)).or_insert(0) += 1;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runlog::EpisodeRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Jacobi eigenvalue oracle, independent of the power-iteration path.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..200 {
            let mut off = 0.0;
            let (mut p, mut q) = (0, 1);
            for i in 0..n {
                for j in i + 1..n {
                    if a[i][j].abs() > off {
                        off = a[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
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
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    #[test]
    fn stable_rank_identity() {
        let m: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert!((stable_rank(&m).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn stable_rank_diag_formula() {
        let m = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!((stable_rank(&m).unwrap() - 1.25).abs() < 1e-9);
    }

    #[test]
    fn stable_rank_matches_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let m: Vec<Vec<f64>> = (0..10)
                .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let sr = stable_rank(&m).unwrap();
            let g = small_gram(&m);
            let eigs = jacobi_eigenvalues(g);
            let sum: f64 = eigs.iter().sum();
            let max = eigs.iter().cloned().fold(0.0, f64::max);
            assert!((sr - sum / max).abs() < 1e-6, "sr={} oracle={}", sr, sum / max);
        }
    }

    #[test]
    fn stable_rank_rejects_zero_matrix() {
        let m = vec![vec![0.0; 4]; 3];
        assert_eq!(stable_rank(&m).unwrap_err(), AnalysisError::ZeroMatrix);
    }

    #[test]
    fn stable_rank_bounds_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let sr = stable_rank(&m).unwrap();
        assert!((1.0 - 1e-9..=5.0 + 1e-9).contains(&sr));
        let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x * 7.5).collect()).collect();
        assert!((stable_rank(&scaled).unwrap() - sr).abs() < 1e-9);
    }

    fn constant_log(seed: u64, steps: usize, episodes: usize) -> RunLog {
        let mut log = RunLog::new(seed);
        for e in 0..episodes {
            log.episodes.push(EpisodeRecord { episode: e, steps, ret: -(steps as f64) });
        }
        log
    }

    #[test]
    fn single_run_curve() {
        let lc = learning_curve(&[constant_log(0, 42, 5)]).unwrap();
        assert_eq!(lc.mean, vec![42.0; 5]);
        assert_eq!(lc.stderr, vec![0.0; 5]);
        assert_eq!(lc.auc_per_run, vec![210.0]);
    }

    #[test]
    fn two_constant_runs_mean() {
        let lc = learning_curve(&[constant_log(0, 100, 3), constant_log(1, 200, 3)]).unwrap();
        assert_eq!(lc.mean, vec![150.0; 3]);
        assert!((lc.mean_auc() - 450.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_lengths_truncate_to_shortest() {
        let lc = learning_curve(&[constant_log(0, 10, 5), constant_log(1, 30, 3)]).unwrap();
        assert_eq!(lc.mean.len(), 3);
    }

    #[test]
    fn auc_ordering_matches_hand_sums() {
        let a = constant_log(0, 10, 4); // AUC 40
        let b = constant_log(1, 11, 4); // AUC 44
        let lc = learning_curve(&[a, b]).unwrap();
        assert!(lc.auc_per_run[0] < lc.auc_per_run[1]);
        assert_eq!(lc.auc_per_run, vec![40.0, 44.0]);
    }

    #[test]
    fn aggregation_permutation_invariant() {
        let logs = vec![constant_log(0, 10, 3), constant_log(1, 20, 3), constant_log(2, 30, 3)];
        let fwd = learning_curve(&logs).unwrap();
        let mut rev = logs;
        rev.reverse();
        let bwd = learning_curve(&rev).unwrap();
        assert_eq!(fwd.mean, bwd.mean);
        assert_eq!(fwd.stderr, bwd.stderr);
    }

    #[test]
    fn histogram_counts_final_tasks() {
        let mut log = RunLog::new(0);
        log.final_tasks = vec![
            SubgoalSpec::Cell { row: 1, col: 2, obs_index: 0 },
            SubgoalSpec::Cell { row: 1, col: 2, obs_index: 0 },
            SubgoalSpec::Cell { row: 3, col: 4, obs_index: 0 },
        ];
        let hist = subgoal_histogram(&[log.clone(), log], 10);
        assert_eq!(hist[&(1, 2)], 4);
        assert_eq!(hist[&(3, 4)], 2);
        assert_eq!(hist.values().sum::<usize>(), 6);
    }

    #[test]
    fn histogram_bins_regions() {
        let mut log = RunLog::new(0);
        log.final_tasks = vec![
            SubgoalSpec::Region { x: 0.05, y: 0.95, radius: 0.035 },
            SubgoalSpec::Region { x: 1.0, y: 0.0, radius: 0.035 },
        ];
        let hist = subgoal_histogram(&[log], 10);
        assert_eq!(hist[&(9, 0)], 1);
        assert_eq!(hist[&(0, 9)], 1);
    }
}
