//! Summation and Monte Carlo estimate bookkeeping.

/// Pairwise (cascade) summation; the grouping depends only on the length, so
/// the result is reproducible for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += *v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean, both through pairwise sums.
/// Constant samples give their value and a zero error exactly.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    // First-pass mean, refined by the mean deviation from it.
    let rough = pairwise_sum(values) / n as f64;
    let mut dev: alloc::vec::Vec<f64> = values.iter().map(|v| v - rough).collect();
    let mean = rough + pairwise_sum(&dev) / n as f64;
    for (d, v) in dev.iter_mut().zip(values) {
        *d = (v - mean) * (v - mean);
    }
    let var = pairwise_sum(&dev) / (n as f64 - 1.0);
    (mean, libm::sqrt(var / n as f64))
}

/// One Monte Carlo estimate compared against its analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub theory: f64,
    pub z_score: f64,
}

impl McEstimate {
    pub fn new(mean: f64, stderr: f64, n_paths: usize, theory: f64) -> Self {
        Self {
            mean,
            stderr,
            n_paths,
            theory,
            z_score: z_score(mean, stderr, theory),
        }
    }

    /// From raw per-path samples.
    pub fn from_samples(samples: &[f64], theory: f64) -> Self {
        let (mean, stderr) = mean_and_stderr(samples);
        Self::new(mean, stderr, samples.len(), theory)
    }

    /// Bernoulli estimate with `√(p̂(1−p̂)/n)` standard error.
    pub fn from_successes(successes: usize, n_paths: usize, theory: f64) -> Self {
        let p = successes as f64 / n_paths as f64;
        let stderr = libm::sqrt(p * (1.0 - p) / n_paths as f64);
        Self::new(p, stderr, n_paths, theory)
    }

    /// Affine rescaling `a·X` of the estimated quantity (theory is left to the caller).
    pub fn scaled(&self, factor: f64, theory: f64) -> Self {
        Self::new(self.mean * factor, self.stderr * factor.abs(), self.n_paths, theory)
    }

    pub fn passes(&self, z_threshold: f64) -> bool {
        self.z_score.abs() <= z_threshold
    }
}

/// `(mean − theory)/stderr`; with zero standard error the estimate is exact
/// or infinitely far off.
pub fn z_score(mean: f64, stderr: f64, theory: f64) -> f64 {
    if stderr > 0.0 {
        (mean - theory) / stderr
    } else if mean == theory {
        0.0
    } else {
        (mean - theory).signum() * f64::INFINITY
    }
}
