//! Exploration machinery: the annealed epsilon-greedy schedule, Gaussian and
//! Ornstein-Uhlenbeck noise processes, and the generic adaptive perturbation
//! scale driven by a policy-distance threshold.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linearly annealed exploration probability.
///
/// epsilon(i) = max(((eps_min - 1) / m_eps) * i + 1, eps_min): 1 at episode 0,
/// falling linearly to the floor at episode `m_eps` and constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    /// Episode at which the floor is reached.
    pub m_eps: u32,
    /// Minimal exploration probability.
    pub eps_min: f64,
}

impl EpsilonSchedule {
    pub fn new(m_eps: u32, eps_min: f64) -> Result<Self> {
        if m_eps < 1 {
            return Err(Error::invalid("epsilon schedule", "m_eps must be >= 1"));
        }
        if !(eps_min > 0.0 && eps_min < 1.0) {
            return Err(Error::invalid(
                "epsilon schedule",
                format!("eps_min must lie in (0, 1), got {eps_min}"),
            ));
        }
        Ok(Self { m_eps, eps_min })
    }

    pub fn epsilon(&self, i: u32) -> f64 {
        ((self.eps_min - 1.0) / self.m_eps as f64 * i as f64 + 1.0).max(self.eps_min)
    }
}

/// Uncorrelated Gaussian exploration noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    pub mean: f64,
    pub std: f64,
}

impl GaussianNoise {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() || !std.is_finite() || std < 0.0 {
            return Err(Error::invalid(
                "gaussian noise",
                format!("needs finite mean and std >= 0, got ({mean}, {std})"),
            ));
        }
        Ok(Self { mean, std })
    }

    /// One draw from Normal(mean, std^2); a zero std returns the mean exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return self.mean;
        }
        let normal = Normal::new(self.mean, self.std).expect("validated on construction");
        normal.sample(rng)
    }
}

/// Mean-reverting correlated noise, discretized by Euler-Maruyama:
/// x <- x + theta (mu - x) dt + sigma sqrt(dt) z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    /// Mean-reversion rate (1/time).
    pub theta: f64,
    /// Long-run mean.
    pub mu: f64,
    /// Diffusion scale.
    pub sigma: f64,
    /// Time step.
    pub dt: f64,
    /// Current value.
    pub x: f64,
}

impl OuProcess {
    /// Conventional continuous-control defaults.
    pub fn with_defaults() -> Self {
        Self::new(0.15, 0.0, 0.2, 1.0).expect("defaults are valid")
    }

    pub fn new(theta: f64, mu: f64, sigma: f64, dt: f64) -> Result<Self> {
        let valid = theta.is_finite()
            && theta >= 0.0
            && sigma.is_finite()
            && sigma >= 0.0
            && dt.is_finite()
            && dt > 0.0
            && mu.is_finite();
        if !valid {
            return Err(Error::invalid(
                "ou process",
                format!("needs theta >= 0, sigma >= 0, dt > 0, finite mu; got ({theta}, {mu}, {sigma}, {dt})"),
            ));
        }
        Ok(Self {
            theta,
            mu,
            sigma,
            dt,
            x: mu,
        })
    }

    /// Advance one step and return the new value.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.x += self.theta * (self.mu - self.x) * self.dt + self.sigma * self.dt.sqrt() * z;
        self.x
    }

    /// Restart the process at its long-run mean.
    pub fn reset(&mut self) {
        self.x = self.mu;
    }

    /// Stationary variance of the discrete recursion
    /// `x' = (1 - theta dt) x + ... + sigma sqrt(dt) z`, defined when the
    /// AR(1) coefficient has modulus below one.
    pub fn stationary_variance(&self) -> Option<f64> {
        let a = self.lag1_autocorrelation();
        if a.abs() < 1.0 && self.sigma > 0.0 {
            Some(self.sigma * self.sigma * self.dt / (1.0 - a * a))
        } else {
            None
        }
    }

    /// AR(1) coefficient of the discretized process, `1 - theta dt`.
    pub fn lag1_autocorrelation(&self) -> f64 {
        1.0 - self.theta * self.dt
    }
}

/// Sample statistics of a simulated noise trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub steps: u64,
    pub mean: f64,
    pub variance: f64,
    pub lag1_autocorr: f64,
}

/// Run `steps` draws of the process and report mean, variance, and lag-1
/// autocorrelation of the trajectory. The process starts from its current
/// value and is left advanced.
pub fn ou_statistics<R: Rng + ?Sized>(
    process: &mut OuProcess,
    steps: u64,
    rng: &mut R,
) -> Result<TrajectoryStats> {
    if steps < 2 {
        return Err(Error::invalid("ou statistics", "needs at least 2 steps"));
    }
    let mut series = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        series.push(process.step(rng));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let variance = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let cov1 = series
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / n;
    let lag1_autocorr = if variance > 0.0 { cov1 / variance } else { 0.0 };
    Ok(TrajectoryStats {
        steps,
        mean,
        variance,
        lag1_autocorr,
    })
}

/// Perturbation scale adapted by comparing a policy distance to a threshold.
///
/// A distance below the threshold means the perturbation was too weak, so the
/// scale grows by `alpha`; otherwise it shrinks by `alpha`. The boundary
/// `distance == delta` takes the shrink branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSigma {
    /// Current perturbation scale.
    pub sigma: f64,
    /// Adaptation factor, > 1.
    pub alpha: f64,
    /// Distance threshold.
    pub delta: f64,
}

impl AdaptiveSigma {
    pub fn new(sigma: f64, alpha: f64, delta: f64) -> Result<Self> {
        let valid = sigma.is_finite()
            && sigma > 0.0
            && alpha.is_finite()
            && alpha > 1.0
            && delta.is_finite()
            && delta > 0.0;
        if !valid {
            return Err(Error::invalid(
                "adaptive sigma",
                format!("needs sigma > 0, alpha > 1, delta > 0; got ({sigma}, {alpha}, {delta})"),
            ));
        }
        Ok(Self { sigma, alpha, delta })
    }

    /// Apply one adaptation given a measured policy distance.
    pub fn update(self, distance: f64) -> Self {
        debug_assert!(distance >= 0.0, "distance must be non-negative");
        let sigma = if distance < self.delta {
            self.sigma * self.alpha
        } else {
            self.sigma / self.alpha
        };
        Self { sigma, ..self }
    }
}

fn check_batch_shapes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::ShapeMismatch("batches must be non-empty".into()));
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "batch lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let width = a[0].len();
    if width == 0 {
        return Err(Error::ShapeMismatch("vectors must be non-empty".into()));
    }
    for (i, (va, vb)) in a.iter().zip(b).enumerate() {
        if va.len() != width || vb.len() != width {
            return Err(Error::ShapeMismatch(format!(
                "element {i} has widths {} and {}, expected {width}",
                va.len(),
                vb.len()
            )));
        }
    }
    Ok(())
}

/// Distance between two continuous policies on a shared state batch: the
/// root of the mean squared action difference over all batch entries and
/// components.
pub fn continuous_policy_distance(actions_a: &[Vec<f64>], actions_b: &[Vec<f64>]) -> Result<f64> {
    check_batch_shapes(actions_a, actions_b)?;
    let count = (actions_a.len() * actions_a[0].len()) as f64;
    let sum_sq: f64 = actions_a
        .iter()
        .zip(actions_b)
        .flat_map(|(va, vb)| va.iter().zip(vb).map(|(x, y)| (x - y) * (x - y)))
        .sum();
    Ok((sum_sq / count).sqrt())
}

/// Distance between two discrete policies on a shared state batch: the mean
/// total-variation distance (half the L1 difference) per state.
pub fn discrete_policy_distance(probs_a: &[Vec<f64>], probs_b: &[Vec<f64>]) -> Result<f64> {
    check_batch_shapes(probs_a, probs_b)?;
    for (i, v) in probs_a.iter().chain(probs_b).enumerate() {
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized {
                index: i % probs_a.len(),
                sum,
            });
        }
    }
    let total: f64 = probs_a
        .iter()
        .zip(probs_b)
        .map(|(pa, pb)| 0.5 * pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum();
    Ok(total / probs_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn epsilon_reproduces_reference_table() {
        let sched = EpsilonSchedule::new(100, 0.01).unwrap();
        let expected = [
            (0, 1.0),
            (1, 0.9901),
            (2, 0.9802),
            (3, 0.9703),
            (98, 0.0298),
            (99, 0.0199),
            (100, 0.01),
            (150, 0.01),
        ];
        for (i, want) in expected {
            assert!(
                (sched.epsilon(i) - want).abs() < 1e-12,
                "i={i}: {} vs {want}",
                sched.epsilon(i)
            );
        }
    }

    #[test]
    fn epsilon_is_non_increasing_and_floored() {
        let sched = EpsilonSchedule::new(37, 0.05).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let e = sched.epsilon(i);
            assert!(e <= prev + 1e-15);
            assert!(e >= sched.eps_min);
            prev = e;
        }
        assert_eq!(sched.epsilon(0), 1.0);
        assert!((sched.epsilon(37) - 0.05).abs() < 1e-12);
        assert_eq!(sched.epsilon(38), 0.05);
    }

    #[test]
    fn epsilon_schedule_validation() {
        assert!(EpsilonSchedule::new(0, 0.01).is_err());
        assert!(EpsilonSchedule::new(100, 0.0).is_err());
        assert!(EpsilonSchedule::new(100, 1.0).is_err());
    }

    #[test]
    fn gaussian_zero_std_is_degenerate() {
        let noise = GaussianNoise::new(0.3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(noise.sample(&mut rng), 0.3);
        }
    }

    #[test]
    fn gaussian_moments_match_parameters() {
        let noise = GaussianNoise::new(0.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = noise.sample(&mut rng);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // CLT bound for the mean; 2% relative for the variance.
        assert!(mean.abs() < 3.0 * 0.1 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 0.01).abs() < 0.0002, "var {var}");
    }

    #[test]
    fn ou_pure_mean_reversion_with_unit_step_lands_on_mu() {
        let mut p = OuProcess::new(1.0, 0.0, 0.0, 1.0).unwrap();
        p.x = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.step(&mut rng), 0.0);
    }

    #[test]
    fn ou_frozen_process_never_moves() {
        let mut p = OuProcess::new(0.0, 0.7, 0.0, 1.0).unwrap();
        p.x = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(p.step(&mut rng), 0.3);
        }
    }

    #[test]
    fn ou_reset_returns_to_mu() {
        let mut p = OuProcess::new(0.15, 0.5, 0.2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        p.step(&mut rng);
        p.reset();
        assert_eq!(p.x, 0.5);
        // A frozen process stays at mu after reset.
        let mut frozen = OuProcess::new(0.0, 0.5, 0.0, 1.0).unwrap();
        frozen.reset();
        for _ in 0..5 {
            assert_eq!(frozen.step(&mut rng), 0.5);
        }
    }

    #[test]
    fn ou_long_run_variance_matches_ar1_oracle() {
        // Discrete AR(1) stationary variance: sigma^2 dt / (1 - (1 - theta dt)^2).
        let mut p = OuProcess::with_defaults();
        let oracle = p.stationary_variance().unwrap();
        assert!((oracle - 0.2 * 0.2 / (0.3 - 0.15 * 0.15)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let stats = ou_statistics(&mut p, 1_000_000, &mut rng).unwrap();
        assert!(
            (stats.variance - oracle).abs() < 0.05 * oracle,
            "variance {} oracle {oracle}",
            stats.variance
        );
    }

    #[test]
    fn ou_lag1_autocorrelation_matches_ar1_coefficient() {
        let mut p = OuProcess::with_defaults();
        let expected = p.lag1_autocorrelation();
        assert_eq!(expected, 0.85);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let stats = ou_statistics(&mut p, 500_000, &mut rng).unwrap();
        // 3 standard errors of the lag-1 estimate, se ~ sqrt((1-a^2)/n).
        let se = ((1.0 - expected * expected) / 500_000.0).sqrt();
        assert!(
            (stats.lag1_autocorr - expected).abs() < 3.0 * se,
            "lag1 {} expected {expected}",
            stats.lag1_autocorr
        );
    }

    #[test]
    fn adaptive_sigma_direct_evaluation() {
        let a = AdaptiveSigma::new(0.1, 1.01, 0.05).unwrap();
        let grown = a.update(0.01);
        assert!((grown.sigma - 0.101).abs() < 1e-15);
        // Boundary distance == delta takes the shrink branch.
        let shrunk = a.update(0.05);
        assert!((shrunk.sigma - 0.1 / 1.01).abs() < 1e-15);
    }

    #[test]
    fn adaptive_sigma_up_down_composes_to_identity() {
        let a = AdaptiveSigma::new(0.37, 1.13, 0.2).unwrap();
        let roundtrip = a.update(0.0).update(1.0);
        assert!((roundtrip.sigma - a.sigma).abs() < 1e-15 * a.sigma.abs().max(1.0));
    }

    #[test]
    fn adaptive_sigma_growth_is_geometric() {
        let mut a = AdaptiveSigma::new(0.1, 1.01, 0.05).unwrap();
        for _ in 0..50 {
            a = a.update(0.0);
        }
        let expected = 0.1 * 1.01f64.powi(50);
        assert!((a.sigma - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn adaptive_sigma_validation() {
        assert!(AdaptiveSigma::new(0.0, 1.01, 0.05).is_err());
        assert!(AdaptiveSigma::new(0.1, 1.0, 0.05).is_err());
        assert!(AdaptiveSigma::new(0.1, 1.01, 0.0).is_err());
    }

    #[test]
    fn continuous_distance_cases() {
        let a = vec![vec![0.0, 0.0]];
        let b = vec![vec![3.0, 4.0]];
        let d = continuous_policy_distance(&a, &b).unwrap();
        assert!((d - 12.5f64.sqrt()).abs() < 1e-12);

        assert_eq!(continuous_policy_distance(&a, &a).unwrap(), 0.0);

        // A constant offset c everywhere gives distance |c|.
        let base = vec![vec![0.1, -0.4, 2.0], vec![1.0, 0.0, -1.0]];
        let offset: Vec<Vec<f64>> = base
            .iter()
            .map(|v| v.iter().map(|x| x - 0.7).collect())
            .collect();
        let d = continuous_policy_distance(&base, &offset).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn discrete_distance_cases() {
        let a = vec![vec![1.0, 0.0]];
        let b = vec![vec![0.0, 1.0]];
        assert_eq!(discrete_policy_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(discrete_policy_distance(&a, &a).unwrap(), 0.0);

        let p = vec![vec![0.6, 0.4]];
        let q = vec![vec![0.5, 0.5]];
        let d = discrete_policy_distance(&p, &q).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn distances_reject_bad_shapes_and_normalization() {
        let a = vec![vec![0.5, 0.5]];
        let short = vec![vec![1.0]];
        assert!(continuous_policy_distance(&a, &short).is_err());
        assert!(continuous_policy_distance(&a, &[]).is_err());
        let not_normalized = vec![vec![0.5, 0.6]];
        assert!(discrete_policy_distance(&a, &not_normalized).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn batch(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
            proptest::collection::vec(
                proptest::collection::vec(-10.0..10.0f64, cols),
                rows,
            )
        }

        proptest! {
            #[test]
            fn continuous_distance_symmetric_nonneg(a in batch(3, 2), b in batch(3, 2)) {
                let ab = continuous_policy_distance(&a, &b).unwrap();
                let ba = continuous_policy_distance(&b, &a).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() < 1e-12);
                prop_assert_eq!(continuous_policy_distance(&a, &a).unwrap(), 0.0);
            }

            #[test]
            fn epsilon_monotone_for_any_schedule(m in 1u32..1000, eps in 0.001..0.999f64, i in 0u32..2000) {
                let sched = EpsilonSchedule::new(m, eps).unwrap();
                prop_assert!(sched.epsilon(i + 1) <= sched.epsilon(i) + 1e-15);
            }

            #[test]
            fn adaptive_sigma_n_updates_scale_by_alpha_pow_n(
                sigma in 0.01..10.0f64, alpha in 1.001..2.0f64, n in 1usize..60
            ) {
                let mut a = AdaptiveSigma::new(sigma, alpha, 0.5).unwrap();
                for _ in 0..n {
                    a = a.update(0.1);
                }
                let expected = sigma * alpha.powi(n as i32);
                prop_assert!((a.sigma - expected).abs() <= 1e-12 * expected);
            }
        }
    }
}
