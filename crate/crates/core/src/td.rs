//! TD-target formulas and the overestimation bias of the max operator.
//!
//! These are the formula-level building blocks of value-based targets: the
//! plain max target, the selection/evaluation split that damps its upward
//! bias, the twin-critic minimum, target-action smoothing, and a Monte Carlo
//! probe of how far `E[max(Q + noise)]` sits above `max Q`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a Q-table: values indexed by discrete action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QRow(Vec<f64>);

impl QRow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("q row", "must contain at least one action value"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("q row", format!("non-finite value {bad}")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n_actions: usize) -> Result<Self> {
        Self::new(vec![0.0; n_actions])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty rows
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; ties break to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// Reward and discount shared by the target formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub reward: f64,
    pub gamma: f64,
}

impl TargetParams {
    pub fn new(reward: f64, gamma: f64) -> Result<Self> {
        if !reward.is_finite() {
            return Err(Error::invalid("target params", "reward must be finite"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(
                "target params",
                format!("gamma must lie in [0, 1], got {gamma}"),
            ));
        }
        Ok(Self { reward, gamma })
    }
}

/// Discounted return `sum_k gamma^k * rewards[k]`; empty input gives 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Max-operator target: `reward + gamma * max_a q_next[a]`.
pub fn dqn_target(p: TargetParams, q_next: &QRow) -> f64 {
    p.reward + p.gamma * q_next.max()
}

/// Decoupled target: the current row selects the action, the target row
/// evaluates it.
pub fn double_dqn_target(p: TargetParams, q_next_current: &QRow, q_next_target: &QRow) -> Result<f64> {
    if q_next_current.len() != q_next_target.len() {
        return Err(Error::ShapeMismatch(format!(
            "selection row has {} actions, evaluation row has {}",
            q_next_current.len(),
            q_next_target.len()
        )));
    }
    let selected = q_next_current.argmax();
    Ok(p.reward + p.gamma * q_next_target.values()[selected])
}

/// Twin-critic target: `reward + gamma * min(q1, q2)`.
pub fn twin_min_target(p: TargetParams, q1: f64, q2: f64) -> f64 {
    p.reward + p.gamma * q1.min(q2)
}

/// Tabular update toward a target: `q + alpha * (g - q)`.
pub fn sarsamax_update(q: f64, alpha: f64, g: f64) -> f64 {
    q + alpha * (g - q)
}

/// Add clipped Gaussian noise to a target action, then clamp to the action
/// bounds. Noise is drawn componentwise from `Normal(0, std^2)` and clipped
/// to `[-clip, +clip]` before the bound clamp.
pub fn smoothed_target_action<R: Rng + ?Sized>(
    action: &[f64],
    std: f64,
    clip: f64,
    low: &[f64],
    high: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if action.len() != low.len() || action.len() != high.len() {
        return Err(Error::ShapeMismatch(format!(
            "action has {} components, bounds have {} and {}",
            action.len(),
            low.len(),
            high.len()
        )));
    }
    for (i, &a) in action.iter().enumerate() {
        if !(low[i] <= a && a <= high[i]) {
            return Err(Error::ActionOutOfBounds {
                index: i,
                value: a,
                low: low[i],
                high: high[i],
            });
        }
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::invalid("noise std", e.to_string()))?;
    Ok(action
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let eps = normal.sample(rng).clamp(-clip, clip);
            (a + eps).clamp(low[i], high[i])
        })
        .collect())
}

/// Monte Carlo estimate of the max-operator bias with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    /// Mean of `max_a(q[a] + noise_a) - max_a q[a]` over the trials.
    pub bias: f64,
    /// Standard error of the mean; infinite for a single trial.
    pub std_err: f64,
}

/// Estimate `E[max_a(Q(a) + eps_a)] - max_a Q(a)` with iid
/// `eps_a ~ Normal(0, noise_std^2)` by Monte Carlo over `trials` draws.
pub fn overestimation_bias_experiment<R: Rng + ?Sized>(
    true_q: &QRow,
    noise_std: f64,
    trials: u64,
    rng: &mut R,
) -> Result<BiasEstimate> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let normal =
        Normal::new(0.0, noise_std).map_err(|e| Error::invalid("noise std", e.to_string()))?;
    let true_max = true_q.max();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let noisy_max = true_q
            .values()
            .iter()
            .map(|&q| q + normal.sample(rng))
            .fold(f64::NEG_INFINITY, f64::max);
        let excess = noisy_max - true_max;
        sum += excess;
        sum_sq += excess * excess;
    }
    let n = trials as f64;
    let bias = sum / n;
    let std_err = if trials > 1 {
        let var = (sum_sq - sum * sum / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(BiasEstimate { bias, std_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(reward: f64, gamma: f64) -> TargetParams {
        TargetParams::new(reward, gamma).unwrap()
    }

    #[test]
    fn discounted_return_cases() {
        assert_eq!(discounted_return(&[], 0.9), 0.0);
        assert_eq!(discounted_return(&vec![1.0; 200], 1.0), 200.0);
        assert!((discounted_return(&[1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-15);
        // gamma = 0 keeps only the first reward.
        assert_eq!(discounted_return(&[3.0, 9.0, 9.0], 0.0), 3.0);
    }

    #[test]
    fn dqn_target_cases() {
        let q = QRow::new(vec![0.5, 2.0]).unwrap();
        assert!((dqn_target(params(1.0, 0.9), &q) - 2.8).abs() < 1e-15);
        assert_eq!(dqn_target(params(0.7, 0.0), &q), 0.7);
        let flat = QRow::new(vec![1.5, 1.5, 1.5]).unwrap();
        assert!((dqn_target(params(0.2, 0.5), &flat) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn double_dqn_decouples_selection_from_evaluation() {
        let q_cur = QRow::new(vec![1.0, 0.9]).unwrap();
        let q_tgt = QRow::new(vec![0.2, 3.0]).unwrap();
        let y = double_dqn_target(params(0.0, 1.0), &q_cur, &q_tgt).unwrap();
        assert_eq!(y, 0.2);

        let q = QRow::new(vec![0.5, 2.0]).unwrap();
        let same = double_dqn_target(params(1.0, 0.9), &q, &q).unwrap();
        assert_eq!(same, dqn_target(params(1.0, 0.9), &q));

        let flat = QRow::new(vec![4.0, 4.0]).unwrap();
        let y = double_dqn_target(params(1.0, 0.5), &q_cur, &flat).unwrap();
        assert!((y - 3.0).abs() < 1e-15);
    }

    #[test]
    fn double_dqn_rejects_length_mismatch() {
        let a = QRow::new(vec![1.0, 2.0]).unwrap();
        let b = QRow::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(double_dqn_target(params(0.0, 1.0), &a, &b).is_err());
    }

    #[test]
    fn twin_min_cases() {
        assert_eq!(twin_min_target(params(0.0, 1.0), 2.0, 3.0), 2.0);
        let collapsed = twin_min_target(params(1.0, 0.9), 2.0, 2.0);
        assert!((collapsed - 2.8).abs() < 1e-15);
    }

    #[test]
    fn sarsamax_cases() {
        assert!((sarsamax_update(0.0, 0.1, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(sarsamax_update(0.7, 0.0, 5.0), 0.7);
        assert_eq!(sarsamax_update(0.7, 1.0, 5.0), 5.0);
    }

    #[test]
    fn smoothing_zero_std_keeps_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = vec![0.3, -0.5];
        let out =
            smoothed_target_action(&a, 0.0, 0.5, &[-1.0, -1.0], &[1.0, 1.0], &mut rng).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn smoothing_respects_clip_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = vec![0.0, 0.9, -0.9];
        let low = vec![-1.0; 3];
        let high = vec![1.0; 3];
        for _ in 0..500 {
            let out = smoothed_target_action(&a, 10.0, 0.5, &low, &high, &mut rng).unwrap();
            for (i, &o) in out.iter().enumerate() {
                // Deviation is bounded by the clip except where the bound bites first.
                assert!(o >= (a[i] - 0.5).max(low[i]) - 1e-12);
                assert!(o <= (a[i] + 0.5).min(high[i]) + 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_rejects_out_of_bound_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = smoothed_target_action(&[1.5], 0.1, 0.5, &[-1.0], &[1.0], &mut rng);
        assert!(matches!(err, Err(Error::ActionOutOfBounds { .. })));
    }

    #[test]
    fn smoothing_at_the_high_bound_clamps_positive_noise_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hit_bound = 0;
        for _ in 0..100 {
            let out =
                smoothed_target_action(&[1.0], 5.0, 0.5, &[-1.0], &[1.0], &mut rng).unwrap();
            assert!(out[0] <= 1.0);
            assert!(out[0] >= 0.5); // clip bounds the downward move
            if out[0] == 1.0 {
                hit_bound += 1; // positive draw clamped exactly to the bound
            }
        }
        assert!(hit_bound > 10);
    }

    #[test]
    fn qrow_rejects_empty_and_non_finite() {
        assert!(QRow::new(vec![]).is_err());
        assert!(QRow::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn bias_single_action_is_centered_on_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = QRow::zeros(1).unwrap();
        let est = overestimation_bias_experiment(&q, 1.0, 200_000, &mut rng).unwrap();
        assert!(est.bias.abs() <= 3.0 * est.std_err, "bias {} se {}", est.bias, est.std_err);
    }

    #[test]
    fn bias_two_actions_matches_closed_form() {
        // E[max(z1, z2)] = 1/sqrt(pi) for iid standard normals.
        let expected = 1.0 / std::f64::consts::PI.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = QRow::zeros(2).unwrap();
        let est = overestimation_bias_experiment(&q, 1.0, 1_000_000, &mut rng).unwrap();
        assert!(
            (est.bias - expected).abs() <= 4.0 * est.std_err,
            "bias {} expected {} se {}",
            est.bias,
            expected,
            est.std_err
        );
    }

    #[test]
    fn bias_scales_with_noise_std() {
        // max of (q + sigma z) over equal q is sigma * max(z), so the bias is
        // linear in sigma.
        let q = QRow::zeros(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let small = overestimation_bias_experiment(&q, 0.1, 400_000, &mut rng).unwrap();
        let expected = 0.1 / std::f64::consts::PI.sqrt();
        assert!((small.bias - expected).abs() <= 4.0 * small.std_err);
    }

    /// Quadrature oracle for the expected maximum of n iid standard normals:
    /// E[max] = integral of x n phi(x) Phi(x)^(n-1) dx, evaluated by Simpson's
    /// rule. Shares no code with the Monte Carlo path it checks.
    fn expected_max_normal_oracle(n: u32) -> f64 {
        use statrs::function::erf::erf;
        let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
        let integrand =
            |x: f64| x * n as f64 * phi(x) * cdf(x).powi(n as i32 - 1);
        let (a, b, steps) = (-12.0, 12.0, 48_000u32);
        let h = (b - a) / steps as f64;
        let mut total = integrand(a) + integrand(b);
        for i in 1..steps {
            let x = a + i as f64 * h;
            total += integrand(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total * h / 3.0
    }

    #[test]
    fn bias_matches_quadrature_oracle_for_larger_rows() {
        // The oracle itself is validated against the closed form at n = 2 and
        // against independently computed order-statistics constants.
        let closed_form = 1.0 / std::f64::consts::PI.sqrt();
        assert!((expected_max_normal_oracle(2) - closed_form).abs() < 1e-9);
        assert!((expected_max_normal_oracle(5) - 1.162_964_473_640_52).abs() < 1e-9);
        assert!((expected_max_normal_oracle(10) - 1.538_752_730_835_173).abs() < 1e-9);
        assert!((expected_max_normal_oracle(50) - 2.249_073_629_389_85).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [5usize, 10] {
            let q = QRow::zeros(n).unwrap();
            let est = overestimation_bias_experiment(&q, 1.0, 400_000, &mut rng).unwrap();
            let oracle = expected_max_normal_oracle(n as u32);
            assert!(
                (est.bias - oracle).abs() <= 4.0 * est.std_err,
                "n={n}: bias {} vs oracle {oracle} (se {})",
                est.bias,
                est.std_err
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn qrow(n: std::ops::Range<usize>) -> impl Strategy<Value = QRow> {
            proptest::collection::vec(-100.0..100.0f64, n).prop_map(|v| QRow::new(v).unwrap())
        }

        proptest! {
            #[test]
            fn double_with_identical_rows_is_dqn(q in qrow(1..8), r in -5.0..5.0f64, g in 0.0..1.0f64) {
                let p = params(r, g);
                prop_assert_eq!(double_dqn_target(p, &q, &q).unwrap(), dqn_target(p, &q));
            }

            #[test]
            fn double_never_exceeds_dqn_on_evaluation_row(
                cur in qrow(4..5), tgt in qrow(4..5), r in -5.0..5.0f64, g in 0.0..1.0f64
            ) {
                let p = params(r, g);
                prop_assert!(double_dqn_target(p, &cur, &tgt).unwrap() <= dqn_target(p, &tgt) + 1e-12);
            }

            #[test]
            fn twin_min_bounded_by_both_critics(q1 in -10.0..10.0f64, q2 in -10.0..10.0f64, r in -5.0..5.0f64, g in 0.0..1.0f64) {
                let p = params(r, g);
                let y = twin_min_target(p, q1, q2);
                prop_assert!(y <= p.reward + p.gamma * q1 + 1e-12);
                prop_assert!(y <= p.reward + p.gamma * q2 + 1e-12);
            }

            #[test]
            fn sarsamax_is_convex_combination(q in -10.0..10.0f64, g in -10.0..10.0f64, a in 0.0..1.0f64) {
                let out = sarsamax_update(q, a, g);
                let (lo, hi) = if q <= g { (q, g) } else { (g, q) };
                prop_assert!(out >= lo - 1e-12 && out <= hi + 1e-12);
            }

            #[test]
            fn gamma_one_is_plain_sum(rewards in proptest::collection::vec(-5.0..5.0f64, 0..40)) {
                let total: f64 = rewards.iter().sum();
                prop_assert!((discounted_return(&rewards, 1.0) - total).abs() < 1e-9);
            }
        }
    }
}
