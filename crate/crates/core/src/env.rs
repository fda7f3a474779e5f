//! Cart-pole simulator with deterministic dynamics.
//!
//! A pole is hinged to a cart that slides along a track; the controller
//! pushes the cart left or right with a fixed force and earns +1 reward per
//! step until the pole tips too far, the cart leaves the track, or the step
//! limit is reached. The `v0` and `v1` presets differ only in step limit and
//! solve threshold.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of consecutive episodes whose mean score must meet the solve
/// threshold.
pub const SOLVE_WINDOW: usize = 100;

/// Physical state of the cart-pole system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartpoleState {
    /// Cart position along the track (m).
    pub x: f64,
    /// Cart velocity (m/s).
    pub x_dot: f64,
    /// Pole angle from vertical (rad).
    pub theta: f64,
    /// Pole angular velocity (rad/s).
    pub theta_dot: f64,
}

impl CartpoleState {
    pub const ZERO: Self = Self {
        x: 0.0,
        x_dot: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
    };

    pub fn new(x: f64, x_dot: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            x,
            x_dot,
            theta,
            theta_dot,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.x_dot.is_finite()
            && self.theta.is_finite()
            && self.theta_dot.is_finite()
    }

    /// State components in policy-input order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

/// Push direction for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Left,
    Right,
}

/// Environment preset selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    V0,
    V1,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v0" => Ok(Variant::V0),
            "v1" => Ok(Variant::V1),
            other => Err(Error::invalid(
                "env variant",
                format!("unknown preset `{other}`, expected v0 or v1"),
            )),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::V0 => write!(f, "v0"),
            Variant::V1 => write!(f, "v1"),
        }
    }
}

/// Full environment parameterization. Serializes to JSON with these exact
/// field names; angles are stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartpoleConfig {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub force_mag: f64,
    /// Integration step (s).
    pub tau: f64,
    /// Episode ends when |theta| exceeds this angle (rad).
    pub angle_threshold: f64,
    /// Episode ends when |x| exceeds this distance.
    pub position_threshold: f64,
    pub max_episode_steps: u32,
    /// Mean score over the last [`SOLVE_WINDOW`] episodes required to solve.
    pub solve_threshold: f64,
    /// Initial states are uniform in [-init_bound, +init_bound] per component.
    pub init_bound: f64,
}

/// Preset for the given variant: v0 solves at 195 within 200 steps, v1 at
/// 475 within 500 steps. Physics constants and thresholds are shared.
pub fn preset(variant: Variant) -> CartpoleConfig {
    let (max_episode_steps, solve_threshold) = match variant {
        Variant::V0 => (200, 195.0),
        Variant::V1 => (500, 475.0),
    };
    CartpoleConfig {
        gravity: 9.8,
        cart_mass: 1.0,
        pole_mass: 0.1,
        pole_half_length: 0.5,
        force_mag: 10.0,
        tau: 0.02,
        angle_threshold: 15.0_f64.to_radians(),
        position_threshold: 2.4,
        max_episode_steps,
        solve_threshold,
        init_bound: 0.05,
    }
}

impl CartpoleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_half_length", self.pole_half_length),
            ("force_mag", self.force_mag),
            ("tau", self.tau),
            ("position_threshold", self.position_threshold),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(
                    "env config",
                    format!("{name} must be positive and finite, got {value}"),
                ));
            }
        }
        if !(self.angle_threshold > 0.0 && self.angle_threshold < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(
                "env config",
                format!(
                    "angle_threshold must lie in (0, pi/2), got {}",
                    self.angle_threshold
                ),
            ));
        }
        if self.max_episode_steps < 1 {
            return Err(Error::invalid("env config", "max_episode_steps must be >= 1"));
        }
        if !self.solve_threshold.is_finite() || !self.init_bound.is_finite() || self.init_bound < 0.0
        {
            return Err(Error::invalid(
                "env config",
                "solve_threshold must be finite and init_bound non-negative",
            ));
        }
        Ok(())
    }
}

/// Outcome of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: CartpoleState,
    /// Always 1, including on the terminating step, so an episode's score
    /// equals its length.
    pub reward: f64,
    pub done: bool,
}

/// Draw an initial state, each component independently uniform in
/// [-init_bound, +init_bound]. Components are drawn in state order.
pub fn reset<R: Rng + ?Sized>(config: &CartpoleConfig, rng: &mut R) -> CartpoleState {
    let b = config.init_bound;
    let mut draw = || rng.gen_range(-b..=b);
    CartpoleState {
        x: draw(),
        x_dot: draw(),
        theta: draw(),
        theta_dot: draw(),
    }
}

/// Advance the dynamics one Euler step of size `tau` under the given push.
///
/// `steps_taken` counts steps completed before this one; the episode is cut
/// when the step being taken reaches `max_episode_steps`. Termination is
/// judged on the post-step state.
pub fn step(
    config: &CartpoleConfig,
    state: &CartpoleState,
    action: Action,
    steps_taken: u32,
) -> Result<StepResult> {
    if !state.is_finite() {
        return Err(Error::NonFiniteState(*state));
    }

    let force = match action {
        Action::Right => config.force_mag,
        Action::Left => -config.force_mag,
    };
    let total_mass = config.cart_mass + config.pole_mass;
    let pole_mass_length = config.pole_mass * config.pole_half_length;

    let cos_theta = state.theta.cos();
    let sin_theta = state.theta.sin();

    let temp =
        (force + pole_mass_length * state.theta_dot * state.theta_dot * sin_theta) / total_mass;
    let theta_acc = (config.gravity * sin_theta - cos_theta * temp)
        / (config.pole_half_length
            * (4.0 / 3.0 - config.pole_mass * cos_theta * cos_theta / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;

    // Classic Euler: positions advance with the old velocities, velocities
    // with the new accelerations.
    let next = CartpoleState {
        x: state.x + config.tau * state.x_dot,
        x_dot: state.x_dot + config.tau * x_acc,
        theta: state.theta + config.tau * state.theta_dot,
        theta_dot: state.theta_dot + config.tau * theta_acc,
    };

    let done = next.theta.abs() > config.angle_threshold
        || next.x.abs() > config.position_threshold
        || steps_taken + 1 >= config.max_episode_steps;

    Ok(StepResult {
        state: next,
        reward: 1.0,
        done,
    })
}

/// Solve rule: at least [`SOLVE_WINDOW`] episodes and the mean of the last
/// [`SOLVE_WINDOW`] scores at or above the threshold.
pub fn is_solved(scores: &[f64], solve_threshold: f64) -> bool {
    if scores.len() < SOLVE_WINDOW {
        return false;
    }
    let window = &scores[scores.len() - SOLVE_WINDOW..];
    let mean = window.iter().sum::<f64>() / SOLVE_WINDOW as f64;
    mean >= solve_threshold
}
