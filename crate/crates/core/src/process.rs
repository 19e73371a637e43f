//! Memory windows, one-step distributions and the path simulator.
//!
//! A Markov-up process only remembers its current strictly falling
//! segment. [`FallWindow`] holds exactly that segment and is the only input a
//! [`Kernel`] receives, so any kernel written against this trait has the
//! random-memory-depth property by construction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a distribution's total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default step cap for [`simulate_path`] callers that have no opinion.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// The strictly decreasing suffix `X_ζ, …, X_n` of a trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FallWindow {
    start_time: u64,
    values: Vec<u64>,
}

impl FallWindow {
    /// A fresh window holding only the current state.
    pub fn new(start_time: u64, state: u64) -> Self {
        FallWindow {
            start_time,
            values: vec![state],
        }
    }

    /// Builds a window from an explicit falling segment.
    pub fn from_parts(start_time: u64, values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "window.values",
                value: 0.0,
                expected: "at least one state",
            });
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter {
                name: "window.values",
                value: f64::NAN,
                expected: "a strictly decreasing sequence",
            });
        }
        Ok(FallWindow { start_time, values })
    }

    /// The index ζ_n at which the current fall began.
    pub fn start_time(&self) -> u64 {
        self.start_time
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Current state `X_n`.
    pub fn current(&self) -> u64 {
        *self.values.last().expect("window is never empty")
    }

    /// Number of consecutive strict down-steps that led to the current state.
    pub fn fall_length(&self) -> usize {
        self.values.len() - 1
    }

    /// Time index `n` of the current state.
    pub fn time(&self) -> u64 {
        self.start_time + self.fall_length() as u64
    }

    /// Advances the window by one step in place.
    ///
    /// A strict decrease extends the fall; anything else (ties included)
    /// resets the memory to the new state.
    pub fn push(&mut self, next: u64) {
        if next < self.current() {
            self.values.push(next);
        } else {
            self.start_time = self.time() + 1;
            self.values.clear();
            self.values.push(next);
        }
    }
}

/// Functional form of [`FallWindow::push`].
pub fn window_update(mut window: FallWindow, x_next: u64, n_next: u64) -> FallWindow {
    debug_assert_eq!(n_next, window.time() + 1, "window_update must advance by one step");
    window.push(x_next);
    window
}

/// Geometric block of a step distribution: `P(start + j) = mass · p · (1 − p)^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    pub start: u64,
    pub mass: f64,
    pub p: f64,
}

impl GeometricTail {
    pub fn pmf(&self, state: u64) -> f64 {
        if state < self.start {
            return 0.0;
        }
        let j = state - self.start;
        self.mass * self.p * (1.0 - self.p).powf(j as f64)
    }

    /// Mass this block puts strictly above `start + k`.
    pub fn mass_above(&self, k: u64) -> f64 {
        self.mass * (1.0 - self.p).powf(k as f64 + 1.0)
    }
}

/// Law of the next state: finitely many atoms followed by an optional
/// geometric tail, all listed in increasing state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    atoms: Vec<(u64, f64)>,
    tail: Option<GeometricTail>,
}

impl StepDistribution {
    /// Unchecked constructor; [`StepDistribution::validate`] reports problems.
    pub fn new(atoms: Vec<(u64, f64)>, tail: Option<GeometricTail>) -> Self {
        StepDistribution { atoms, tail }
    }

    pub fn point(state: u64) -> Self {
        StepDistribution::new(vec![(state, 1.0)], None)
    }

    pub fn atoms(&self) -> &[(u64, f64)] {
        &self.atoms
    }

    pub fn tail(&self) -> Option<&GeometricTail> {
        self.tail.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, p)| p).sum::<f64>() + self.tail.map_or(0.0, |t| t.mass)
    }

    pub fn pmf(&self, state: u64) -> f64 {
        let atom = self
            .atoms
            .iter()
            .find(|&&(s, _)| s == state)
            .map_or(0.0, |&(_, p)| p);
        atom + self.tail.map_or(0.0, |t| t.pmf(state))
    }

    /// Probability of landing strictly below `state`.
    pub fn mass_below(&self, state: u64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|&&(s, _)| s < state)
            .map(|&(_, p)| p)
            .sum();
        let tail = match self.tail {
            Some(t) if state > t.start => t.mass - t.mass_above(state - 1 - t.start),
            _ => 0.0,
        };
        atoms + tail
    }

    /// Checks ordering, probability ranges and total mass.
    pub fn validate(&self) -> Result<()> {
        for &(state, p) in &self.atoms {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::DistributionInvalid(format!(
                    "probability {p} at state {state} is outside [0, 1]"
                )));
            }
        }
        if self.atoms.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::DistributionInvalid(
                "atoms are not in strictly increasing state order".into(),
            ));
        }
        if let Some(t) = self.tail {
            if !(0.0..=1.0).contains(&t.mass) || !(t.p > 0.0 && t.p <= 1.0) {
                return Err(Error::DistributionInvalid(format!(
                    "geometric tail has mass {} and parameter {}",
                    t.mass, t.p
                )));
            }
            if self.atoms.last().is_some_and(|&(s, _)| s >= t.start) {
                return Err(Error::DistributionInvalid(
                    "atoms overlap the geometric tail".into(),
                ));
            }
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::DistributionInvalid(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(())
    }

    /// Inverse-CDF lookup for a uniform draw `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        let mut cumulative = 0.0;
        for &(state, p) in &self.atoms {
            cumulative += p;
            if u < cumulative {
                return state;
            }
        }
        match self.tail {
            Some(t) => {
                let within = ((u - cumulative) / t.mass).clamp(0.0, 1.0);
                if t.p >= 1.0 || within <= 0.0 {
                    return t.start;
                }
                if within >= 1.0 {
                    // Only reachable through rounding of the atom masses.
                    return t.start;
                }
                // Smallest j with 1 − (1 − p)^(j+1) > within.
                let j = ((-within).ln_1p() / (-t.p).ln_1p()).floor();
                t.start.saturating_add(j as u64)
            }
            None => self.atoms.last().map_or(0, |&(s, _)| s),
        }
    }
}

/// A transition law that sees only the current falling segment.
pub trait Kernel: Send + Sync {
    /// Floor level `N`; the process is stopped once `X_t ≤ N`.
    fn floor(&self) -> u64;

    /// Distribution of the next state given the falling segment.
    fn next(&self, window: &FallWindow) -> StepDistribution;
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn floor(&self) -> u64 {
        (**self).floor()
    }

    fn next(&self, window: &FallWindow) -> StepDistribution {
        (**self).next(window)
    }
}

/// Draws the next state by inverse CDF over the kernel's distribution.
pub fn sample_step<K: Kernel + ?Sized>(kernel: &K, window: &FallWindow, u: f64) -> Result<u64> {
    let dist = kernel.next(window);
    dist.validate()?;
    Ok(dist.quantile(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HitFloor,
    StepCap,
}

/// A realized path, stopped at the floor or at the step cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: u64,
    pub states: Vec<u64>,
    pub floor: u64,
    pub stop_reason: StopReason,
    pub tau: Option<u64>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn max_state(&self) -> u64 {
        self.states.iter().copied().max().unwrap_or(self.x0)
    }
}

/// Runs the chain from `x0` until it enters `[0, N]` or `max_steps` steps
/// have been taken.
pub fn simulate_path<K, R>(kernel: &K, x0: u64, max_steps: u64, rng: &mut R) -> Result<Trajectory>
where
    K: Kernel + ?Sized,
    R: Rng + ?Sized,
{
    if max_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "max_steps",
            value: 0.0,
            expected: "a positive step count",
        });
    }
    let floor = kernel.floor();
    let mut states = vec![x0];
    if x0 <= floor {
        return Ok(Trajectory {
            x0,
            states,
            floor,
            stop_reason: StopReason::HitFloor,
            tau: Some(0),
        });
    }

    let mut window = FallWindow::new(0, x0);
    for t in 1..=max_steps {
        let u: f64 = rng.random();
        let next = sample_step(kernel, &window, u)?;
        states.push(next);
        if next <= floor {
            return Ok(Trajectory {
                x0,
                states,
                floor,
                stop_reason: StopReason::HitFloor,
                tau: Some(t),
            });
        }
        window.push(next);
    }
    Ok(Trajectory {
        x0,
        states,
        floor,
        stop_reason: StopReason::StepCap,
        tau: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;

    struct Fixed(StepDistribution);

    impl Kernel for Fixed {
        fn floor(&self) -> u64 {
            0
        }
        fn next(&self, _: &FallWindow) -> StepDistribution {
            self.0.clone()
        }
    }

    struct DownByOne {
        floor: u64,
    }

    impl Kernel for DownByOne {
        fn floor(&self) -> u64 {
            self.floor
        }
        fn next(&self, w: &FallWindow) -> StepDistribution {
            StepDistribution::point(w.current().saturating_sub(1))
        }
    }

    fn window(values: &[u64]) -> FallWindow {
        FallWindow::from_parts(0, values.to_vec()).unwrap()
    }

    #[test]
    fn strict_fall_extends_window() {
        let w = window_update(window(&[9, 7]), 6, 2);
        assert_eq!(w.values(), &[9, 7, 6]);
        assert_eq!(w.start_time(), 0);
    }

    #[test]
    fn tie_resets_window() {
        let w = window_update(window(&[9, 7]), 7, 2);
        assert_eq!(w.values(), &[7]);
        assert_eq!(w.start_time(), 2);
    }

    #[test]
    fn rise_resets_window() {
        let w = window_update(window(&[9, 7]), 12, 2);
        assert_eq!(w.values(), &[12]);
        assert_eq!(w.start_time(), 2);
        assert_eq!(w.fall_length(), 0);
    }

    #[test]
    fn from_parts_rejects_non_decreasing() {
        assert!(FallWindow::from_parts(0, vec![5, 5]).is_err());
        assert!(FallWindow::from_parts(0, vec![]).is_err());
    }

    #[test]
    fn degenerate_distribution_ignores_draw() {
        let k = Fixed(StepDistribution::point(5));
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(sample_step(&k, &window(&[3]), u).unwrap(), 5);
        }
    }

    #[test]
    fn inverse_cdf_on_two_atoms() {
        let k = Fixed(StepDistribution::new(vec![(4, 0.5), (6, 0.5)], None));
        assert_eq!(sample_step(&k, &window(&[3]), 0.25).unwrap(), 4);
        assert_eq!(sample_step(&k, &window(&[3]), 0.75).unwrap(), 6);
    }

    #[test]
    fn bad_mass_is_rejected() {
        let k = Fixed(StepDistribution::new(vec![(4, 0.5), (6, 0.4)], None));
        assert!(matches!(
            sample_step(&k, &window(&[3]), 0.1),
            Err(Error::DistributionInvalid(_))
        ));
        let unordered = StepDistribution::new(vec![(6, 0.5), (4, 0.5)], None);
        assert!(unordered.validate().is_err());
    }

    #[test]
    fn geometric_tail_quantile_matches_cdf() {
        let d = StepDistribution::new(
            vec![(6, 0.5)],
            Some(GeometricTail {
                start: 7,
                mass: 0.5,
                p: 0.5,
            }),
        );
        d.validate().unwrap();
        // CDF: 6 -> 0.5, 7 -> 0.75, 8 -> 0.875
        assert_eq!(d.quantile(0.49), 6);
        assert_eq!(d.quantile(0.5), 7);
        assert_eq!(d.quantile(0.74), 7);
        assert_eq!(d.quantile(0.75), 8);
        assert_eq!(d.quantile(0.8), 8);
        assert_eq!(d.quantile(0.875), 9);
        assert!((d.mass_below(8) - 0.75).abs() < 1e-15);
        assert!((d.pmf(8) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn start_inside_floor_stops_immediately() {
        let k = DownByOne { floor: 5 };
        let traj = simulate_path(&k, 3, 10, &mut path_rng(1, 0)).unwrap();
        assert_eq!(traj.states, vec![3]);
        assert_eq!(traj.tau, Some(0));
        assert_eq!(traj.stop_reason, StopReason::HitFloor);
    }

    #[test]
    fn descent_by_one_hits_after_k_steps() {
        let k = DownByOne { floor: 5 };
        let traj = simulate_path(&k, 8, 100, &mut path_rng(1, 0)).unwrap();
        assert_eq!(traj.states, vec![8, 7, 6, 5]);
        assert_eq!(traj.tau, Some(3));
    }

    #[test]
    fn step_cap_leaves_tau_absent() {
        let k = DownByOne { floor: 0 };
        let traj = simulate_path(&k, 50, 10, &mut path_rng(1, 0)).unwrap();
        assert_eq!(traj.stop_reason, StopReason::StepCap);
        assert_eq!(traj.tau, None);
        assert_eq!(traj.steps(), 10);
        assert!(simulate_path(&k, 50, 0, &mut path_rng(1, 0)).is_err());
    }
}
