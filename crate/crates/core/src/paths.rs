//! Stopping times on realized trajectories and the fall/rise decomposition.
//!
//! `ζ_n` looks backwards and is also maintained online by
//! [`FallWindow`](crate::process::FallWindow); `ξ_n` and `χ_n` look ahead and
//! are only available offline. On a finite sequence a run that reaches the
//! last index has no known end, which is reported as an error instead of being
//! clamped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::Trajectory;

fn check_index(states: &[u64], n: usize) -> Result<()> {
    if n < states.len() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: n,
            len: states.len(),
        })
    }
}

/// Start of the strictly falling run that ends at `n`.
pub fn zeta_at(states: &[u64], n: usize) -> Result<usize> {
    check_index(states, n)?;
    let mut k = n;
    while k > 0 && states[k] < states[k - 1] {
        k -= 1;
    }
    Ok(k)
}

/// Last index of the run starting at `n` whose steps all satisfy `keep`.
fn run_end(states: &[u64], n: usize, keep: impl Fn(u64, u64) -> bool) -> Result<usize> {
    check_index(states, n)?;
    let mut k = n;
    while k + 1 < states.len() && keep(states[k], states[k + 1]) {
        k += 1;
    }
    if k + 1 == states.len() {
        return Err(Error::UnterminatedRun { start: n });
    }
    Ok(k)
}

/// End of the non-decreasing run starting at `n` (`n` itself if the next
/// step goes down).
pub fn xi_at(states: &[u64], n: usize) -> Result<usize> {
    run_end(states, n, |from, to| to >= from)
}

/// End of the strictly decreasing run starting at `n`.
pub fn chi_at(states: &[u64], n: usize) -> Result<usize> {
    run_end(states, n, |from, to| to < from)
}

/// First index at or below the floor.
pub fn tau_of(states: &[u64], floor: u64) -> Option<usize> {
    states.iter().position(|&x| x <= floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecompositionCase {
    /// The first step is a strict decrease: `t_0 = T_0 = 0`.
    I,
    /// The first step is not a decrease: `T_0 = 0`, `t_0 = ξ_0`.
    II,
}

/// Non-decreasing interval `[T_j, t_j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rise {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub start_state: u64,
    pub end_state: u64,
}

impl Rise {
    pub fn length(&self) -> u64 {
        (self.end - self.start) as u64
    }

    pub fn overshoot(&self) -> u64 {
        self.end_state - self.start_state
    }
}

/// Strictly falling interval `[t_{j−1}, T_j]`, successful iff it ends in the
/// floor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    /// 1-based attempt number `j`.
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub start_state: u64,
    pub end_state: u64,
    pub success: bool,
}

impl Attempt {
    pub fn length(&self) -> u64 {
        (self.end - self.start) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptDecomposition {
    pub case: DecompositionCase,
    pub tau: usize,
    /// `[T_j, t_j]` for `j = 0, …, i−1`.
    pub rises: Vec<Rise>,
    /// Attempts `1, …, i`; only the last one succeeds.
    pub attempts: Vec<Attempt>,
    /// The index `i` of the successful attempt.
    pub successful_attempt: usize,
}

impl AttemptDecomposition {
    /// `T_0, t_0, T_1, t_1, …, T_i`.
    pub fn times(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.attempts.len() + 1);
        for (rise, attempt) in self.rises.iter().zip(&self.attempts) {
            out.push(rise.start);
            out.push(rise.end);
            debug_assert_eq!(rise.end, attempt.start);
        }
        out.push(self.tau);
        out
    }

    /// Rises that actually move: Case I's `t_0 = T_0` is left out.
    pub fn proper_rises(&self) -> impl Iterator<Item = &Rise> {
        self.rises.iter().filter(|r| r.end > r.start)
    }
}

/// Splits a floor-hitting trajectory into alternating rises and falling
/// attempts up to `τ`.
pub fn decompose_attempts(traj: &Trajectory) -> Result<AttemptDecomposition> {
    let tau = traj.tau.ok_or(Error::NotHit)? as usize;
    if tau == 0 {
        return Err(Error::StartsAtFloor);
    }
    let states = &traj.states[..=tau];
    let floor = traj.floor;
    let case = if states[1] < states[0] {
        DecompositionCase::I
    } else {
        DecompositionCase::II
    };

    let mut rises = Vec::new();
    let mut attempts = Vec::new();
    let mut rise_start = 0usize;
    loop {
        let j = rises.len();
        // A rise never reaches the floor, and the path enters the floor on a
        // down-step, so every rise before τ is terminated.
        let rise_end = xi_at(states, rise_start)?;
        rises.push(Rise {
            index: j,
            start: rise_start,
            end: rise_end,
            start_state: states[rise_start],
            end_state: states[rise_end],
        });

        let mut fall_end = rise_end;
        while fall_end < tau && states[fall_end + 1] < states[fall_end] {
            fall_end += 1;
            if states[fall_end] <= floor {
                break;
            }
        }
        let success = states[fall_end] <= floor;
        attempts.push(Attempt {
            index: j + 1,
            start: rise_end,
            end: fall_end,
            start_state: states[rise_end],
            end_state: states[fall_end],
            success,
        });
        if success {
            debug_assert_eq!(fall_end, tau);
            break;
        }
        rise_start = fall_end;
    }

    let successful_attempt = attempts.len();
    Ok(AttemptDecomposition {
        case,
        tau,
        rises,
        attempts,
        successful_attempt,
    })
}
