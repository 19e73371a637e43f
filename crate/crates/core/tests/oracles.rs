//! Brute-force oracles for the stopping times, windows and series, plus
//! property tests for the invariants.

use markov_up_core::paths::DecompositionCase;
use markov_up_core::process::GeometricTail;
use markov_up_core::rng::path_rng;
use markov_up_core::{
    build_benchmark, chi_at, decompose_attempts, power_series, simulate_path, tau_of, xi_at,
    zeta_at, BenchmarkModelSpec, Error, FallWindow, StepDistribution, StopReason, Trajectory,
};
use proptest::prelude::*;
use rand::Rng;

/// `inf{k ≤ n : X_{i+1} − X_i < 0 for all i = k..n−1}` by scanning every k.
fn zeta_brute(x: &[u64], n: usize) -> usize {
    (0..=n)
        .find(|&k| (k..n).all(|i| x[i + 1] < x[i]))
        .expect("k = n always qualifies")
}

/// `sup{k ≥ n : cond(X_i, X_{i+1}) for all i = n..k−1} ∨ n`, or `None` if
/// the supremum is the last index of the finite sequence.
fn sup_brute(x: &[u64], n: usize, cond: fn(u64, u64) -> bool) -> Option<usize> {
    let k = (n..x.len())
        .filter(|&k| (n..k).all(|i| cond(x[i], x[i + 1])))
        .max()
        .unwrap_or(n);
    (k + 1 < x.len()).then_some(k)
}

fn tau_brute(x: &[u64], floor: u64) -> Option<usize> {
    (0..x.len()).find(|&t| x[t] <= floor && (0..t).all(|s| x[s] > floor))
}

fn benchmark_paths(count: usize, seed: u64) -> Vec<Vec<u64>> {
    let spec = BenchmarkModelSpec::new(0.5, 0.5, 0.5, 0).unwrap();
    let kernel = build_benchmark(&spec).unwrap();
    let mut pick = path_rng(seed, u64::MAX);
    (0..count)
        .map(|i| {
            let len: u64 = pick.random_range(1..=50);
            let x0: u64 = pick.random_range(1..=30);
            let steps = (len - 1).max(1);
            let traj = simulate_path(&kernel, x0, steps, &mut path_rng(seed, i as u64)).unwrap();
            let mut states = traj.states;
            states.truncate(len as usize);
            states
        })
        .collect()
}

#[test]
fn stopping_times_match_definitions_on_benchmark_paths() {
    for states in benchmark_paths(10_000, 5) {
        let mut window = FallWindow::new(0, states[0]);
        for n in 0..states.len() {
            if n > 0 {
                window = markov_up_core::window_update(window, states[n], n as u64);
            }
            let z = zeta_brute(&states, n);
            assert_eq!(zeta_at(&states, n).unwrap(), z);
            assert_eq!(window.start_time() as usize, z);
            assert_eq!(window.values(), &states[z..=n]);

            let xi = sup_brute(&states, n, |a, b| b >= a);
            match xi_at(&states, n) {
                Ok(k) => assert_eq!(Some(k), xi),
                Err(Error::UnterminatedRun { start }) => {
                    assert_eq!(start, n);
                    assert_eq!(xi, None);
                }
                Err(e) => panic!("{e}"),
            }
            let chi = sup_brute(&states, n, |a, b| b < a);
            match chi_at(&states, n) {
                Ok(k) => assert_eq!(Some(k), chi),
                Err(Error::UnterminatedRun { .. }) => assert_eq!(chi, None),
                Err(e) => panic!("{e}"),
            }
        }
        for floor in [0, 3, 10, 25] {
            assert_eq!(tau_of(&states, floor), tau_brute(&states, floor));
        }
    }
}

fn hitting_trajectory(states: Vec<u64>, floor: u64) -> Trajectory {
    let tau = tau_of(&states, floor).map(|t| t as u64);
    Trajectory {
        x0: states[0],
        floor,
        stop_reason: StopReason::HitFloor,
        tau,
        states,
    }
}

/// Checks every structural invariant of a decomposition against the raw path.
fn check_decomposition(traj: &Trajectory) {
    let d = decompose_attempts(traj).unwrap();
    let x = &traj.states;
    let tau = traj.tau.unwrap() as usize;
    assert_eq!(d.tau, tau);
    assert_eq!(d.attempts.len(), d.rises.len());
    assert_eq!(d.successful_attempt, d.attempts.len());
    assert_eq!(d.attempts.iter().filter(|a| a.success).count(), 1);
    assert!(d.attempts.last().unwrap().success);
    assert_eq!(d.attempts.last().unwrap().end, tau);
    let expected_case = if x[1] < x[0] {
        DecompositionCase::I
    } else {
        DecompositionCase::II
    };
    assert_eq!(d.case, expected_case);

    // Tiling: T_0 = 0 ≤ t_0 ≤ T_1 ≤ … ≤ T_i = τ, each interval starting where
    // the previous ended.
    let mut cursor = 0;
    for (rise, attempt) in d.rises.iter().zip(&d.attempts) {
        assert_eq!(rise.start, cursor);
        assert!((rise.start..rise.end).all(|i| x[i + 1] >= x[i]));
        assert_eq!(attempt.start, rise.end);
        assert!(attempt.end > attempt.start);
        assert!((attempt.start..attempt.end).all(|i| x[i + 1] < x[i]));
        assert!(attempt.length() <= x[attempt.start]);
        cursor = attempt.end;
    }
    assert_eq!(cursor, tau);
    assert_eq!(*d.times().last().unwrap(), tau);
}

#[test]
fn decomposition_tiles_benchmark_paths() {
    let spec = BenchmarkModelSpec::new(0.5, 0.5, 0.5, 5).unwrap();
    let kernel = build_benchmark(&spec).unwrap();
    let mut pick = path_rng(17, u64::MAX);
    let mut checked = 0;
    for i in 0..10_000u64 {
        let x0 = pick.random_range(6..=30);
        let traj = simulate_path(&kernel, x0, 1_000_000, &mut path_rng(17, i)).unwrap();
        check_decomposition(&traj);
        checked += 1;
    }
    assert_eq!(checked, 10_000);
}

proptest! {
    #[test]
    fn window_tracks_zeta(states in prop::collection::vec(0u64..20, 1..60)) {
        let mut w = FallWindow::new(0, states[0]);
        for n in 1..states.len() {
            w = markov_up_core::window_update(w, states[n], n as u64);
            let z = zeta_at(&states, n).unwrap();
            prop_assert_eq!(w.start_time() as usize, z);
            prop_assert_eq!(w.values(), &states[z..=n]);
            prop_assert!(w.values().windows(2).all(|p| p[1] < p[0]));
            prop_assert_eq!(w.current(), states[n]);
        }
    }

    #[test]
    fn run_ends_are_monotone(states in prop::collection::vec(0u64..10, 2..40), n in 0usize..40) {
        let n = n % states.len();
        if let Ok(k) = xi_at(&states, n) {
            prop_assert!(k >= n);
            prop_assert!(states[k] >= states[n]);
        }
        if let Ok(k) = chi_at(&states, n) {
            prop_assert!(k >= n);
            if k > n {
                prop_assert!(states[k] < states[n]);
            }
        }
    }

    #[test]
    fn arbitrary_hitting_paths_decompose(
        body in prop::collection::vec(6u64..15, 1..40),
        last in 0u64..=5,
    ) {
        let mut states = body;
        // Enter the floor with a strict down-step.
        states.push(last.min(states.last().unwrap() - 1));
        check_decomposition(&hitting_trajectory(states, 5));
    }

    #[test]
    fn series_tail_brackets_brute_force(m in 0u32..7, q in 0.05f64..0.95) {
        let v = power_series(m, q, 1e-10).unwrap();
        let brute: f64 = (1..=10 * v.truncation_k)
            .map(|k| (k as f64).powf(m as f64) * q.powf(k as f64))
            .sum();
        let slack = 1e-12 * brute;
        prop_assert!(brute >= v.value - slack);
        prop_assert!(brute <= v.upper() + slack);
    }

    #[test]
    fn quantile_inverts_cdf(
        down in 0.0f64..1.0,
        p in 0.05f64..1.0,
        x in 1u64..100,
        u in 0.0f64..1.0,
    ) {
        let d = StepDistribution::new(
            vec![(x - 1, down)],
            Some(GeometricTail { start: x, mass: 1.0 - down, p }),
        );
        d.validate().unwrap();
        let y = d.quantile(u);
        let below = d.mass_below(y);
        prop_assert!(below <= u + 1e-12);
        prop_assert!(u < below + d.pmf(y) + 1e-12);
    }
}
