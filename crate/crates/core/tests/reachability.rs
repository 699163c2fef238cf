#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topp_core::constraints::{Constraint, DEFAULT_X_CAP};
use topp_core::discretize::Scheme;
use topp_core::instances::RandomInstance;
use topp_core::lp::solve_1d_u;
use topp_core::reach::{
    admissible_states, controllable_sets, one_step_set, reach_set, reachable_sets, robust_controllable_sets, Interval,
    UncertaintyVertexSet,
};

const TOL: f64 = 1e-9;

fn sub_interval(rng: &mut ChaCha8Rng, outer: Interval) -> Interval {
    let Some((lo, hi)) = outer.bounds() else {
        return Interval::Empty;
    };
    let a = rng.random_range(0.0..=1.0);
    let b = rng.random_range(0.0..=1.0);
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    Interval::new(lo + a * (hi - lo), lo + b * (hi - lo))
}

fn sane(set: &Interval, cap: f64) -> bool {
    set.bounds().is_none_or(|(lo, hi)| 0.0 <= lo && lo <= hi && hi <= cap)
}

/// Control range at `(stage i, x)` by the interval solver, or `None` when empty.
fn control_range(problem: &topp_core::discretize::DiscretizedProblem, i: usize, x: f64) -> Option<(f64, f64)> {
    let rows: Vec<(f64, f64)> = problem.stages[i]
        .rows
        .iter()
        .map(|r| {
            let n = r.a.hypot(r.b);
            if n == 0.0 {
                (0.0, r.c)
            } else {
                (r.a / n, (r.b * x + r.c) / n)
            }
        })
        .collect();
    let hi = solve_1d_u(&rows, true);
    let lo = solve_1d_u(&rows, false);
    (hi.is_optimal() && lo.is_optimal()).then_some((lo.value, hi.value))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn sets_are_sane_intervals(seed in 0u64..10_000, dof in 1usize..6, n in 3usize..40) {
        let p = RandomInstance::from_seed(dof, seed).discretize(n, Scheme::Interpolation, DEFAULT_X_CAP).unwrap().problem;
        let k = controllable_sets(&p, Interval::point(0.0)).unwrap();
        let l = reachable_sets(&p, Interval::point(0.0)).unwrap();
        for set in k.iter().chain(&l) {
            prop_assert!(sane(set, p.x_cap));
        }
        for i in 0..=n {
            prop_assert!(sane(&admissible_states(&p, i).unwrap(), p.x_cap));
        }
    }

    #[test]
    fn one_step_and_reach_are_monotone(seed in 0u64..10_000, dof in 1usize..6, n in 3usize..30) {
        let p = RandomInstance::from_seed(dof, seed).discretize(n, Scheme::Collocation, DEFAULT_X_CAP).unwrap().problem;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            let outer_next = sub_interval(&mut rng, admissible_states(&p, i + 1).unwrap());
            let inner_next = sub_interval(&mut rng, outer_next);
            prop_assert!(one_step_set(&p, i, inner_next).unwrap().is_subset_of(&one_step_set(&p, i, outer_next).unwrap(), TOL));
            let outer = sub_interval(&mut rng, admissible_states(&p, i).unwrap());
            let inner = sub_interval(&mut rng, outer);
            prop_assert!(reach_set(&p, i, inner).unwrap().is_subset_of(&reach_set(&p, i, outer).unwrap(), TOL));
        }
    }

    #[test]
    fn reach_and_one_step_are_dual(seed in 0u64..10_000, dof in 1usize..6, n in 3usize..30) {
        let p = RandomInstance::from_seed(dof, seed).discretize(n, Scheme::Collocation, DEFAULT_X_CAP).unwrap().problem;
        let k = controllable_sets(&p, Interval::point(0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        for i in 0..n {
            let Some((lo, hi)) = k[i].bounds() else { continue };
            let x = rng.random_range(lo..=hi);
            let forward = reach_set(&p, i, Interval::point(x)).unwrap();
            let Some((a, b)) = forward.bounds() else { continue };
            // Points inside the reach set step back to x; points beyond it do not.
            let x_next = rng.random_range(a..=b);
            prop_assert!(one_step_set(&p, i, Interval::point(x_next)).unwrap().contains(x, TOL));
            let beyond = b + 1e-3 * b.max(1e-3);
            if admissible_states(&p, i + 1).unwrap().contains(beyond, 0.0) {
                prop_assert!(!one_step_set(&p, i, Interval::point(beyond)).unwrap().contains(x, TOL));
            }
        }
    }

    #[test]
    fn admissible_states_match_sampled_controls(seed in 0u64..10_000, dof in 1usize..6) {
        let p = RandomInstance::from_seed(dof, seed).discretize(20, Scheme::Interpolation, DEFAULT_X_CAP).unwrap().problem;
        for i in 0..=20 {
            let set = admissible_states(&p, i).unwrap();
            let top = set.upper().unwrap_or(1.0) * 1.5 + 1e-3;
            for k in 0..=50 {
                let x = top * k as f64 / 50.0;
                let inside = set.contains(x, 0.0);
                let strictly = set.bounds().is_some_and(|(lo, hi)| x > lo + TOL && x < hi - TOL * hi.max(1.0));
                let has_control = control_range(&p, i, x).is_some();
                if strictly {
                    prop_assert!(has_control, "stage {} x {}", i, x);
                }
                if !inside {
                    prop_assert!(!has_control, "stage {} x {}", i, x);
                }
            }
        }
    }

    #[test]
    fn random_rollouts_stay_reachable(seed in 0u64..10_000, dof in 1usize..6, n in 3usize..40) {
        let p = RandomInstance::from_seed(dof, seed).discretize(n, Scheme::Collocation, DEFAULT_X_CAP).unwrap().problem;
        let l = reachable_sets(&p, Interval::point(0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        for _ in 0..5 {
            let mut x = 0.0;
            for i in 0..n {
                prop_assert!(l[i].contains(x, TOL), "stage {}: {} not in {}", i, x, l[i]);
                let Some((u_lo, u_hi)) = control_range(&p, i, x) else { break };
                // Keep the next state admissible so the rollout can continue.
                let two_delta = 2.0 * p.delta(i);
                let Some((x_lo, x_hi)) = admissible_states(&p, i + 1).unwrap().bounds() else { break };
                let lo = u_lo.max((x_lo - x) / two_delta);
                let hi = u_hi.min((x_hi - x) / two_delta);
                if lo > hi {
                    break;
                }
                let u = rng.random_range(lo..=hi);
                x = (x + two_delta * u).max(0.0);
                if i + 1 == n {
                    prop_assert!(l[n].contains(x, TOL));
                }
            }
        }
    }

    #[test]
    fn robust_sets_lie_inside_each_realization(seed in 0u64..10_000, dof in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = RandomInstance::from_seed(dof, seed);
        let ip = inst.discretize(30, Scheme::Collocation, DEFAULT_X_CAP).unwrap();
        let realizations: Vec<Vec<Constraint>> = (0..2)
            .map(|_| {
                let scale = rng.random_range(0.6..1.2);
                let lo = inst.acc_lo.iter().map(|v| v * scale).collect();
                let hi = inst.acc_hi.iter().map(|v| v * scale).collect();
                vec![Constraint::joint_acceleration(ip.path.clone(), lo, hi).unwrap()]
            })
            .collect();
        let vertices = UncertaintyVertexSet::from_constraints(&ip.problem.grid, Scheme::Collocation, &realizations).unwrap();
        let robust = robust_controllable_sets(&ip.problem, Interval::point(0.0), &vertices).unwrap();
        let nominal = controllable_sets(&ip.problem, Interval::point(0.0)).unwrap();
        for v in 0..2 {
            let single = controllable_sets(&vertices.realization_problem(&ip.problem, v).unwrap(), Interval::point(0.0)).unwrap();
            for (r, s) in robust.iter().zip(&single) {
                prop_assert!(r.is_subset_of(s, TOL));
            }
        }
        for (r, s) in robust.iter().zip(&nominal) {
            prop_assert!(r.is_subset_of(s, TOL));
        }
    }
}

#[test]
fn empty_seeds_propagate() {
    let p = RandomInstance::from_seed(3, 4).discretize(10, Scheme::Collocation, DEFAULT_X_CAP).unwrap().problem;
    assert!(controllable_sets(&p, Interval::Empty).unwrap().iter().all(Interval::is_empty));
    assert!(reachable_sets(&p, Interval::Empty).unwrap().iter().all(Interval::is_empty));
    // A start state beyond every admissible state empties all later sets.
    let far = Interval::point(10.0 * admissible_states(&p, 0).unwrap().upper().unwrap() + 1.0);
    assert!(reachable_sets(&p, far).unwrap().iter().all(Interval::is_empty));
}
