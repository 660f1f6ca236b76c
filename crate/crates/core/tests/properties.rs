use necklace::bead::{validate_bead, BeadAnalysis};
use necklace::bounds::{build_section4, reverse};
use necklace::combinatorics::HigherOrder;
use necklace::limit::{hold_coefficient, optimal_hold, theta, time_scale, tv_limit};
use necklace::linalg::{stationary_dense, DenseMatrix};
use necklace::necklace::{evolve, tv_distance, Distribution, NecklaceSpec, StateId};
use proptest::prelude::*;

/// Beads with every entry positive, so every state is reachable and the span is 1.
fn arb_bead() -> impl Strategy<Value = BeadAnalysis<f64>> {
    (1usize..=3)
        .prop_flat_map(|b| prop::collection::vec(prop::collection::vec(0.02f64..1.0, b + 1), b))
        .prop_map(|rows| {
            let rows = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect();
            BeadAnalysis::new(validate_bead(rows).unwrap()).unwrap()
        })
}

fn arb_indicator() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..12).prop_map(|mut r| {
        if !r.iter().any(|&b| b) {
            r[0] = true;
        }
        r
    })
}

fn arb_chain() -> impl Strategy<Value = NecklaceSpec<f64>> {
    (arb_bead(), arb_indicator()).prop_map(|(b, r)| NecklaceSpec::new(b, r).unwrap())
}

fn arb_stochastic(max: usize) -> impl Strategy<Value = DenseMatrix<f64>> {
    (2usize..=max)
        .prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n))
        .prop_map(|rows| {
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect();
            DenseMatrix::from_rows(&rows).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_count(spec in arb_chain()) {
        let b = spec.bead().exit();
        prop_assert_eq!(spec.num_states(), spec.n() + spec.m() * (b - 1));
        for (idx, &s) in spec.states().iter().enumerate() {
            prop_assert_eq!(spec.index(s), Some(idx));
        }
    }

    #[test]
    fn rows_are_stochastic(spec in arb_chain()) {
        for s in spec.operator().row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_is_fixed(spec in arb_chain()) {
        let pi = spec.stationary();
        prop_assert!((pi.total() - 1.0).abs() < 1e-12);
        prop_assert!(pi.probs().iter().all(|&x| x > 0.0));
        prop_assert!(spec.operator().stationarity_residual(pi.probs()) < 1e-12);
    }

    #[test]
    fn evolution_keeps_mass(spec in arb_chain(), t in 0u64..200) {
        let start = Distribution::point_mass(spec.num_states(), 0);
        let d = evolve(&spec.operator(), &start, t);
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
        prop_assert!(d.probs().iter().all(|&x| x >= -1e-15));
        let tv = tv_distance(&d, &spec.stationary()).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn tv_never_increases(spec in arb_chain(), t in 0u64..100) {
        let op = spec.operator();
        let pi = spec.stationary();
        let a = evolve(&op, &Distribution::point_mass(spec.num_states(), 0), t);
        let b = evolve(&op, &a, 1);
        prop_assert!(tv_distance(&b, &pi).unwrap() <= tv_distance(&a, &pi).unwrap() + 1e-12);
    }

    #[test]
    fn counting_matches_evolution(spec in arb_chain(), t in 0usize..40) {
        let hot = HigherOrder::new(&spec, t);
        let d = evolve(&spec.operator(), &Distribution::point_mass(spec.num_states(), 0), t as u64);
        let counted = hot.distribution_from_s0(t).unwrap();
        for (a, b) in counted.iter().zip(d.probs()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let last = spec.n() - 1;
        if spec.has_bead(last) {
            let start = StateId::Link(last);
            let d = evolve(&spec.operator(), &Distribution::point_mass(spec.num_states(), spec.index(start).unwrap()), t as u64);
            for (idx, &s) in spec.states().iter().enumerate() {
                prop_assert!((hot.transition(t, start, s).unwrap() - d.probs()[idx]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn theta_is_even_periodic_positive(c in 0.005f64..5.0, x in -2.0f64..2.0) {
        let v = theta(c, x).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!((v - theta(c, x + 1.0).unwrap()).abs() < 1e-10 * v.max(1.0));
        prop_assert!((v - theta(c, -x).unwrap()).abs() < 1e-10 * v.max(1.0));
    }

    #[test]
    fn tv_limit_decreases(c in 0.005f64..2.0, dc in 0.001f64..1.0) {
        let a = tv_limit(c).unwrap();
        let b = tv_limit(c + dc).unwrap();
        prop_assert!(b <= a + 1e-9);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn time_scale_grows_with_c(n in 1usize..200, m_frac in 0.0f64..1.0, c in 0.01f64..3.0) {
        let m = ((n as f64) * m_frac) as usize;
        let a = time_scale(n, m.max(1), 3.0, 6.0, c);
        let b = time_scale(n, m.max(1), 3.0, 6.0, 2.0 * c);
        prop_assert!(b >= a);
    }

    #[test]
    fn optimal_hold_minimizes(k in 0.001f64..=1.0, p in 0.001f64..0.999) {
        let best = optimal_hold(k).unwrap();
        prop_assert!(best > 0.0 && best < 1.0);
        prop_assert!(hold_coefficient(best, k) <= hold_coefficient(p, k) * (1.0 + 1e-12));
    }

    #[test]
    fn reversal_is_an_involution(p in arb_stochastic(7)) {
        let pi = stationary_dense(&p).unwrap();
        let rev = reverse(&p, &pi).unwrap();
        for s in rev.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
        prop_assert!(reverse(&rev, &pi).unwrap().max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn cycle_walk_stationary_law(n in 3usize..30, p in 0.01f64..0.99) {
        let s4 = build_section4(n, p).unwrap();
        let q = 1.0 - p;
        prop_assert!((s4.pi[0] - q / (n as f64 - p)).abs() < 1e-14);
        let moved = s4.p_n.left_apply(&s4.pi);
        for (a, b) in moved.iter().zip(&s4.pi) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
