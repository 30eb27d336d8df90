use proptest::prelude::*;

use fock_ladder::channel::{validate_params, ChannelSpec};
use fock_ladder::entropy::{renyi, shannon};
use fock_ladder::majorization::{
    apply_ladder_power_len, build_ladder, combination_column, fock_compare, majorize_compare, Relation,
};
use fock_ladder::numeric::max_abs_diff;
use fock_ladder::state::FockDiagonalState;
use fock_ladder::transition::{grid_recurrence, row_multinomial, row_series, TransitionGrid};

const TAIL_TOL: f64 = 1e-10;

fn any_channel() -> impl Strategy<Value = ChannelSpec> {
    prop_oneof![
        (0.0..=1.0f64, 0.0..4.0f64).prop_map(|(eta, n)| ChannelSpec::lossy(eta, n).unwrap()),
        (1.0..4.0f64, 0.0..4.0f64).prop_map(|(g, n)| ChannelSpec::amplifier(g, n).unwrap()),
        (0.0..4.0f64).prop_map(|n| ChannelSpec::additive_noise(n).unwrap()),
        (1.0..4.0f64, 0.0..4.0f64).prop_map(|(g, n)| ChannelSpec::conjugate_amplifier(g, n).unwrap()),
    ]
}

/// Channels whose output rows stay short enough for a few hundred levels.
fn moderate_channel() -> impl Strategy<Value = ChannelSpec> {
    prop_oneof![
        (0.05..=1.0f64, 0.0..1.5f64).prop_map(|(eta, n)| ChannelSpec::lossy(eta, n).unwrap()),
        (1.0..2.0f64, 0.0..1.0f64).prop_map(|(g, n)| ChannelSpec::amplifier(g, n).unwrap()),
        (0.0..1.5f64).prop_map(|n| ChannelSpec::additive_noise(n).unwrap()),
        (1.0..2.5f64, 0.0..1.0f64).prop_map(|(g, n)| ChannelSpec::conjugate_amplifier(g, n).unwrap()),
    ]
}

fn probability_vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 1..=max_len).prop_filter_map("nonzero mass", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-3).then(|| raw.iter().map(|x| x / total).collect())
    })
}

fn state(weights: Vec<f64>) -> FockDiagonalState {
    FockDiagonalState::from_probabilities(weights).unwrap()
}

/// Moves up to `frac` of the gap between a larger and a smaller entry from
/// the former to the latter; the result is majorized by the input.
fn robin_hood(p: &[f64], a: usize, b: usize, frac: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    let (hi, lo) = if q[a] >= q[b] { (a, b) } else { (b, a) };
    let shift = 0.5 * frac * (q[hi] - q[lo]);
    q[hi] -= shift;
    q[lo] += shift;
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parameters_satisfy_the_sum_rules(spec in any_channel()) {
        let p = spec.params();
        prop_assert!((p.alpha + p.beta + p.gamma - 1.0).abs() <= 1e-14);
        prop_assert!((p.beta + p.chi - 1.0).abs() <= 1e-14);
        prop_assert!(p.alpha >= -1e-15);
        prop_assert!((-1e-15..1.0).contains(&p.beta));
        prop_assert!(p.nu >= -1e-15);
        prop_assert!(p.chi > 0.0 && p.chi <= 1.0 + 1e-15);
        prop_assert!(validate_params(&p, 1e-12).ok);
        prop_assert_eq!(spec.params(), p);
    }

    #[test]
    fn sorting_does_not_change_the_verdict(
        p in probability_vector(12),
        q in probability_vector(12),
        seed in any::<u64>(),
    ) {
        let base = majorize_compare(&state(p.clone()), &state(q.clone()), 1e-12).unwrap();
        let mut shuffled = p.clone();
        let n = shuffled.len();
        for k in (1..n).rev() {
            shuffled.swap(k, (seed.rotate_left(k as u32) % (k as u64 + 1)) as usize);
        }
        shuffled.reverse();
        let again = majorize_compare(&state(shuffled), &state(q), 1e-12).unwrap();
        prop_assert_eq!(base.relation, again.relation);
    }

    #[test]
    fn majorization_is_reflexive(p in probability_vector(16)) {
        let s = state(p);
        prop_assert_eq!(majorize_compare(&s, &s, 1e-12).unwrap().relation, Relation::Equivalent);
        prop_assert_eq!(fock_compare(&s, &s, 1e-12).unwrap().relation, Relation::Equivalent);
    }

    #[test]
    fn majorization_is_transitive(
        p in probability_vector(10),
        moves in prop::collection::vec((0usize..10, 0usize..10, 0.0..=1.0f64), 2..6),
        r in probability_vector(10),
    ) {
        let split = moves.len() / 2;
        let mut q = p.clone();
        for &(a, b, f) in &moves[..split] {
            q = robin_hood(&q, a % p.len(), b % p.len(), f);
        }
        let mut s = q.clone();
        for &(a, b, f) in &moves[split..] {
            s = robin_hood(&s, a % p.len(), b % p.len(), f);
        }
        let (p, q, s) = (state(p), state(q), state(s));
        prop_assert!(majorize_compare(&p, &q, 1e-12).unwrap().relation.left_dominates());
        prop_assert!(majorize_compare(&q, &s, 1e-12).unwrap().relation.left_dominates());
        prop_assert!(majorize_compare(&p, &s, 1e-12).unwrap().relation.left_dominates());

        // an arbitrary third state: p > q and q > r force p > r
        let r = state(r);
        let pq = majorize_compare(&p, &q, 1e-12).unwrap().relation.left_dominates();
        let qr = majorize_compare(&q, &r, 1e-12).unwrap().relation.left_dominates();
        if pq && qr {
            prop_assert!(majorize_compare(&p, &r, 1e-12).unwrap().relation.left_dominates());
        }
    }

    #[test]
    fn entropies_are_schur_concave(
        p in probability_vector(12),
        moves in prop::collection::vec((0usize..12, 0usize..12, 0.0..=1.0f64), 1..4),
    ) {
        let mut q = p.clone();
        for &(a, b, f) in &moves {
            q = robin_hood(&q, a % p.len(), b % p.len(), f);
        }
        let (p, q) = (state(p), state(q));
        prop_assert!(shannon(&p) <= shannon(&q) + 1e-12);
        for order in [0.5, 2.0, 5.0] {
            prop_assert!(renyi(&p, order).unwrap() <= renyi(&q, order).unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rows_are_normalized_and_nonnegative(spec in any_channel()) {
        let grid = grid_recurrence(&spec.params(), 12, TAIL_TOL).unwrap();
        for i in 0..=grid.i_max {
            let row = grid.row(i);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum + grid.tails[i] - 1.0).abs() <= 1e-13);
            prop_assert!(grid.tails[i] <= TAIL_TOL);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
        prop_assert!(grid.min_raw >= -1e-15);
        prop_assert_eq!(grid.row(0)[0], spec.params().chi);
    }

    #[test]
    fn three_oracles_agree(spec in moderate_channel()) {
        let params = spec.params();
        let grid = grid_recurrence(&params, 15, TAIL_TOL).unwrap();
        for i in 0..=grid.i_max {
            let closed = row_multinomial(&params, i, grid.n_max).unwrap();
            let series = row_series(&params, i, grid.n_max);
            prop_assert!(max_abs_diff(grid.row(i), &closed) <= 1e-12);
            prop_assert!(max_abs_diff(&closed, &series) <= 1e-12);
        }
    }

    #[test]
    fn one_ladder_step_maps_each_row_to_the_next(spec in moderate_channel()) {
        let grid = grid_recurrence(&spec.params(), 50, TAIL_TOL).unwrap();
        let d = build_ladder(&grid.params, grid.n_max + 1);
        for i in 1..=grid.i_max {
            let image = d.apply(grid.row(i - 1), grid.n_max + 1);
            prop_assert!(max_abs_diff(&image, grid.row(i)) <= 1e-12);
        }
    }

    #[test]
    fn ladder_powers_compose(spec in moderate_channel(), k in 1usize..=30, i in 1usize..=30) {
        let k = k.min(i);
        let grid = grid_recurrence(&spec.params(), 30, TAIL_TOL).unwrap();
        let image = apply_ladder_power_len(&grid.params, k, &grid.state(i - k), grid.n_max + 1);
        prop_assert!(max_abs_diff(image.weights(), grid.row(i)) <= 1e-11);
    }

    #[test]
    fn power_combinations_keep_unit_columns(spec in any_channel(), c in probability_vector(6)) {
        let col = combination_column(&spec.params(), &c, 1e-15).unwrap();
        prop_assert!(col.sum <= 1.0 + 1e-12);
        prop_assert!(col.sum + col.remainder_bound >= 1.0 - 1e-12);
    }

    #[test]
    fn entropy_is_stable_under_a_wider_cutoff(spec in moderate_channel()) {
        let grid = grid_recurrence(&spec.params(), 10, TAIL_TOL).unwrap();
        let wide = TransitionGrid::with_cutoff(&grid.params, grid.i_max, 2 * grid.n_max);
        for i in 0..=grid.i_max {
            prop_assert!((shannon(&grid.state(i)) - shannon(&wide.state(i))).abs() <= 1e-8);
        }
    }
}
