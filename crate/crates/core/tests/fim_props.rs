mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rnred::fim::{fim_blocks_mean_field, fim_diag_mean_field};
use rnred::simulate::{simulate_ode, SeriesKind};
use rnred::{Scale, TimeSeries};

use common::random_network;

fn data(seed: u64) -> (rnred::ReactionNetwork, TimeSeries) {
    let net = random_network(seed, 6, true);
    let ts = simulate_ode(&net, &net.values, &net.initial_state, 4.0, 0.02).unwrap();
    (net, ts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ranking_is_a_distribution(seed in any::<u64>()) {
        let (net, ts) = data(seed);
        let r = fim_diag_mean_field(&net, &net.values, &ts, Scale::Log).unwrap();
        prop_assert!(r.xi.iter().all(|&v| v >= 0.0));
        prop_assert!(r.cumulative.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*r.cumulative.last().unwrap(), 1.0);
    }

    #[test]
    fn information_is_additive_over_time(seed in any::<u64>(), cut in 1usize..199) {
        let (net, ts) = data(seed);
        let part = |a: usize, b: usize| {
            TimeSeries::new(ts.species.clone(), ts.times[a..=b].to_vec(), ts.states[a..=b].to_vec(), SeriesKind::External)
                .unwrap()
        };
        let whole = fim_diag_mean_field(&net, &net.values, &ts, Scale::Log).unwrap().xi;
        let first = fim_diag_mean_field(&net, &net.values, &part(0, cut), Scale::Log).unwrap().xi;
        let second = fim_diag_mean_field(&net, &net.values, &part(cut, ts.len() - 1), Scale::Log).unwrap().xi;
        for k in 0..whole.len() {
            let sum = first[k] + second[k];
            prop_assert!((whole[k] - sum).abs() <= 1e-12 * whole[k].abs().max(1e-300), "{} vs {sum}", whole[k]);
        }
    }

    #[test]
    fn blocks_are_psd_and_match_diagonal(seed in any::<u64>(), natural in any::<bool>()) {
        let (net, ts) = data(seed);
        let scale = if natural { Scale::Natural } else { Scale::Log };
        let blocks = fim_blocks_mean_field(&net, &net.values, &ts, scale).unwrap();
        let diag = fim_diag_mean_field(&net, &net.values, &ts, scale).unwrap().xi;
        let bd = blocks.diagonal();
        for k in 0..diag.len() {
            prop_assert!((bd[k] - diag[k]).abs() <= 1e-12 * diag[k].abs().max(1e-300));
        }
        for b in &blocks.blocks {
            let n = b.matrix.dim();
            let m = DMatrix::from_fn(n, n, |i, j| b.matrix[(i, j)]);
            prop_assert_eq!(&m, &m.transpose());
            let min = m.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-10 * m.norm(), "block {:?}: smallest eigenvalue {min}", b.params);
        }
    }

    #[test]
    fn log_scale_is_natural_scale_times_parameters(seed in any::<u64>()) {
        let (net, ts) = data(seed);
        let c = &net.values;
        let nat = fim_blocks_mean_field(&net, c, &ts, Scale::Natural).unwrap();
        let log = fim_blocks_mean_field(&net, c, &ts, Scale::Log).unwrap();
        for k in 0..c.len() {
            for l in 0..c.len() {
                let expected = c[k] * c[l] * nat.get(k, l);
                let got = log.get(k, l);
                prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(got.abs()));
            }
        }
    }
}
