mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rnred::parse_model;

use common::{random_network, random_state};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grad_log_propensity_matches_finite_differences(seed in any::<u64>()) {
        let net = random_network(seed, 6, true);
        let x = random_state(seed ^ 1, net.num_species());
        let c = net.values.clone();
        for j in 0..net.num_reactions() {
            for (k, g) in net.grad_log_propensity(j, &x, &c).unwrap() {
                let h = 1e-6 * c[k];
                let mut up = c.clone();
                let mut dn = c.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (net.propensity(j, &x, &up).unwrap().ln() - net.propensity(j, &x, &dn).unwrap().ln())
                    / (2.0 * h);
                let scale = g.abs().max(fd.abs());
                prop_assert!((g - fd).abs() <= 1e-5 * scale, "reaction {j}, param {k}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn drift_and_diffusion_scale_with_rate_constants(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let net = random_network(seed, 6, false);
        let x = random_state(seed ^ 2, net.num_species());
        let c = net.values.clone();
        let scaled: Vec<f64> = c.iter().map(|v| v * lambda).collect();
        let b = net.drift(&x, &c).unwrap();
        let bs = net.drift(&x, &scaled).unwrap();
        for (u, v) in b.iter().zip(&bs) {
            prop_assert!((lambda * u - v).abs() <= 1e-12 * v.abs().max(1e-300) + 1e-13);
        }
        let s = net.diffusion_matrix(&x, &c).unwrap();
        let ss = net.diffusion_matrix(&x, &scaled).unwrap();
        let n = s.dim();
        for i in 0..n {
            for k in 0..n {
                let (u, v) = (s[(i, k)], ss[(i, k)]);
                prop_assert!((lambda * u - v).abs() <= 1e-12 * v.abs() + 1e-13);
            }
        }
    }

    #[test]
    fn diffusion_is_symmetric_psd(seed in any::<u64>()) {
        let net = random_network(seed, 8, true);
        let x = random_state(seed ^ 3, net.num_species());
        let s = net.diffusion_matrix(&x, &net.values).unwrap();
        let n = s.dim();
        let m = DMatrix::from_fn(n, n, |i, j| s[(i, j)]);
        prop_assert_eq!(&m, &m.transpose());
        let min = m.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-10 * m.norm(), "smallest eigenvalue {min}");
    }

    #[test]
    fn model_file_round_trip(seed in any::<u64>()) {
        let net = random_network(seed, 8, true);
        let back = parse_model(&net.to_json_string()).unwrap();
        prop_assert_eq!(back, net);
    }
}
