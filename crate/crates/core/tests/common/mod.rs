#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnred::{parse_model, Expr, Reaction, ReactionNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bounded network on at most `max_species` species and 12
/// reactions. Every species decays; extra channels are sources,
/// conversions, bindings and (if `saturating`) Michaelis–Menten steps.
pub fn random_network(seed: u64, max_species: usize, saturating: bool) -> ReactionNetwork {
    let mut r = rng(seed);
    let d = r.gen_range(2..=max_species);
    let extra = r.gen_range(1..=(12 - d).max(1));
    let mut values: Vec<f64> = Vec::new();
    let param = |r: &mut ChaCha8Rng, values: &mut Vec<f64>| -> usize {
        if !values.is_empty() && (values.len() >= 12 || r.gen_bool(0.15)) {
            return r.gen_range(0..values.len());
        }
        values.push((r.gen_range(0.2f64.ln()..2.0f64.ln())).exp());
        values.len() - 1
    };
    let mut reactions = Vec::new();
    for i in 0..d {
        let k = param(&mut r, &mut values);
        reactions.push(Reaction::mass_action(&[(i, 1)], &[], k));
    }
    for _ in 0..extra {
        let a = r.gen_range(0..d);
        let b = (a + r.gen_range(1..d)) % d;
        match r.gen_range(0..if saturating { 4 } else { 3 }) {
            0 => {
                let k = param(&mut r, &mut values);
                reactions.push(Reaction::mass_action(&[], &[(a, 1)], k));
            }
            1 => {
                let k = param(&mut r, &mut values);
                reactions.push(Reaction::mass_action(&[(a, 1)], &[(b, 1)], k));
            }
            2 => {
                let k = param(&mut r, &mut values);
                let c = r.gen_range(0..d);
                reactions.push(Reaction::mass_action(&[(a, 1), (b, 1)], &[(c, 1)], k));
            }
            _ => {
                let v = param(&mut r, &mut values);
                values.push(r.gen_range(0.5..3.0));
                let km = values.len() - 1;
                let rate = Expr::Div(
                    Box::new(Expr::Mul(Box::new(Expr::Param(v)), Box::new(Expr::Species(a)))),
                    Box::new(Expr::Add(Box::new(Expr::Param(km)), Box::new(Expr::Species(a)))),
                );
                reactions.push(Reaction::new(&[(a, 1)], &[(b, 1)], rate));
            }
        }
    }
    let species = (0..d).map(|i| format!("S{i}")).collect();
    let initial = (0..d).map(|_| r.gen_range(0.5..3.0)).collect();
    let params = (0..values.len()).map(|k| format!("c{k}")).collect();
    ReactionNetwork::new(species, initial, params, values, reactions).expect("valid network")
}

pub fn random_state(seed: u64, d: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..d).map(|_| r.gen_range(0.1..5.0)).collect()
}

pub fn birth_death(lambda: f64, mu: f64, a0: f64) -> ReactionNetwork {
    parse_model(&format!(
        r#"{{"units": "count",
            "species": [{{"name": "A", "initial": {a0}}}],
            "parameters": [{{"name": "lambda", "value": {lambda}}}, {{"name": "mu", "value": {mu}}}],
            "reactions": [
              {{"reactants": {{}}, "products": {{"A": 1}}, "rate": {{"mass_action": "lambda"}}}},
              {{"reactants": {{"A": 1}}, "products": {{}}, "rate": {{"mass_action": "mu"}}}}
            ]}}"#
    ))
    .unwrap()
}
