//! Shared fixtures for the acceptance suite: seeded random networks and
//! small hand-written models.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rnred::{parse_model, Expr, Reaction, ReactionNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_species: usize,
    pub max_reactions: usize,
    pub max_params: usize,
    /// Allow Michaelis–Menten conversions, whose two parameters share a
    /// propensity.
    pub saturating: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Self { max_species: 8, max_reactions: 12, max_params: 12, saturating: true }
    }
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Random bounded network: every species decays, the remaining channels are
/// sources, conversions, mass-reducing bindings or saturating conversions.
pub fn random_network(seed: u64, shape: Shape) -> ReactionNetwork {
    let mut rng = rng(seed);
    let d = rng.gen_range(2..=shape.max_species.min(shape.max_reactions - 1));
    let extra = rng.gen_range(1..=shape.max_reactions - d);
    let mut values: Vec<f64> = Vec::new();
    let new_param = |rng: &mut ChaCha8Rng, values: &mut Vec<f64>, share: bool| -> usize {
        if !values.is_empty() && (share || values.len() >= shape.max_params) {
            return rng.gen_range(0..values.len());
        }
        values.push(log_uniform(rng, 0.2, 2.0));
        values.len() - 1
    };
    let mut reactions = Vec::new();
    for i in 0..d {
        let share = rng.gen_bool(0.15);
        let k = new_param(&mut rng, &mut values, share);
        reactions.push(Reaction::mass_action(&[(i, 1)], &[], k));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..d);
        let b = (a + rng.gen_range(1..d)) % d;
        let kind = rng.gen_range(0..if shape.saturating { 4 } else { 3 });
        let share = rng.gen_bool(0.15);
        match kind {
            0 => {
                let k = new_param(&mut rng, &mut values, share);
                reactions.push(Reaction::mass_action(&[], &[(a, 1)], k));
            }
            1 => {
                let k = new_param(&mut rng, &mut values, share);
                reactions.push(Reaction::mass_action(&[(a, 1)], &[(b, 1)], k));
            }
            2 => {
                let k = new_param(&mut rng, &mut values, share);
                let c = rng.gen_range(0..d);
                let nu_in = if a == b { vec![(a, 2)] } else { vec![(a, 1), (b, 1)] };
                reactions.push(Reaction::mass_action(&nu_in, &[(c, 1)], k));
            }
            _ => {
                let v = new_param(&mut rng, &mut values, share);
                let km = new_param(&mut rng, &mut values, false);
                let rate = Expr::Div(
                    bx(Expr::Mul(bx(Expr::Param(v)), bx(Expr::Species(a)))),
                    bx(Expr::Add(bx(Expr::Param(km)), bx(Expr::Species(a)))),
                );
                reactions.push(Reaction::new(&[(a, 1)], &[(b, 1)], rate));
            }
        }
    }
    let species = (0..d).map(|i| format!("X{i}")).collect();
    let initial = (0..d).map(|_| rng.gen_range(0.5..3.0)).collect();
    let params = (0..values.len()).map(|k| format!("k{k}")).collect();
    ReactionNetwork::new(species, initial, params, values, reactions).expect("generated network is valid")
}

pub fn birth_death(lambda: f64, mu: f64, a0: f64) -> ReactionNetwork {
    parse_model(&birth_death_json(lambda, mu, a0)).unwrap()
}

pub fn birth_death_json(lambda: f64, mu: f64, a0: f64) -> String {
    format!(
        r#"{{"name": "birth-death",
  "units": "count",
  "species": [{{"name": "A", "initial": {a0}}}],
  "parameters": [{{"name": "lambda", "value": {lambda}}}, {{"name": "mu", "value": {mu}}}],
  "reactions": [
    {{"reactants": {{}}, "products": {{"A": 1}}, "rate": {{"mass_action": "lambda"}}}},
    {{"reactants": {{"A": 1}}, "products": {{}}, "rate": {{"mass_action": "mu"}}}}
  ]}}
"#
    )
}

/// Michaelis–Menten mechanism with a slow substrate inflow.
pub const ENZYME_JSON: &str = r#"{"name": "enzyme",
  "species": [{"name": "S", "initial": 10}, {"name": "E", "initial": 2}, {"name": "C", "initial": 0}, {"name": "P", "initial": 0}],
  "parameters": [{"name": "k1", "value": 1.0}, {"name": "km1", "value": 0.5}, {"name": "k2", "value": 0.3}, {"name": "kin", "value": 0.01}],
  "reactions": [
    {"reactants": {"S": 1, "E": 1}, "products": {"C": 1}, "rate": {"mass_action": "k1"}},
    {"reactants": {"C": 1}, "products": {"S": 1, "E": 1}, "rate": {"mass_action": "km1"}},
    {"reactants": {"C": 1}, "products": {"E": 1, "P": 1}, "rate": {"mass_action": "k2"}},
    {"reactants": {}, "products": {"S": 1}, "rate": {"mass_action": "kin"}}
  ]}
"#;

/// Two-species concentration model used for the system-size limit.
pub const TWO_SPECIES_JSON: &str = r#"{"name": "two-species",
  "species": [{"name": "A", "initial": 1.0}, {"name": "B", "initial": 0.5}],
  "parameters": [{"name": "k0", "value": 1.0}, {"name": "k1", "value": 1.0}, {"name": "k2", "value": 0.5}, {"name": "k3", "value": 0.5}],
  "reactions": [
    {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "k0"}},
    {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"mass_action": "k1"}},
    {"reactants": {"B": 1}, "products": {}, "rate": {"mass_action": "k2"}},
    {"reactants": {"A": 1, "B": 1}, "products": {"B": 2}, "rate": {"mass_action": "k3"}}
  ]}
"#;
