//! Parameterized reaction networks.
//!
//! A [`ReactionNetwork`] holds species, parameters with nominal values,
//! and reaction channels `(nu_j, a_j)`. Stoichiometry is stored as sparse
//! columns. Each reaction caches the symbolic parameter- and species-
//! derivatives of its propensity so gradients are exact.
//!
//! The on-disk format is JSON:
//!
//! ```json
//! {
//!   "species": [{"name": "A", "initial": 0.0}],
//!   "parameters": [{"name": "k", "value": 5.0}],
//!   "reactions": [
//!     {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "k"}}
//!   ]
//! }
//! ```
//!
//! `rate` is either `{"mass_action": "<param>"}` or `{"expr": "<infix>"}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{EvalFault, Expr, Names, Var};
use crate::linalg::Matrix;
use crate::scalar::{cast_slice, Scalar};

/// How state values are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Concentration,
    Count,
}

/// A reaction channel: sparse reactant/product columns and a propensity.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    nu_in: Vec<(usize, u32)>,
    nu_out: Vec<(usize, u32)>,
    nu: Vec<(usize, i64)>,
    propensity: Expr,
    params: Vec<usize>,
    param_derivs: Vec<(usize, Expr)>,
    species_derivs: Vec<(usize, Expr)>,
}

fn normalize(col: &[(usize, u32)]) -> Vec<(usize, u32)> {
    let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
    for &(i, m) in col {
        *acc.entry(i).or_default() += m;
    }
    acc.into_iter().filter(|&(_, m)| m > 0).collect()
}

impl Reaction {
    pub fn new(nu_in: &[(usize, u32)], nu_out: &[(usize, u32)], propensity: Expr) -> Self {
        let nu_in = normalize(nu_in);
        let nu_out = normalize(nu_out);
        let mut net: BTreeMap<usize, i64> = BTreeMap::new();
        for &(i, m) in &nu_out {
            *net.entry(i).or_default() += i64::from(m);
        }
        for &(i, m) in &nu_in {
            *net.entry(i).or_default() -= i64::from(m);
        }
        let nu = net.into_iter().filter(|&(_, v)| v != 0).collect();
        let params: Vec<usize> = propensity.param_refs().into_iter().collect();
        let param_derivs =
            params.iter().map(|&k| (k, propensity.derivative(Var::Param(k)))).collect();
        let species_derivs = propensity
            .species_refs()
            .into_iter()
            .map(|i| (i, propensity.derivative(Var::Species(i))))
            .collect();
        Self { nu_in, nu_out, nu, propensity, params, param_derivs, species_derivs }
    }

    /// Mass-action channel with rate parameter `param`.
    pub fn mass_action(nu_in: &[(usize, u32)], nu_out: &[(usize, u32)], param: usize) -> Self {
        Self::new(nu_in, nu_out, Expr::mass_action(param, nu_in))
    }

    pub fn nu_in(&self) -> &[(usize, u32)] {
        &self.nu_in
    }

    pub fn nu_out(&self) -> &[(usize, u32)] {
        &self.nu_out
    }

    /// Net state change `nu_out - nu_in`, zero entries dropped.
    pub fn nu(&self) -> &[(usize, i64)] {
        &self.nu
    }

    pub fn propensity(&self) -> &Expr {
        &self.propensity
    }

    /// Parameters the propensity depends on, ascending.
    pub fn params(&self) -> &[usize] {
        &self.params
    }

    /// Species taking part in the stoichiometry (`nu_in > 0` or `nu_out > 0`).
    pub fn stoichiometric_species(&self) -> impl Iterator<Item = usize> + '_ {
        let mut all: Vec<usize> =
            self.nu_in.iter().chain(self.nu_out.iter()).map(|&(i, _)| i).collect();
        all.sort_unstable();
        all.dedup();
        all.into_iter()
    }

    pub fn involves_species(&self, i: usize) -> bool {
        self.nu_in.iter().chain(self.nu_out.iter()).any(|&(s, _)| s == i)
    }

    fn is_plain_mass_action(&self) -> Option<usize> {
        match &self.propensity {
            Expr::MassAction { param, reactants } if *reactants == self.nu_in => Some(*param),
            _ => None,
        }
    }
}

/// A parameterized reaction network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub name: Option<String>,
    pub units: Units,
    pub species: Vec<String>,
    pub initial_state: Vec<f64>,
    pub parameters: Vec<String>,
    pub values: Vec<f64>,
    pub reactions: Vec<Reaction>,
}

fn map_fault(reaction: usize, f: EvalFault) -> Error {
    match f {
        EvalFault::DivisionByZero => Error::DivisionByZero { reaction },
        EvalFault::NonFinite => Error::NonFinite { reaction },
    }
}

impl ReactionNetwork {
    /// Build and validate a network.
    pub fn new(
        species: Vec<String>,
        initial_state: Vec<f64>,
        parameters: Vec<String>,
        values: Vec<f64>,
        reactions: Vec<Reaction>,
    ) -> Result<Self> {
        let net = Self {
            name: None,
            units: Units::default(),
            species,
            initial_state,
            parameters,
            values,
            reactions,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let d = self.species.len();
        let k = self.parameters.len();
        if self.initial_state.len() != d {
            return Err(Error::Dimension(format!(
                "{} initial values for {d} species",
                self.initial_state.len()
            )));
        }
        if self.values.len() != k {
            return Err(Error::Dimension(format!("{} values for {k} parameters", self.values.len())));
        }
        for (names, what) in [(&self.species, "species"), (&self.parameters, "parameter")] {
            let mut seen = std::collections::BTreeSet::new();
            for n in names.iter() {
                if !seen.insert(n) {
                    return Err(Error::Schema(format!("duplicate {what} name \"{n}\"")));
                }
            }
        }
        for (j, r) in self.reactions.iter().enumerate() {
            if r.nu_in.iter().chain(&r.nu_out).any(|&(i, _)| i >= d)
                || r.propensity.species_refs().iter().any(|&i| i >= d)
            {
                return Err(Error::Dimension(format!("reaction {j} references species out of range")));
            }
            if r.params.iter().any(|&p| p >= k) {
                return Err(Error::Dimension(format!(
                    "reaction {j} references parameter out of range"
                )));
            }
            let nnz = r.nu_in.len() + r.nu_out.len();
            if d >= 8 && nnz > d / 2 {
                log::warn!("reaction {j} has a dense stoichiometric column ({nnz} of {d} species)");
            }
        }
        for (j, r) in self.reactions.iter().enumerate() {
            let raw = r
                .propensity
                .eval(&self.initial_state, &self.values)
                .map_err(|f| map_fault(j, f))?;
            if raw < 0.0 {
                return Err(Error::Schema(format!(
                    "propensity of reaction {j} is negative ({raw}) at the initial state"
                )));
            }
        }
        Ok(())
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|s| s == name)
    }

    /// Copy of the network with different nominal parameter values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} parameters",
                values.len(),
                self.values.len()
            )));
        }
        let mut net = self.clone();
        net.values = values.to_vec();
        Ok(net)
    }

    /// Unclamped propensity value.
    pub fn raw_propensity<T: Scalar>(&self, j: usize, x: &[T], c: &[T]) -> Result<T> {
        self.reactions[j].propensity.eval(x, c).map_err(|f| map_fault(j, f))
    }

    /// Propensity `a_j(x; c)`, clamped at zero.
    pub fn propensity<T: Scalar>(&self, j: usize, x: &[T], c: &[T]) -> Result<T> {
        Ok(self.raw_propensity(j, x, c)?.max(T::zero()))
    }

    /// Fill `out` with all propensities and return how many were clamped.
    pub fn propensities_into<T: Scalar>(&self, x: &[T], c: &[T], out: &mut [T]) -> Result<usize> {
        let mut clamped = 0;
        for (j, slot) in out.iter_mut().enumerate() {
            let raw = self.raw_propensity(j, x, c)?;
            if raw < T::zero() {
                clamped += 1;
                *slot = T::zero();
            } else {
                *slot = raw;
            }
        }
        Ok(clamped)
    }

    pub fn propensities<T: Scalar>(&self, x: &[T], c: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.num_reactions()];
        self.propensities_into(x, c, &mut out)?;
        Ok(out)
    }

    /// `d a_j / d c_k` for every parameter of reaction `j`. Zero in the
    /// clamped region.
    pub fn grad_propensity<T: Scalar>(&self, j: usize, x: &[T], c: &[T]) -> Result<Vec<(usize, T)>> {
        let r = &self.reactions[j];
        let clamped = self.raw_propensity(j, x, c)? < T::zero();
        r.param_derivs
            .iter()
            .map(|(k, e)| {
                let v = if clamped { T::zero() } else { e.eval(x, c).map_err(|f| map_fault(j, f))? };
                Ok((*k, v))
            })
            .collect()
    }

    /// `d log a_j / d c_k` for every parameter of reaction `j`.
    pub fn grad_log_propensity<T: Scalar>(
        &self,
        j: usize,
        x: &[T],
        c: &[T],
    ) -> Result<Vec<(usize, T)>> {
        let a = self.propensity(j, x, c)?;
        if a == T::zero() {
            return Err(Error::ZeroPropensity { reaction: j });
        }
        Ok(self.grad_propensity(j, x, c)?.into_iter().map(|(k, g)| (k, g / a)).collect())
    }

    /// `d a_j / d x_i` for every species the propensity reads.
    pub fn species_grad_propensity<T: Scalar>(
        &self,
        j: usize,
        x: &[T],
        c: &[T],
    ) -> Result<Vec<(usize, T)>> {
        let r = &self.reactions[j];
        let clamped = self.raw_propensity(j, x, c)? < T::zero();
        r.species_derivs
            .iter()
            .map(|(i, e)| {
                let v = if clamped { T::zero() } else { e.eval(x, c).map_err(|f| map_fault(j, f))? };
                Ok((*i, v))
            })
            .collect()
    }

    /// Drift `b(x) = nu a(x; c)` given precomputed propensities.
    pub fn drift_from<T: Scalar>(&self, a: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (r, &aj) in self.reactions.iter().zip(a) {
            for &(i, n) in &r.nu {
                out[i] = out[i] + T::lit(n as f64) * aj;
            }
        }
    }

    /// Drift `b(x) = nu a(x; c)`.
    pub fn drift<T: Scalar>(&self, x: &[T], c: &[T]) -> Result<Vec<T>> {
        let a = self.propensities(x, c)?;
        let mut out = vec![T::zero(); self.num_species()];
        self.drift_from(&a, &mut out);
        Ok(out)
    }

    /// Diffusion `Sigma = sum_j a_j nu_j nu_j^T` from precomputed propensities.
    pub fn diffusion_from<T: Scalar>(&self, a: &[T]) -> Matrix<T> {
        let mut m = Matrix::zeros(self.num_species());
        for (r, &aj) in self.reactions.iter().zip(a) {
            if aj == T::zero() {
                continue;
            }
            for &(i, ni) in &r.nu {
                for &(l, nl) in &r.nu {
                    m[(i, l)] = m[(i, l)] + aj * T::lit((ni * nl) as f64);
                }
            }
        }
        m
    }

    pub fn diffusion_matrix<T: Scalar>(&self, x: &[T], c: &[T]) -> Result<Matrix<T>> {
        Ok(self.diffusion_from(&self.propensities(x, c)?))
    }

    /// Parameter-to-reaction map: `phi[k]` lists reactions reading `c_k`.
    pub fn phi_map(&self) -> Vec<Vec<usize>> {
        let mut phi = vec![Vec::new(); self.num_parameters()];
        for (j, r) in self.reactions.iter().enumerate() {
            for &k in &r.params {
                phi[k].push(j);
            }
        }
        phi
    }

    /// Initial state and nominal values in `T`.
    pub fn nominal<T: Scalar>(&self) -> (Vec<T>, Vec<T>) {
        (cast_slice(&self.initial_state), cast_slice(&self.values))
    }

    fn names(&self) -> Names<'_> {
        Names { params: &self.parameters, species: &self.species }
    }

    /// Serialize to the model-file JSON value.
    pub fn to_json_value(&self) -> serde_json::Value {
        let file = ModelFile {
            name: self.name.clone(),
            units: Some(self.units),
            species: self
                .species
                .iter()
                .zip(&self.initial_state)
                .map(|(n, &v)| SpeciesEntry { name: n.clone(), initial: v })
                .collect(),
            parameters: self
                .parameters
                .iter()
                .zip(&self.values)
                .map(|(n, &v)| ParameterEntry { name: n.clone(), value: v })
                .collect(),
            reactions: self
                .reactions
                .iter()
                .map(|r| {
                    let col = |c: &[(usize, u32)]| {
                        c.iter().map(|&(i, m)| (self.species[i].clone(), i64::from(m))).collect()
                    };
                    let rate = match r.is_plain_mass_action() {
                        Some(k) => RateEntry::MassAction(self.parameters[k].clone()),
                        None => RateEntry::Expr(r.propensity.to_infix(self.names())),
                    };
                    ReactionEntry { reactants: col(&r.nu_in), products: col(&r.nu_out), rate }
                })
                .collect(),
        };
        serde_json::to_value(file).expect("model file serializes")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("serializable");
        s.push('\n');
        s
    }

    /// Build a network from a parsed model-file value. A value with a
    /// top-level `"network"` object (a reduced or fitted model artifact) is
    /// unwrapped first.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let value = match value.get("network") {
            Some(inner) if inner.is_object() => inner,
            _ => value,
        };
        let file: ModelFile =
            serde_json::from_value(value.clone()).map_err(|e| Error::Schema(e.to_string()))?;
        let species: Vec<String> = file.species.iter().map(|s| s.name.clone()).collect();
        let parameters: Vec<String> = file.parameters.iter().map(|p| p.name.clone()).collect();
        let names = Names { params: &parameters, species: &species };
        let mut reactions = Vec::with_capacity(file.reactions.len());
        for (j, r) in file.reactions.iter().enumerate() {
            let column = |c: &BTreeMap<String, i64>| -> Result<Vec<(usize, u32)>> {
                c.iter()
                    .map(|(name, &m)| {
                        let i = species
                            .iter()
                            .position(|s| s == name)
                            .ok_or_else(|| Error::UnknownSpecies(name.clone()))?;
                        if m < 0 {
                            return Err(Error::NegativeStoichiometry {
                                reaction: j,
                                species: name.clone(),
                            });
                        }
                        let m = u32::try_from(m).map_err(|_| {
                            Error::Schema(format!("stoichiometry too large in reaction {j}"))
                        })?;
                        Ok((i, m))
                    })
                    .collect()
            };
            let nu_in = column(&r.reactants)?;
            let nu_out = column(&r.products)?;
            let reaction = match &r.rate {
                RateEntry::MassAction(p) => {
                    let k = parameters
                        .iter()
                        .position(|n| n == p)
                        .ok_or_else(|| Error::UnknownParameter(p.clone()))?;
                    Reaction::mass_action(&nu_in, &nu_out, k)
                }
                RateEntry::Expr(text) => {
                    let e = Expr::parse(text, names).map_err(|err| match err {
                        Error::UnknownParameter(n) => Error::UnknownParameter(n),
                        other => Error::Schema(format!("reaction {j}: {other}")),
                    })?;
                    Reaction::new(&nu_in, &nu_out, e)
                }
            };
            reactions.push(reaction);
        }
        let mut net = Self::new(
            species,
            file.species.iter().map(|s| s.initial).collect(),
            parameters,
            file.parameters.iter().map(|p| p.value).collect(),
            reactions,
        )?;
        net.name = file.name;
        net.units = file.units.unwrap_or_default();
        Ok(net)
    }
}

/// Parse model-file text into a validated network.
pub fn parse_model(text: &str) -> Result<ReactionNetwork> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    ReactionNetwork::from_json_value(&value)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<Units>,
    species: Vec<SpeciesEntry>,
    parameters: Vec<ParameterEntry>,
    reactions: Vec<ReactionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesEntry {
    name: String,
    initial: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterEntry {
    name: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionEntry {
    #[serde(default)]
    reactants: BTreeMap<String, i64>,
    #[serde(default)]
    products: BTreeMap<String, i64>,
    rate: RateEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RateEntry {
    MassAction(String),
    Expr(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOURCE: &str = r#"{
        "species": [{"name": "A", "initial": 0}],
        "parameters": [{"name": "c", "value": 5}],
        "reactions": [{"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "c"}}]
    }"#;

    fn abc() -> ReactionNetwork {
        parse_model(
            r#"{
            "species": [{"name": "A", "initial": 3}, {"name": "B", "initial": 4}, {"name": "C", "initial": 0}],
            "parameters": [{"name": "k", "value": 2}],
            "reactions": [{"reactants": {"A": 1, "B": 1}, "products": {"C": 1}, "rate": {"mass_action": "k"}}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_source_reaction() {
        let net = parse_model(SOURCE).unwrap();
        assert_eq!((net.num_species(), net.num_reactions(), net.num_parameters()), (1, 1, 1));
        assert_eq!(net.propensity(0, &[17.0], &[5.0]).unwrap(), 5.0);
        assert_eq!(net.drift(&[0.0], &[5.0]).unwrap(), vec![5.0]);
        assert_eq!(net.diffusion_matrix(&[0.0], &[5.0]).unwrap()[(0, 0)], 5.0);
    }

    #[test]
    fn unknown_parameter_rejected() {
        let text = SOURCE.replace(r#"{"mass_action": "c"}"#, r#"{"expr": "kX * A"}"#);
        let err = parse_model(&text).unwrap_err();
        assert!(err.to_string().contains("unknown parameter"), "{err}");
    }

    #[test]
    fn negative_stoichiometry_rejected() {
        let text = SOURCE.replace(r#""products": {"A": 1}"#, r#""products": {"A": -1}"#);
        let err = parse_model(&text).unwrap_err();
        assert!(err.to_string().contains("negative stoichiometry"), "{err}");
    }

    #[test]
    fn mass_action_bimolecular() {
        let net = abc();
        assert_eq!(net.propensity(0, &[3.0, 4.0, 0.0], &[2.0]).unwrap(), 24.0);
        let g = net.grad_log_propensity(0, &[3.0, 4.0, 0.0], &[2.0]).unwrap();
        assert_eq!(g, vec![(0, 0.5)]);
    }

    #[test]
    fn michaelis_menten() {
        let net = parse_model(
            r#"{
            "species": [{"name": "s", "initial": 3}, {"name": "p", "initial": 0}],
            "parameters": [{"name": "V", "value": 2}, {"name": "Km", "value": 1}],
            "reactions": [{"reactants": {"s": 1}, "products": {"p": 1}, "rate": {"expr": "V * s / (Km + s)"}}]
        }"#,
        )
        .unwrap();
        assert_eq!(net.propensity(0, &[3.0, 0.0], &[2.0, 1.0]).unwrap(), 1.5);
        let g: Vec<(usize, f64)> = net.grad_log_propensity(0, &[3.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!((g[1].1 + 0.25).abs() < 1e-15);
    }

    #[test]
    fn drift_and_diffusion_examples() {
        let decay = parse_model(
            r#"{"species": [{"name": "A", "initial": 2}], "parameters": [{"name": "c", "value": 1}],
                "reactions": [{"reactants": {"A": 1}, "products": {}, "rate": {"mass_action": "c"}}]}"#,
        )
        .unwrap();
        assert_eq!(decay.drift(&[2.0], &[1.0]).unwrap(), vec![-2.0]);

        let conv = parse_model(
            r#"{"species": [{"name": "A", "initial": 4}, {"name": "B", "initial": 0}],
                "parameters": [{"name": "c", "value": 1}],
                "reactions": [{"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"mass_action": "c"}}]}"#,
        )
        .unwrap();
        let s = conv.diffusion_matrix(&[4.0, 0.0], &[1.0]).unwrap();
        assert_eq!(s.rows(), vec![vec![4.0, -4.0], vec![-4.0, 4.0]]);

        let empty = ReactionNetwork::new(vec!["A".into()], vec![1.0], vec![], vec![], vec![]).unwrap();
        assert_eq!(empty.drift::<f64>(&[1.0], &[]).unwrap(), vec![0.0]);
        assert_eq!(empty.diffusion_matrix::<f64>(&[1.0], &[]).unwrap(), Matrix::zeros(1));
    }

    #[test]
    fn phi_map_shared_and_unused() {
        let net = parse_model(
            r#"{"species": [{"name": "A", "initial": 1}],
                "parameters": [{"name": "a", "value": 1}, {"name": "b", "value": 1}, {"name": "unused", "value": 1}],
                "reactions": [
                  {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "a"}},
                  {"reactants": {"A": 1}, "products": {}, "rate": {"expr": "b * A"}},
                  {"reactants": {"A": 1}, "products": {}, "rate": {"expr": "a * b * A"}}
                ]}"#,
        )
        .unwrap();
        assert_eq!(net.phi_map(), vec![vec![0, 2], vec![1, 2], vec![]]);
    }

    #[test]
    fn negative_expression_clamped() {
        let net = parse_model(
            r#"{"species": [{"name": "A", "initial": 2}], "parameters": [{"name": "k", "value": 1}],
                "reactions": [{"reactants": {"A": 1}, "products": {}, "rate": {"expr": "k * (A - 1)"}}]}"#,
        )
        .unwrap();
        let mut out = [0.0];
        assert_eq!(net.propensities_into(&[0.5], &[1.0], &mut out).unwrap(), 1);
        assert_eq!(out[0], 0.0);
        assert_eq!(net.grad_propensity(0, &[0.5], &[1.0]).unwrap(), vec![(0, 0.0)]);
    }

    #[test]
    fn zero_propensity_log_gradient_is_an_error() {
        let net = abc();
        let err = net.grad_log_propensity(0, &[0.0, 4.0, 0.0], &[2.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroPropensity { reaction: 0 }));
    }

    #[test]
    fn division_by_zero_carries_reaction() {
        let net = parse_model(
            r#"{"species": [{"name": "A", "initial": 1}], "parameters": [{"name": "k", "value": 1}],
                "reactions": [{"reactants": {}, "products": {"A": 1}, "rate": {"expr": "k / A"}}]}"#,
        )
        .unwrap();
        assert!(matches!(net.propensity(0, &[0.0], &[1.0]), Err(Error::DivisionByZero { reaction: 0 })));
    }

    #[test]
    fn serialization_round_trip() {
        let net = parse_model(
            r#"{"name": "demo", "units": "count",
                "species": [{"name": "s", "initial": 3}, {"name": "Jnk-P", "initial": 0.25}],
                "parameters": [{"name": "V", "value": 2}, {"name": "Km", "value": 1e-7}, {"name": "n", "value": 2.5}],
                "reactions": [
                  {"reactants": {"s": 2}, "products": {"Jnk-P": 1}, "rate": {"mass_action": "V"}},
                  {"reactants": {}, "products": {"s": 1}, "rate": {"expr": "V * [Jnk-P]^n / (Km + s^2) - 0.0"}}
                ]}"#,
        )
        .unwrap();
        let again = parse_model(&net.to_json_string()).unwrap();
        assert_eq!(net, again);
    }
}
