//! Reduced networks built from a set of sensitive parameters.
//!
//! Parameters split into fitted ones (`gamma`), frozen constants
//! (`gamma_comp1`) and eliminated ones (`gamma_comp2`); species split the
//! same way into resolved (`pi`), frozen at their data time average
//! (`pi_comp1`) and eliminated (`pi_comp2`). All index lists are ascending.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::network::{Reaction, ReactionNetwork};
use crate::simulate::TimeSeries;

/// Reactions reading at least one parameter of `p`.
pub fn select_reactions(net: &ReactionNetwork, p: &[usize]) -> Result<Vec<usize>> {
    if p.is_empty() {
        return Err(Error::Invalid("empty parameter set".into()));
    }
    let k = net.num_parameters();
    if let Some(&bad) = p.iter().find(|&&q| q >= k) {
        return Err(Error::Dimension(format!("parameter index {bad} out of range")));
    }
    let phi = net.phi_map();
    let j_p: BTreeSet<usize> = p.iter().flat_map(|&q| phi[q].iter().copied()).collect();
    if j_p.is_empty() {
        return Err(Error::Invalid("no reaction depends on the selected parameters".into()));
    }
    Ok(j_p.into_iter().collect())
}

/// Species consumed or produced by some reaction of `j_p`.
pub fn select_species(net: &ReactionNetwork, j_p: &[usize]) -> Vec<usize> {
    let s: BTreeSet<usize> =
        j_p.iter().flat_map(|&j| net.reactions[j].stoichiometric_species()).collect();
    s.into_iter().collect()
}

fn complement(n: usize, taken: &[&[usize]]) -> Vec<usize> {
    let taken: BTreeSet<usize> = taken.iter().flat_map(|s| s.iter().copied()).collect();
    (0..n).filter(|i| !taken.contains(i)).collect()
}

/// Index maps of a reduction together with the frozen constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionMaps {
    pub reactions: Vec<usize>,
    pub gamma: Vec<usize>,
    pub gamma_comp1: Vec<usize>,
    pub gamma_comp2: Vec<usize>,
    pub pi: Vec<usize>,
    pub pi_comp1: Vec<usize>,
    pub pi_comp2: Vec<usize>,
    /// Frozen species values, aligned with `pi_comp1`.
    pub y_bar: Vec<f64>,
    /// Frozen parameter values, aligned with `gamma_comp1`.
    pub u: Vec<f64>,
    /// Time average of every full-model species over the data.
    pub time_average: Vec<f64>,
    /// Where `time_average` came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl ReductionMaps {
    /// Maps for the sensitive set `p` against data `ts`.
    pub fn from_parameters(net: &ReactionNetwork, p: &[usize], ts: &TimeSeries) -> Result<Self> {
        if ts.dim() != net.num_species() {
            return Err(Error::Dimension(format!(
                "series has {} species, network has {}",
                ts.dim(),
                net.num_species()
            )));
        }
        let j_p = select_reactions(net, p)?;
        let s_p = select_species(net, &j_p);
        Self::build(net, p, &j_p, &s_p, ts.time_average())
    }

    /// Maps from explicit index sets and the full time-average vector.
    pub fn build(
        net: &ReactionNetwork,
        p: &[usize],
        j_p: &[usize],
        s_p: &[usize],
        time_average: Vec<f64>,
    ) -> Result<Self> {
        let (d, k, jn) = (net.num_species(), net.num_parameters(), net.num_reactions());
        if time_average.len() != d {
            return Err(Error::Dimension("time average does not match the species".into()));
        }
        let sorted = |v: &[usize], n: usize, what: &str| -> Result<Vec<usize>> {
            let s: BTreeSet<usize> = v.iter().copied().collect();
            if s.iter().any(|&i| i >= n) {
                return Err(Error::Dimension(format!("{what} index out of range")));
            }
            Ok(s.into_iter().collect())
        };
        let gamma = sorted(p, k, "parameter")?;
        let reactions = sorted(j_p, jn, "reaction")?;
        let pi = sorted(s_p, d, "species")?;

        let gamma_set: BTreeSet<usize> = gamma.iter().copied().collect();
        let pi_set: BTreeSet<usize> = pi.iter().copied().collect();
        let mut used_params = BTreeSet::new();
        let mut used_species = BTreeSet::new();
        for &j in &reactions {
            let r = &net.reactions[j];
            used_params.extend(r.params().iter().copied());
            used_species.extend(r.propensity().species_refs());
            if let Some(i) = r.stoichiometric_species().find(|i| !pi_set.contains(i)) {
                return Err(Error::Invalid(format!(
                    "species {} takes part in reaction {j} but is not resolved",
                    net.species[i]
                )));
            }
        }
        let gamma_comp1: Vec<usize> =
            used_params.into_iter().filter(|q| !gamma_set.contains(q)).collect();
        let pi_comp1: Vec<usize> =
            used_species.into_iter().filter(|i| !pi_set.contains(i)).collect();
        let gamma_comp2 = complement(k, &[&gamma, &gamma_comp1]);
        let pi_comp2 = complement(d, &[&pi, &pi_comp1]);
        Ok(Self {
            y_bar: pi_comp1.iter().map(|&i| time_average[i]).collect(),
            u: gamma_comp1.iter().map(|&q| net.values[q]).collect(),
            reactions,
            gamma,
            gamma_comp1,
            gamma_comp2,
            pi,
            pi_comp1,
            pi_comp2,
            time_average,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = Some(provenance.into());
        self
    }

    /// `Pi x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.pi.iter().map(|&i| x[i]).collect()
    }

    /// `Gamma c`.
    pub fn project_params(&self, c: &[f64]) -> Vec<f64> {
        self.gamma.iter().map(|&q| c[q]).collect()
    }

    /// Add every reaction in which species `i` is consumed or produced.
    /// The sensitive parameter set stays the same, so parameters of the new
    /// reactions enter as constants.
    pub fn augment_with_species(&self, net: &ReactionNetwork, i: usize) -> Result<Self> {
        if self.pi.binary_search(&i).is_err() {
            let name = net.species.get(i).cloned().unwrap_or_else(|| i.to_string());
            return Err(Error::UnresolvedSpecies(name));
        }
        let mut j_p: BTreeSet<usize> = self.reactions.iter().copied().collect();
        j_p.extend((0..net.num_reactions()).filter(|&j| net.reactions[j].involves_species(i)));
        let j_p: Vec<usize> = j_p.into_iter().collect();
        let s_p = select_species(net, &j_p);
        let mut out = Self::build(net, &self.gamma, &j_p, &s_p, self.time_average.clone())?;
        out.provenance = self.provenance.clone();
        Ok(out)
    }
}

/// A reduced network with its maps. `network` is standalone: its species
/// are the resolved ones, its parameters the fitted ones at `theta0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub maps: ReductionMaps,
    pub network: ReactionNetwork,
    pub theta0: Vec<f64>,
}

impl ReducedModel {
    pub fn build(net: &ReactionNetwork, maps: ReductionMaps) -> Result<Self> {
        let pos = |list: &[usize], n: usize| {
            let mut v = vec![None; n];
            for (a, &i) in list.iter().enumerate() {
                v[i] = Some(a);
            }
            v
        };
        let (d, k) = (net.num_species(), net.num_parameters());
        let p_fit = pos(&maps.gamma, k);
        let p_frozen = pos(&maps.gamma_comp1, k);
        let s_res = pos(&maps.pi, d);
        let s_frozen = pos(&maps.pi_comp1, d);

        let mut reactions = Vec::with_capacity(maps.reactions.len());
        for &j in &maps.reactions {
            let r = &net.reactions[j];
            let e = r.propensity();
            if let Some(q) = e.param_refs().into_iter().find(|&q| p_fit[q].is_none() && p_frozen[q].is_none())
            {
                return Err(Error::Internal(format!(
                    "reaction {j} reads eliminated parameter {}",
                    net.parameters[q]
                )));
            }
            if let Some(i) = e.species_refs().into_iter().find(|&i| s_res[i].is_none() && s_frozen[i].is_none())
            {
                return Err(Error::Internal(format!(
                    "reaction {j} reads eliminated species {}",
                    net.species[i]
                )));
            }
            let relabel = |list: &[(usize, u32)]| -> Result<Vec<(usize, u32)>> {
                list.iter()
                    .map(|&(i, m)| {
                        s_res[i].map(|a| (a, m)).ok_or_else(|| {
                            Error::Internal(format!("unresolved species {} in reaction {j}", net.species[i]))
                        })
                    })
                    .collect()
            };
            let prop = e.substitute(
                &|q| match p_fit[q] {
                    Some(a) => Expr::Param(a),
                    None => Expr::Const(maps.u[p_frozen[q].expect("checked above")]),
                },
                &|i| match s_res[i] {
                    Some(a) => Expr::Species(a),
                    None => Expr::Const(maps.y_bar[s_frozen[i].expect("checked above")]),
                },
            );
            reactions.push(Reaction::new(&relabel(r.nu_in())?, &relabel(r.nu_out())?, prop));
        }
        let theta0 = maps.project_params(&net.values);
        let mut network = ReactionNetwork::new(
            maps.pi.iter().map(|&i| net.species[i].clone()).collect(),
            maps.project(&net.initial_state),
            maps.gamma.iter().map(|&q| net.parameters[q].clone()).collect(),
            theta0.clone(),
            reactions,
        )?;
        network.name = net.name.as_ref().map(|n| format!("{n} (reduced)"));
        network.units = net.units;
        Ok(Self { maps, network, theta0 })
    }

    pub fn num_species(&self) -> usize {
        self.maps.pi.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.maps.reactions.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.maps.gamma.len()
    }

    /// Reduced network evaluated at `theta`.
    pub fn with_theta(&self, theta: &[f64]) -> Result<ReactionNetwork> {
        self.network.with_values(theta)
    }

    /// Dense `(nu_in_bar, nu_out_bar, nu_bar)`, rows are reduced species.
    pub fn stoichiometry(&self) -> (Vec<Vec<u32>>, Vec<Vec<u32>>, Vec<Vec<i64>>) {
        let (d, j) = (self.num_species(), self.num_reactions());
        let mut nin = vec![vec![0; j]; d];
        let mut nout = vec![vec![0; j]; d];
        let mut nu = vec![vec![0; j]; d];
        for (col, r) in self.network.reactions.iter().enumerate() {
            for &(i, m) in r.nu_in() {
                nin[i][col] = m;
            }
            for &(i, m) in r.nu_out() {
                nout[i][col] = m;
            }
            for &(i, m) in r.nu() {
                nu[i][col] = m;
            }
        }
        (nin, nout, nu)
    }

    pub fn to_file(&self) -> ReducedFile {
        let (nu_in, nu_out, nu) = self.stoichiometry();
        ReducedFile {
            schema_version: REDUCED_SCHEMA_VERSION,
            maps: self.maps.clone(),
            theta0: self.theta0.clone(),
            nu_in_bar: nu_in,
            nu_out_bar: nu_out,
            nu_bar: nu,
            network: self.network.to_json_value(),
        }
    }

    /// Rebuild from a `reduced.json` payload and the full network it came
    /// from, checking that the stored reduced network agrees.
    pub fn from_file(file: &ReducedFile, net: &ReactionNetwork) -> Result<Self> {
        let model = Self::build(net, file.maps.clone())?;
        let stored = ReactionNetwork::from_json_value(&file.network)?;
        if stored.species != model.network.species || stored.parameters != model.network.parameters {
            return Err(Error::Schema("reduced model does not match the full network".into()));
        }
        Ok(model)
    }
}

pub const REDUCED_SCHEMA_VERSION: u32 = 1;

/// `reduced.json` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFile {
    pub schema_version: u32,
    pub maps: ReductionMaps,
    pub theta0: Vec<f64>,
    pub nu_in_bar: Vec<Vec<u32>>,
    pub nu_out_bar: Vec<Vec<u32>>,
    pub nu_bar: Vec<Vec<i64>>,
    /// The reduced network in model-file form.
    pub network: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_model;
    use crate::simulate::{simulate_ode, uniform_grid, SeriesKind};

    fn constant(net: &ReactionNetwork, x: &[f64]) -> TimeSeries {
        let times = uniform_grid(1.0, 0.25).unwrap();
        let states = vec![x.to_vec(); times.len()];
        TimeSeries::new(net.species.clone(), times, states, SeriesKind::External).unwrap()
    }

    fn chain() -> ReactionNetwork {
        parse_model(
            r#"{"species": [{"name": "A", "initial": 5}, {"name": "B", "initial": 0}, {"name": "C", "initial": 0}],
                "parameters": [{"name": "k1", "value": 1}, {"name": "k2", "value": 0.5}],
                "reactions": [
                  {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"mass_action": "k1"}},
                  {"reactants": {"B": 1}, "products": {"C": 1}, "rate": {"mass_action": "k2"}}
                ]}"#,
        )
        .unwrap()
    }

    fn enzyme() -> ReactionNetwork {
        parse_model(
            r#"{"species": [{"name": "s", "initial": 4}, {"name": "p", "initial": 0}, {"name": "E", "initial": 1}],
                "parameters": [{"name": "V", "value": 3}, {"name": "Km", "value": 2}, {"name": "kE", "value": 0.1}, {"name": "kd", "value": 0.2}],
                "reactions": [
                  {"reactants": {"s": 1}, "products": {"p": 1}, "rate": {"expr": "V * s / (Km + E)"}},
                  {"reactants": {}, "products": {"E": 1}, "rate": {"mass_action": "kE"}},
                  {"reactants": {"p": 1}, "products": {}, "rate": {"mass_action": "kd"}}
                ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn reaction_selection() {
        let net = chain();
        assert_eq!(select_reactions(&net, &[1]).unwrap(), vec![1]);
        assert_eq!(select_reactions(&net, &[0, 1]).unwrap(), vec![0, 1]);
        assert!(select_reactions(&net, &[]).is_err());
        let shared = parse_model(
            r#"{"species": [{"name": "A", "initial": 1}],
                "parameters": [{"name": "a", "value": 1}, {"name": "b", "value": 1}, {"name": "z", "value": 1}],
                "reactions": [
                  {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "b"}},
                  {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "a"}},
                  {"reactants": {"A": 1}, "products": {}, "rate": {"expr": "b * A"}}
                ]}"#,
        )
        .unwrap();
        assert_eq!(select_reactions(&shared, &[1]).unwrap(), vec![0, 2]);
        assert!(select_reactions(&shared, &[2]).is_err());
    }

    #[test]
    fn species_selection() {
        let net = parse_model(
            r#"{"species": [{"name": "A", "initial": 1}, {"name": "B", "initial": 1}, {"name": "C", "initial": 0}, {"name": "D", "initial": 0}],
                "parameters": [{"name": "c", "value": 1}, {"name": "g", "value": 1}],
                "reactions": [
                  {"reactants": {"A": 1, "B": 1}, "products": {"C": 1}, "rate": {"mass_action": "c"}},
                  {"reactants": {}, "products": {"D": 1}, "rate": {"mass_action": "g"}}
                ]}"#,
        )
        .unwrap();
        assert_eq!(select_species(&net, &[0]), vec![0, 1, 2]);
        assert_eq!(select_species(&net, &[1]), vec![3]);
        assert_eq!(select_species(&net, &[0, 1]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn chain_sub_reaction() {
        let net = chain();
        let ts = constant(&net, &[1.0, 2.0, 3.0]);
        let maps = ReductionMaps::from_parameters(&net, &[0], &ts).unwrap();
        assert_eq!(maps.reactions, vec![0]);
        assert_eq!(maps.pi, vec![0, 1]);
        assert_eq!(maps.pi_comp1, Vec::<usize>::new());
        assert_eq!(maps.pi_comp2, vec![2]);
        assert_eq!(maps.gamma_comp2, vec![1]);
        let red = ReducedModel::build(&net, maps).unwrap();
        let (_, _, nu) = red.stoichiometry();
        assert_eq!(nu, vec![vec![-1], vec![1]]);
        assert_eq!(red.network.species, vec!["A", "B"]);
        assert_eq!(red.theta0, vec![1.0]);
    }

    #[test]
    fn frozen_species_and_parameters() {
        let net = enzyme();
        let ts = constant(&net, &[4.0, 1.0, 2.0]);
        let maps = ReductionMaps::from_parameters(&net, &[0], &ts).unwrap();
        assert_eq!(maps.reactions, vec![0]);
        assert_eq!(maps.pi, vec![0, 1]);
        assert_eq!(maps.pi_comp1, vec![2]);
        assert_eq!(maps.y_bar, vec![2.0]);
        assert_eq!(maps.gamma_comp1, vec![1]);
        assert_eq!(maps.u, vec![2.0]);
        assert_eq!(maps.gamma_comp2, vec![2, 3]);
        let red = ReducedModel::build(&net, maps).unwrap();
        // V s / (Km + E) with Km = 2, E = 2: 3 * 4 / 4
        let a = red.network.propensity(0, &[4.0, 1.0], &[3.0]).unwrap();
        assert_eq!(a, 3.0);
        let full = net.propensity(0, &[4.0, 1.0, 2.0], &net.values).unwrap();
        assert_eq!(a, full);
        assert_eq!(red.network.reactions[0].params(), &[0]);
    }

    #[test]
    fn identity_reduction() {
        let net = enzyme();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 2.0, 0.1).unwrap();
        let maps = ReductionMaps::from_parameters(&net, &[0, 1, 2, 3], &ts).unwrap();
        assert!(maps.gamma_comp1.is_empty() && maps.pi_comp1.is_empty());
        let red = ReducedModel::build(&net, maps).unwrap();
        for x in [[1.0, 2.0, 3.0], [0.5, 0.0, 7.0]] {
            assert_eq!(red.network.drift(&x, &red.theta0).unwrap(), net.drift(&x, &net.values).unwrap());
        }
    }

    #[test]
    fn augmentation() {
        let net = enzyme();
        let ts = constant(&net, &[4.0, 1.0, 2.0]);
        let maps = ReductionMaps::from_parameters(&net, &[0], &ts).unwrap();
        let aug = maps.augment_with_species(&net, 1).unwrap();
        assert_eq!(aug.reactions, vec![0, 2]);
        assert_eq!(aug.gamma, vec![0]);
        assert_eq!(aug.gamma_comp1, vec![1, 3]);
        assert_eq!(aug.u, vec![2.0, 0.2]);
        let again = aug.augment_with_species(&net, 1).unwrap();
        assert_eq!(again, aug);
        assert!(matches!(maps.augment_with_species(&net, 2), Err(Error::UnresolvedSpecies(_))));
        let red = ReducedModel::build(&net, aug).unwrap();
        assert_eq!(red.num_reactions(), 2);
        assert_eq!(red.num_parameters(), 1);
    }

    #[test]
    fn file_roundtrip() {
        let net = enzyme();
        let ts = constant(&net, &[4.0, 1.0, 2.0]);
        let maps = ReductionMaps::from_parameters(&net, &[0, 3], &ts).unwrap().with_provenance("unit");
        let red = ReducedModel::build(&net, maps).unwrap();
        let text = serde_json::to_string(&red.to_file()).unwrap();
        let file: ReducedFile = serde_json::from_str(&text).unwrap();
        let back = ReducedModel::from_file(&file, &net).unwrap();
        assert_eq!(back, red);
        let stored = ReactionNetwork::from_json_value(&file.network).unwrap();
        assert_eq!(stored.to_json_value(), red.network.to_json_value());
    }
}
