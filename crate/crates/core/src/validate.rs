//! Distances between full and reduced trajectories, and bootstrap
//! statistics of ensemble time averages.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ReactionNetwork;
use crate::reduce::ReducedModel;
use crate::simulate::{simulate_ode_on_grid, uniform_grid, Ensemble, TimeSeries};

/// Per-species comparison row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesDistance {
    pub species: String,
    /// `sup_t |z - z_bar| / z`.
    pub path: f64,
    /// `|avg z - avg z_bar| / avg z`.
    pub steady_state: f64,
    /// Some grid point had `z = 0`, where `|z_bar|` stands in for the ratio.
    pub zero_reference_point: bool,
    /// `avg z = 0`; `steady_state` is then an absolute difference.
    pub zero_reference_average: bool,
}

fn locate(full: &TimeSeries, red: &TimeSeries, o: &[String]) -> Result<Vec<(String, usize, usize)>> {
    if full.times != red.times {
        return Err(Error::Invalid("full and reduced series must share one time grid".into()));
    }
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(o.len());
    for name in o {
        let fi = full.species.iter().position(|s| s == name);
        let ri = red.species.iter().position(|s| s == name);
        match (fi, ri) {
            (Some(f), Some(r)) => out.push((name.clone(), f, r)),
            _ => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingSpecies(missing));
    }
    Ok(out)
}

/// Both distances for every species of `o`.
pub fn species_distances(full: &TimeSeries, red: &TimeSeries, o: &[String]) -> Result<Vec<SpeciesDistance>> {
    let idx = locate(full, red, o)?;
    let avg_full = full.time_average();
    let avg_red = red.time_average();
    Ok(idx
        .into_iter()
        .map(|(species, f, r)| {
            let mut path: f64 = 0.0;
            let mut zero_point = false;
            for (xf, xr) in full.states.iter().zip(&red.states) {
                let (z, zb) = (xf[f], xr[r]);
                let q = if z == 0.0 {
                    zero_point = true;
                    zb.abs()
                } else {
                    ((z - zb) / z).abs()
                };
                path = path.max(q);
            }
            let (a, b) = (avg_full[f], avg_red[r]);
            let zero_avg = a == 0.0;
            let steady_state = if zero_avg { (a - b).abs() } else { ((a - b) / a).abs() };
            SpeciesDistance {
                species,
                path,
                steady_state,
                zero_reference_point: zero_point,
                zero_reference_average: zero_avg,
            }
        })
        .collect())
}

/// `max_{i in O} sup_t |z_i - z_bar_i| / z_i`.
pub fn path_distance(full: &TimeSeries, red: &TimeSeries, o: &[String]) -> Result<f64> {
    Ok(species_distances(full, red, o)?.iter().map(|s| s.path).fold(0.0, f64::max))
}

/// `max_{i in O} |avg z_i - avg z_bar_i| / avg z_i`.
pub fn steady_state_distance(full: &TimeSeries, red: &TimeSeries, o: &[String]) -> Result<f64> {
    Ok(species_distances(full, red, o)?.iter().map(|s| s.steady_state).fold(0.0, f64::max))
}

/// Reference trajectory for [`validate_reduction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Full-model mean field on a uniform grid.
    #[default]
    MeanField,
    /// The data series itself.
    Data,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    /// Comparison set; defaults to every species of the reduced model.
    pub comparison: Option<Vec<String>>,
    pub reference: Reference,
}

/// Species frozen at a time average, with the spread of the reference
/// trajectory around that value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenSpecies {
    pub species: String,
    pub y_bar: f64,
    /// Sup of `|x(t) - y_bar|` over the reference, relative to `y_bar`.
    pub relative_variation: f64,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub reference: Reference,
    pub comparison_set: Vec<String>,
    pub path_dist: f64,
    pub ss_dist: f64,
    pub per_species: Vec<SpeciesDistance>,
    /// Species with the largest path distance.
    pub worst_species: Option<String>,
    pub frozen_species: Vec<FrozenSpecies>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_value: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Trajectories compared by a validation run.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub report: ValidationReport,
    pub full: TimeSeries,
    pub reduced: TimeSeries,
}

/// Simulate the reduced network at `theta` on the reference grid, from the
/// projected initial state, and compare it with the reference over the
/// comparison set.
pub fn validate_reduction(
    net: &ReactionNetwork,
    c: &[f64],
    reduced: &ReducedModel,
    theta: &[f64],
    data: Option<&TimeSeries>,
    opts: &ValidationOptions,
) -> Result<ValidationRun> {
    if !(opts.tol >= 0.0) {
        return Err(Error::Invalid("TOL must be nonnegative".into()));
    }
    let full = match opts.reference {
        Reference::MeanField => {
            let grid = uniform_grid(opts.t_end, opts.dt)?;
            simulate_ode_on_grid(net, c, &net.initial_state, &grid)
                .map_err(|e| Error::Invalid(format!("full model: {e}")))?
        }
        Reference::Data => data
            .cloned()
            .ok_or_else(|| Error::Invalid("data reference requested without data".into()))?,
    };
    if full.dim() != net.num_species() {
        return Err(Error::Dimension("reference does not match the full network".into()));
    }
    let fitted = reduced.with_theta(theta)?;
    let x0 = reduced.maps.project(&full.states[0]);
    let red = simulate_ode_on_grid(&fitted, theta, &x0, &full.times)
        .map_err(|e| Error::Invalid(format!("reduced model: {e}")))?;
    let comparison = opts.comparison.clone().unwrap_or_else(|| fitted.species.clone());
    let per_species = species_distances(&full, &red, &comparison)?;
    let path_dist = per_species.iter().map(|s| s.path).fold(0.0, f64::max);
    let ss_dist = per_species.iter().map(|s| s.steady_state).fold(0.0, f64::max);
    let worst_species = per_species
        .iter()
        .fold(None::<&SpeciesDistance>, |acc, s| match acc {
            Some(a) if a.path >= s.path => Some(a),
            _ => Some(s),
        })
        .map(|s| s.species.clone());
    let frozen_species = reduced
        .maps
        .pi_comp1
        .iter()
        .zip(&reduced.maps.y_bar)
        .map(|(&i, &y)| {
            let spread = full.states.iter().map(|x| (x[i] - y).abs()).fold(0.0, f64::max);
            FrozenSpecies {
                species: net.species[i].clone(),
                y_bar: y,
                relative_variation: if y == 0.0 { spread } else { spread / y.abs() },
            }
        })
        .collect();
    let report = ValidationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        reference: opts.reference,
        comparison_set: comparison,
        path_dist,
        ss_dist,
        per_species,
        worst_species,
        frozen_species,
        loss_value: None,
        tol: opts.tol,
        pass: path_dist <= opts.tol,
    };
    Ok(ValidationRun { report, full, reduced: red })
}

/// Tidy `t,species,model,value` rows for plotting.
pub fn plot_data_csv(full: &TimeSeries, red: &TimeSeries, o: &[String]) -> Result<String> {
    let idx = locate(full, red, o)?;
    let mut out = String::from("t,species,model,value\n");
    for (name, f, r) in idx {
        for (k, &t) in full.times.iter().enumerate() {
            out.push_str(&format!("{t},{name},full,{}\n", full.states[k][f]));
            out.push_str(&format!("{t},{name},reduced,{}\n", red.states[k][r]));
        }
    }
    Ok(out)
}

pub const BOOTSTRAP_SCHEMA_VERSION: u32 = 1;

/// Bootstrap summary of the mean time average of each species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub schema_version: u32,
    pub species: Vec<String>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resamples: usize,
    pub members: usize,
    pub burn_in: f64,
    pub seed: u64,
    /// Time average of every member, one row per trajectory.
    pub trajectory_averages: Vec<Vec<f64>>,
}

/// Percentile 95% bootstrap interval for the ensemble mean of each species'
/// time average over `[burn_in, T]`. Resample `b` draws from ChaCha stream
/// `b` of `seed`, so the result does not depend on thread scheduling.
pub fn bootstrap_time_average(
    ens: &Ensemble,
    resamples: usize,
    seed: u64,
    burn_in: f64,
) -> Result<BootstrapSummary> {
    let m = ens.len();
    if m < 2 {
        return Err(Error::Invalid("bootstrap needs at least two trajectories".into()));
    }
    if resamples < 100 {
        return Err(Error::Invalid("bootstrap needs at least 100 resamples".into()));
    }
    let averages = ens
        .members
        .iter()
        .map(|ts| ts.time_average_from(burn_in))
        .collect::<Result<Vec<_>>>()?;
    let d = averages[0].len();
    let mean: Vec<f64> =
        (0..d).map(|i| averages.iter().map(|a| a[i]).sum::<f64>() / m as f64).collect();
    let draws: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut acc = vec![0.0; d];
            for _ in 0..m {
                let row = &averages[rng.gen_range(0..m)];
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / m as f64).collect()
        })
        .collect();
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for i in 0..d {
        let mut col: Vec<f64> = draws.iter().map(|r| r[i]).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile(&col, 0.025).min(mean[i]));
        upper.push(quantile(&col, 0.975).max(mean[i]));
    }
    Ok(BootstrapSummary {
        schema_version: BOOTSTRAP_SCHEMA_VERSION,
        species: ens.members[0].species.clone(),
        mean,
        lower,
        upper,
        resamples,
        members: m,
        burn_in,
        seed,
        trajectory_averages: averages,
    })
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_model;
    use crate::reduce::ReductionMaps;
    use crate::simulate::{simulate_ensemble, simulate_ode, SeriesKind};
    use crate::Method;

    fn series(names: &[&str], cols: &[Vec<f64>]) -> TimeSeries {
        let n = cols[0].len();
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let states = (0..n).map(|k| cols.iter().map(|c| c[k]).collect()).collect();
        TimeSeries::new(names.iter().map(|s| s.to_string()).collect(), times, states, SeriesKind::Ode).unwrap()
    }

    fn o(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn distance_examples() {
        let a = series(&["A"], &[vec![2.0; 4]]);
        let b = series(&["A"], &[vec![3.0; 4]]);
        assert_eq!(path_distance(&a, &a, &o(&["A"])).unwrap(), 0.0);
        assert_eq!(path_distance(&a, &b, &o(&["A"])).unwrap(), 0.5);
        let z = series(&["A"], &[vec![1.0, 0.0, 1.0]]);
        let zb = series(&["A"], &[vec![1.0, 0.7, 1.0]]);
        let rows = species_distances(&z, &zb, &o(&["A"])).unwrap();
        assert_eq!(rows[0].path, 0.7);
        assert!(rows[0].zero_reference_point);
        let s1 = series(&["A"], &[vec![2.0; 3]]);
        let s2 = series(&["A"], &[vec![1.0; 3]]);
        assert_eq!(steady_state_distance(&s1, &s1, &o(&["A"])).unwrap(), 0.0);
        assert_eq!(steady_state_distance(&s1, &s2, &o(&["A"])).unwrap(), 0.5);
    }

    #[test]
    fn relative_metric_is_scale_free() {
        let a = series(&["A"], &[vec![1.0, 2.0, 4.0]]);
        let b = series(&["A"], &[vec![1.5, 2.0, 3.0]]);
        let a10 = series(&["A"], &[vec![10.0, 20.0, 40.0]]);
        let b10 = series(&["A"], &[vec![15.0, 20.0, 30.0]]);
        let names = o(&["A"]);
        assert_eq!(steady_state_distance(&a, &b, &names).unwrap(), steady_state_distance(&a10, &b10, &names).unwrap());
        assert_eq!(path_distance(&a, &b, &names).unwrap(), path_distance(&a10, &b10, &names).unwrap());
    }

    #[test]
    fn missing_species_listed() {
        let full = series(&["A", "B", "C"], &[vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]]);
        let red = series(&["A"], &[vec![1.0; 2]]);
        match path_distance(&full, &red, &o(&["A", "B", "C"])) {
            Err(Error::MissingSpecies(m)) => assert_eq!(m, o(&["B", "C"])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_average_reported_absolute() {
        let a = series(&["A"], &[vec![0.0; 3]]);
        let b = series(&["A"], &[vec![0.25; 3]]);
        let rows = species_distances(&a, &b, &o(&["A"])).unwrap();
        assert!(rows[0].zero_reference_average);
        assert_eq!(rows[0].steady_state, 0.25);
    }

    fn birth_death() -> ReactionNetwork {
        parse_model(
            r#"{"species": [{"name": "A", "initial": 0}],
                "parameters": [{"name": "lambda", "value": 10}, {"name": "mu", "value": 1}],
                "reactions": [
                  {"reactants": {}, "products": {"A": 1}, "rate": {"mass_action": "lambda"}},
                  {"reactants": {"A": 1}, "products": {}, "rate": {"mass_action": "mu"}}
                ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn identity_validation_passes() {
        let net = parse_model(
            r#"{"species": [{"name": "A", "initial": 2}, {"name": "B", "initial": 0}],
                "parameters": [{"name": "k1", "value": 1}, {"name": "k2", "value": 0.3}],
                "reactions": [
                  {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"mass_action": "k1"}},
                  {"reactants": {"B": 1}, "products": {"A": 1}, "rate": {"mass_action": "k2"}}
                ]}"#,
        )
        .unwrap();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 5.0, 0.01).unwrap();
        let maps = ReductionMaps::from_parameters(&net, &[0, 1], &ts).unwrap();
        let red = ReducedModel::build(&net, maps).unwrap();
        let opts = ValidationOptions { t_end: 5.0, dt: 0.01, tol: 1e-9, comparison: None, reference: Reference::MeanField };
        let run = validate_reduction(&net, &net.values, &red, &red.theta0, None, &opts).unwrap();
        assert_eq!(run.report.path_dist, 0.0);
        assert_eq!(run.report.ss_dist, 0.0);
        assert!(run.report.pass);
        let zero = ValidationOptions { tol: 0.0, ..opts.clone() };
        assert!(validate_reduction(&net, &net.values, &red, &red.theta0, None, &zero).unwrap().report.pass);
        let off: Vec<f64> = red.theta0.iter().map(|v| v * 1.01).collect();
        assert!(!validate_reduction(&net, &net.values, &red, &off, None, &zero).unwrap().report.pass);
        let data = ValidationOptions { reference: Reference::Data, ..opts };
        let run = validate_reduction(&net, &net.values, &red, &red.theta0, Some(&ts), &data).unwrap();
        assert_eq!(run.report.path_dist, 0.0);
    }

    #[test]
    fn frozen_species_flagged() {
        let net = parse_model(
            r#"{"species": [{"name": "s", "initial": 4}, {"name": "p", "initial": 0}, {"name": "E", "initial": 1}],
                "parameters": [{"name": "V", "value": 3}, {"name": "kE", "value": 1}],
                "reactions": [
                  {"reactants": {"s": 1}, "products": {"p": 1}, "rate": {"expr": "V * s / (1 + E)"}},
                  {"reactants": {}, "products": {"E": 1}, "rate": {"mass_action": "kE"}}
                ]}"#,
        )
        .unwrap();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 2.0, 0.01).unwrap();
        let maps = ReductionMaps::from_parameters(&net, &[0], &ts).unwrap();
        let red = ReducedModel::build(&net, maps).unwrap();
        let opts = ValidationOptions { t_end: 2.0, dt: 0.01, tol: 0.1, comparison: None, reference: Reference::MeanField };
        let run = validate_reduction(&net, &net.values, &red, &red.theta0, None, &opts).unwrap();
        assert_eq!(run.report.frozen_species.len(), 1);
        assert_eq!(run.report.frozen_species[0].species, "E");
        assert!(run.report.frozen_species[0].relative_variation > 0.4);
        assert!(run.report.worst_species.is_some());
        let csv = plot_data_csv(&run.full, &run.reduced, &run.report.comparison_set).unwrap();
        assert!(csv.starts_with("t,species,model,value\n0,s,full,4\n0,s,reduced,4\n"));
    }

    #[test]
    fn bootstrap_properties() {
        let net = birth_death();
        let ens = simulate_ensemble(&net, &net.values, &[10.0], Method::Ssa, 20.0, 50, 3).unwrap();
        let s = bootstrap_time_average(&ens, 200, 9, 5.0).unwrap();
        let plain: f64 = ens.members.iter().map(|t| t.time_average_from(5.0).unwrap()[0]).sum::<f64>() / 50.0;
        assert_eq!(s.mean[0], plain);
        assert!(s.lower[0] <= s.mean[0] && s.mean[0] <= s.upper[0]);
        assert!(s.upper[0] > s.lower[0]);
        let again = bootstrap_time_average(&ens, 200, 9, 5.0).unwrap();
        assert_eq!(s, again);
        let more = bootstrap_time_average(&ens, 400, 9, 5.0).unwrap();
        assert_eq!(more.mean, s.mean);

        let one = ens.members[0].clone();
        let same = Ensemble { members: vec![one; 5], seeds: vec![0; 5], method: Method::Ssa };
        let s = bootstrap_time_average(&same, 100, 1, 0.0).unwrap();
        assert_eq!(s.lower, s.upper);
        assert!(bootstrap_time_average(&same, 99, 1, 0.0).is_err());
    }
}
