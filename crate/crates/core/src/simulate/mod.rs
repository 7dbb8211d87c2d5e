//! Time-series generation under the four model semantics: reaction-rate
//! ODE, exact jump process (SSA), tau-leap and Euler-discretized CLE.

mod ode;
mod series;
mod stochastic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::network::{Reaction, ReactionNetwork};

pub use ode::{simulate_ode, simulate_ode_on_grid};
pub use series::{uniform_grid, SeriesKind, SeriesMeta, TimeSeries};
pub use stochastic::{
    rng_for, simulate_cle, simulate_cle_scaled, simulate_ssa, simulate_tau_leap, MAX_JUMPS,
    RNG_ALGORITHM,
};

/// Simulation method and its step, where one applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Ode { dt: f64 },
    Ssa,
    Tau { dt: f64 },
    Cle { dt: f64 },
}

impl Method {
    pub fn kind(&self) -> SeriesKind {
        match self {
            Method::Ode { .. } => SeriesKind::Ode,
            Method::Ssa => SeriesKind::Ssa,
            Method::Tau { .. } => SeriesKind::Tau,
            Method::Cle { .. } => SeriesKind::Cle,
        }
    }
}

/// Run one trajectory of `net` from `x0` with parameters `c`.
pub fn simulate(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    method: Method,
    t_end: f64,
    seed: u64,
) -> Result<TimeSeries> {
    match method {
        Method::Ode { dt } => simulate_ode(net, c, x0, t_end, dt),
        Method::Ssa => simulate_ssa(net, c, x0, t_end, seed),
        Method::Tau { dt } => simulate_tau_leap(net, c, x0, dt, t_end, seed),
        Method::Cle { dt } => simulate_cle(net, c, x0, dt, t_end, seed),
    }
}

/// Independent trajectories sharing one network and settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<TimeSeries>,
    pub seeds: Vec<u64>,
    pub method: Method,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn kind(&self) -> SeriesKind {
        self.method.kind()
    }
}

/// `count` runs with seeds `base_seed, base_seed + 1, ...`. Members run in
/// parallel; each depends only on its own seed, so the result does not
/// depend on scheduling.
pub fn simulate_ensemble(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    method: Method,
    t_end: f64,
    count: usize,
    base_seed: u64,
) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::Invalid("ensemble size must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..count as u64).map(|m| base_seed.wrapping_add(m)).collect();
    let members = seeds
        .par_iter()
        .enumerate()
        .map(|(m, &seed)| {
            simulate(net, c, x0, method, t_end, seed)
                .map_err(|e| Error::Invalid(format!("ensemble member {m}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { members, seeds, method })
}

/// System-size scaling: propensities become `N a(x / N; c)` and the initial
/// state `round(N x0)`.
pub fn kurtz_scale(net: &ReactionNetwork, n: f64) -> Result<ReactionNetwork> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Invalid("system size must be positive".into()));
    }
    let reactions = net
        .reactions
        .iter()
        .map(|r| {
            let inner = r.propensity().substitute(&Expr::Param, &|i| {
                Expr::Div(Box::new(Expr::Species(i)), Box::new(Expr::Const(n)))
            });
            let scaled = Expr::Mul(Box::new(Expr::Const(n)), Box::new(inner));
            Reaction::new(r.nu_in(), r.nu_out(), scaled)
        })
        .collect();
    let mut out = ReactionNetwork::new(
        net.species.clone(),
        net.initial_state.iter().map(|v| (v * n).round()).collect(),
        net.parameters.clone(),
        net.values.clone(),
        reactions,
    )?;
    out.name = net.name.clone();
    out.units = crate::network::Units::Count;
    Ok(out)
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// `manifest.json` content describing an ensemble directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub schema_version: u32,
    #[serde(flatten)]
    pub method: Method,
    pub t_end: f64,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub rng: String,
    pub kurtz_n: Option<f64>,
    pub parameters_sha256: String,
    pub members: Vec<String>,
    pub clipped: Vec<u64>,
}
