use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which model semantics produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Ode,
    Ssa,
    Tau,
    Cle,
    #[default]
    External,
}

/// Bookkeeping carried alongside a simulated series.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    /// Negative populations clipped to zero (tau-leap, CLE).
    pub clipped: u64,
    /// Propensity evaluations clamped from a negative value to zero.
    pub clamped: u64,
    /// Channels disabled because firing would leave the state space (SSA).
    pub blocked: u64,
    pub seed: Option<u64>,
    pub rng: Option<String>,
}

/// Sampled trajectory `(t_i, x_i)`, `i = 0..=T`, with strictly increasing
/// times. `dt(i) = t_i - t_{i-1}` may vary.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T = f64> {
    pub species: Vec<String>,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub kind: SeriesKind,
    pub meta: SeriesMeta,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(
        species: Vec<String>,
        times: Vec<T>,
        states: Vec<Vec<T>>,
        kind: SeriesKind,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::Dimension(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        let d = species.len();
        for (i, s) in states.iter().enumerate() {
            if s.len() != d {
                return Err(Error::Dimension(format!("record {i} has {} values, expected {d}", s.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("record {i} has a non-finite value")));
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("times must be strictly increasing".into()));
        }
        Ok(Self { species, times, states, kind, meta: SeriesMeta::default() })
    }

    /// Number of records, `T + 1`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    /// Step `t_i - t_{i-1}` for `i >= 1`.
    pub fn dt(&self, i: usize) -> T {
        self.times[i] - self.times[i - 1]
    }

    /// Elapsed time `t_T - t_0`.
    pub fn duration(&self) -> T {
        self.times[self.len() - 1] - self.times[0]
    }

    /// Left-endpoint steps: `(x_{i-1}, dt_i)` for `i = 1..=T`.
    pub fn steps(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        (1..self.len()).map(move |i| (self.states[i - 1].as_slice(), self.dt(i)))
    }

    /// Time average `sum_i x_{i-1} dt_i / sum_i dt_i`; exact for
    /// piecewise-constant (jump) records. A single record averages to itself.
    pub fn time_average(&self) -> Vec<T> {
        if self.len() == 1 {
            return self.states[0].clone();
        }
        let mut acc = vec![T::zero(); self.dim()];
        let mut total = T::zero();
        for (x, dt) in self.steps() {
            for (a, &v) in acc.iter_mut().zip(x) {
                *a = *a + v * dt;
            }
            total = total + dt;
        }
        acc.into_iter().map(|a| a / total).collect()
    }

    /// Left-endpoint time average over `[t0, t_T]`; a step that straddles
    /// `t0` counts only its part after `t0`.
    pub fn time_average_from(&self, t0: T) -> Result<Vec<T>> {
        let end = self.times[self.len() - 1];
        if !(t0 < end) {
            return Err(Error::Invalid("averaging window is empty".into()));
        }
        let mut acc = vec![T::zero(); self.dim()];
        let mut total = T::zero();
        for i in 1..self.len() {
            if self.times[i] <= t0 {
                continue;
            }
            let dt = self.times[i] - self.times[i - 1].max(t0);
            for (a, &v) in acc.iter_mut().zip(&self.states[i - 1]) {
                *a = *a + v * dt;
            }
            total = total + dt;
        }
        Ok(acc.into_iter().map(|a| a / total).collect())
    }

    /// Column of one species.
    pub fn column(&self, i: usize) -> Vec<T> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// CSV with header `t,<species...>` and shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for s in &self.species {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, kind: SeriesKind) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Invalid("empty time-series file".into()))?;
        let mut cols = header.split(',').map(str::trim);
        if cols.next() != Some("t") {
            return Err(Error::Invalid("time-series header must start with \"t\"".into()));
        }
        let species: Vec<String> = cols.map(String::from).collect();
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut vals = line.split(',').map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Invalid(format!("row {}: malformed number \"{v}\"", row + 1)))
            });
            let t = vals.next().ok_or_else(|| Error::Invalid(format!("row {} empty", row + 1)))??;
            let x = vals.collect::<Result<Vec<T>>>()?;
            times.push(t);
            states.push(x);
        }
        Self::new(species, times, states, kind)
    }
}

/// Uniform grid from 0 to `t_end` with step `dt`; the last step is
/// shortened to land on `t_end`.
pub fn uniform_grid<T: Scalar>(t_end: T, dt: T) -> Result<Vec<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    if t_end < T::zero() || !t_end.is_finite() {
        return Err(Error::Invalid("t_end must be finite and nonnegative".into()));
    }
    let ratio = (t_end / dt).to_f64_lossy();
    let mut n = ratio.ceil() as usize;
    if n > 0 && (ratio - (n - 1) as f64) < 1e-9 * ratio.max(1.0) {
        n -= 1;
    }
    let mut times: Vec<T> = (0..n).map(|i| T::lit(i as f64) * dt).collect();
    times.push(t_end);
    if times.len() >= 2 && !(times[times.len() - 1] > times[times.len() - 2]) {
        times.remove(times.len() - 2);
    }
    Ok(times)
}
