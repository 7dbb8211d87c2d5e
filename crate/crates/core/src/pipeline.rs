//! End-to-end reduction over a ladder of information thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{fim_blocks_mean_field, fim_diag_mean_field, FimBlocks, InformationRanking, Scale};
use crate::network::ReactionNetwork;
use crate::reduce::{ReducedModel, ReductionMaps};
use crate::simulate::TimeSeries;
use crate::train::{train, LossData, TrainOptions, TrainingResult};
use crate::validate::{validate_reduction, Reference, ValidationOptions, ValidationReport};

pub const DEFAULT_KAPPA_LADDER: [f64; 4] = [0.93, 0.95, 0.97, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Ascending thresholds in `(0, 1]`.
    pub kappa_ladder: Vec<f64>,
    pub tol: f64,
    pub scale: Scale,
    pub train: TrainOptions,
    pub reference: Reference,
    /// Validation step; defaults to a thousandth of the data horizon.
    pub validation_dt: Option<f64>,
    /// Comparison set; defaults to the species of the first ladder model.
    pub comparison: Option<Vec<String>>,
    /// Species whose reactions are added to the last model, in order.
    pub augment: Vec<String>,
    /// Stop at the first threshold that passes `tol`.
    pub stop_at_pass: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kappa_ladder: DEFAULT_KAPPA_LADDER.to_vec(),
            tol: 0.1,
            scale: Scale::Log,
            train: TrainOptions::default(),
            reference: Reference::MeanField,
            validation_dt: None,
            comparison: None,
            augment: Vec::new(),
            stop_at_pass: true,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        if self.kappa_ladder.is_empty() {
            return Err(Error::Invalid("empty kappa ladder".into()));
        }
        if self.kappa_ladder.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return Err(Error::Invalid("every kappa must lie in (0, 1]".into()));
        }
        if self.kappa_ladder.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid("kappa ladder must be ascending".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid("TOL must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kappa: f64,
    /// Species added by augmentation, empty for ladder rows.
    pub augmented: Vec<String>,
    pub j_bar: usize,
    pub k_bar: usize,
    pub d_bar: usize,
    pub loss: f64,
    pub path_dist: f64,
    pub ss_dist: f64,
    pub pass: bool,
}

/// Everything produced for one reduced model.
#[derive(Debug, Clone)]
pub struct Stage {
    pub row: SummaryRow,
    pub model: ReducedModel,
    pub training: TrainingResult,
    pub report: ValidationReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub ranking: InformationRanking<f64>,
    pub blocks: FimBlocks<f64>,
    pub stages: Vec<Stage>,
    /// Index into `stages` of the first passing ladder model.
    pub selected: Option<usize>,
}

impl PipelineOutcome {
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.stages.iter().map(|s| s.row.clone()).collect()
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.rows())
    }

    pub fn summary_table(&self) -> String {
        summary_table(&self.rows())
    }
}

fn fit_and_check(
    net: &ReactionNetwork,
    data: &TimeSeries,
    maps: ReductionMaps,
    config: &PipelineConfig,
    comparison: &[String],
    kappa: f64,
    augmented: Vec<String>,
) -> Result<Stage> {
    let model = ReducedModel::build(net, maps)?;
    let loss_data = LossData::new(&model, net, &net.values, data)?;
    let training = train(&model, &loss_data, None, &config.train)?;
    let t_end = *data.times.last().expect("series is never empty");
    let opts = ValidationOptions {
        t_end,
        dt: config.validation_dt.unwrap_or(t_end / 1000.0),
        tol: config.tol,
        comparison: Some(comparison.to_vec()),
        reference: config.reference,
    };
    let mut report =
        validate_reduction(net, &net.values, &model, &training.theta_star, Some(data), &opts)?.report;
    report.loss_value = Some(training.loss_value);
    let row = SummaryRow {
        kappa,
        augmented,
        j_bar: model.num_reactions(),
        k_bar: model.num_parameters(),
        d_bar: model.num_species(),
        loss: training.loss_value,
        path_dist: report.path_dist,
        ss_dist: report.ss_dist,
        pass: report.pass,
    };
    Ok(Stage { row, model, training, report })
}

/// Information ranking on `data`, then reduce, fit and validate for each
/// threshold of the ladder, optionally augmenting the last model.
pub fn run_pipeline(net: &ReactionNetwork, data: &TimeSeries, config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.check()?;
    if data.times[0] != 0.0 {
        return Err(Error::Invalid("data must start at t = 0".into()));
    }
    let ranking = fim_diag_mean_field(net, &net.values, data, config.scale)?;
    let blocks = fim_blocks_mean_field(net, &net.values, data, config.scale)?;
    let mut stages: Vec<Stage> = Vec::new();
    let mut selected = None;
    let mut comparison = config.comparison.clone();
    for &kappa in &config.kappa_ladder {
        let p = ranking.select(kappa)?;
        let maps = ReductionMaps::from_parameters(net, &p, data)?;
        let o = comparison
            .get_or_insert_with(|| maps.pi.iter().map(|&i| net.species[i].clone()).collect())
            .clone();
        log::info!("kappa {kappa}: {} parameters", p.len());
        let stage = fit_and_check(net, data, maps, config, &o, kappa, Vec::new())?;
        let pass = stage.row.pass;
        stages.push(stage);
        if pass && selected.is_none() {
            selected = Some(stages.len() - 1);
            if config.stop_at_pass {
                break;
            }
        }
    }
    let o = comparison.unwrap_or_default();
    let mut augmented = Vec::new();
    for name in &config.augment {
        let last = stages.last().expect("ladder is never empty");
        let i = net.species_index(name).ok_or_else(|| Error::UnknownSpecies(name.clone()))?;
        let maps = last.model.maps.augment_with_species(net, i)?;
        augmented.push(name.clone());
        let kappa = last.row.kappa;
        let stage = fit_and_check(net, data, maps, config, &o, kappa, augmented.clone())?;
        stages.push(stage);
    }
    Ok(PipelineOutcome { ranking, blocks, stages, selected })
}

fn percent(kappa: f64) -> String {
    let v = (kappa * 100.0 * 1e6).round() / 1e6;
    format!("{v}")
}

fn label(row: &SummaryRow) -> String {
    let mut s = percent(row.kappa);
    for a in &row.augmented {
        s.push_str(" +");
        s.push_str(a);
    }
    s
}

pub const SUMMARY_HEADER: [&str; 7] = ["pFIM%", "J", "K", "d", "Loss", "path-dist", "SS-dist"];

/// `summary.csv`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = SUMMARY_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            label(r),
            r.j_bar,
            r.k_bar,
            r.d_bar,
            r.loss,
            r.path_dist,
            r.ss_dist
        ));
    }
    out
}

/// Aligned text rendering of the summary.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                label(r),
                r.j_bar.to_string(),
                r.k_bar.to_string(),
                r.d_bar.to_string(),
                format!("{:.6e}", r.loss),
                format!("{:.4}", r.path_dist),
                format!("{:.4}", r.ss_dist),
                if r.pass { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    let mut header: Vec<String> = SUMMARY_HEADER.iter().map(|s| s.to_string()).collect();
    header.push(String::new());
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |row: &[String]| {
        let parts: Vec<String> =
            row.iter().zip(&widths).map(|(s, &w)| format!("{s:>w$}")).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    for r in &cells {
        out.push_str(&line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_model;
    use crate::simulate::simulate_ode;

    fn sloppy() -> ReactionNetwork {
        // Two fast channels dominate; the slow leak and its species carry
        // almost no information.
        parse_model(
            r#"{"species": [{"name": "A", "initial": 10}, {"name": "B", "initial": 0}, {"name": "C", "initial": 0}],
                "parameters": [{"name": "k1", "value": 5}, {"name": "k2", "value": 4}, {"name": "leak", "value": 1e-4}],
                "reactions": [
                  {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"mass_action": "k1"}},
                  {"reactants": {"B": 1}, "products": {"A": 1}, "rate": {"mass_action": "k2"}},
                  {"reactants": {"B": 1}, "products": {"C": 1}, "rate": {"mass_action": "leak"}}
                ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn stops_at_first_passing_threshold() {
        let net = sloppy();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 5.0, 0.01).unwrap();
        let out = run_pipeline(&net, &ts, &PipelineConfig { tol: 1e-2, ..Default::default() }).unwrap();
        assert_eq!(out.stages.len(), 1);
        assert_eq!(out.selected, Some(0));
        let row = &out.stages[0].row;
        assert_eq!((row.j_bar, row.k_bar, row.d_bar), (2, 2, 2));
        assert!(row.loss < 1e-2, "{}", row.loss);
        assert!(row.pass);
    }

    #[test]
    fn identity_at_kappa_one() {
        let net = sloppy();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 5.0, 0.01).unwrap();
        let cfg = PipelineConfig { kappa_ladder: vec![1.0], tol: 1e-9, ..Default::default() };
        let out = run_pipeline(&net, &ts, &cfg).unwrap();
        let row = &out.stages[0].row;
        assert_eq!((row.j_bar, row.k_bar, row.d_bar), (3, 3, 3));
        assert!(row.loss < 1e-10 && row.path_dist < 1e-9 && row.ss_dist < 1e-9);
    }

    #[test]
    fn full_ladder_is_monotone_and_deterministic() {
        let net = sloppy();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 5.0, 0.01).unwrap();
        let cfg = PipelineConfig {
            kappa_ladder: vec![0.5, 0.9, 1.0],
            stop_at_pass: false,
            augment: vec!["B".into()],
            ..Default::default()
        };
        let a = run_pipeline(&net, &ts, &cfg).unwrap();
        let b = run_pipeline(&net, &ts, &cfg).unwrap();
        assert_eq!(a.summary_csv(), b.summary_csv());
        let rows = a.rows();
        assert_eq!(rows.len(), 4);
        assert!(rows[..3].windows(2).all(|w| w[0].k_bar <= w[1].k_bar));
        assert_eq!(rows[3].augmented, vec!["B".to_string()]);
        let csv = a.summary_csv();
        assert!(csv.starts_with("pFIM%,J,K,d,Loss,path-dist,SS-dist\n50,"));
        assert!(csv.contains("\n100 +B,"));
        let table = a.summary_table();
        assert_eq!(table.lines().count(), 5);
    }

    #[test]
    fn bad_config() {
        let net = sloppy();
        let ts = simulate_ode(&net, &net.values, &net.initial_state, 1.0, 0.1).unwrap();
        for cfg in [
            PipelineConfig { kappa_ladder: vec![], ..Default::default() },
            PipelineConfig { kappa_ladder: vec![0.9, 0.5], ..Default::default() },
            PipelineConfig { kappa_ladder: vec![1.5], ..Default::default() },
            PipelineConfig { tol: 0.0, ..Default::default() },
        ] {
            assert!(run_pipeline(&net, &ts, &cfg).is_err());
        }
    }

    #[test]
    fn percent_labels() {
        assert_eq!(percent(0.93), "93");
        assert_eq!(percent(0.955), "95.5");
        assert_eq!(percent(1.0), "100");
    }
}
