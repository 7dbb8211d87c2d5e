use std::path::Path;

use anyhow::{bail, Context, Result};
use rnred::fim::{fim_blocks_mean_field, fim_diag_mean_field, fim_diag_stochastic, FimReport};
use rnred::reduce::ReducedFile;
use rnred::simulate::{
    kurtz_scale, simulate, simulate_ensemble, EnsembleManifest, SeriesKind, MANIFEST_SCHEMA_VERSION,
    RNG_ALGORITHM,
};
use rnred::train::FittedFile;
use rnred::validate::{bootstrap_time_average, plot_data_csv, validate_reduction, ValidationOptions};
use rnred::{
    run_pipeline, LossData, Method, Optimizer, PipelineConfig, ReactionNetwork, ReducedModel,
    ReductionMaps, Reference, Scale, TimeSeries, TrainOptions,
};

use crate::io::{
    align_series, ensure_dir, load_ensemble, load_model, load_series, member_file, provenance,
    read_json, sha256_hex, write_json, write_text,
};
use crate::{
    usage, BootstrapArgs, FimArgs, MethodName, OptimizerName, PipelineArgs, ReduceArgs,
    ReferenceName, SimulateArgs, TrainArgs, TrainOpts, ValidateArgs,
};

fn method(name: MethodName, dt: Option<f64>) -> Method {
    let step = || dt.unwrap_or_else(|| usage(format!("--dt is required for --method {name:?}").to_lowercase()));
    match name {
        MethodName::Ode => Method::Ode { dt: step() },
        MethodName::Ssa => Method::Ssa,
        MethodName::Tau => Method::Tau { dt: step() },
        MethodName::Cle => Method::Cle { dt: step() },
    }
}

fn train_options(o: &TrainOpts, tol: f64) -> TrainOptions {
    TrainOptions {
        optimizer: match o.optimizer {
            OptimizerName::NelderMead => Optimizer::NelderMead,
            OptimizerName::Gd => Optimizer::GradientDescent,
        },
        lambda: o.lambda,
        max_iter: o.max_iter,
        tol,
        full_loss: o.full_loss,
        ..TrainOptions::default()
    }
}

fn reference(r: ReferenceName) -> Reference {
    match r {
        ReferenceName::MeanField => Reference::MeanField,
        ReferenceName::Data => Reference::Data,
    }
}

fn scale(natural: bool) -> Scale {
    if natural {
        Scale::Natural
    } else {
        Scale::Log
    }
}

fn network_hash(net: &ReactionNetwork) -> String {
    sha256_hex(net.to_json_string().as_bytes())
}

pub fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let mut net = load_model(&a.model)?;
    if let Some(n) = a.kurtz_n {
        net = kurtz_scale(&net, n)?;
    }
    let m = method(a.method, a.dt);
    ensure_dir(&a.out)?;
    let (c, x0) = (net.values.clone(), net.initial_state.clone());
    match a.ensemble {
        None => {
            let ts = simulate(&net, &c, &x0, m, a.t_end, a.seed)?;
            if ts.meta.clipped > 0 {
                log::warn!("{} negative populations clipped to zero", ts.meta.clipped);
            }
            write_text(&a.out.join("series.csv"), &ts.to_csv())?;
        }
        Some(count) => {
            let ens = simulate_ensemble(&net, &c, &x0, m, a.t_end, count, a.seed)?;
            let mut members = Vec::with_capacity(ens.len());
            for (i, ts) in ens.members.iter().enumerate() {
                let name = member_file(i);
                write_text(&a.out.join(&name), &ts.to_csv())?;
                members.push(name);
            }
            let manifest = EnsembleManifest {
                schema_version: MANIFEST_SCHEMA_VERSION,
                method: m,
                t_end: a.t_end,
                base_seed: a.seed,
                seeds: ens.seeds.clone(),
                rng: RNG_ALGORITHM.to_string(),
                kurtz_n: a.kurtz_n,
                parameters_sha256: network_hash(&net),
                members,
                clipped: ens.members.iter().map(|t| t.meta.clipped).collect(),
            };
            write_json(&a.out.join("manifest.json"), &manifest)?;
        }
    }
    Ok(())
}

pub fn fim(a: &FimArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let sc = scale(a.natural_scale);
    let report = match (&a.data, &a.stochastic) {
        (_, Some(manifest)) => {
            let manifest_head: EnsembleManifest = read_json(manifest)?;
            let net = match manifest_head.kurtz_n {
                Some(n) => kurtz_scale(&net, n)?,
                None => net,
            };
            if manifest_head.parameters_sha256 != network_hash(&net) {
                bail!("ensemble {} was simulated from a different model", manifest.display());
            }
            let (_, ens) = load_ensemble(manifest, &net)?;
            let ranking = fim_diag_stochastic(&net, &net.values, &ens, sc)?;
            FimReport::new(&net, &ranking, None)
        }
        (Some(data), None) => {
            let ts = load_series(data, &net, SeriesKind::External)?;
            let ranking = fim_diag_mean_field(&net, &net.values, &ts, sc)?;
            let blocks = fim_blocks_mean_field(&net, &net.values, &ts, sc)?;
            FimReport::new(&net, &ranking, Some(&blocks))
        }
        (None, None) => usage("one of --data or --stochastic is required"),
    };
    ensure_dir(&a.out)?;
    write_json(&a.out.join("fim.json"), &report)
}

pub fn reduce(a: &ReduceArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let report: FimReport = read_json(&a.fim)?;
    if report.parameters != net.parameters {
        bail!("{} ranks a different parameter set than the model", a.fim.display());
    }
    let p = report.ranking().select(a.kappa)?;
    let ts = load_series(&a.data, &net, SeriesKind::External)?;
    let maps = ReductionMaps::from_parameters(&net, &p, &ts)?.with_provenance(provenance(&a.data)?);
    let model = ReducedModel::build(&net, maps)?;
    println!(
        "J={} K={} d={}",
        model.num_reactions(),
        model.num_parameters(),
        model.num_species()
    );
    ensure_dir(&a.out)?;
    write_json(&a.out.join("reduced.json"), &model.to_file())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let file: ReducedFile = read_json(&a.reduced)?;
    let model = ReducedModel::from_file(&file, &net)?;
    let ts = load_series(&a.data, &net, SeriesKind::External)?;
    let data = LossData::new(&model, &net, &net.values, &ts)?;
    let result = rnred::train::train(&model, &data, None, &train_options(&a.opts, a.tol))?;
    println!("loss={:e} converged={}", result.loss_value, result.converged);
    ensure_dir(&a.out)?;
    write_json(&a.out.join("fitted.json"), &FittedFile::new(&model, result)?)
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let fitted: FittedFile = read_json(&a.fitted)?;
    let model = ReducedModel::from_file(&fitted.reduced, &net)?;
    let data = a
        .data
        .as_deref()
        .map(|p| load_series(p, &net, SeriesKind::External))
        .transpose()?;
    let reference = reference(a.reference);
    if reference == Reference::Data && data.is_none() {
        usage("--reference data needs --data");
    }
    let t_end = match (a.t_end, &data) {
        (Some(t), _) => t,
        (None, Some(ts)) => *ts.times.last().expect("series is never empty"),
        (None, None) => usage("--t-end is required without --data"),
    };
    let opts = ValidationOptions {
        t_end,
        dt: a.dt.unwrap_or(t_end / 1000.0),
        tol: a.tol,
        comparison: a.species_set.clone(),
        reference,
    };
    let run = validate_reduction(&net, &net.values, &model, &fitted.training.theta_star, data.as_ref(), &opts)?;
    let mut report = run.report;
    report.loss_value = Some(fitted.training.loss_value);
    println!(
        "path-dist={:e} SS-dist={:e} {}",
        report.path_dist,
        report.ss_dist,
        if report.pass { "pass" } else { "fail" }
    );
    ensure_dir(&a.out)?;
    if a.emit_plot_data {
        let csv = plot_data_csv(&run.full, &run.reduced, &report.comparison_set)?;
        write_text(&a.out.join("plot.csv"), &csv)?;
    }
    write_json(&a.out.join("report.json"), &report)
}

pub fn bootstrap(a: &BootstrapArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let head: EnsembleManifest = read_json(&a.manifest)?;
    let net = match head.kurtz_n {
        Some(n) => kurtz_scale(&net, n)?,
        None => net,
    };
    let (_, ens) = load_ensemble(&a.manifest, &net)?;
    let summary = bootstrap_time_average(&ens, a.resamples, a.seed, a.burn_in)?;
    let mut csv = String::from("member");
    for s in &summary.species {
        csv.push(',');
        csv.push_str(s);
    }
    csv.push('\n');
    for (m, row) in summary.trajectory_averages.iter().enumerate() {
        csv.push_str(&m.to_string());
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    for (i, s) in summary.species.iter().enumerate() {
        println!("{s}: mean={} CI=[{}, {}]", summary.mean[i], summary.lower[i], summary.upper[i]);
    }
    ensure_dir(&a.out)?;
    write_text(&a.out.join("trajectory_averages.csv"), &csv)?;
    write_json(&a.out.join("bootstrap.json"), &summary)
}

fn pipeline_data(a: &PipelineArgs, net: &ReactionNetwork) -> Result<(TimeSeries, bool)> {
    if let Some(path) = &a.data {
        return Ok((load_series(path, net, SeriesKind::External)?, false));
    }
    let t_end = a.t_end.unwrap_or_else(|| usage("--t-end is required without --data"));
    let m = method(a.method, a.dt);
    let ts = simulate(net, &net.values, &net.initial_state, m, t_end, a.seed)
        .context("simulating the full model")?;
    Ok((align_series(ts, net)?, true))
}

pub fn pipeline(a: &PipelineArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let (data, simulated) = pipeline_data(a, &net)?;
    let config = PipelineConfig {
        kappa_ladder: a.kappa_ladder.clone().unwrap_or_else(|| PipelineConfig::default().kappa_ladder),
        tol: a.tol,
        scale: scale(a.natural_scale),
        train: train_options(&a.train, a.train_tol),
        reference: reference(a.reference),
        validation_dt: a.validation_dt,
        comparison: a.species_set.clone(),
        augment: a.augment.clone(),
        stop_at_pass: !a.full_ladder,
    };
    if let Err(e) = config.check() {
        usage(e);
    }
    let outcome = run_pipeline(&net, &data, &config)?;

    ensure_dir(&a.out)?;
    if simulated {
        write_text(&a.out.join("data.csv"), &data.to_csv())?;
    }
    write_json(&a.out.join("fim.json"), &FimReport::new(&net, &outcome.ranking, Some(&outcome.blocks)))?;
    for (i, stage) in outcome.stages.iter().enumerate() {
        let dir = a.out.join(format!("stage_{i:02}"));
        ensure_dir(&dir)?;
        write_stage(&dir, stage)?;
    }
    let table = outcome.summary_table();
    write_text(&a.out.join("summary.csv"), &outcome.summary_csv())?;
    write_text(&a.out.join("summary.txt"), &table)?;
    print!("{table}");
    match outcome.selected {
        Some(i) => {
            println!("selected stage_{i:02}");
            Ok(())
        }
        None => bail!("no threshold in the ladder met TOL = {}", a.tol),
    }
}

fn write_stage(dir: &Path, stage: &rnred::pipeline::Stage) -> Result<()> {
    write_json(&dir.join("reduced.json"), &stage.model.to_file())?;
    write_json(&dir.join("fitted.json"), &FittedFile::new(&stage.model, stage.training.clone())?)?;
    write_json(&dir.join("report.json"), &stage.report)
}
