use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use backcompat_caja::{binned_mean_rewards, run_scripted_player, GameConfig, PlayResult, PlayerKind, UpdateKind};
use backcompat_core::curve::export_curve;
use backcompat_core::data::{generate_synthetic, read_csv, write_csv, SyntheticSpec, DEFAULT_WEIGHT_SCALE};
use backcompat_core::model_io::ModelFile;
use backcompat_core::stats::{mean, standard_error};
use backcompat_core::trainer::{references, Objective};
use backcompat_core::{
    auc_roc, compatibility_score, run_update_experiment, sweep_lambda, train, Classifier64, Dataset64,
    DissonanceKind, Error as CoreError, TrainConfig, UpdateExperiment,
};
use serde_json::json;

use crate::args::*;

/// Bad flag combinations found after parsing; exits with the usage code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Print the resolved configuration of a run to stderr.
fn echo(command: &str, config: serde_json::Value) {
    eprintln!("resolved config: {}", json!({ "command": command, "config": config }));
}

fn synthetic_spec(source: &str, o: &SyntheticArgs) -> Result<SyntheticSpec> {
    let mut spec = if source == "default" {
        SyntheticSpec::default()
    } else {
        let text = std::fs::read_to_string(source).with_context(|| format!("reading synthetic spec {source}"))?;
        serde_json::from_str(&text).with_context(|| format!("parsing synthetic spec {source}"))?
    };
    if let Some(d) = o.dim {
        if d != spec.dimensionality {
            spec.dimensionality = d;
            spec.true_weights = SyntheticSpec::graded_weights(d, DEFAULT_WEIGHT_SCALE);
        }
    }
    if let Some(n) = o.noise {
        spec.noise_rate = n;
    }
    if let Some(s) = o.size {
        spec.size = s;
    }
    if let Some(s) = o.data_seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn warn_rejected(path: &Path, rejected: &[backcompat_core::data::RejectedRow]) {
    if let Some(first) = rejected.first() {
        eprintln!(
            "warning: {}: skipped {} row(s) with unparseable features (first at line {}, column `{}`, value `{}`)",
            path.display(),
            rejected.len(),
            first.line,
            first.column,
            first.value
        );
    }
}

struct Loaded {
    data: Dataset64,
    id: String,
    description: serde_json::Value,
}

fn load_data(args: &DataArgs) -> Result<Loaded> {
    match (&args.data, &args.synthetic) {
        (Some(path), None) => {
            let table = read_csv(path, &args.label_column, args.features.as_deref())?;
            warn_rejected(path, &table.rejected);
            let data = table.standardized()?;
            Ok(Loaded {
                id: path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned()),
                description: json!({
                    "path": path,
                    "label_column": args.label_column,
                    "features": data.feature_names(),
                    "rows": data.len(),
                    "rejected_rows": table.rejected.len(),
                }),
                data,
            })
        }
        (None, Some(source)) => {
            let spec = synthetic_spec(source, &args.synthetic_overrides)?;
            Ok(Loaded {
                data: generate_synthetic(&spec)?,
                id: "synthetic".into(),
                description: json!({ "synthetic": spec }),
            })
        }
        (None, None) => Err(usage("one of --data or --synthetic is required")),
        (Some(_), Some(_)) => Err(usage("--data and --synthetic are mutually exclusive")),
    }
}

fn train_config(t: &TrainArgs, kind: KindArg, lambda: f64) -> Result<TrainConfig> {
    let config = TrainConfig {
        classifier: t.classifier.into(),
        hidden_size: t.hidden,
        learning_rate: t.lr,
        epochs: t.epochs,
        lambda_c: lambda,
        dissonance: kind.into(),
        seed: t.seed,
    };
    config.validate()?;
    Ok(config)
}

fn experiment(e: &ExperimentArgs) -> UpdateExperiment {
    UpdateExperiment {
        n1: e.n1,
        n2: e.n2,
        runs: e.runs,
        test_fraction: e.test_fraction,
        h2_draw: e.h2_draw.into(),
        h1_label_noise: e.h1_label_noise,
    }
}

pub fn train_cmd(cmd: TrainCmd) -> Result<()> {
    let config = train_config(&cmd.train, cmd.kind, cmd.lambda)?;
    let h1_file = cmd
        .h1
        .as_ref()
        .map(|p| ModelFile::load(p).with_context(|| format!("loading h1 model {}", p.display())))
        .transpose()?;
    if config.dissonance.needs_reference() && h1_file.is_none() {
        return Err(usage(format!("--kind {} needs --h1", config.dissonance)));
    }

    // With an h1, share its feature space: same columns, same standardization.
    let loaded = match (&h1_file, &cmd.data.data) {
        (Some(h1), Some(path)) => {
            let table = read_csv(path, &cmd.data.label_column, Some(&h1.feature_names))?;
            warn_rejected(path, &table.rejected);
            let data = match &h1.standardization {
                Some(stats) => table.standardized_with(stats)?,
                None => table.unscaled()?,
            };
            Loaded {
                id: "data".into(),
                description: json!({ "path": path, "rows": data.len(), "standardization": "from h1" }),
                data,
            }
        }
        _ => load_data(&cmd.data)?,
    };
    let data = loaded.data;
    let h1: Option<Classifier64> = h1_file.as_ref().map(|f| f.to_classifier()).transpose()?;
    echo(
        "train",
        json!({ "data": loaded.description, "train": config, "h1": cmd.h1, "out": cmd.out }),
    );

    let model = train(&data, &config, h1.as_ref())?;
    let refs = h1.as_ref().map(|h| references(h, &data)).transpose()?;
    let loss = Objective::new(&data, config.dissonance, config.lambda_c, refs.as_deref())?.loss(&model)?;
    ModelFile::from_classifier(&model, data.feature_names().to_vec(), data.standardization().cloned())
        .save(&cmd.out)?;

    println!("examples   {}", data.len());
    println!("loss       {loss:.6}");
    println!("train AUC  {:.4}", auc_roc(&model, &data)?);
    if let Some(h1) = &h1 {
        match compatibility_score(h1, &model, &data) {
            Ok(c) => println!("C(h1,h2)   {c:.4}"),
            Err(CoreError::CompatibilityUndefined) => println!("C(h1,h2)   undefined"),
            Err(e) => return Err(e.into()),
        }
    }
    println!("saved      {}", cmd.out.display());
    Ok(())
}

fn load_for(model: &ModelFile, path: &Path, label_column: &str) -> Result<Dataset64> {
    let table = read_csv(path, label_column, Some(&model.feature_names))?;
    warn_rejected(path, &table.rejected);
    Ok(match &model.standardization {
        Some(stats) => table.standardized_with(stats)?,
        None => table.unscaled()?,
    })
}

pub fn compat_cmd(cmd: CompatCmd) -> Result<()> {
    let f1 = ModelFile::load(&cmd.h1)?;
    let f2 = ModelFile::load(&cmd.h2)?;
    echo(
        "compat",
        json!({ "h1": cmd.h1, "h2": cmd.h2, "data": cmd.data, "label_column": cmd.label_column }),
    );
    let h1: Classifier64 = f1.to_classifier()?;
    let h2: Classifier64 = f2.to_classifier()?;
    let d1 = load_for(&f1, &cmd.data, &cmd.label_column)?;
    let d2 = load_for(&f2, &cmd.data, &cmd.label_column)?;
    if d1.labels().ne(d2.labels()) {
        bail!("the two models keep different rows of {}", cmd.data.display());
    }
    let auc1 = auc_roc(&h1, &d1)?;
    let auc2 = auc_roc(&h2, &d2)?;

    // C over examples where each model reads its own feature view.
    let mut h1_correct = 0usize;
    let mut both = 0usize;
    for (a, b) in d1.examples().iter().zip(d2.examples()) {
        use backcompat_core::Model;
        if h1.recommend(&a.features)? == a.label {
            h1_correct += 1;
            if h2.recommend(&b.features)? == b.label {
                both += 1;
            }
        }
    }
    if h1_correct == 0 {
        bail!("compatibility is undefined: h1 is correct on no example of {}", cmd.data.display());
    }
    let c = both as f64 / h1_correct as f64;
    println!("{:<8}  {:<8}  {:<8}", "ROC h1", "ROC h2", "C(h1,h2)");
    println!("{auc1:<8.4}  {auc2:<8.4}  {c:<8.4}");
    Ok(())
}

pub fn update_exp_cmd(cmd: UpdateExpCmd) -> Result<()> {
    let loaded = load_data(&cmd.data)?;
    let config = train_config(&cmd.train, cmd.kind, cmd.lambda)?;
    let exp = experiment(&cmd.experiment);
    echo(
        "update-exp",
        json!({ "data": loaded.description, "train": config, "experiment": exp, "out": cmd.out }),
    );
    let summary = run_update_experiment(&loaded.data, &exp, &config)?;
    println!("{:<8}  {:<8}  {:<8}  runs", "ROC h1", "ROC h2", "C(h1,h2)");
    println!(
        "{:<8.4}  {:<8.4}  {:<8.4}  {}",
        summary.mean_auc_h1,
        summary.mean_auc_h2,
        summary.mean_compatibility,
        summary.runs.len()
    );
    if let Some(out) = &cmd.out {
        let text = serde_json::to_string_pretty(&summary)?;
        std::fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn sweep_cmd(cmd: SweepCmd) -> Result<()> {
    let loaded = load_data(&cmd.data)?;
    let config = train_config(&cmd.train, cmd.kind, 0.0)?;
    let exp = experiment(&cmd.experiment);
    echo(
        "sweep",
        json!({
            "data": loaded.description,
            "train": config,
            "experiment": exp,
            "grid": cmd.grid,
            "out": cmd.out,
        }),
    );
    if config.dissonance == DissonanceKind::None && cmd.grid.iter().any(|&l| l != 0.0) {
        eprintln!("warning: --kind none ignores lambda; every grid point trains the plain loss");
    }
    let result = sweep_lambda(&loaded.data, &cmd.grid, &exp, &config, &loaded.id)?;
    println!("{:>8}  {:<8}  {:<8}  runs", "lambda_c", "AUC h2", "C(h1,h2)");
    for p in result.curve() {
        println!(
            "{:>8}  {:<8.4}  {:<8.4}  {}",
            p.lambda_c, p.mean_auc_h2, p.mean_compatibility, p.runs
        );
    }
    if let Some(out) = &cmd.out {
        export_curve(&result, out)?;
    }
    Ok(())
}

pub fn simulate_cmd(cmd: SimulateCmd) -> Result<()> {
    if cmd.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    if cmd.bin == 0 {
        return Err(usage("--bin must be at least 1"));
    }
    let base = match &cmd.config {
        Some(path) => backcompat_service::load_default_config(Some(path))?,
        None => GameConfig::default(),
    };
    let player: PlayerKind = cmd.player.into();
    let updates: Vec<UpdateKind> = cmd.update.iter().map(|&u| u.into()).collect();
    echo(
        "simulate",
        json!({
            "config": base,
            "updates": updates,
            "player": player,
            "seeds": cmd.seeds,
            "first_seed": cmd.seed,
            "bin": cmd.bin,
            "out": cmd.out,
            "scores": cmd.scores,
        }),
    );

    let mut conditions: Vec<(UpdateKind, Vec<PlayResult>)> = Vec::new();
    for &update in &updates {
        let results = (0..cmd.seeds as u64)
            .map(|i| {
                let config = base.clone().with_update(update).with_seed(cmd.seed + i);
                run_scripted_player(&config, player)
            })
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("simulating the {update} condition"))?;
        conditions.push((update, results));
    }

    println!(
        "{:<13} {:<13} {:>8} {:>10} {:>9} {:>10} {:>11}",
        "update", "player", "sessions", "mean score", "std err", "pre-update", "post-update"
    );
    for (update, results) in &conditions {
        let scores: Vec<f64> = results.iter().map(|r| r.score.dollars()).collect();
        let pre: Vec<f64> = results.iter().map(|r| r.pre_update_score.dollars()).collect();
        let post: Vec<f64> = results.iter().map(|r| r.post_update_score.dollars()).collect();
        let se = if scores.len() > 1 { standard_error(&scores) } else { 0.0 };
        println!(
            "{:<13} {:<13} {:>8} {:>10.4} {:>9.4} {:>10.4} {:>11.4}",
            update.name(),
            player.name(),
            results.len(),
            mean(&scores),
            se,
            mean(&pre),
            mean(&post)
        );
    }

    let binned: Vec<(UpdateKind, Vec<backcompat_caja::RewardBin>)> = conditions
        .iter()
        .map(|(u, results)| {
            let traces: Vec<_> = results.iter().map(|r| r.trace.clone()).collect();
            (*u, binned_mean_rewards(&traces, cmd.bin))
        })
        .collect();
    println!();
    print!("{:<9}", "cycles");
    for (u, _) in &binned {
        print!(" {:>13}", u.name());
    }
    println!();
    if let Some((_, first)) = binned.first() {
        for (i, bin) in first.iter().enumerate() {
            print!("{:<9}", format!("{}-{}", bin.first_cycle, bin.last_cycle));
            for (_, bins) in &binned {
                print!(" {:>13.4}", bins[i].mean_reward);
            }
            println!();
        }
    }

    if let Some(out) = &cmd.out {
        write_bins(out, player, &binned)?;
    }
    if let Some(path) = &cmd.scores {
        write_scores(path, &conditions)?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))
}

fn write_bins(
    path: &Path,
    player: PlayerKind,
    binned: &[(UpdateKind, Vec<backcompat_caja::RewardBin>)],
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["update_kind", "player", "first_cycle", "last_cycle", "mean_reward"])?;
    for (u, bins) in binned {
        for b in bins {
            w.write_record([
                u.name().to_string(),
                player.name().to_string(),
                b.first_cycle.to_string(),
                b.last_cycle.to_string(),
                format!("{:.6}", b.mean_reward),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_scores(path: &Path, conditions: &[(UpdateKind, Vec<PlayResult>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["update_kind", "player", "seed", "score", "pre_update_score", "post_update_score"])?;
    for (u, results) in conditions {
        for r in results {
            w.write_record([
                u.name().to_string(),
                r.player.name().to_string(),
                r.seed.to_string(),
                r.score.to_string(),
                r.pre_update_score.to_string(),
                r.post_update_score.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn serve_cmd(cmd: ServeCmd) -> Result<()> {
    echo(
        "serve",
        json!({ "listen": cmd.listen, "data_dir": cmd.data_dir, "default_config": cmd.default_config }),
    );
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(backcompat_service::serve(backcompat_service::ServiceConfig {
        listen: cmd.listen,
        data_dir: cmd.data_dir,
        default_config: cmd.default_config,
    }))?;
    Ok(())
}

pub fn gen_data_cmd(cmd: GenDataCmd) -> Result<()> {
    let spec = synthetic_spec(&cmd.synthetic, &cmd.overrides)?;
    echo("gen-data", json!({ "synthetic": spec, "out": cmd.out }));
    let data: Dataset64 = generate_synthetic(&spec)?;
    write_csv(&data, &cmd.out)?;
    println!("wrote {} rows x {} features to {}", data.len(), data.dim(), cmd.out.display());
    Ok(())
}
