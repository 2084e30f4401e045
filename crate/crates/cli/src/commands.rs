use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ranker_core::config::{check_known_keys, Configurable, KeyValues, SYNTHETIC_KEYS, TRAIN_KEYS};
use ranker_core::experiments::{
    detect_boundaries, grid_search, successive_pair_outputs, sweep, GridSearchOptions, GridSpec,
    SyntheticProtocolConfig, PROTOCOL_KEYS,
};
use ranker_core::letor::{load_folds, parse_letor_file, FoldSpec, LoadOptions, NormalizationStats, ParseOptions};
use ranker_core::metrics::{evaluate_model, REPORT_CSV_HEADER};
use ranker_core::model::order_by_score;
use ranker_core::synthetic::{generate, SyntheticConfig};
use ranker_core::{train, Dataset, DirectRanker, TrainConfig};

use crate::args::{
    ConfigArgs, EvaluateArgs, GradeArgs, GridsearchArgs, ModelInput, PeaksArgs, RankArgs, SweepArgs, SynthArgs,
    TrainArgs,
};
use crate::manifest::{with_suffix, Manifest};

fn load_config(args: &ConfigArgs, manifest: &mut Manifest) -> Result<KeyValues> {
    let mut kv = match &args.config {
        Some(path) => {
            manifest.input("config", path)?;
            KeyValues::load(path).with_context(|| format!("cannot load config {}", path.display()))?
        }
        None => KeyValues::new(),
    };
    for (k, v) in &args.overrides {
        kv.set(k, v.clone());
    }
    Ok(kv)
}

fn parse_options(g: &GradeArgs) -> ParseOptions {
    ParseOptions {
        max_grade: (!g.no_grade_limit).then_some(g.max_grade),
    }
}

fn read_dataset(path: &Path, grades: &GradeArgs) -> Result<Dataset> {
    parse_letor_file(path, parse_options(grades)).with_context(|| format!("cannot read {}", path.display()))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn normalizer_path(model: &Path) -> PathBuf {
    with_suffix(model, "norm")
}

pub fn run_train(args: TrainArgs) -> Result<()> {
    let mut manifest = Manifest::start("train");
    let kv = load_config(&args.config, &mut manifest)?;
    check_known_keys(&kv, &[&|k| TRAIN_KEYS.contains(&k)])?;
    let mut config = TrainConfig::default();
    config.apply(&kv)?;
    if let Some(seed) = args.seed.seed {
        config.seed = seed;
    }
    config.validate()?;
    manifest.seed(config.seed);
    manifest.config("", &config.to_key_values());

    manifest.input("data", &args.data)?;
    let mut data = read_dataset(&args.data, &args.grades)?;
    if let Some(t) = args.binarize {
        data = data.binarize(t)?;
        manifest.setting("binarize", t);
    }
    if args.normalize {
        let stats = NormalizationStats::fit(&data)?;
        data = stats.apply(&data)?;
        let path = normalizer_path(&args.model);
        stats.save(&path)?;
        manifest.output("normalizer", &path);
    }

    let (model, log) = train(&data, &config)?;
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    model.save(&args.model)?;
    manifest.output("model", &args.model);
    if let Some(path) = &args.log {
        write_with(path, |w| log.write_csv(w))?;
        manifest.output("log", path);
    }
    if let Some(c) = log.final_cost() {
        println!("trained {} epochs, final mean cost {c:.6}", log.epochs.len());
    }
    manifest.finish(args.manifest.manifest.as_deref(), &args.model)?;
    Ok(())
}

/// Loads the model and the data it should see: normalized like the
/// training data and padded to the model's input width.
fn load_model_input(input: &ModelInput, manifest: &mut Manifest) -> Result<(DirectRanker, Dataset)> {
    manifest.input("model", &input.model)?;
    let model = DirectRanker::load(&input.model)?;
    manifest.input("data", &input.data)?;
    let mut data = read_dataset(&input.data, &input.grades)?;

    let norm = match &input.normalizer {
        Some(p) => Some(p.clone()),
        None if input.raw_features => None,
        None => Some(normalizer_path(&input.model)).filter(|p| p.exists()),
    };
    if data.feature_dim() < model.input_dim() {
        data = data.pad_features(model.input_dim())?;
    }
    if let Some(path) = norm {
        manifest.input("normalizer", &path)?;
        let stats = NormalizationStats::load(&path)?;
        data = stats.apply(&data)?;
    }
    if data.feature_dim() != model.input_dim() {
        bail!(
            "{} has {} features but the model expects {}",
            input.data.display(),
            data.feature_dim(),
            model.input_dim()
        );
    }
    Ok((model, data))
}

pub fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut manifest = Manifest::start("evaluate");
    let (model, data) = load_model_input(&args.input, &mut manifest)?;
    let metrics = &args.metrics.0;
    manifest.setting(
        "metrics",
        metrics.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.setting("map_threshold", args.map_threshold);

    let report = evaluate_model(&model, &data, metrics, args.map_threshold)?;
    write_with(&args.out, |w| {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
        report.write_aggregate_rows(w, &args.fold_id)
    })?;
    manifest.output("report", &args.out);
    if let Some(path) = &args.per_query {
        write_with(path, |w| {
            writeln!(w, "{REPORT_CSV_HEADER}")?;
            report.write_per_query_rows(w)
        })?;
        manifest.output("per_query", path);
    }
    for s in &report.summaries {
        match &s.estimate {
            Some(e) => println!(
                "{}: {:.4} ± {:.4} ({} queries, {} excluded)",
                s.metric,
                e.mean,
                e.stderr,
                s.n_used(),
                s.n_excluded()
            ),
            None => println!("{}: undefined on every query", s.metric),
        }
    }
    manifest.finish(args.manifest.manifest.as_deref(), &args.out)?;
    Ok(())
}

pub fn run_rank(args: RankArgs) -> Result<()> {
    let mut manifest = Manifest::start("rank");
    let (model, data) = load_model_input(&args.input, &mut manifest)?;
    write_with(&args.out, |w| {
        writeln!(w, "qid,line,rank,score")?;
        for q in data.queries() {
            let scores = model.scores(&q.docs).map_err(std::io::Error::other)?;
            for (rank, &i) in order_by_score(&scores).iter().enumerate() {
                writeln!(w, "{},{},{},{}", q.qid, q.docs[i].line_index, rank + 1, scores[i])?;
            }
        }
        Ok(())
    })?;
    manifest.output("ranking", &args.out);
    manifest.finish(args.manifest.manifest.as_deref(), &args.out)?;
    Ok(())
}

fn synthetic_config(kv: &KeyValues, seed: Option<u64>) -> Result<SyntheticConfig> {
    let mut config = SyntheticConfig::default();
    config.apply(kv)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

pub fn run_synth(args: SynthArgs) -> Result<()> {
    let mut manifest = Manifest::start("synth");
    let kv = load_config(&args.config, &mut manifest)?;
    check_known_keys(&kv, &[&|k| SYNTHETIC_KEYS.contains(&k)])?;
    let config = synthetic_config(&kv, args.seed.seed)?;
    manifest.seed(config.seed);
    manifest.config("", &config.to_key_values());

    let data = generate(&config)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let train_path = args.out_dir.join("train.txt");
    let test_path = args.out_dir.join("test.txt");
    let spec_path = args.out_dir.join("classes.csv");
    write_with(&train_path, |w| data.train.write_letor(w))?;
    write_with(&test_path, |w| data.test.write_letor(w))?;
    write_with(&spec_path, |w| data.spec.write_csv(w))?;
    manifest.output("train", &train_path);
    manifest.output("test", &test_path);
    manifest.output("classes", &spec_path);
    let default_manifest = args.out_dir.join("synth");
    manifest.finish(args.manifest.manifest.as_deref(), &default_manifest)?;
    Ok(())
}

pub fn run_sweep(args: SweepArgs) -> Result<()> {
    let mut manifest = Manifest::start("sweep");
    let kv = load_config(&args.config, &mut manifest)?;
    if kv.get("seed").is_some() {
        bail!("`seed` cannot be set in a sweep configuration; use --seed");
    }
    check_known_keys(
        &kv,
        &[&|k| SYNTHETIC_KEYS.contains(&k), &|k| TRAIN_KEYS.contains(&k), &|k| {
            PROTOCOL_KEYS.contains(&k)
        }],
    )?;
    let data = synthetic_config(&kv, None)?;
    let mut train_cfg = TrainConfig::synthetic(data.n_classes);
    train_cfg.apply(&kv)?;
    train_cfg.validate()?;
    let mut proto = SyntheticProtocolConfig::default();
    proto.apply(&kv)?;
    proto.validate()?;
    let seed = args.seed.seed.unwrap_or(0);

    let values = args
        .values
        .clone()
        .unwrap_or_else(|| args.variable.default_values().to_vec());
    manifest.seed(seed);
    manifest.setting("variable", args.variable.name());
    manifest.setting(
        "values",
        values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.config("data.", &data.to_key_values());
    manifest.config("train.", &train_cfg.to_key_values());
    manifest.config("protocol.", &proto.to_key_values());

    let report = sweep(args.variable, &values, &data, &train_cfg, &proto, seed)?;
    write_with(&args.out, |w| report.write_csv(w))?;
    manifest.output("sweep", &args.out);
    for p in &report.points {
        println!(
            "{} = {}: mu {:.4} ± {:.4}",
            args.variable.name(),
            p.value,
            p.mu,
            p.delta_mu
        );
    }
    manifest.finish(args.manifest.manifest.as_deref(), &args.out)?;
    Ok(())
}

pub fn run_gridsearch(args: GridsearchArgs) -> Result<()> {
    let mut manifest = Manifest::start("gridsearch");
    let kv = load_config(&args.config, &mut manifest)?;
    check_known_keys(&kv, &[&|k| TRAIN_KEYS.contains(&k)])?;
    let mut base = TrainConfig::default();
    base.apply(&kv)?;
    if let Some(seed) = args.seed.seed {
        base.seed = seed;
    }
    base.validate()?;
    let grid = match &args.grid {
        Some(path) => {
            manifest.input("grid", path)?;
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            GridSpec::parse(&text)?
        }
        None => GridSpec::default_letor(),
    };
    let opts = GridSearchOptions {
        metric: args.metric,
        internal_folds: args.internal_folds,
        binarize_train: (args.binarize > 0).then_some(args.binarize),
        map_threshold: args.map_threshold,
        seed: base.seed,
    };
    manifest.seed(base.seed);
    manifest.config("base.", &base.to_key_values());
    for (k, values) in grid.params() {
        manifest.setting(&format!("grid.{k}"), values.join(" ; "));
    }
    manifest.setting("metric", opts.metric);
    manifest.setting("internal_folds", opts.internal_folds);
    manifest.setting("binarize", args.binarize);
    manifest.setting("map_threshold", opts.map_threshold);
    manifest.setting("normalize", !args.no_normalize);
    manifest.setting("merge_validation", args.merge_validation);

    let specs = FoldSpec::standard_layout(&args.folds_dir, args.n_folds);
    for s in &specs {
        manifest.input(&format!("{}.train", s.id), &s.train)?;
        manifest.input(&format!("{}.test", s.id), &s.test)?;
        if args.merge_validation {
            if let Some(v) = &s.validation {
                manifest.input(&format!("{}.vali", s.id), v)?;
            }
        }
    }
    let load = LoadOptions {
        parse: parse_options(&args.grades),
        normalize: !args.no_normalize,
        merge_validation: args.merge_validation,
    };
    let folds = load_folds(&specs, &load)?;
    let report = grid_search(&folds, &base, &grid, &opts)?;

    write_with(&args.out, |w| report.write_csv(w))?;
    manifest.output("report", &args.out);
    if let Some(path) = &args.selection {
        write_with(path, |w| report.write_selection_csv(w, &grid))?;
        manifest.output("selection", path);
    }
    for f in report.folds.iter().filter(|f| f.flagged) {
        eprintln!("warning: {} undefined on the test split of {}", opts.metric, f.id);
    }
    for &m in &report.metrics {
        if let Ok(e) = report.cross_fold(m) {
            println!("{m}: {:.4} ± {:.4} over {} folds", e.mean, e.stderr, e.count);
        }
    }
    manifest.finish(args.manifest.manifest.as_deref(), &args.out)?;
    Ok(())
}

pub fn run_peaks(args: PeaksArgs) -> Result<()> {
    let mut manifest = Manifest::start("peaks");
    let (model, data) = load_model_input(&args.input, &mut manifest)?;
    let query = match args.qid {
        Some(q) => data.query(q).ok_or_else(|| anyhow!("query {q} not found"))?,
        None => data.queries().first().ok_or_else(|| anyhow!("no documents"))?,
    };
    let sorted = successive_pair_outputs(&model, &query.docs)?;
    let boundaries = detect_boundaries(&sorted.outputs, args.classes);
    manifest.setting("qid", query.qid);
    if let Some(k) = args.classes {
        manifest.setting("classes", k);
    }

    write_with(&args.out, |w| {
        writeln!(
            w,
            "position,line,next_line,grade,next_grade,output,detected,grade_change"
        )?;
        for (n, &o) in sorted.outputs.iter().enumerate() {
            let (a, b) = (&query.docs[sorted.order[n]], &query.docs[sorted.order[n + 1]]);
            writeln!(
                w,
                "{n},{},{},{},{},{o},{},{}",
                a.line_index,
                b.line_index,
                a.grade,
                b.grade,
                u8::from(boundaries.binary_search(&n).is_ok()),
                u8::from(a.grade != b.grade)
            )?;
        }
        Ok(())
    })?;
    manifest.output("peaks", &args.out);
    println!("qid {}: detected boundaries at {boundaries:?}", query.qid);
    manifest.finish(args.manifest.manifest.as_deref(), &args.out)?;
    Ok(())
}
