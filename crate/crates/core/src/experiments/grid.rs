use std::io::Write;

use rand::seq::SliceRandom;

use crate::config::{Configurable, KeyValues, TRAIN_KEYS};
use crate::error::{Error, Result};
use crate::letor::{Dataset, Fold};
use crate::metrics::{evaluate_model, mean_metric, MeanEstimate, Metric, MetricReport};
use crate::rng::{substream, tag};
use crate::training::{train, TrainConfig};

/// Named hyperparameters with candidate values. Points are enumerated as the
/// cartesian product, the first-listed parameter varying slowest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GridSpec {
    params: Vec<(String, Vec<String>)>,
}

impl GridSpec {
    pub fn new() -> Self {
        GridSpec::default()
    }

    /// Adds a parameter. Keys are training keys (see
    /// [`TRAIN_KEYS`](crate::config::TRAIN_KEYS)).
    pub fn with(mut self, key: &str, values: &[&str]) -> Result<Self> {
        self.push(key, values.iter().map(|v| v.to_string()).collect())?;
        Ok(self)
    }

    fn push(&mut self, key: &str, values: Vec<String>) -> Result<()> {
        if !TRAIN_KEYS.contains(&key) {
            return Err(Error::invalid(format!("`{key}` is not a training parameter")));
        }
        if values.is_empty() || values.iter().any(|v| v.is_empty()) {
            return Err(Error::invalid(format!("grid parameter `{key}` has no values")));
        }
        if self.params.iter().any(|(k, _)| k == key) {
            return Err(Error::invalid(format!("grid parameter `{key}` listed twice")));
        }
        self.params.push((key.to_string(), values));
        Ok(())
    }

    /// Parses `key = v1 ; v2 ; ...` lines (a key-value file whose values
    /// are `;`-separated candidate lists).
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let mut grid = GridSpec::new();
        for (k, v) in kv.iter() {
            grid.push(k, v.split(';').map(|s| s.trim().to_string()).collect())?;
        }
        Ok(grid)
    }

    /// Grid used for the LETOR benchmarks when none is given.
    pub fn default_letor() -> Self {
        GridSpec::new()
            .with("hidden_sizes", &["64", "128,64"])
            .and_then(|g| g.with("lr", &["1e-3", "1e-4"]))
            .and_then(|g| g.with("epochs", &["20", "50"]))
            .and_then(|g| g.with("batch_size", &["64", "128"]))
            .and_then(|g| g.with("cost", &["cross_entropy"]))
            .expect("static grid is valid")
    }

    pub fn params(&self) -> &[(String, Vec<String>)] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Every grid point as key-value overrides.
    pub fn points(&self) -> Vec<KeyValues> {
        let mut points = vec![KeyValues::new()];
        for (key, values) in &self.params {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.set(key, v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// `base` with every grid point applied.
    pub fn configs(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        if self.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        self.points()
            .iter()
            .map(|p| {
                let mut c = base.clone();
                c.apply(p)?;
                c.validate()?;
                Ok(c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearchOptions {
    /// Metric the selection maximizes.
    pub metric: Metric,
    pub internal_folds: usize,
    /// Grades are binarized at this threshold for training; `None` trains on
    /// the original grades.
    pub binarize_train: Option<u32>,
    /// Relevance threshold for MAP.
    pub map_threshold: u32,
    /// Seed of the internal query split.
    pub seed: u64,
}

impl Default for GridSearchOptions {
    fn default() -> Self {
        GridSearchOptions {
            metric: Metric::Ndcg(10),
            internal_folds: 5,
            binarize_train: Some(1),
            map_threshold: 1,
            seed: 0,
        }
    }
}

fn training_view(data: &Dataset, opts: &GridSearchOptions) -> Result<Dataset> {
    match opts.binarize_train {
        Some(t) => data.binarize(t),
        None => Ok(data.clone()),
    }
}

/// Splits query indices into `k` groups after a seeded shuffle.
fn internal_split(n_queries: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n_queries).collect();
    idx.shuffle(&mut substream(seed, tag::CV_SPLIT));
    let mut groups = vec![Vec::new(); k];
    for (i, q) in idx.into_iter().enumerate() {
        groups[i % k].push(q);
    }
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups
}

/// Mean of the target metric over internal CV folds of `train_split`.
/// `None` when the metric is undefined on every held-out part.
pub fn internal_cv_score(train_split: &Dataset, config: &TrainConfig, opts: &GridSearchOptions) -> Result<Option<f64>> {
    let k = opts.internal_folds;
    if k < 2 {
        return Err(Error::invalid("internal cross-validation needs >= 2 folds"));
    }
    if train_split.num_queries() < k {
        return Err(Error::invalid(format!(
            "{} queries cannot be split into {k} internal folds",
            train_split.num_queries()
        )));
    }
    let groups = internal_split(train_split.num_queries(), k, opts.seed);
    let mut fold_means = Vec::with_capacity(k);
    for held in 0..k {
        let fit_idx: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != held)
            .flat_map(|(_, q)| q.iter().copied())
            .collect();
        let fit = training_view(&train_split.subset(&fit_idx), opts)?;
        let eval = train_split.subset(&groups[held]);
        let (model, _) = train(&fit, config)?;
        let report = evaluate_model(&model, &eval, &[opts.metric], opts.map_threshold)?;
        if let Some(e) = report.summaries[0].estimate {
            fold_means.push(e.mean);
        }
    }
    Ok(mean_metric(&fold_means).ok().map(|e| e.mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: usize,
    pub config: TrainConfig,
    /// Internal CV score per grid point; empty when the grid has a single
    /// point and no selection was necessary.
    pub scores: Vec<Option<f64>>,
}

/// Picks the grid point with the best internal CV score on the training
/// split. Ties go to the first-listed point. Only the training split is
/// seen here.
pub fn select_config(
    train_split: &Dataset,
    base: &TrainConfig,
    grid: &GridSpec,
    opts: &GridSearchOptions,
) -> Result<Selection> {
    let configs = grid.configs(base)?;
    if configs.len() == 1 {
        return Ok(Selection {
            best: 0,
            config: configs.into_iter().next().expect("one config"),
            scores: Vec::new(),
        });
    }
    let scores = configs
        .iter()
        .map(|c| internal_cv_score(train_split, c, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if scores[best].is_none_or(|b| *s > b) {
                best = i;
            }
        }
    }
    Ok(Selection {
        best,
        config: configs[best].clone(),
        scores,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub id: String,
    pub selection: Selection,
    /// Test-split metrics of the model retrained on the whole training split.
    pub report: MetricReport,
    /// The target metric was undefined on this fold's test split.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchReport {
    pub folds: Vec<FoldResult>,
    /// Metrics reported per fold (NDCG@10, MAP, plus the target if different).
    pub metrics: Vec<Metric>,
}

impl GridSearchReport {
    /// Mean and standard error of `metric` over the folds where it is
    /// defined.
    pub fn cross_fold(&self, metric: Metric) -> Result<MeanEstimate> {
        let means: Vec<f64> = self
            .folds
            .iter()
            .filter_map(|f| f.report.get(metric).and_then(|s| s.estimate).map(|e| e.mean))
            .collect();
        mean_metric(&means)
    }

    /// Report CSV: one row per fold and metric, then a `mean` row per metric
    /// whose counts are folds used / folds without a defined value.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", crate::metrics::REPORT_CSV_HEADER)?;
        for f in &self.folds {
            f.report.write_aggregate_rows(out, &f.id)?;
        }
        for &m in &self.metrics {
            let k = m.cutoff().map(|k| k.to_string()).unwrap_or_default();
            match self.cross_fold(m) {
                Ok(e) => writeln!(
                    out,
                    "mean,{},{k},{},{},{},{}",
                    m.name(),
                    e.mean,
                    e.stderr,
                    e.count,
                    self.folds.len() - e.count
                )?,
                Err(_) => writeln!(out, "mean,{},{k},,,0,{}", m.name(), self.folds.len())?,
            }
        }
        Ok(())
    }

    /// `fold,point,internal_score,settings` with settings as `key=value`
    /// pairs joined by `;`.
    pub fn write_selection_csv<W: Write>(&self, out: &mut W, grid: &GridSpec) -> std::io::Result<()> {
        writeln!(out, "fold,point,internal_score,settings")?;
        let points = grid.points();
        for f in &self.folds {
            let s = &f.selection;
            let score = s
                .scores
                .get(s.best)
                .copied()
                .flatten()
                .map(|v| v.to_string())
                .unwrap_or_default();
            let settings: Vec<String> = points
                .get(s.best)
                .map(|p| p.iter().map(|(k, v)| format!("{k}={v}")).collect())
                .unwrap_or_default();
            writeln!(out, "{},{},{score},{}", f.id, s.best, settings.join(";"))?;
        }
        Ok(())
    }
}

/// Nested cross-validation over predefined folds: select on each fold's
/// training split by internal CV, retrain the winner on the whole training
/// split, score it on the fold's test split.
pub fn grid_search(
    folds: &[Fold],
    base: &TrainConfig,
    grid: &GridSpec,
    opts: &GridSearchOptions,
) -> Result<GridSearchReport> {
    if grid.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    let mut metrics = vec![Metric::Ndcg(10), Metric::Map];
    if !metrics.contains(&opts.metric) {
        metrics.push(opts.metric);
    }
    let mut results = Vec::with_capacity(folds.len());
    for fold in folds {
        let selection = select_config(&fold.train, base, grid, opts)?;
        let (model, _) = train(&training_view(&fold.train, opts)?, &selection.config)?;
        let report = evaluate_model(&model, &fold.test, &metrics, opts.map_threshold)?;
        let flagged = report.get(opts.metric).is_none_or(|s| s.estimate.is_none());
        results.push(FoldResult {
            id: fold.id.clone(),
            selection,
            report,
            flagged,
        });
    }
    Ok(GridSearchReport {
        folds: results,
        metrics,
    })
}
