//! DCG/NDCG@k, precision@k, average precision and MAP.
//!
//! Queries on which a metric is undefined (no relevant document, so the
//! ideal DCG or the relevant count is zero) are *excluded*: they come back
//! as `None` and are counted separately instead of contributing zeros.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::letor::Dataset;
use crate::model::{order_by_score, DirectRanker};

/// Relevance grades of one query, in the order a model ranked them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedQuery(Vec<u32>);

impl RankedQuery {
    pub fn new(grades: Vec<u32>) -> Result<Self> {
        if grades.is_empty() {
            return Err(Error::invalid("ranked query is empty"));
        }
        Ok(RankedQuery(grades))
    }

    /// Grades permuted by `order` (indices into `grades`).
    pub fn from_order(grades: &[u32], order: &[usize]) -> Result<Self> {
        RankedQuery::new(order.iter().map(|&i| grades[i]).collect())
    }

    pub fn grades(&self) -> &[u32] {
        &self.0
    }

    pub fn dcg_at(&self, k: usize) -> Result<f64> {
        dcg_at_k(&self.0, k)
    }

    pub fn ndcg_at(&self, k: usize) -> Result<Option<f64>> {
        ndcg_at_k(&self.0, k)
    }

    pub fn average_precision(&self) -> Result<Option<f64>> {
        average_precision(&self.0)
    }
}

fn log2(x: f64) -> f64 {
    x.ln() / std::f64::consts::LN_2
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::invalid("cutoff k must be >= 1"))
    } else {
        Ok(())
    }
}

fn check_binary(rel: &[u32]) -> Result<()> {
    match rel.iter().find(|&&r| r > 1) {
        Some(r) => Err(Error::invalid(format!("grade {r} is not binary"))),
        None => Ok(()),
    }
}

/// `sum_{i=1}^{min(k,n)} (2^{r_i} - 1) / log2(i + 1)`.
pub fn dcg_at_k(ranked: &[u32], k: usize) -> Result<f64> {
    check_k(k)?;
    let mut dcg = 0.0;
    for (i, &r) in ranked.iter().take(k).enumerate() {
        let gain = 2f64.powi(r as i32) - 1.0;
        dcg += gain / log2((i + 2) as f64);
    }
    Ok(dcg)
}

/// DCG@k over the ideal DCG@k. `None` when the query has no relevant
/// document. Lists shorter than `k` are cut at their length.
pub fn ndcg_at_k(ranked: &[u32], k: usize) -> Result<Option<f64>> {
    check_k(k)?;
    let mut ideal = ranked.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k)?;
    if idcg == 0.0 {
        return Ok(None);
    }
    Ok(Some(dcg_at_k(ranked, k)? / idcg))
}

/// Fraction of relevant documents among the top `k`. For `k > n` the
/// divisor is `n`.
pub fn precision_at_k(ranked: &[u32], k: usize) -> Result<f64> {
    check_k(k)?;
    check_binary(ranked)?;
    if ranked.is_empty() {
        return Err(Error::invalid("ranked query is empty"));
    }
    let cut = k.min(ranked.len());
    let hits: u32 = ranked[..cut].iter().sum();
    Ok(hits as f64 / cut as f64)
}

/// `(1 / (n P@n)) sum_k r_k P@k`, i.e. precision averaged over the relevant
/// positions. `None` when nothing is relevant.
pub fn average_precision(ranked: &[u32]) -> Result<Option<f64>> {
    check_binary(ranked)?;
    let relevant: u32 = ranked.iter().sum();
    if relevant == 0 {
        return Ok(None);
    }
    let mut hits = 0u32;
    let mut sum = 0.0;
    for (i, &r) in ranked.iter().enumerate() {
        if r == 1 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(Some(sum / relevant as f64))
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; reported as 0 when
    /// `count == 1`, in which case `stderr_defined` is false.
    pub stderr: f64,
    pub count: usize,
    pub stderr_defined: bool,
}

pub fn mean_metric(values: &[f64]) -> Result<MeanEstimate> {
    if values.is_empty() {
        return Err(Error::EmptyReport);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(MeanEstimate {
            mean,
            stderr: 0.0,
            count: 1,
            stderr_defined: false,
        });
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(MeanEstimate {
        mean,
        stderr: sd / (n as f64).sqrt(),
        count: n,
        stderr_defined: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Ndcg(usize),
    Map,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Ndcg(_) => "ndcg",
            Metric::Map => "map",
        }
    }

    pub fn cutoff(&self) -> Option<usize> {
        match self {
            Metric::Ndcg(k) => Some(*k),
            Metric::Map => None,
        }
    }

    /// Value for one query. NDCG is computed on the original grades, MAP on
    /// grades binarized at `binary_threshold`.
    pub fn for_query(&self, ranked: &[u32], binary_threshold: u32) -> Result<Option<f64>> {
        match *self {
            Metric::Ndcg(k) => ndcg_at_k(ranked, k),
            Metric::Map => {
                let bin: Vec<u32> = ranked.iter().map(|&g| u32::from(g >= binary_threshold)).collect();
                average_precision(&bin)
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Map => f.write_str("map"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "map" {
            return Ok(Metric::Map);
        }
        if let Some(k) = s.strip_prefix("ndcg@") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::invalid(format!("invalid cutoff in `{s}`")))?;
            check_k(k)?;
            return Ok(Metric::Ndcg(k));
        }
        Err(Error::invalid(format!(
            "unknown metric `{s}` (expected ndcg@<k> or map)"
        )))
    }
}

/// Parses a comma-separated metric list such as `ndcg@10,map`.
pub fn parse_metric_list(s: &str) -> Result<Vec<Metric>> {
    let metrics: Vec<Metric> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if metrics.is_empty() {
        return Err(Error::invalid("metric list is empty"));
    }
    Ok(metrics)
}

/// One metric over a set of queries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    /// `(qid, value)`; `None` marks an excluded query.
    pub per_query: Vec<(u64, Option<f64>)>,
    /// `None` when every query was excluded.
    pub estimate: Option<MeanEstimate>,
}

impl MetricSummary {
    pub fn from_values(metric: Metric, per_query: Vec<(u64, Option<f64>)>) -> Self {
        let used: Vec<f64> = per_query.iter().filter_map(|(_, v)| *v).collect();
        MetricSummary {
            metric,
            estimate: mean_metric(&used).ok(),
            per_query,
        }
    }

    pub fn n_used(&self) -> usize {
        self.per_query.iter().filter(|(_, v)| v.is_some()).count()
    }

    pub fn n_excluded(&self) -> usize {
        self.per_query.len() - self.n_used()
    }

    pub fn mean(&self) -> Result<f64> {
        self.estimate.map(|e| e.mean).ok_or(Error::EmptyReport)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub summaries: Vec<MetricSummary>,
}

pub const REPORT_CSV_HEADER: &str = "fold,metric,k,mean,stderr,n_used,n_excluded";

impl MetricReport {
    /// Evaluates already-ranked queries.
    pub fn from_rankings(rankings: &[(u64, RankedQuery)], metrics: &[Metric], binary_threshold: u32) -> Result<Self> {
        let summaries = metrics
            .iter()
            .map(|m| {
                let per_query = rankings
                    .iter()
                    .map(|(qid, rq)| Ok((*qid, m.for_query(rq.grades(), binary_threshold)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MetricSummary::from_values(*m, per_query))
            })
            .collect::<Result<_>>()?;
        Ok(MetricReport { summaries })
    }

    pub fn get(&self, metric: Metric) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }

    /// Aggregate rows in the report CSV format (no header).
    pub fn write_aggregate_rows<W: Write>(&self, out: &mut W, fold: &str) -> std::io::Result<()> {
        for s in &self.summaries {
            let k = s.metric.cutoff().map(|k| k.to_string()).unwrap_or_default();
            let (mean, se) = match &s.estimate {
                Some(e) => (e.mean.to_string(), e.stderr.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{fold},{},{k},{mean},{se},{},{}",
                s.metric.name(),
                s.n_used(),
                s.n_excluded()
            )?;
        }
        Ok(())
    }

    /// One row per query and metric, using the same columns: `fold` holds
    /// `qid:<id>`, `mean` the query's value (empty if excluded).
    pub fn write_per_query_rows<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for s in &self.summaries {
            let k = s.metric.cutoff().map(|k| k.to_string()).unwrap_or_default();
            for (qid, v) in &s.per_query {
                match v {
                    Some(v) => writeln!(out, "qid:{qid},{},{k},{v},0,1,0", s.metric.name())?,
                    None => writeln!(out, "qid:{qid},{},{k},,,0,1", s.metric.name())?,
                }
            }
        }
        Ok(())
    }
}

/// Ranks every query of `data` with `model` and evaluates `metrics`.
pub fn evaluate_model(
    model: &DirectRanker,
    data: &Dataset,
    metrics: &[Metric],
    binary_threshold: u32,
) -> Result<MetricReport> {
    let rankings = rank_dataset(model, data)?;
    MetricReport::from_rankings(&rankings, metrics, binary_threshold)
}

pub fn rank_dataset(model: &DirectRanker, data: &Dataset) -> Result<Vec<(u64, RankedQuery)>> {
    data.queries()
        .iter()
        .filter(|q| !q.is_empty())
        .map(|q| {
            let order = order_by_score(&model.scores(&q.docs)?);
            Ok((q.qid, RankedQuery::from_order(&q.grades(), &order)?))
        })
        .collect()
}
