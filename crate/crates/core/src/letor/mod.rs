//! Query/document containers and LETOR (SVMLight with `qid`) file handling.

mod folds;
mod normalize;
mod parse;

pub use folds::{load_folds, prepare_fold, Fold, FoldSpec, LoadOptions};
pub use normalize::{NormalizationStats, TARGET_STD};
pub use parse::{parse_letor, parse_letor_file, parse_letor_with, ParseOptions, DEFAULT_MAX_GRADE};

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One query-document pair.
///
/// `line_index` records where the document came from and is ignored by
/// equality.
#[derive(Debug, Clone)]
pub struct Document {
    pub grade: u32,
    pub qid: u64,
    pub features: Vec<f64>,
    pub line_index: usize,
    pub comment: Option<String>,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.grade == other.grade
            && self.qid == other.qid
            && self.features == other.features
            && self.comment == other.comment
    }
}

impl Document {
    pub fn new(grade: u32, qid: u64, features: Vec<f64>) -> Self {
        Document {
            grade,
            qid,
            features,
            line_index: 0,
            comment: None,
        }
    }
}

impl AsRef<[f64]> for Document {
    fn as_ref(&self) -> &[f64] {
        &self.features
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub qid: u64,
    pub docs: Vec<Document>,
}

impl Query {
    pub fn grades(&self) -> Vec<u32> {
        self.docs.iter().map(|d| d.grade).collect()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Documents grouped by query, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    queries: Vec<Query>,
    feature_dim: usize,
}

impl Dataset {
    /// Builds a dataset, checking that every document has the same number of
    /// finite features and carries its query's id.
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let feature_dim = queries
            .iter()
            .flat_map(|q| q.docs.first())
            .map(|d| d.features.len())
            .next()
            .unwrap_or(0);
        let mut seen = HashSet::new();
        for q in &queries {
            if !seen.insert(q.qid) {
                return Err(Error::invalid(format!("query {} appears twice", q.qid)));
            }
            for d in &q.docs {
                if d.features.len() != feature_dim {
                    return Err(Error::DimensionMismatch {
                        expected: feature_dim,
                        actual: d.features.len(),
                    });
                }
                if d.qid != q.qid {
                    return Err(Error::invalid(format!(
                        "document with qid {} filed under query {}",
                        d.qid, q.qid
                    )));
                }
                if d.features.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("feature in query {}", q.qid)));
                }
            }
        }
        Ok(Dataset { queries, feature_dim })
    }

    /// Groups loose documents by qid (first appearance order).
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut queries: Vec<Query> = Vec::new();
        for d in docs {
            let slot = *index.entry(d.qid).or_insert_with(|| {
                queries.push(Query {
                    qid: d.qid,
                    docs: Vec::new(),
                });
                queries.len() - 1
            });
            queries[slot].docs.push(d);
        }
        Dataset::new(queries)
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn into_queries(self) -> Vec<Query> {
        self.queries
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_docs(&self) -> usize {
        self.queries.iter().map(Query::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_docs() == 0
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.queries.iter().flat_map(|q| q.docs.iter())
    }

    pub fn qids(&self) -> Vec<u64> {
        self.queries.iter().map(|q| q.qid).collect()
    }

    pub fn query(&self, qid: u64) -> Option<&Query> {
        self.queries.iter().find(|q| q.qid == qid)
    }

    /// Smallest and largest grade, `None` when there are no documents.
    pub fn grade_range(&self) -> Option<(u32, u32)> {
        self.documents().fold(None, |acc, d| match acc {
            None => Some((d.grade, d.grade)),
            Some((lo, hi)) => Some((lo.min(d.grade), hi.max(d.grade))),
        })
    }

    /// Dataset made of the queries at `indices` (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            queries: indices.iter().map(|&i| self.queries[i].clone()).collect(),
            feature_dim: self.feature_dim,
        }
    }

    /// Zero-pads every feature vector to `dim` (sparse files may end before
    /// the largest index a model was trained on).
    pub fn pad_features(self, dim: usize) -> Result<Dataset> {
        if dim < self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.feature_dim,
            });
        }
        if dim == self.feature_dim {
            return Ok(self);
        }
        let mut queries = self.queries;
        for d in queries.iter_mut().flat_map(|q| q.docs.iter_mut()) {
            d.features.resize(dim, 0.0);
        }
        Dataset::new(queries)
    }

    /// Applies `f` to every grade.
    pub fn map_grades(&self, f: impl Fn(u32) -> u32) -> Dataset {
        let mut out = self.clone();
        for d in out.queries.iter_mut().flat_map(|q| q.docs.iter_mut()) {
            d.grade = f(d.grade);
        }
        out
    }

    /// Maps grades `>= threshold` to 1 and everything else to 0.
    pub fn binarize(&self, threshold: u32) -> Result<Dataset> {
        if threshold < 1 {
            return Err(Error::invalid("binarization threshold must be >= 1"));
        }
        Ok(self.map_grades(|g| u32::from(g >= threshold)))
    }

    /// Writes the dataset in LETOR text form, features dense and in index
    /// order.
    pub fn write_letor<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for d in self.documents() {
            write!(out, "{} qid:{}", d.grade, d.qid)?;
            for (i, v) in d.features.iter().enumerate() {
                write!(out, " {}:{}", i + 1, v)?;
            }
            if let Some(c) = &d.comment {
                write!(out, " # {c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_letor_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_letor(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8 output")
    }

    pub fn save_letor(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_letor(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}
