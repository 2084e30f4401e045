use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::{parse_letor_file, Dataset, NormalizationStats, ParseOptions};
use crate::error::{Error, Result};

/// File locations of one predefined fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub id: String,
    pub train: PathBuf,
    pub test: PathBuf,
    pub validation: Option<PathBuf>,
}

impl FoldSpec {
    /// `root/Fold{i}/{train,vali,test}.txt` for `i = 1..=n`, the layout the
    /// MSLR and MQ distributions use.
    pub fn standard_layout(root: impl AsRef<Path>, n: usize) -> Vec<FoldSpec> {
        let root = root.as_ref();
        (1..=n)
            .map(|i| {
                let dir = root.join(format!("Fold{i}"));
                FoldSpec {
                    id: format!("Fold{i}"),
                    train: dir.join("train.txt"),
                    test: dir.join("test.txt"),
                    validation: Some(dir.join("vali.txt")),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub parse: ParseOptions,
    pub normalize: bool,
    /// Append the validation file (if any) to the training split.
    pub merge_validation: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            parse: ParseOptions::default(),
            normalize: true,
            merge_validation: false,
        }
    }
}

/// A loaded fold. When normalized, `normalizer` was fit on `train` alone and
/// applied to both splits.
#[derive(Debug, Clone)]
pub struct Fold {
    pub id: String,
    pub train: Dataset,
    pub test: Dataset,
    pub normalizer: Option<NormalizationStats>,
}

pub fn load_folds(specs: &[FoldSpec], options: &LoadOptions) -> Result<Vec<Fold>> {
    specs
        .iter()
        .map(|spec| {
            let mut train = parse_letor_file(&spec.train, options.parse)?;
            if options.merge_validation {
                if let Some(vali) = &spec.validation {
                    let v = parse_letor_file(vali, options.parse)?;
                    train = concat(train, v)?;
                }
            }
            let test = parse_letor_file(&spec.test, options.parse)?;
            prepare_fold(&spec.id, train, test, options.normalize)
        })
        .collect()
}

/// Validates a train/test pair and optionally normalizes it with statistics
/// fitted on the training split.
pub fn prepare_fold(id: &str, train: Dataset, test: Dataset, normalize: bool) -> Result<Fold> {
    if train.is_empty() {
        return Err(Error::invalid(format!("fold {id}: training split is empty")));
    }
    if test.is_empty() {
        return Err(Error::invalid(format!("fold {id}: test split is empty")));
    }
    let train_qids: HashSet<u64> = train.qids().into_iter().collect();
    if let Some(q) = test.qids().into_iter().find(|q| train_qids.contains(q)) {
        return Err(Error::invalid(format!(
            "fold {id}: query {q} appears in both training and test split"
        )));
    }
    let (train, test) = align_dims(train, test)?;
    let normalizer = if normalize {
        Some(NormalizationStats::fit(&train)?)
    } else {
        None
    };
    let (train, test) = match &normalizer {
        Some(s) => (s.apply(&train)?, s.apply(&test)?),
        None => (train, test),
    };
    Ok(Fold {
        id: id.to_string(),
        train,
        test,
        normalizer,
    })
}

/// Sparse files can end at different maximal indices; zero-pad the narrower.
fn align_dims(a: Dataset, b: Dataset) -> Result<(Dataset, Dataset)> {
    let dim = a.feature_dim().max(b.feature_dim());
    Ok((a.pad_features(dim)?, b.pad_features(dim)?))
}

fn concat(a: Dataset, b: Dataset) -> Result<Dataset> {
    let (a, b) = align_dims(a, b)?;
    let docs = a
        .into_queries()
        .into_iter()
        .chain(b.into_queries())
        .flat_map(|q| q.docs)
        .collect();
    Dataset::from_documents(docs)
}
