use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::RngExt;

use crate::error::{Error, Result};
use crate::letor::Dataset;

/// Which grade combinations are paired within a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Pairing {
    /// Only neighbouring occupied grades; transitivity of the learned order
    /// covers the rest.
    #[default]
    Adjacent,
    /// Every pair of documents with different grades.
    AllDifferent,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::Adjacent => "adjacent",
            Pairing::AllDifferent => "all_different",
        })
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(Pairing::Adjacent),
            "all_different" | "all" => Ok(Pairing::AllDifferent),
            other => Err(Error::invalid(format!("unknown pairing `{other}`"))),
        }
    }
}

/// Position of a document inside a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocRef {
    pub query: usize,
    pub doc: usize,
}

/// An ordered training pair: `high` is strictly more relevant than `low`
/// and both come from the same query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainPair {
    pub high: DocRef,
    pub low: DocRef,
    pub grade_gap: u32,
    pub high_grade: u32,
}

#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub pairs: Vec<TrainPair>,
    pub warning: Option<String>,
}

/// Builds one epoch's worth of pairs.
///
/// With `budget = Some(b)`, a query offering more than `b` eligible pairs
/// contributes `b` pairs drawn uniformly (with replacement) from its
/// eligible set; smaller queries contribute all of theirs. Pairs are
/// returned grouped by query; the caller shuffles.
pub fn build_pairs<R: rand::Rng + ?Sized>(
    data: &Dataset,
    pairing: Pairing,
    budget: Option<usize>,
    rng: &mut R,
) -> PairSet {
    let mut pairs = Vec::new();
    let mut distinct_anywhere = false;
    for (qi, query) in data.queries().iter().enumerate() {
        let mut by_grade: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (di, d) in query.docs.iter().enumerate() {
            by_grade.entry(d.grade).or_default().push(di);
        }
        if by_grade.len() < 2 {
            continue;
        }
        distinct_anywhere = true;

        // (high grade, low grade) combinations allowed for this query
        let grades: Vec<u32> = by_grade.keys().rev().copied().collect();
        let combos: Vec<(u32, u32)> = match pairing {
            Pairing::Adjacent => grades.windows(2).map(|w| (w[0], w[1])).collect(),
            Pairing::AllDifferent => grades
                .iter()
                .enumerate()
                .flat_map(|(i, &h)| grades[i + 1..].iter().map(move |&l| (h, l)))
                .collect(),
        };
        let sizes: Vec<usize> = combos
            .iter()
            .map(|(h, l)| by_grade[h].len() * by_grade[l].len())
            .collect();
        let total: usize = sizes.iter().sum();
        let make = |h: u32, l: u32, hi: usize, lo: usize| TrainPair {
            high: DocRef { query: qi, doc: hi },
            low: DocRef { query: qi, doc: lo },
            grade_gap: h - l,
            high_grade: h,
        };

        match budget {
            Some(b) if total > b => {
                for _ in 0..b {
                    let mut pick = rng.random_range(0..total);
                    let mut c = 0;
                    while pick >= sizes[c] {
                        pick -= sizes[c];
                        c += 1;
                    }
                    let (h, l) = combos[c];
                    let (highs, lows) = (&by_grade[&h], &by_grade[&l]);
                    pairs.push(make(h, l, highs[pick / lows.len()], lows[pick % lows.len()]));
                }
            }
            _ => {
                for &(h, l) in &combos {
                    for &hi in &by_grade[&h] {
                        for &lo in &by_grade[&l] {
                            pairs.push(make(h, l, hi, lo));
                        }
                    }
                }
            }
        }
    }
    let warning = (!distinct_anywhere && !data.is_empty())
        .then(|| "no query contains two different grades; no training pairs can be formed".to_string());
    PairSet { pairs, warning }
}
