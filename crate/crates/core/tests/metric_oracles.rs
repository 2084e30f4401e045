use rand::RngExt;
use ranker_core::metrics::{average_precision, dcg_at_k, mean_metric, ndcg_at_k, precision_at_k, Metric};
use ranker_core::rng::rng_from_seed;

const EPS: f64 = 1e-12;

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn oracle_dcg(ranked: &[u32], k: usize) -> f64 {
    let mut total = 0.0;
    for (pos, &g) in ranked.iter().take(k).enumerate() {
        let gain = (2f64).powi(g as i32) - 1.0;
        total += gain / ((pos + 2) as f64).log2();
    }
    total
}

/// Ideal DCG found by trying every ordering.
fn oracle_ndcg(ranked: &[u32], k: usize) -> Option<f64> {
    let ideal = permutations(ranked)
        .iter()
        .map(|p| oracle_dcg(p, k))
        .fold(0.0, f64::max);
    (ideal > 0.0).then(|| oracle_dcg(ranked, k) / ideal)
}

/// Mean of precision at each relevant position, counting hits directly.
fn oracle_average_precision(binary: &[u32]) -> Option<f64> {
    let relevant_positions: Vec<usize> = (0..binary.len()).filter(|&i| binary[i] == 1).collect();
    if relevant_positions.is_empty() {
        return None;
    }
    let sum: f64 = relevant_positions
        .iter()
        .map(|&i| {
            let hits = binary[..=i].iter().filter(|&&r| r == 1).count();
            hits as f64 / (i + 1) as f64
        })
        .sum();
    Some(sum / relevant_positions.len() as f64)
}

fn random_query(seed: u64, max_grade: u32) -> Vec<u32> {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(1..=8usize);
    (0..n).map(|_| rng.random_range(0..=max_grade)).collect()
}

#[test]
fn ndcg_matches_permutation_oracle() {
    for seed in 0..100 {
        let q = random_query(seed, 4);
        for k in [1, 3, 5, 10] {
            let got = ndcg_at_k(&q, k).unwrap();
            let want = oracle_ndcg(&q, k);
            match (got, want) {
                (Some(g), Some(w)) => assert!((g - w).abs() < EPS, "{q:?}@{k}: {g} vs {w}"),
                (None, None) => {}
                _ => panic!("{q:?}@{k}: definedness differs ({got:?} vs {want:?})"),
            }
            assert!((dcg_at_k(&q, k).unwrap() - oracle_dcg(&q, k)).abs() < EPS);
        }
    }
}

#[test]
fn average_precision_matches_oracle() {
    for seed in 0..100 {
        let q = random_query(seed + 500, 1);
        let got = average_precision(&q).unwrap();
        let want = oracle_average_precision(&q);
        match (got, want) {
            (Some(g), Some(w)) => assert!((g - w).abs() < EPS, "{q:?}: {g} vs {w}"),
            (None, None) => {}
            _ => panic!("{q:?}: definedness differs"),
        }
    }
}

#[test]
fn map_metric_binarizes_before_averaging() {
    for seed in 0..100 {
        let q = random_query(seed + 900, 4);
        for t in 1..=3 {
            let bin: Vec<u32> = q.iter().map(|&g| u32::from(g >= t)).collect();
            assert_eq!(Metric::Map.for_query(&q, t).unwrap(), oracle_average_precision(&bin));
        }
    }
}

#[test]
fn hand_values() {
    assert!((dcg_at_k(&[1, 1, 0], 3).unwrap() - 1.630_929_753_571_457).abs() < 1e-12);
    // One ulp: the sum 1 + 2/3 is rounded before the division.
    assert!((average_precision(&[1, 0, 1]).unwrap().unwrap() - 5.0 / 6.0).abs() <= f64::EPSILON);
    assert!((ndcg_at_k(&[1, 0, 2], 3).unwrap().unwrap() - 2.5 / (3.0 + 1.0 / 3f64.log2())).abs() < 1e-12);
    assert_eq!(ndcg_at_k(&[0, 0], 10).unwrap(), None);
    assert_eq!(precision_at_k(&[1, 0, 1], 3).unwrap(), 2.0 / 3.0);
    let e = mean_metric(&[1.0, 0.5, 0.75]).unwrap();
    assert!((e.mean - 0.75).abs() < 1e-15);
    assert!((e.stderr - (0.0625f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn ideal_ordering_scores_one() {
    for seed in 0..50 {
        let mut q = random_query(seed + 2000, 4);
        q.sort_unstable_by(|a, b| b.cmp(a));
        if let Some(v) = ndcg_at_k(&q, 10).unwrap() {
            assert!((v - 1.0).abs() < EPS);
        }
    }
}
