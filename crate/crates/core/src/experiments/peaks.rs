use crate::error::{Error, Result};
use crate::model::{order_by_score, DirectRanker};

/// Documents in model order with the head output of every consecutive pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedOutputs {
    /// Document indices, best first.
    pub order: Vec<usize>,
    /// `outputs[n] = r(d_order[n], d_order[n+1])`, never negative.
    pub outputs: Vec<f64>,
}

/// Sorts `docs` with `model` and evaluates the head on each neighbouring
/// pair of the sorted list.
pub fn successive_pair_outputs<D: AsRef<[f64]>>(model: &DirectRanker, docs: &[D]) -> Result<SortedOutputs> {
    if docs.len() < 2 {
        return Err(Error::invalid(format!(
            "successive outputs need at least 2 documents, got {}",
            docs.len()
        )));
    }
    let scores = model.scores(docs)?;
    let order = order_by_score(&scores);
    let tau = model.tau();
    let outputs = order
        .windows(2)
        .map(|w| tau.apply(scores[w[0]] - scores[w[1]]))
        .collect();
    Ok(SortedOutputs { order, outputs })
}

/// Positions `i` (a boundary between sorted positions `i` and `i + 1`)
/// flagged as class changes.
///
/// With `expected_classes = Some(k)` the `k - 1` largest outputs are taken,
/// ties going to the smaller index. Without it, every output above
/// mean + 2 std (population) is taken. The result is sorted ascending.
pub fn detect_boundaries(outputs: &[f64], expected_classes: Option<usize>) -> Vec<usize> {
    if outputs.is_empty() {
        return Vec::new();
    }
    let mut picked: Vec<usize> = match expected_classes {
        Some(k) => {
            let mut idx: Vec<usize> = (0..outputs.len()).collect();
            idx.sort_by(|&a, &b| outputs[b].total_cmp(&outputs[a]).then(a.cmp(&b)));
            idx.truncate(k.saturating_sub(1));
            idx
        }
        None => {
            let n = outputs.len() as f64;
            let mean = outputs.iter().sum::<f64>() / n;
            let var = outputs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n;
            let threshold = mean + 2.0 * var.sqrt();
            (0..outputs.len()).filter(|&i| outputs[i] > threshold).collect()
        }
    };
    picked.sort_unstable();
    picked
}

/// Boundary positions of the ideal ranking: with grades sorted descending,
/// every `i` where the grade at `i + 1` differs from the grade at `i`.
pub fn true_boundaries(grades: &[u32]) -> Vec<usize> {
    let mut sorted = grades.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OutputHead, Tau};
    use crate::net::{Activation, FeatureNet, Layer};

    fn identity_model() -> DirectRanker {
        let layer = Layer::new(1, 1, vec![1.0], vec![0.0], Activation::Identity).unwrap();
        let net = FeatureNet::new(vec![layer]).unwrap();
        DirectRanker::new(net, OutputHead::new(vec![1.0], Tau::Identity).unwrap()).unwrap()
    }

    #[test]
    fn identical_pair_gives_zero() {
        let m = identity_model();
        let s = successive_pair_outputs(&m, &[vec![3.0], vec![3.0]]).unwrap();
        assert_eq!(s.outputs, vec![0.0]);
    }

    #[test]
    fn outputs_follow_sorted_gaps() {
        let m = identity_model();
        let s = successive_pair_outputs(&m, &[vec![1.0], vec![5.0], vec![2.0]]).unwrap();
        assert_eq!(s.order, vec![1, 2, 0]);
        assert_eq!(s.outputs, vec![3.0, 1.0]);
        assert!(successive_pair_outputs(&m, &[vec![1.0]]).is_err());
    }

    #[test]
    fn boundary_detection() {
        assert_eq!(detect_boundaries(&[0.1, 5.0, 0.1], Some(2)), vec![1]);
        assert_eq!(detect_boundaries(&[1.0, 2.0, 2.0, 1.0], Some(2)), vec![1]);
        assert_eq!(detect_boundaries(&[0.3; 6], None), Vec::<usize>::new());
        let mut o = vec![0.0; 20];
        o[7] = 10.0;
        assert_eq!(detect_boundaries(&o, None), vec![7]);
        assert!(detect_boundaries(&[], Some(3)).is_empty());
    }

    #[test]
    fn true_boundaries_of_grades() {
        assert_eq!(true_boundaries(&[0, 2, 1, 2, 0, 1]), vec![1, 3]);
        assert!(true_boundaries(&[1, 1]).is_empty());
    }
}
