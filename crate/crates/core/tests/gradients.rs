mod common;

use common::{random_model, random_vectors};
use ranker_core::net::NetGradients;
use ranker_core::training::{
    accumulate_pair_gradient, pair_loss, pair_loss_and_gradient, PairScratch, RankerGradients,
};
use ranker_core::{Cost, DirectRanker, Tau};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn num_params(model: &DirectRanker) -> usize {
    model.param_blocks().iter().map(|b| b.len()).sum()
}

fn perturbed(model: &DirectRanker, index: usize, delta: f64) -> DirectRanker {
    let mut m = model.clone();
    let mut i = index;
    for block in m.param_blocks_mut() {
        if i < block.len() {
            block[i] += delta;
            return m;
        }
        i -= block.len();
    }
    panic!("parameter index out of range");
}

fn central_difference(model: &DirectRanker, index: usize, loss: &dyn Fn(&DirectRanker) -> f64) -> f64 {
    let plus = loss(&perturbed(model, index, STEP));
    let minus = loss(&perturbed(model, index, -STEP));
    (plus - minus) / (2.0 * STEP)
}

fn max_relative_error(model: &DirectRanker, analytic: &[f64], loss: &dyn Fn(&DirectRanker) -> f64) -> f64 {
    assert_eq!(analytic.len(), num_params(model));
    (0..analytic.len())
        .map(|i| relative_error(analytic[i], central_difference(model, i, loss)))
        .fold(0.0, f64::max)
}

#[test]
fn feature_net_gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let dim = 2 + seed as usize % 4;
        let model = random_model(seed, dim, &[5, 3], Tau::Identity);
        let net = model.feature_net();
        let x = &random_vectors(seed + 100, 1, dim, 1.5)[0];
        let upstream = random_vectors(seed + 200, 1, net.output_dim(), 1.0).remove(0);

        let mut tape = NetGradients::zeros_like(net);
        let cache = net.forward(x).unwrap();
        let dx = net.backward(&cache, &upstream, &mut tape).unwrap();
        let analytic: Vec<f64> = tape.blocks().concat();

        let loss = |m: &DirectRanker| -> f64 {
            let f = m.feature_net().eval(x).unwrap();
            f.iter().zip(&upstream).map(|(a, b)| a * b).sum()
        };
        // Net parameters come first in the model's block order.
        let err = (0..analytic.len())
            .map(|i| relative_error(analytic[i], central_difference(&model, i, &loss)))
            .fold(0.0, f64::max);
        assert!(err < TOL, "seed {seed}: max relative error {err:e}");

        for (j, &g) in dx.iter().enumerate() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += STEP;
            xm[j] -= STEP;
            let dot = |v: &[f64]| -> f64 { net.eval(v).unwrap().iter().zip(&upstream).map(|(a, b)| a * b).sum() };
            let num = (dot(&xp) - dot(&xm)) / (2.0 * STEP);
            assert!(relative_error(g, num) < TOL, "seed {seed}: input gradient {j}");
        }
    }
}

#[test]
fn single_pair_gradients_match_finite_differences() {
    for (i, (tau, cost)) in [
        (Tau::Identity, Cost::CrossEntropy),
        (Tau::Identity, Cost::Squared),
        (Tau::TanhHalf, Cost::CrossEntropy),
        (Tau::TanhHalf, Cost::Squared),
    ]
    .into_iter()
    .enumerate()
    {
        let model = random_model(40 + i as u64, 3, &[4, 2], tau);
        let docs = random_vectors(50 + i as u64, 2, 3, 1.0);
        let (_, grads) = pair_loss_and_gradient(&model, &docs[0], &docs[1], 2, cost).unwrap();
        let loss = |m: &DirectRanker| pair_loss(m, &docs[0], &docs[1], 2, cost).unwrap();
        let err = max_relative_error(&model, &grads.flatten(), &loss);
        assert!(err < TOL, "{tau:?}/{cost:?}: max relative error {err:e}");
    }
}

/// Mean cost over a list of `(first, second, direction, high_grade)` pairs,
/// the quantity one minibatch step differentiates.
fn batch_loss(model: &DirectRanker, docs: &[Vec<f64>], pairs: &[(usize, usize, f64, u32)], cost: Cost) -> f64 {
    let total: f64 = pairs
        .iter()
        .map(|&(a, b, dir, hg)| {
            let (hi, lo) = if dir > 0.0 { (a, b) } else { (b, a) };
            pair_loss(model, &docs[hi], &docs[lo], hg, cost).unwrap()
        })
        .sum();
    total / pairs.len() as f64
}

#[test]
fn full_pairwise_loss_gradients_match_finite_differences() {
    let configs: [(&[usize], Tau, Cost); 10] = [
        (&[6], Tau::Identity, Cost::CrossEntropy),
        (&[6], Tau::Identity, Cost::Squared),
        (&[6], Tau::TanhHalf, Cost::CrossEntropy),
        (&[6], Tau::TanhHalf, Cost::Squared),
        (&[5, 3], Tau::Identity, Cost::CrossEntropy),
        (&[5, 3], Tau::Identity, Cost::Squared),
        (&[5, 3], Tau::TanhHalf, Cost::CrossEntropy),
        (&[5, 3], Tau::TanhHalf, Cost::Squared),
        (&[7, 4, 2], Tau::Identity, Cost::Squared),
        (&[7, 4, 2], Tau::TanhHalf, Cost::CrossEntropy),
    ];
    for (c, (widths, tau, cost)) in configs.into_iter().enumerate() {
        let seed = 1000 + c as u64;
        let dim = 3 + c % 3;
        let model = random_model(seed, dim, widths, tau);
        let docs = random_vectors(seed + 1, 6, dim, 1.0);
        // Mixed orientations: the tape must handle the more relevant
        // document in either branch.
        let pairs = [
            (0, 1, 1.0, 1),
            (2, 3, -1.0, 2),
            (4, 5, 1.0, 3),
            (1, 4, -1.0, 1),
            (3, 0, 1.0, 2),
        ];
        let mut grads = RankerGradients::zeros_like(&model);
        let mut scratch = PairScratch::default();
        for &(a, b, dir, hg) in &pairs {
            accumulate_pair_gradient(&model, &docs[a], &docs[b], dir, hg, cost, &mut scratch, &mut grads).unwrap();
        }
        grads.scale(1.0 / pairs.len() as f64);
        let loss = |m: &DirectRanker| batch_loss(m, &docs, &pairs, cost);
        let err = max_relative_error(&model, &grads.flatten(), &loss);
        println!("config {c}: {widths:?} {tau:?} {cost:?} max relative error {err:.3e}");
        assert!(err < TOL, "config {c}: max relative error {err:e}");
    }
}

#[test]
fn swapping_branches_leaves_the_gradient_unchanged() {
    for seed in 0..10u64 {
        let model = random_model(seed, 4, &[5, 3], Tau::TanhHalf);
        let docs = random_vectors(seed + 7, 2, 4, 1.0);
        let mut scratch = PairScratch::default();
        let mut forward = RankerGradients::zeros_like(&model);
        let mut swapped = RankerGradients::zeros_like(&model);
        let c1 = accumulate_pair_gradient(
            &model,
            &docs[0],
            &docs[1],
            1.0,
            1,
            Cost::CrossEntropy,
            &mut scratch,
            &mut forward,
        )
        .unwrap();
        let c2 = accumulate_pair_gradient(
            &model,
            &docs[1],
            &docs[0],
            -1.0,
            1,
            Cost::CrossEntropy,
            &mut scratch,
            &mut swapped,
        )
        .unwrap();
        assert_eq!(c1, c2);
        for (a, b) in forward.flatten().iter().zip(swapped.flatten()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "seed {seed}: {a} vs {b}");
        }
    }
}
