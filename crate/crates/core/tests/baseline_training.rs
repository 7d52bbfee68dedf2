use discourse_core::baseline::{
    focal_loss, cross_entropy, train_logreg, ClassWeighting, LossKind, Objective, Parameters, SparseVector, TextClassifier,
    TokenizerConfig, TrainConfig,
};
use discourse_core::fixtures::separable_rc_corpus;
use discourse_core::metrics::classification_report;
use discourse_core::{Code, Rc4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;
const FD_SCALE_FLOOR: f64 = 1e-4;

fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<SparseVector>, Vec<usize>, usize, usize) {
    let n_classes = rng.random_range(2..5);
    let n_features = rng.random_range(2..8);
    let n = rng.random_range(n_classes..20);
    let x = (0..n)
        .map(|_| {
            let mut pairs = Vec::new();
            for f in 0..n_features {
                if rng.random_bool(0.6) {
                    pairs.push((f, rng.random_range(-2.0..2.0)));
                }
            }
            SparseVector::from_pairs(pairs)
        })
        .collect();
    let y = (0..n).map(|i| if i < n_classes { i } else { rng.random_range(0..n_classes) }).collect();
    (x, y, n_classes, n_features)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for problem in 0..50 {
        let (x, y, k, f) = random_problem(&mut rng);
        let loss = if problem % 2 == 0 {
            LossKind::CrossEntropy
        } else {
            LossKind::Focal { gamma: rng.random_range(0.0..4.0) }
        };
        let objective = Objective {
            x: &x,
            y: &y,
            class_weights: (0..k).map(|_| rng.random_range(0.2..3.0)).collect(),
            l2: rng.random_range(0.0..0.5),
            loss,
        };
        let mut params = Parameters::zeros(k, f);
        params.weights.iter_mut().chain(params.bias.iter_mut()).for_each(|w| *w = rng.random_range(-1.0..1.0));
        let (_, grad) = objective.value_and_gradient(&params);
        let analytic: Vec<f64> = grad.weights.iter().chain(&grad.bias).copied().collect();
        for (i, &a) in analytic.iter().enumerate() {
            let nudge = |delta: f64| {
                let mut p = params.clone();
                if i < p.weights.len() {
                    p.weights[i] += delta;
                } else {
                    p.bias[i - p.weights.len()] += delta;
                }
                objective.value(&p)
            };
            let numeric = (nudge(FD_STEP) - nudge(-FD_STEP)) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_SCALE_FLOOR);
            assert!(rel < FD_REL_TOL, "problem {problem} ({loss:?}) coordinate {i}: {a} vs {numeric}");
        }
    }
}

#[test]
fn focal_closed_forms() {
    for p in [0.01, 0.3, 0.5, 0.9, 0.999] {
        assert!((focal_loss(p, 0.0, 1.0).unwrap() - cross_entropy(p, 1.0).unwrap()).abs() < 1e-9);
    }
    assert!((focal_loss(0.5, 2.0, 1.0).unwrap() - 0.25 * std::f64::consts::LN_2).abs() < 1e-9);
}

fn split_corpus(seed: u64) -> (Vec<String>, Vec<Rc4>, Vec<String>, Vec<Rc4>) {
    let docs = separable_rc_corpus(500, seed);
    let (train, test) = docs.split_at(400);
    let unzip = |d: &[(String, Rc4)]| d.iter().cloned().unzip::<String, Rc4, Vec<_>, Vec<_>>();
    let (a, b) = unzip(train);
    let (c, d) = unzip(test);
    (a, b, c, d)
}

#[test]
fn separable_corpus_is_learned() {
    let (docs, labels, test_docs, test_labels) = split_corpus(1);
    let model = TextClassifier::fit(&docs, &labels, TokenizerConfig::default(), &TrainConfig::default()).unwrap();
    let pred: Vec<Rc4> = test_docs.iter().map(|d| model.predict(d).label).collect();
    let report = classification_report(&test_labels, &pred, Rc4::ALL).unwrap();
    assert!(report.macro_f1 >= 0.9, "macro F1 {}", report.macro_f1);
}

#[test]
fn training_is_bit_identical() {
    let (docs, labels, _, _) = split_corpus(2);
    let config = TrainConfig { loss: LossKind::Focal { gamma: 2.0 }, ..TrainConfig::default() };
    let a = TextClassifier::fit(&docs, &labels, TokenizerConfig::default(), &config).unwrap();
    let b = TextClassifier::fit(&docs, &labels, TokenizerConfig::default(), &config).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
}

#[test]
fn stronger_penalty_shrinks_weights() {
    let (docs, labels, _, _) = split_corpus(3);
    let norms: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
        .iter()
        .map(|&l2| {
            let config = TrainConfig { l2, ..TrainConfig::default() };
            TextClassifier::fit(&docs, &labels, TokenizerConfig::default(), &config).unwrap().model.params.weight_norm()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn inverse_frequency_weighting_lifts_minority_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..1000 {
        let minority = i % 10 == 0;
        let v = if minority { rng.random_range(0.6..1.6) } else { rng.random_range(0.0..1.0) };
        x.push(SparseVector::from_pairs(vec![(0, v)]));
        y.push(if minority { Rc4::Sri } else { Rc4::Srd });
    }
    let recall = |weighting| {
        let config = TrainConfig { class_weighting: weighting, ..TrainConfig::default() };
        let model = train_logreg(&x, &y, 1, &config).unwrap();
        let hits = x.iter().zip(&y).filter(|(v, l)| **l == Rc4::Sri && model.predict(v).label == Rc4::Sri).count();
        hits as f64 / 100.0
    };
    let plain = recall(ClassWeighting::None);
    let weighted = recall(ClassWeighting::InverseFrequency);
    assert!(weighted > plain, "weighted {weighted} vs plain {plain}");
}
