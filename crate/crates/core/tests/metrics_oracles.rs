use discourse_core::metrics::{binomial_two_sided, mcnemar_from_counts, McNemarMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Exact two-sided binomial tail by summing probabilities built with
// multiplicative recurrences.
fn exact_oracle(b: u64, c: u64) -> f64 {
    let n = b + c;
    let k = b.min(c);
    let mut pmf = 0.5f64.powi(n as i32);
    let mut tail = pmf;
    for i in 0..k {
        pmf *= (n - i) as f64 / (i + 1) as f64;
        tail += pmf;
    }
    (2.0 * tail).min(1.0)
}

#[test]
fn exact_branch_known_value() {
    let r = mcnemar_from_counts(10, 0);
    assert_eq!(r.method, McNemarMethod::ExactBinomial);
    assert!((r.p_value - 0.001953125).abs() < 1e-5);
    assert!((binomial_two_sided(10, 10) - 0.001953125).abs() < 1e-12);
}

#[test]
fn exact_branch_matches_oracle() {
    for n in 1..25u64 {
        for b in 0..=n {
            let r = mcnemar_from_counts(b, n - b);
            assert!((r.p_value - exact_oracle(b, n - b)).abs() < 1e-9, "b={b} c={}", n - b);
        }
    }
}

#[test]
fn chi_square_branch_tracks_the_exact_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let n = rng.random_range(25..=100u64);
        let b = rng.random_range(0..=n);
        let r = mcnemar_from_counts(b, n - b);
        assert_eq!(r.method, McNemarMethod::ChiSquareCorrected);
        let diff = (r.p_value - exact_oracle(b, n - b)).abs();
        worst = worst.max(diff);
        assert!(diff <= 0.01, "b={b} c={} diff {diff}", n - b);
    }
    println!("largest chi-square deviation {worst:.5}");
}
