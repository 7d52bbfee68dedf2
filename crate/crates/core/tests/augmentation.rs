use discourse_core::augment::{
    extra_variations, plan_minority_boost, run_augmentation, AugmentConfig, AugmentError, CachedClient,
    GenerationSettings, MemoryCache, DEFAULT_RHO,
};
use discourse_core::corpus::{build_context_windows, ContextWindow};
use discourse_core::fixtures::{split_fixture, ScriptedGenerator, SPLIT_LAYOUT};
use discourse_core::{Rc4, Session};

fn train_sessions() -> Vec<Session> {
    split_fixture()
        .into_iter()
        .filter(|s| SPLIT_LAYOUT[0].contains(&s.session_id.as_str()))
        .collect()
}

fn windows(sessions: &[Session], k: usize) -> Vec<ContextWindow<'_>> {
    sessions.iter().flat_map(|s| build_context_windows(s, k)).collect()
}

#[test]
fn minority_boost_from_training_counts() {
    assert_eq!(extra_variations(36, 596, DEFAULT_RHO), 2);
    let train = train_sessions();
    let plan = plan_minority_boost(train.iter().flat_map(|s| &s.utterances), DEFAULT_RHO).unwrap();
    let er: Vec<_> = train.iter().flat_map(|s| &s.utterances).filter(|u| u.rc4 == Some(Rc4::Er)).collect();
    assert_eq!(er.len(), 36);
    assert!(er.iter().all(|u| plan.extras_for(&u.reference()) == 2));
    // SR-I (97) is above 0.15 * 596 and gets nothing from the RC side.
    assert_eq!(extra_variations(97, 596, DEFAULT_RHO), 0);
}

#[test]
fn main_pass_multiplies_the_training_set() {
    let train = train_sessions();
    let w = windows(&train, 2);
    for n in [0.0, 1.0, 3.0] {
        let config = AugmentConfig::new(n, GenerationSettings::augmentation("mock"));
        let set = run_augmentation(&mut ScriptedGenerator::new(), &w, None, &config).unwrap();
        assert_eq!(set.len(), ((1.0 + n) as usize) * 985, "n = {n}");
        assert!(set.synthetic_sessions().iter().all(|s| s.utterances.len() <= 5));
    }
}

#[test]
fn malformed_replies_are_retried_then_dropped() {
    let train = train_sessions();
    let w = windows(&train[..1], 1);
    let config = AugmentConfig::new(1.0, GenerationSettings::augmentation("mock"));
    let mut client = ScriptedGenerator { malformed_first: 2, ..ScriptedGenerator::new() };
    let set = run_augmentation(&mut client, &w, None, &config).unwrap();
    assert_eq!(set.attempts, w.len() + 2);
    assert!(client.prompts[1].contains("<feedback>"));

    let mut hopeless = ScriptedGenerator { malformed_first: usize::MAX, ..ScriptedGenerator::new() };
    match run_augmentation(&mut hopeless, &w, None, &config) {
        Err(AugmentError::Partial { set, failed }) => {
            assert!(set.examples.is_empty());
            assert_eq!(failed.len(), w.len());
        }
        other => panic!("expected a partial result, got {other:?}"),
    }
}

#[test]
fn cache_prevents_duplicate_requests() {
    let train = train_sessions();
    let w = windows(&train[..1], 2);
    let config = AugmentConfig::new(1.5, GenerationSettings::augmentation("mock"));
    let mut client = CachedClient::new(ScriptedGenerator::new(), MemoryCache::default());
    let first = run_augmentation(&mut client, &w, None, &config).unwrap();
    let calls = client.inner.calls();
    let second = run_augmentation(&mut client, &w, None, &config).unwrap();
    assert_eq!(first, second);
    assert_eq!(client.inner.calls(), calls);
    assert_eq!(client.stats.hits as usize, calls);
}
