use discourse_core::analytics::*;
use discourse_core::corpus::assemble_sessions;
use discourse_core::fixtures::{discourse_fixture, lag_fixture};
use discourse_core::{Code, Rc4, Session, SpeakerRole, Utterance, UtteranceType};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_session(rng: &mut ChaCha8Rng, id: &str, len: usize) -> Session {
    let rows = (0..len)
        .map(|i| {
            let role = if rng.random_bool(0.5) { SpeakerRole::Teacher } else { SpeakerRole::Student };
            let mut u = Utterance::new(id, i, role, format!("t{i}"));
            if rng.random_bool(0.85) {
                let choices = UtteranceType::ALL;
                u = u.with_ut(choices[rng.random_range(0..choices.len())]);
            }
            if rng.random_bool(0.8) {
                u = u.with_rc4(Rc4::ALL[rng.random_range(0..4)]);
            }
            u
        })
        .collect();
    assemble_sessions(rows).unwrap().sessions.remove(0)
}

fn oracle_cci(s: &Session, student_only: bool) -> Option<f64> {
    let mut sum = 0u32;
    let mut n = 0u32;
    for u in &s.utterances {
        if student_only && u.speaker != SpeakerRole::Student {
            continue;
        }
        let w = match u.rc4 {
            Some(Rc4::O) => 0,
            Some(Rc4::Er) => 1,
            Some(Rc4::Srd) => 2,
            Some(Rc4::Sri) => 3,
            None => continue,
        };
        sum += w;
        n += 1;
    }
    (n > 0).then(|| f64::from(sum) / f64::from(n))
}

#[test]
fn session_cci_matches_brute_force_on_1000_sessions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let len = rng.random_range(1..60);
        let s = random_session(&mut rng, &format!("r{i}"), len);
        assert_eq!(session_cci(&s, CciScope::All), oracle_cci(&s, false));
        assert_eq!(session_cci(&s, CciScope::StudentOnly), oracle_cci(&s, true));
    }
}

#[test]
fn bin_sizes_follow_the_remainder_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let len = rng.random_range(0..500);
        let n = rng.random_range(1..40);
        let sizes = bin_sizes(len, n);
        assert_eq!(sizes.len(), n);
        assert_eq!(sizes.iter().sum::<usize>(), len);
        for (i, &size) in sizes.iter().enumerate() {
            let expected = len / n + usize::from(i < len % n);
            assert_eq!(size, expected, "len {len}, bins {n}, bin {i}");
        }
    }
}

#[test]
fn lag_fixture_conditionals() {
    let t = lag_sequential(&lag_fixture());
    let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
    assert_eq!(round3(t.conditional(UtteranceType::Fq, Rc4::Sri).unwrap()), 0.146);
    assert_eq!(round3(t.conditional(UtteranceType::Q, Rc4::Sri).unwrap()), 0.073);
    assert_eq!(t.count(UtteranceType::E, Rc4::Sri), 0);
    assert_eq!(t.row_total(UtteranceType::Fq), 199);
    for r in 0..t.rows.len() {
        assert!((t.conditional[r].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn discourse_fixture_values() {
    let config = AnalysisConfig { bootstrap_iters: 2000, ..AnalysisConfig::default() };
    let r = analyze(&discourse_fixture(), &config, "human").unwrap();
    let top = &r.chains[0];
    assert_eq!(top.trigram.to_string(), "Fq-Rs-Fq");
    assert_eq!(top.n, 36);
    assert_eq!(top.mean_cci, 74.0 / 36.0);
    assert!(r.chains.iter().all(|p| p.ci_brackets_mean));
    let pop = r.chains.iter().find(|p| p.trigram.to_string() == "P-O-P").unwrap();
    assert_eq!(pop.mean_cci, 0.0);
    let cell = r.framing.cell(UtteranceType::Fq, UtteranceType::Q).unwrap();
    assert_eq!((cell.count, cell.mean_cci), (14, Some(31.0 / 14.0)));
    assert!(r.framing.cell(UtteranceType::E, UtteranceType::Fs).unwrap().masked);
    assert!(r.framing.cells.iter().all(|c| c.masked == (c.count < 3)));
    assert_eq!(r.rq.p_rq(UtteranceType::P), Some(0.23));
    assert_eq!(r.rq.p_rq(UtteranceType::Q), Some(0.05));
    assert_eq!(r.rq.p(UtteranceType::Q, UtteranceType::Rs), Some(0.76));
}

#[test]
fn ranking_is_deterministic_given_seed() {
    let d = discourse_fixture();
    let chains: Vec<Chain> = d.iter().flat_map(|s| extract_tst_chains(s).chains).collect();
    let a = rank_chain_patterns(&chains, 5, 500, 42).unwrap();
    let b = rank_chain_patterns(&chains, 5, 500, 42).unwrap();
    assert_eq!(a, b);
}

fn arb_session(id: &'static str) -> impl Strategy<Value = Session> {
    prop::collection::vec((any::<bool>(), 0usize..10, prop::option::of(0usize..4)), 1..40).prop_map(move |spec| {
        let rows = spec
            .into_iter()
            .enumerate()
            .map(|(i, (teacher, ut, rc))| {
                let role = if teacher { SpeakerRole::Teacher } else { SpeakerRole::Student };
                let u = Utterance::new(id, i, role, "x").with_ut(UtteranceType::ALL[ut]);
                match rc {
                    Some(r) => u.with_rc4(Rc4::ALL[r]),
                    None => u,
                }
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions.remove(0)
    })
}

proptest! {
    #[test]
    fn chains_never_cross_sessions(a in arb_session("a"), b in arb_session("b")) {
        let per: Vec<Chain> = [&a, &b].iter().flat_map(|s| extract_tst_chains(s).chains).collect();
        let sessions = vec![a, b];
        let r = analyze(&sessions, &AnalysisConfig { bootstrap_iters: 1, min_n: 1, ..AnalysisConfig::default() }, "x").unwrap();
        prop_assert_eq!(r.n_chains, per.len());
        prop_assert!(per.iter().all(|c| c.center_turn > 0));
    }

    #[test]
    fn normalised_rows_sum_to_one_or_are_flagged(a in arb_session("a"), b in arb_session("b")) {
        let sessions = vec![a, b];
        let co = cooccurrence(sessions.iter().flat_map(|s| s.utterances.iter()));
        let lag = lag_sequential(&sessions);
        let rq = rq_triggers(&sessions);
        for (rows, totals, cond, empty) in [
            (co.rows.len(), &co.row_totals, &co.conditional, co.empty_rows.len()),
            (lag.rows.len(), &lag.row_totals, &lag.conditional, lag.empty_rows.len()),
            (rq.table.rows.len(), &rq.table.row_totals, &rq.table.conditional, rq.table.empty_rows.len()),
        ] {
            let mut flagged = 0;
            for r in 0..rows {
                if totals[r] == 0 {
                    flagged += 1;
                } else {
                    prop_assert!((cond[r].iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
            prop_assert_eq!(flagged, empty);
        }
    }

    #[test]
    fn cci_means_stay_in_range(a in arb_session("a"), bins in 1usize..12) {
        for scope in [CciScope::All, CciScope::StudentOnly] {
            if let Some(m) = session_cci(&a, scope) {
                prop_assert!((0.0..=3.0).contains(&m));
            }
            for b in temporal_cci(&a, bins, scope).unwrap().bins {
                if let Some(m) = b.mean {
                    prop_assert!((0.0..=3.0).contains(&m));
                }
            }
        }
    }
}
