//! Recomputes the bundled fixture checks and reports each as pass or fail.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use discourse_core::analytics::{analyze, bin_sizes, session_cci, AnalysisConfig, CciScope};
use discourse_core::augment::{
    extra_variations, plan_minority_boost, run_augmentation, AugmentConfig, AugmentError, CachedClient,
    GenerationSettings, MemoryCache, DEFAULT_RHO,
};
use discourse_core::baseline::{
    cross_entropy, focal_loss, LossKind, Objective, Parameters, SparseVector, TextClassifier, TokenizerConfig, TrainConfig,
};
use discourse_core::corpus::{assemble_sessions, build_context_windows, ContextWindow};
use discourse_core::fixtures::{
    discourse_fixture, lag_fixture, separable_rc_corpus, split_fixture, ScriptedGenerator, SPLIT_LAYOUT,
};
use discourse_core::metrics::{classification_report, mcnemar_from_counts};
use discourse_core::split::{
    audit_leakage, enumerate_session_splits, exhaustive_session_split, iterative_session_split, SplitRatio, SplitTask,
};
use discourse_core::analytics::lag_sequential;
use discourse_core::{remap_rc, Code, Rc4, Rc6, Session, SpeakerRole, Utterance, UtteranceType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Published constants are given to two decimals.
pub const CONSTANT_TOL: f64 = 0.005;
pub const PROPORTION_TOL: f64 = 0.001;
pub const FOCAL_TOL: f64 = 1e-9;
pub const FD_REL_TOL: f64 = 1e-5;
pub const MCNEMAR_EXACT_TOL: f64 = 1e-5;
pub const CHI_SQUARE_TOL: f64 = 0.01;
pub const MIN_MACRO_F1: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupTiming {
    pub group: &'static str,
    pub seconds: f64,
    pub budget_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub checks: Vec<Check>,
    pub timings: Vec<GroupTiming>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.timings.iter().all(|t| t.seconds <= t.budget_seconds)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.group.len() + c.name.len() + 3).max().unwrap_or(10);
        let mut out = String::new();
        for c in &self.checks {
            let label = format!("{} / {}", c.group, c.name);
            let _ = writeln!(
                out,
                "{}  {label:<width$}  expected {}  observed {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.expected,
                c.observed
            );
        }
        for t in &self.timings {
            let ok = t.seconds <= t.budget_seconds;
            let _ = writeln!(
                out,
                "{}  {:<width$}  expected < {}s  observed {:.3}s",
                if ok { "PASS" } else { "FAIL" },
                format!("{} / runtime", t.group),
                t.budget_seconds,
                t.seconds
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count()
            + self.timings.iter().filter(|t| t.seconds > t.budget_seconds).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len() + self.timings.len());
        out
    }
}

struct Recorder {
    checks: Vec<Check>,
    timings: Vec<GroupTiming>,
}

impl Recorder {
    fn check(&mut self, group: &'static str, name: impl Into<String>, expected: impl ToString, observed: impl ToString, passed: bool) {
        self.checks.push(Check {
            group,
            name: name.into(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            passed,
        });
    }

    fn close(&mut self, group: &'static str, x: f64, target: f64, tol: f64, name: impl Into<String>) {
        self.check(group, name, format!("{target} ± {tol}"), format!("{x:.6}"), (x - target).abs() <= tol);
    }

    fn timed(&mut self, group: &'static str, budget: Duration, f: impl FnOnce(&mut Self)) {
        let start = Instant::now();
        f(self);
        self.timings.push(GroupTiming {
            group,
            seconds: start.elapsed().as_secs_f64(),
            budget_seconds: budget.as_secs_f64(),
        });
    }
}

pub fn run_all() -> Reproduction {
    let mut r = Recorder { checks: Vec::new(), timings: Vec::new() };
    r.timed("remap", Duration::from_millis(1), remap);
    r.timed("split", Duration::from_secs(5), split);
    r.timed("lag", Duration::from_secs(1), lag);
    r.timed("constants", Duration::from_secs(10), constants);
    r.timed("cci", Duration::from_secs(30), cci);
    r.timed("focal", Duration::from_secs(30), focal);
    r.timed("baseline", Duration::from_secs(30), baseline);
    r.timed("mcnemar", Duration::from_secs(5), mcnemar);
    r.timed("augment", Duration::from_secs(30), augment);
    Reproduction { checks: r.checks, timings: r.timings }
}

fn remap(r: &mut Recorder) {
    use Rc4::*;
    let expected = [(Rc6::Ex, Er), (Rc6::Sk, Srd), (Rc6::Od, Srd), (Rc6::Pd, Sri), (Rc6::Mt, Sri), (Rc6::O, O)];
    for (from, to) in expected {
        let got = remap_rc(from);
        r.check("remap", format!("{from}"), to, got, got == to);
    }
}

fn windows(sessions: &[Session], k: usize) -> Vec<ContextWindow<'_>> {
    sessions.iter().flat_map(|s| build_context_windows(s, k)).collect()
}

fn split(r: &mut Recorder) {
    let g = "split";
    let s = split_fixture();
    let ratio = SplitRatio([6, 2, 1]);
    let candidates = enumerate_session_splits(&s, ratio, SplitTask::Rc4).unwrap_or_default();
    r.check(g, "candidates", 252, candidates.len(), candidates.len() == 252);
    let Ok(best) = exhaustive_session_split(&s, ratio, SplitTask::Rc4) else {
        r.check(g, "exhaustive search", "a split", "error", false);
        return;
    };
    let min = candidates.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
    r.check(g, "objective is the minimum", format!("{min:.6}"), format!("{:.6}", best.objective), best.objective <= min);
    match iterative_session_split(&s, [6.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0], SplitTask::Rc4) {
        Ok(it) => r.check(
            g,
            "iterative comparator worse",
            format!("> {:.6}", best.objective),
            format!("{:.6}", it.objective),
            it.objective > best.objective,
        ),
        Err(e) => r.check(g, "iterative comparator worse", "a split", e, false),
    }
    for k in 1..=3 {
        let n = audit_leakage(&best, &windows(&s, k)).map(|l| l.count).unwrap_or(usize::MAX);
        r.check(g, format!("leakage k={k}"), 0, n, n == 0);
    }
    let total = s.iter().flat_map(|x| &x.utterances).filter(|u| u.rc4.is_some()).count() as f64;
    for (rc, p) in [(Rc4::Srd, 0.582), (Rc4::O, 0.309), (Rc4::Sri, 0.078), (Rc4::Er, 0.031)] {
        let n = s.iter().flat_map(|x| &x.utterances).filter(|u| u.rc4 == Some(rc)).count() as f64;
        r.close(g, n / total, p, PROPORTION_TOL, format!("corpus share {rc}"));
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn lag(r: &mut Recorder) {
    let t = lag_sequential(&lag_fixture());
    for (ut, target) in [(UtteranceType::Fq, 0.146), (UtteranceType::Q, 0.073), (UtteranceType::E, 0.0)] {
        let p = t.conditional(ut, Rc4::Sri).unwrap_or(f64::NAN);
        r.check("lag", format!("P(SR-I|{ut})"), target, round3(p), round3(p) == target);
    }
}

fn constants(r: &mut Recorder) {
    let g = "constants";
    let config = AnalysisConfig::default();
    let report = match analyze(&discourse_fixture(), &config, "human") {
        Ok(rep) => rep,
        Err(e) => return r.check(g, "analysis", "a report", e, false),
    };
    let top = &report.chains[0];
    r.check(g, "top pattern", "Fq-Rs-Fq", top.trigram, top.trigram.to_string() == "Fq-Rs-Fq");
    r.check(g, "top pattern n", 36, top.n, top.n == 36);
    r.close(g, top.mean_cci, 2.06, CONSTANT_TOL, "top pattern mean CCI");
    r.check(
        g,
        "top pattern CI contains 2.06",
        "lo <= 2.06 <= hi",
        format!("[{:.3}, {:.3}]", top.ci_lo, top.ci_hi),
        top.ci_lo <= 2.06 && 2.06 <= top.ci_hi,
    );
    let pop = report.chains.iter().find(|p| p.trigram.to_string() == "P-O-P");
    r.close(g, pop.map_or(f64::NAN, |p| p.mean_cci), 0.0, CONSTANT_TOL, "P-O-P mean CCI");
    let cell = report.framing.cell(UtteranceType::Fq, UtteranceType::Q);
    r.check(g, "Fq x Q count", 14, cell.map_or(0, |c| c.count), cell.is_some_and(|c| c.count == 14));
    r.close(g, cell.and_then(|c| c.mean_cci).unwrap_or(f64::NAN), 2.23, CONSTANT_TOL, "Fq x Q mean CCI");
    let masking_ok = report.framing.cells.iter().all(|c| c.masked == (c.count < 3));
    let masked = report.framing.cells.iter().filter(|c| c.masked).count();
    r.check(g, "cells with n < 3 masked", "all", format!("{masked} masked"), masking_ok && masked > 0);
    for (t, s, target) in [
        (UtteranceType::P, UtteranceType::Rq, 0.23),
        (UtteranceType::Q, UtteranceType::Rq, 0.05),
        (UtteranceType::Q, UtteranceType::Rs, 0.76),
    ] {
        r.close(g, report.rq.p(t, s).unwrap_or(f64::NAN), target, CONSTANT_TOL, format!("P({s}|{t})"));
    }
}

fn oracle_cci(s: &Session, student_only: bool) -> Option<f64> {
    let w: Vec<f64> = s
        .utterances
        .iter()
        .filter(|u| !student_only || u.speaker == SpeakerRole::Student)
        .filter_map(|u| u.rc4)
        .map(|rc| match rc {
            Rc4::O => 0.0,
            Rc4::Er => 1.0,
            Rc4::Srd => 2.0,
            Rc4::Sri => 3.0,
        })
        .collect();
    (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64)
}

fn cci(r: &mut Recorder) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut mismatches = 0;
    for i in 0..1000 {
        let len = rng.random_range(1..50);
        let rows = (0..len)
            .map(|t| {
                let role = if rng.random_bool(0.5) { SpeakerRole::Teacher } else { SpeakerRole::Student };
                let u = Utterance::new(format!("r{i}"), t, role, "x");
                if rng.random_bool(0.8) {
                    u.with_rc4(Rc4::ALL[rng.random_range(0..4)])
                } else {
                    u
                }
            })
            .collect();
        let Ok(corpus) = assemble_sessions(rows) else { continue };
        let s = &corpus.sessions[0];
        if session_cci(s, CciScope::All) != oracle_cci(s, false)
            || session_cci(s, CciScope::StudentOnly) != oracle_cci(s, true)
        {
            mismatches += 1;
        }
    }
    r.check("cci", "session CCI vs oracle (1000 sessions)", 0, mismatches, mismatches == 0);
    let mut bad = 0;
    for _ in 0..200 {
        let len = rng.random_range(0..400);
        let n = rng.random_range(1..30);
        let sizes = bin_sizes(len, n);
        let ok = sizes.len() == n && sizes.iter().enumerate().all(|(i, &s)| s == len / n + usize::from(i < len % n));
        bad += usize::from(!ok);
    }
    r.check("cci", "bin sizes (200 pairs)", 0, bad, bad == 0);
}

fn focal(r: &mut Recorder) {
    let g = "focal";
    let worst = [0.01, 0.2, 0.5, 0.8, 0.99]
        .iter()
        .map(|&p| (focal_loss(p, 0.0, 1.0).unwrap_or(f64::NAN) - cross_entropy(p, 1.0).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);
    r.check(g, "gamma 0 equals cross-entropy", format!("<= {FOCAL_TOL}"), format!("{worst:e}"), worst <= FOCAL_TOL);
    let v = focal_loss(0.5, 2.0, 1.0).unwrap_or(f64::NAN);
    r.close(g, v, 0.25 * std::f64::consts::LN_2, FOCAL_TOL, "p=0.5, gamma=2");

    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst_rel = 0.0f64;
    for problem in 0..50 {
        let k = rng.random_range(2..5);
        let f = rng.random_range(2..7);
        let n = rng.random_range(k..16);
        let x: Vec<SparseVector> = (0..n)
            .map(|_| SparseVector::from_pairs((0..f).map(|j| (j, rng.random_range(-1.5..1.5))).collect()))
            .collect();
        let y: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let objective = Objective {
            x: &x,
            y: &y,
            class_weights: (0..k).map(|_| rng.random_range(0.5..2.0)).collect(),
            l2: rng.random_range(0.0..0.3),
            loss: if problem % 2 == 0 { LossKind::CrossEntropy } else { LossKind::Focal { gamma: rng.random_range(0.0..3.0) } },
        };
        let mut p = Parameters::zeros(k, f);
        p.weights.iter_mut().chain(p.bias.iter_mut()).for_each(|w| *w = rng.random_range(-1.0..1.0));
        let (_, grad) = objective.value_and_gradient(&p);
        let analytic: Vec<f64> = grad.weights.iter().chain(&grad.bias).copied().collect();
        for (i, a) in analytic.into_iter().enumerate() {
            let eval = |d: f64| {
                let mut q = p.clone();
                if i < q.weights.len() {
                    q.weights[i] += d;
                } else {
                    q.bias[i - q.weights.len()] += d;
                }
                objective.value(&q)
            };
            let h = 1e-6;
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            worst_rel = worst_rel.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
        }
    }
    r.check(g, "gradients vs finite differences (50 problems)", format!("< {FD_REL_TOL}"), format!("{worst_rel:e}"), worst_rel < FD_REL_TOL);
}

fn baseline(r: &mut Recorder) {
    let g = "baseline";
    let docs = separable_rc_corpus(500, 1);
    let (train, test) = docs.split_at(400);
    let (x, y): (Vec<String>, Vec<Rc4>) = train.iter().cloned().unzip();
    let config = TrainConfig::default();
    let fit = || TextClassifier::fit(&x, &y, TokenizerConfig::default(), &config);
    let (Ok(a), Ok(b)) = (fit(), fit()) else {
        return r.check(g, "training", "a model", "error", false);
    };
    let truth: Vec<Rc4> = test.iter().map(|d| d.1).collect();
    let pred: Vec<Rc4> = test.iter().map(|d| a.predict(&d.0).label).collect();
    let f1 = classification_report(&truth, &pred, Rc4::ALL).map_or(0.0, |rep| rep.macro_f1);
    r.check(g, "macro F1 on separable corpus", format!(">= {MIN_MACRO_F1}"), format!("{f1:.4}"), f1 >= MIN_MACRO_F1);
    let same = serde_json::to_vec(&a).ok() == serde_json::to_vec(&b).ok();
    r.check(g, "bit-identical retraining", true, same, same);
}

fn exact_oracle(b: u64, c: u64) -> f64 {
    let n = b + c;
    let mut pmf = 0.5f64.powi(n as i32);
    let mut tail = pmf;
    for i in 0..b.min(c) {
        pmf *= (n - i) as f64 / (i + 1) as f64;
        tail += pmf;
    }
    (2.0 * tail).min(1.0)
}

fn mcnemar(r: &mut Recorder) {
    r.close("mcnemar", mcnemar_from_counts(10, 0).p_value, 0.00195, MCNEMAR_EXACT_TOL, "b=10, c=0");
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(25..=100u64);
        let b = rng.random_range(0..=n);
        worst = worst.max((mcnemar_from_counts(b, n - b).p_value - exact_oracle(b, n - b)).abs());
    }
    r.check("mcnemar", "chi-square vs exact (500 draws)", format!("<= {CHI_SQUARE_TOL}"), format!("{worst:.5}"), worst <= CHI_SQUARE_TOL);
}

fn augment(r: &mut Recorder) {
    let g = "augment";
    let train: Vec<Session> =
        split_fixture().into_iter().filter(|s| SPLIT_LAYOUT[0].contains(&s.session_id.as_str())).collect();
    let extras = extra_variations(36, 596, DEFAULT_RHO);
    r.check(g, "ER extras from training counts", 2, extras, extras == 2);
    if let Ok(plan) = plan_minority_boost(train.iter().flat_map(|s| &s.utterances), DEFAULT_RHO) {
        let er: Vec<u32> = train
            .iter()
            .flat_map(|s| &s.utterances)
            .filter(|u| u.rc4 == Some(Rc4::Er))
            .map(|u| plan.extras_for(&u.reference()))
            .collect();
        let all_two = !er.is_empty() && er.iter().all(|&e| e == 2);
        r.check(g, "plan gives every ER row 2 extras", "36 x 2", format!("{} rows", er.len()), all_two && er.len() == 36);
    }
    let w = windows(&train, 2);
    let settings = GenerationSettings::augmentation("mock");
    for n in [0usize, 1, 3] {
        let config = AugmentConfig::new(n as f64, settings.clone());
        let rows = run_augmentation(&mut ScriptedGenerator::new(), &w, None, &config).map_or(0, |s| s.len());
        r.check(g, format!("pass 2 rows, n={n}"), (1 + n) * 985, rows, rows == (1 + n) * 985);
    }
    let small = windows(&train[..1], 1);
    let config = AugmentConfig::new(1.0, settings);
    let mut flaky = ScriptedGenerator { malformed_first: 2, ..ScriptedGenerator::new() };
    let retried = run_augmentation(&mut flaky, &small, None, &config).is_ok_and(|s| s.attempts == small.len() + 2);
    r.check(g, "malformed replies retried", true, retried, retried);
    let mut hopeless = ScriptedGenerator { malformed_first: usize::MAX, ..ScriptedGenerator::new() };
    let rejected = matches!(run_augmentation(&mut hopeless, &small, None, &config), Err(AugmentError::Partial { .. }));
    r.check(g, "persistent malformed replies dropped", true, rejected, rejected);
    let mut cached = CachedClient::new(ScriptedGenerator::new(), MemoryCache::default());
    let _ = run_augmentation(&mut cached, &small, None, &config);
    let first = cached.inner.calls();
    let _ = run_augmentation(&mut cached, &small, None, &config);
    let repeat = cached.inner.calls() - first;
    r.check(g, "cache prevents duplicate requests", 0, repeat, repeat == 0 && first > 0);
}
