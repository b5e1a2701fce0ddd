//! Acceptance suite. Runs every criterion in order on the calling thread, prints one
//! PASS/FAIL line per criterion and exits nonzero if any failed.
//!
//! Criteria run sequentially so the wall-clock budgets are measured without
//! competing test threads.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use cidn_sprt::decision::{
    likelihood_ratio, likelihood_ratio_term, log_likelihood_ratio, log_likelihood_ratio_term, Feedback, Hypothesis,
    PeerProfile,
};
use cidn_sprt::harness::{
    bootstrap_trust, build_network, run_experiment, stopping_study, stream, ExperimentConfig, ExperimentId,
    PopulationSetup,
};
use cidn_sprt::peer::{analytic_rates, AssessmentSampler, PeerModel};
use cidn_sprt::sprt::{
    expected_sample_size, posterior_update, SampleSizeForm, SequentialCosts, SprtState, TargetRates,
};
use cidn_sprt::{CostMatrix, Execution, PeerId};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "peer-model oracle",
            budget: secs(10),
            run: peer_model_oracle,
        },
        Criterion {
            id: 2,
            name: "threshold endpoints",
            budget: secs(1),
            run: threshold_endpoints,
        },
        Criterion {
            id: 3,
            name: "sequential target guarantee",
            budget: secs(60),
            run: target_guarantee,
        },
        Criterion {
            id: 4,
            name: "consultations vs expertise",
            budget: secs(120),
            run: consultations_vs_expertise,
        },
        Criterion {
            id: 5,
            name: "cost ordering vs threshold",
            budget: secs(120),
            run: cost_ordering,
        },
        Criterion {
            id: 6,
            name: "cost trend vs miss cost",
            budget: secs(120),
            run: cost_trend,
        },
        Criterion {
            id: 7,
            name: "expected sample size oracle",
            budget: secs(30),
            run: sample_size_oracle,
        },
        Criterion {
            id: 8,
            name: "posterior and factorization properties",
            budget: secs(10),
            run: properties,
        },
        // two runs of the criterion-5 workload
        Criterion {
            id: 9,
            name: "cli determinism",
            budget: secs(240),
            run: cli_determinism,
        },
        Criterion {
            id: 10,
            name: "trust convergence",
            budget: secs(10),
            run: trust_convergence,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<40} {}  {:.1}s/{}s  {}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    println!("{} passed, {} failed", criteria.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Property runner with a fixed seed, so every run checks the same cases.
fn runner(config: Config) -> TestRunner {
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn model(l: f64, tau: f64) -> PeerModel {
    PeerModel::new(PeerId(0), l, tau).unwrap()
}

/// Empirical (FP, FN) of one peer over `n` draws per class.
fn empirical_rates(l: f64, tau: f64, n: usize, seed: u64) -> (f64, f64) {
    let sampler = AssessmentSampler::new(model(l, tau), 0.5).unwrap();
    let mut rng = stream(seed, 0, 0);
    let fp = (0..n)
        .filter(|_| sampler.respond(false, &mut rng) == Feedback::Alarm)
        .count();
    let fnn = (0..n)
        .filter(|_| sampler.respond(true, &mut rng) == Feedback::Clear)
        .count();
    (fp as f64 / n as f64, fnn as f64 / n as f64)
}

fn peer_model_oracle() -> Outcome {
    const N: usize = 100_000;
    let (fp, fnn) = empirical_rates(0.5, 0.5, N, 11);
    let oracle = analytic_rates(&model(0.5, 0.5), 0.5).unwrap();
    let mut ok = (fp - 0.25).abs() <= 0.01 && (fnn - 0.25).abs() <= 0.01;
    ok &= (oracle.p_false_alarm() - 0.25).abs() < 1e-12 && (oracle.p_miss() - 0.25).abs() < 1e-12;
    let mut worst_gap: f64 = 0.0;
    for i in 1..=9 {
        let (fp, fnn) = empirical_rates(i as f64 / 10.0, 0.5, N, 100 + i);
        worst_gap = worst_gap.max((fp - fnn).abs());
    }
    ok &= worst_gap <= 0.01;
    check(
        ok,
        format!("l=0.5: FP {fp:.4} FN {fnn:.4} (oracle 0.25); max |FP-FN| over l = {worst_gap:.4}"),
    )
}

fn threshold_endpoints() -> Outcome {
    let mut runner = runner(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let prop = runner.run(&(0.0f64..=1.0, 0.01f64..=0.99, any::<u64>()), |(l, d, seed)| {
        let mut rng = stream(seed, 0, 0);
        for (tau, want) in [(0.0, Feedback::Alarm), (1.0, Feedback::Clear)] {
            let sampler = AssessmentSampler::new(model(l, tau), d).unwrap();
            for _ in 0..200 {
                for intrusion in [false, true] {
                    prop_assert_eq!(sampler.respond(intrusion, &mut rng), want);
                }
            }
        }
        Ok(())
    });
    if let Err(e) = prop {
        return Err(format!("property failed: {e}"));
    }
    let cfg = ExperimentConfig {
        replications: 4,
        scenarios: 100,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(ExperimentId::Fig3, &cfg).map_err(|e| e.to_string())?;
    let at = |v: f64| rows.iter().find(|r| r.value == v).expect("grid endpoint");
    let (lo, hi) = (at(0.0), at(1.0));
    let ok = lo.value_of("peer_fp_rate") == 1.0
        && lo.value_of("peer_fn_rate") == 0.0
        && hi.value_of("peer_fp_rate") == 0.0
        && hi.value_of("peer_fn_rate") == 1.0;
    check(ok, "tau_p=0: FP 1, FN 0; tau_p=1: FP 0, FN 1".into())
}

fn population(l: f64) -> PopulationSetup {
    let targets = TargetRates::new(0.1, 0.95).unwrap();
    let costs = SequentialCosts::from_cost_matrix(&CostMatrix::default(), 0.0).unwrap();
    PopulationSetup::new(model(l, 0.5), 0.5, &targets, costs, 0.5).unwrap()
}

fn target_guarantee() -> Outcome {
    // 5·10^4 consultations under each hypothesis
    let t = stopping_study(&population(0.5), 50_000, 3, Execution::default()).map_err(|e| e.to_string())?;
    let (tp, fp) = (t.tp_rate(), t.fp_rate());
    check(
        tp >= 0.93 && fp <= 0.12,
        format!(
            "TP {tp:.4} (>= 0.93), FP {fp:.4} (<= 0.12), mean N {:.3}",
            t.avg_consulted()
        ),
    )
}

fn consultations_vs_expertise() -> Outcome {
    let rows = run_experiment(ExperimentId::Fig7, &ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let at = |l: f64| rows.iter().find(|r| (r.value - l).abs() < 1e-9).expect("grid point");
    let (r2, r7) = (at(0.2), at(0.7));
    let (sim2, sim7) = (r2.value_of("sim_mean_n"), r7.value_of("sim_mean_n"));
    let mut ok = (35.0..=65.0).contains(&sim2) && (2.0..=5.0).contains(&sim7);
    ok &= r2.value_of("theory_n") == 47.0 && r7.value_of("theory_n") == 2.0;
    let mut worst: f64 = 0.0;
    for r in rows.iter().filter(|r| r.value >= 0.3 - 1e-9) {
        let (sim, theory) = (r.value_of("sim_mean_n"), r.value_of("theory_n"));
        worst = worst.max((sim - theory).abs() / sim);
    }
    ok &= worst <= 0.35;
    check(
        ok,
        format!(
            "l=0.2: sim {sim2:.2} theory {}; l=0.7: sim {sim7:.3} theory {}; max rel err (l>=0.3) {worst:.3}",
            r2.value_of("theory_n"),
            r7.value_of("theory_n")
        ),
    )
}

fn cost_ordering() -> Outcome {
    let cfg = ExperimentConfig::default();
    assert_eq!(cfg.replications * cfg.scenarios, 10_000);
    let rows = run_experiment(ExperimentId::Fig4, &cfg).map_err(|e| e.to_string())?;
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for r in &rows {
        let sprt = r.value_of("sprt_avg_cost");
        let best_baseline = r.value_of("simple_avg_cost").min(r.value_of("weighted_avg_cost"));
        let margin = best_baseline - sprt;
        min_margin = min_margin.min(margin);
        if margin < 0.0 {
            violations.push(format!("tau_p={}: sprt {sprt:.4} > {best_baseline:.4}", r.value));
        }
    }
    let detail = if violations.is_empty() {
        format!("min margin {min_margin:.4}")
    } else {
        format!("min margin {min_margin:.4}; {}", violations.join(", "))
    };
    check(violations.is_empty(), detail)
}

/// Least-squares slope and R² of `ys` against `xs`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

fn cost_trend() -> Outcome {
    let rows = run_experiment(ExperimentId::Fig5, &ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let fit = |col: &str| linear_fit(&xs, &rows.iter().map(|r| r.value_of(col)).collect::<Vec<_>>());
    let (s_sa, r2_sa) = fit("simple_avg_cost");
    let (s_wa, r2_wa) = fit("weighted_avg_cost");
    let (s_sprt, _) = fit("sprt_avg_cost");
    check(
        r2_sa >= 0.99 && r2_wa >= 0.99 && s_sprt < s_sa && s_sprt < s_wa,
        format!(
            "R² simple {r2_sa:.4} weighted {r2_wa:.4}; slopes sprt {s_sprt:.4} simple {s_sa:.4} weighted {s_wa:.4}"
        ),
    )
}

fn sample_size_oracle() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (theta0, l) in [(0.75, 0.5), (0.9008, 0.7)] {
        let setup = population(l);
        let pop = setup.population();
        ok &= (pop.theta0 - theta0).abs() < 1e-4;
        let t = stopping_study(&setup, 50_000, 7, Execution::default()).map_err(|e| e.to_string())?;
        let achieved = TargetRates::new(t.fp_rate(), t.tp_rate()).map_err(|e| e.to_string())?;
        let e = expected_sample_size(&achieved, &pop, SampleSizeForm::Wald).map_err(|e| e.to_string())?;
        let err0 = (e.under_h0 - t.avg_consulted_h0()).abs() / t.avg_consulted_h0();
        let err1 = (e.under_h1 - t.avg_consulted_h1()).abs() / t.avg_consulted_h1();
        ok &= err0 <= 0.15 && err1 <= 0.15;
        details.push(format!(
            "θ0={theta0}: E[N|H0] {:.3} vs {:.3}, E[N|H1] {:.3} vs {:.3}",
            e.under_h0,
            t.avg_consulted_h0(),
            e.under_h1,
            t.avg_consulted_h1()
        ));
    }
    check(ok, details.join("; "))
}

fn profile() -> impl Strategy<Value = PeerProfile> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(f, d)| PeerProfile::new(f, d))
}

fn observations() -> impl Strategy<Value = Vec<(Feedback, PeerProfile)>> {
    prop::collection::vec((any::<bool>().prop_map(Feedback::from), profile()), 0..40)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn properties() -> Outcome {
    let config = Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    };

    // incremental updates agree with the batch posterior and with the posterior odds
    // π0/(1−π0) · Π p(y|H0)/p(y|H1) multiplied out directly
    let incremental = runner(config.clone()).run(&(observations(), 0.01f64..0.99), |(obs, pi0)| {
        let mut state = SprtState::new(pi0).unwrap();
        let mut odds = pi0 / (1.0 - pi0);
        for (i, (y, p)) in obs.iter().enumerate() {
            state.advance(*y, p, PeerId(i as u32)).unwrap();
            let (f0, f1) = (p.likelihood(*y, Hypothesis::H0), p.likelihood(*y, Hypothesis::H1));
            odds *= f0 / f1;
        }
        let direct = odds / (1.0 + odds);
        let (ys, ps): (Vec<Feedback>, Vec<PeerProfile>) = obs.iter().copied().unzip();
        let batch_log = log_likelihood_ratio(&ys, &ps).unwrap();
        prop_assert!(close(state.log_ratio(), batch_log));
        let batch = posterior_update(pi0, batch_log.exp());
        prop_assert!((state.pi0_n() - batch).abs() <= 1e-9, "{} vs {}", state.pi0_n(), batch);
        prop_assert!(
            (state.pi0_n() - direct).abs() <= 1e-9,
            "{} vs {}",
            state.pi0_n(),
            direct
        );
        Ok(())
    });

    // the joint ratio factors into per-peer terms and over any split of the feedback
    let factorization = runner(config).run(&(observations(), any::<prop::sample::Index>()), |(obs, idx)| {
        let (ys, ps): (Vec<Feedback>, Vec<PeerProfile>) = obs.iter().copied().unzip();
        let log_sum: f64 = obs.iter().map(|(y, p)| log_likelihood_ratio_term(*y, p)).sum();
        prop_assert!(close(log_likelihood_ratio(&ys, &ps).unwrap(), log_sum));
        let joint_h1: f64 = obs.iter().map(|(y, p)| p.likelihood(*y, Hypothesis::H1).ln()).sum();
        let joint_h0: f64 = obs.iter().map(|(y, p)| p.likelihood(*y, Hypothesis::H0).ln()).sum();
        prop_assert!(close(log_sum, joint_h1 - joint_h0));
        if obs.len() <= 12 {
            let product: f64 = obs.iter().map(|(y, p)| likelihood_ratio_term(*y, p)).product();
            let lr = likelihood_ratio(&ys, &ps).unwrap();
            prop_assert!((lr - product).abs() <= 1e-9 * product.max(1.0));
        }
        let k = if obs.is_empty() { 0 } else { idx.index(obs.len() + 1) };
        let split =
            log_likelihood_ratio(&ys[..k], &ps[..k]).unwrap() + log_likelihood_ratio(&ys[k..], &ps[k..]).unwrap();
        prop_assert!(close(split, log_sum));
        Ok(())
    });

    let incremental = incremental.map_err(|e| e.to_string());
    let factorization = factorization.map_err(|e| e.to_string());
    let show = |r: &Result<(), String>| r.as_ref().map_or_else(|e| e.clone(), |_| "ok".to_string());
    check(
        incremental.is_ok() && factorization.is_ok(),
        format!(
            "10^4 cases each: incremental/batch {}, factorization {}",
            show(&incremental),
            show(&factorization)
        ),
    )
}

fn cli_determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cidn-sim"))
            .args(["fig4", "--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "exit {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    check(
        a == b && !a.is_empty(),
        format!(
            "{} bytes, {} lines, identical: {}",
            a.len(),
            a.iter().filter(|&&c| c == b'\n').count(),
            a == b
        ),
    )
}

fn trust_convergence() -> Outcome {
    // node 0's estimate of its first acquaintance; all pairs are reported alongside
    let mut first_pair: f64 = 0.0;
    let (mut within, mut total) = (0, 0);
    for l in [0.3, 0.5, 0.7] {
        let cfg = ExperimentConfig {
            expertise: vec![l],
            lambda_f: 1.0,
            lambda_d: 1.0,
            trust_bootstrap_messages: 500,
            ..ExperimentConfig::default()
        };
        let mut net = build_network(&cfg, 0).map_err(|e| e.to_string())?;
        bootstrap_trust(&mut net).map_err(|e| e.to_string())?;
        let truth = analytic_rates(&model(l, 0.5), 0.5).unwrap();
        let err = |est: PeerProfile| {
            (est.p_false_alarm() - truth.p_false_alarm())
                .abs()
                .max((est.p_detection() - truth.p_detection()).abs())
        };
        first_pair = first_pair.max(err(net.node(0).trust[0].expected_rates()));
        for node in net.nodes() {
            for trust in &node.trust {
                total += 1;
                within += usize::from(err(trust.expected_rates()) <= 0.05);
            }
        }
    }
    check(
        first_pair <= 0.05,
        format!(
            "node 0 on node 1, max error over l in {{0.3, 0.5, 0.7}}: {first_pair:.4}; all pairs within 0.05: {within}/{total}"
        ),
    )
}
