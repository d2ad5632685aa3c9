//! The experiment subcommands. Each writes deterministic result files into
//! the output directory, records its wall time in the sidecar, and returns
//! whether its claim checks passed.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use serde::Serialize;

use otm_core::adversary::{
    attack_unlock_probs, lemma_acc_input_bound, profile_of, simulator_experiment,
    soundness_fraction, HybridReport, ProductStrategy, SimStrategy,
};
use otm_core::bounds::{
    azuma_supermartingale_bound, standard_t_grid, verify_tail, AdaptiveBernoulliSpec, AdaptiveRule,
};
use otm_core::disturbance::{
    certify_net_with, guess_bound, solve_evolution_with, solve_multistart, sweep_claim_instances,
    CertifierSummary, ClaimSweepReport, EvolutionConfig, NetConfig, OptimizationReport,
    SolverConfig, CONJECTURED_OBJECTIVE_BOUND,
};
use otm_core::exec::{blocked_fold, ExecMode};
use otm_core::protocol::{
    chernoff_failure_bound, honest_success_exact, otm_prep, otm_read, Message,
};
use otm_core::qrac::{decode_prob, encode, optimal_success_prob, DecodingBasis};
use otm_core::qmath::born_prob;
use otm_core::seeding::{derive_seed, MeasurementStreams};

use crate::config::ExperimentConfig;
use crate::output::{artifact_version, record_timing, write_csv, write_json};

const DE_POPULATION: usize = 40;
const CLAIM_SWEEP_SAMPLES: u64 = 1_000_000;
const OBJECTIVE_WINDOW: (f64, f64) = (0.24, 0.27);
const SOLVER_AGREEMENT: f64 = 0.01;
const TAILS_N: usize = 1000;

/// Marks a violated claim in the log without aborting the run.
fn finding(message: &str) {
    eprintln!("FINDING: {message}");
}

pub fn cmd_qrac_check(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let expected = optimal_success_prob();
    let mut rows = Vec::new();
    let mut max_err = 0.0f64;
    let mut mismatch_err = 0.0f64;
    for b0 in [false, true] {
        for b1 in [false, true] {
            let state = encode(b0, b1);
            for alpha in [false, true] {
                let matching = decode_prob(alpha, &state);
                max_err = max_err.max((matching - expected).abs());
                // Guess of bit alpha from the other basis, averaged over
                // the two encodings sharing this row's bit alpha.
                let basis = DecodingBasis::new(!alpha);
                let mut other_guess = 0.0;
                for other in [false, true] {
                    let (ob0, ob1) = if alpha {
                        (other, state.bit(alpha))
                    } else {
                        (state.bit(alpha), other)
                    };
                    let s = encode(ob0, ob1);
                    let effect = basis.effects().effect(s.bit(alpha));
                    other_guess += 0.5 * born_prob(effect, s.rho()).expect("valid");
                }
                mismatch_err = mismatch_err.max((other_guess - 0.5).abs());
                rows.push(format!(
                    "{},{},{},{},{}",
                    b0 as u8, b1 as u8, alpha as u8, matching, other_guess
                ));
            }
        }
    }
    let passed = max_err <= 1e-12;
    if !passed {
        finding(&format!(
            "matching-bit decode probability deviates from the optimum by {max_err:e}"
        ));
    }

    #[derive(Serialize)]
    struct QracCheckRecord {
        command: &'static str,
        artifact_version: &'static str,
        seed: u64,
        passed: bool,
        expected_matching_prob: f64,
        max_matching_error: f64,
        max_mismatch_error: f64,
    }
    let dir = &config.output_dir;
    write_csv(
        dir,
        "qrac_check.csv",
        "b0,b1,alpha,matching_prob,other_bit_guess_prob",
        &rows,
    )?;
    write_json(
        dir,
        "qrac_check.json",
        &QracCheckRecord {
            command: "qrac-check",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            expected_matching_prob: expected,
            max_matching_error: max_err,
            max_mismatch_error: mismatch_err,
        },
    )?;
    record_timing(dir, "qrac-check", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

#[derive(Serialize)]
struct OptimizeRecord {
    command: &'static str,
    artifact_version: &'static str,
    seed: u64,
    passed: bool,
    multistart: OptimizationReport,
    evolution: OptimizationReport,
    agreement_delta: f64,
    objective_window: (f64, f64),
}

pub fn cmd_optimize(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let solver_config = SolverConfig {
        constraint_threshold: config.constraint_threshold,
        ..SolverConfig::default()
    };
    let multistart = solve_multistart(config.restarts, config.seed, &solver_config)?;
    let evolution_config = EvolutionConfig {
        constraint_threshold: config.constraint_threshold,
        ..EvolutionConfig::default()
    };
    let evolution = solve_evolution_with(
        config.generations_max,
        DE_POPULATION,
        config.seed,
        &evolution_config,
    )?;
    let delta = (multistart.objective - evolution.objective).abs();
    let in_window = |x: f64| (OBJECTIVE_WINDOW.0..=OBJECTIVE_WINDOW.1).contains(&x);
    let passed = in_window(multistart.objective)
        && in_window(evolution.objective)
        && delta <= SOLVER_AGREEMENT
        && multistart.constraint_value >= config.constraint_threshold
        && evolution.constraint_value >= config.constraint_threshold;
    if !passed {
        finding(&format!(
            "solver outputs out of range: multistart {} / evolution {} (delta {delta})",
            multistart.objective, evolution.objective
        ));
    }
    let dir = &config.output_dir;
    write_json(
        dir,
        "optimize.json",
        &OptimizeRecord {
            command: "optimize",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            multistart,
            evolution,
            agreement_delta: delta,
            objective_window: OBJECTIVE_WINDOW,
        },
    )?;
    record_timing(dir, "optimize", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

#[derive(Serialize)]
struct CertifyRecord {
    command: &'static str,
    artifact_version: &'static str,
    seed: u64,
    passed: bool,
    conjectured_bound: f64,
    summary: CertifierSummary,
    sweep: ClaimSweepReport,
}

pub fn cmd_certify(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let summary = certify_net_with(
        config.grid_step,
        &NetConfig {
            constraint_threshold: config.constraint_threshold,
            ..NetConfig::default()
        },
    );
    let sweep = sweep_claim_instances(CLAIM_SWEEP_SAMPLES, config.seed, ExecMode::default());
    let net_ok = summary.net_max <= CONJECTURED_OBJECTIVE_BOUND;
    if !net_ok {
        finding(&format!(
            "grid point exceeds the conjectured bound: {} at {:?}",
            summary.net_max, summary.net_argmax
        ));
    }
    if sweep.violations > 0 {
        finding(&format!(
            "claim violated on {} of {} sampled POVMs (first at {:?})",
            sweep.violations, sweep.samples, sweep.first_violation
        ));
    }
    let passed = net_ok && sweep.violations == 0;
    let dir = &config.output_dir;
    write_json(
        dir,
        "certify.json",
        &CertifyRecord {
            command: "certify",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            conjectured_bound: CONJECTURED_OBJECTIVE_BOUND,
            summary,
            sweep,
        },
    )?;
    record_timing(dir, "certify", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

/// Monte Carlo honest-read success frequency at one size.
fn honest_read_frequency(n: usize, trials: u64, seed: u64) -> f64 {
    let base = derive_seed(seed, 0x52_45_41_44); // "READ"
    let successes = blocked_fold(
        ExecMode::default(),
        trials as usize,
        256,
        |_, range| {
            let mut hits = 0u64;
            for t in range {
                let t = t as u64;
                let m0 = Message::new(vec![0x0f; 4]).expect("fits");
                let m1 = Message::new(vec![0xf0; 4]).expect("fits");
                let mut inst = otm_prep(n, m0, m1, derive_seed(base, 2 * t));
                let streams = MeasurementStreams::new(derive_seed(base, 2 * t + 1));
                if otm_read(&mut inst, false, &streams).is_some() {
                    hits += 1;
                }
            }
            hits
        },
        0u64,
        |acc, hits| acc + hits,
    );
    successes as f64 / trials as f64
}

/// Smallest multiple of 20 whose exact failure probability is at most
/// `target`, found by doubling then bisection over multiples of 20.
fn crossover_n(target: f64) -> usize {
    let failure = |n: usize| 1.0 - honest_success_exact(n);
    let mut hi = 20;
    while failure(hi) > target {
        hi *= 2;
        if hi > 1 << 24 {
            return hi;
        }
    }
    let mut lo = 20;
    while hi - lo > 20 {
        let mid = ((lo + hi) / 2 + 10) / 20 * 20;
        if failure(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Serialize)]
struct LargeNRecord {
    n: usize,
    exact_success: f64,
    meets_target: bool,
}

#[derive(Serialize)]
struct CorrectnessRecord {
    command: &'static str,
    artifact_version: &'static str,
    seed: u64,
    passed: bool,
    large_n: LargeNRecord,
    crossover_n: usize,
    note: String,
}

pub fn cmd_correctness(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut all_within = true;
    for &n in &config.n_values {
        let exact = honest_success_exact(n);
        let bound = chernoff_failure_bound(n);
        let mc = honest_read_frequency(n, config.trials, config.seed);
        let sigma = (exact * (1.0 - exact) / config.trials as f64).sqrt();
        let within = (mc - exact).abs() <= 3.0 * sigma;
        if !within {
            finding(&format!(
                "honest-read Monte Carlo at n={n} off by more than 3 sigma: {mc} vs {exact}"
            ));
            all_within = false;
        }
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            n, exact, bound, mc, sigma, config.trials, within
        ));
    }
    let large_n = 1_000_000;
    let large_exact = honest_success_exact(large_n);
    let meets_target = large_exact >= 1.0 - 1e-6;
    if !meets_target {
        finding(&format!(
            "exact success at n={large_n} is only {large_exact}"
        ));
    }
    let cross = crossover_n(1e-6);
    let passed = all_within && meets_target;
    let dir = &config.output_dir;
    write_csv(
        dir,
        "correctness.csv",
        "n,exact_success,chernoff_failure_bound,mc_success,mc_sigma,trials,within_3sigma",
        &rows,
    )?;
    write_json(
        dir,
        "correctness.json",
        &CorrectnessRecord {
            command: "correctness",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            large_n: LargeNRecord {
                n: large_n,
                exact_success: large_exact,
                meets_target,
            },
            crossover_n: cross,
            note: format!(
                "honest-read failure drops below 1e-6 only from n = {cross} on \
                 (margin 0.15 - sin^2(pi/8) ~ 0.0036); smaller sizes are \
                 reported through exact binomial tails, not asymptotics"
            ),
        },
    )?;
    record_timing(dir, "correctness", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

#[derive(Serialize)]
struct ConstantsRecord {
    lemma_mean_cap: f64,
    lemma_holds: bool,
    guess_bound_at_conjecture: f64,
    soundness_fraction: f64,
    soundness_holds: bool,
}

#[derive(Serialize)]
struct AdversaryRecord {
    command: &'static str,
    artifact_version: &'static str,
    seed: u64,
    passed: bool,
    constants: ConstantsRecord,
    simulator_rows: Vec<SimRow>,
}

#[derive(Serialize)]
struct SimRow {
    #[serde(flatten)]
    report: HybridReport,
    tv_cap: f64,
    passed: bool,
}

pub fn cmd_adversary(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let mut passed = true;

    // Proof-constant arithmetic.
    let lemma = lemma_acc_input_bound();
    let fraction = soundness_fraction();
    let cap = guess_bound(CONJECTURED_OBJECTIVE_BOUND);
    let constants_ok = lemma.holds
        && fraction.holds
        && (lemma.mean_cap - 0.8444).abs() <= 1e-12
        && (fraction.fraction - 0.82).abs() <= 1e-12
        && (cap - 0.65).abs() <= 1e-12;
    if !constants_ok {
        finding("proof-constant arithmetic failed");
        passed = false;
    }

    // Exact unlock tails for the product strategies.
    let strategies = [
        ProductStrategy::z_basis(),
        ProductStrategy::x_basis(),
        ProductStrategy::best_single_angle(),
        ProductStrategy::trivial_coin(),
    ];
    let sizes: Vec<usize> = (20..=200).step_by(20).collect();
    let mut rows = Vec::new();
    for strategy in &strategies {
        let q1 = strategy.per_bit_success(true);
        let mut prev = f64::INFINITY;
        for &n in &sizes {
            let report = attack_unlock_probs(strategy, n);
            let ordered =
                report.p_unlock_both <= report.p_unlock0.min(report.p_unlock1) + 1e-12;
            if !ordered {
                finding(&format!(
                    "unlock ordering violated for {} at n={n}",
                    strategy.label()
                ));
                passed = false;
            }
            if q1 < 0.85 {
                if report.p_unlock1 > prev + 1e-12 {
                    finding(&format!(
                        "p_unlock1 not nonincreasing for {} at n={n}",
                        strategy.label()
                    ));
                    passed = false;
                }
                prev = report.p_unlock1;
            }
            rows.push(format!(
                "exact,{},{},{},{},{},{},{}",
                report.strategy,
                n,
                report.trials,
                report.p_unlock0,
                report.p_unlock1,
                report.p_unlock_both,
                report.sim_total_variation
            ));
        }
        // Success profiles at the largest size go to the CSV as context.
        let profile = profile_of(strategy, false, *sizes.last().expect("nonempty"));
        rows.push(format!(
            "profile,{},{},0,{},{},0,0",
            strategy.label(),
            profile.p.len(),
            profile.p[0],
            strategy.per_bit_success(true),
        ));
    }

    // Real-vs-simulated distinguishing runs.
    let sim_n = 100;
    let sigma = 3.0 / (config.trials as f64).sqrt();
    let mut simulator_rows = Vec::new();
    for strategy in SimStrategy::builtin_suite() {
        let report =
            simulator_experiment(&strategy, sim_n, config.trials, config.seed, ExecMode::default())?;
        let tv_cap = strategy.exact_null_accept_prob(sim_n) + sigma;
        let row_ok = report.sim_total_variation <= tv_cap
            && report.p_unlock_both <= report.p_unlock0.min(report.p_unlock1) + 1e-12;
        if !row_ok {
            finding(&format!(
                "simulator distinguishability too high for {}: {} > {}",
                report.strategy, report.sim_total_variation, tv_cap
            ));
            passed = false;
        }
        rows.push(format!(
            "simulator,{},{},{},{},{},{},{}",
            report.strategy,
            report.n,
            report.trials,
            report.p_unlock0,
            report.p_unlock1,
            report.p_unlock_both,
            report.sim_total_variation
        ));
        simulator_rows.push(SimRow {
            report,
            tv_cap,
            passed: row_ok,
        });
    }

    let dir = &config.output_dir;
    write_csv(
        dir,
        "adversary.csv",
        "kind,strategy,n,trials,p_unlock0,p_unlock1,p_unlock_both,sim_total_variation",
        &rows,
    )?;
    write_json(
        dir,
        "adversary.json",
        &AdversaryRecord {
            command: "adversary",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            constants: ConstantsRecord {
                lemma_mean_cap: lemma.mean_cap,
                lemma_holds: lemma.holds,
                guess_bound_at_conjecture: cap,
                soundness_fraction: fraction.fraction,
                soundness_holds: fraction.holds,
            },
            simulator_rows,
        },
    )?;
    record_timing(dir, "adversary", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

#[derive(Serialize)]
struct TailsRecord {
    command: &'static str,
    artifact_version: &'static str,
    seed: u64,
    passed: bool,
    n: usize,
    azuma_spot_value: f64,
}

pub fn cmd_tails(config: &ExperimentConfig) -> Result<bool> {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut passed = true;
    let grid = standard_t_grid(TAILS_N);
    let cases = [
        (AdaptiveRule::Saturate, 0.5),
        (AdaptiveRule::Never, 0.8),
        (AdaptiveRule::DecayOnSuccess { factor: 0.9 }, 0.6),
    ];
    for (rule, cap) in cases {
        let spec = AdaptiveBernoulliSpec::uniform(TAILS_N, cap, rule.clone());
        let checks = verify_tail(&spec, &grid, config.trials, config.seed);
        for check in checks {
            if !check.passed {
                finding(&format!(
                    "tail bound violated for rule {} at t={}: {} > {}",
                    rule.label(),
                    check.t,
                    check.empirical,
                    check.bound
                ));
                passed = false;
            }
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                rule.label(),
                cap,
                check.t,
                check.bound,
                check.empirical,
                check.trials,
                check.passed
            ));
        }
    }
    let dir = &config.output_dir;
    write_csv(
        dir,
        "tails.csv",
        "rule,cap,t,bound,empirical,trials,passed",
        &rows,
    )?;
    write_json(
        dir,
        "tails.json",
        &TailsRecord {
            command: "tails",
            artifact_version: artifact_version(),
            seed: config.seed,
            passed,
            n: TAILS_N,
            azuma_spot_value: azuma_supermartingale_bound(100, 10.0),
        },
    )?;
    record_timing(dir, "tails", t0.elapsed().as_secs_f64())?;
    Ok(passed)
}

#[derive(Serialize)]
struct ManifestEntry {
    command: String,
    claim: String,
    outputs: Vec<PathBuf>,
    wall_time_s: Option<f64>,
    passed: bool,
}

#[derive(Serialize)]
struct RunManifest {
    artifact_version: &'static str,
    config: ExperimentConfig,
    entries: Vec<ManifestEntry>,
    overall_pass: bool,
}

/// (command, claim label, result files). The first file is the JSON record
/// carrying the `passed` flag.
const MANIFEST_SPEC: &[(&str, &str, &[&str])] = &[
    (
        "qrac-check",
        "optimal-qrac-success-probability",
        &["qrac_check.json", "qrac_check.csv"],
    ),
    ("optimize", "disturbance-optimum-value", &["optimize.json"]),
    ("certify", "disturbance-grid-bound", &["certify.json"]),
    (
        "correctness",
        "honest-read-success-tails",
        &["correctness.json", "correctness.csv"],
    ),
    (
        "adversary",
        "attack-unlock-bounds",
        &["adversary.json", "adversary.csv"],
    ),
    (
        "tails",
        "supermartingale-tail-bound",
        &["tails.json", "tails.csv"],
    ),
];

pub enum ReportOutcome {
    AllPassed,
    SomeFailed,
}

pub fn cmd_report(config: &ExperimentConfig) -> Result<ReportOutcome> {
    let dir = &config.output_dir;
    let timings = crate::output::read_timings(dir);
    let mut entries = Vec::new();
    let mut overall = true;
    for (command, claim, files) in MANIFEST_SPEC {
        let mut outputs = Vec::new();
        for file in *files {
            let path = dir.join(file);
            if !path.exists() {
                bail!("missing output {} (run `{command}` first)", path.display());
            }
            outputs.push(path);
        }
        let record_text = std::fs::read_to_string(&outputs[0])?;
        let record: serde_json::Value = serde_json::from_str(&record_text)?;
        let passed = record
            .get("passed")
            .and_then(serde_json::Value::as_bool)
            .ok_or_else(|| anyhow::anyhow!("{} lacks a passed flag", outputs[0].display()))?;
        overall &= passed;
        entries.push(ManifestEntry {
            command: command.to_string(),
            claim: claim.to_string(),
            outputs,
            wall_time_s: timings.get(*command).copied(),
            passed,
        });
    }
    let manifest = RunManifest {
        artifact_version: artifact_version(),
        config: config.clone(),
        entries,
        overall_pass: overall,
    };
    write_json(dir, "run_manifest.json", &manifest)?;

    println!("run summary ({} entries):", manifest.entries.len());
    for entry in &manifest.entries {
        let time = entry
            .wall_time_s
            .map(|s| format!("{s:.2} s"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {:12} {}  [{}]  {}",
            entry.command,
            if entry.passed { "PASS" } else { "FAIL" },
            time,
            entry.claim
        );
    }
    println!(
        "overall: {}",
        if manifest.overall_pass { "PASS" } else { "FAIL" }
    );
    Ok(if overall {
        ReportOutcome::AllPassed
    } else {
        ReportOutcome::SomeFailed
    })
}
