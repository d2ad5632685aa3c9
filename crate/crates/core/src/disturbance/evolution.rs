//! Population-based global search (differential evolution, rand/1/bin).
//!
//! Population members live in the raw 4-parameter space; infeasible
//! candidates are repaired by clamping `a0` and radially rescaling `v`
//! before evaluation. Mutation randomness is drawn from a stream keyed by
//! (seed, generation, member), so synchronous generations evaluate
//! identically under any worker count.

use std::time::Instant;

use rand::Rng;

use super::{
    constraint, objective, penalized, snap_to_constraint, DisturbanceError, OptimizationReport,
    PovmParams, SolverKind, CONSTRAINT_THRESHOLD,
};
use crate::exec::{self, ExecMode};
use crate::seeding::{derive_seed, stream_rng};

/// Knobs for [`solve_evolution`].
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    /// Differential weight applied to the difference vector.
    pub mutation_factor: f64,
    pub crossover_rate: f64,
    pub penalty_weight: f64,
    pub constraint_threshold: f64,
    /// Early stop once the population fitness spread falls this low.
    pub spread_tol: f64,
    /// Explicit starting population (length must equal `population`);
    /// sampled uniformly from the feasible set when absent.
    pub initial_population: Option<Vec<PovmParams>>,
    pub exec: ExecMode,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            mutation_factor: 0.7,
            crossover_rate: 0.9,
            penalty_weight: 10.0,
            constraint_threshold: CONSTRAINT_THRESHOLD,
            spread_tol: 1e-10,
            initial_population: None,
            exec: ExecMode::default(),
        }
    }
}

pub fn solve_evolution(
    generations_max: u64,
    population: usize,
    seed: u64,
) -> Result<OptimizationReport, DisturbanceError> {
    solve_evolution_with(generations_max, population, seed, &EvolutionConfig::default())
}

pub fn solve_evolution_with(
    generations_max: u64,
    population: usize,
    seed: u64,
    config: &EvolutionConfig,
) -> Result<OptimizationReport, DisturbanceError> {
    assert!(population >= 8, "population must be at least 8");
    let t0 = Instant::now();
    let threshold = config.constraint_threshold;
    let fitness_of = |x: &[f64; 4]| penalized(x, config.penalty_weight, threshold);

    let mut pop: Vec<[f64; 4]> = match &config.initial_population {
        Some(points) => {
            assert_eq!(points.len(), population, "initial population size mismatch");
            points.iter().map(|p| p.repair().as_array()).collect()
        }
        None => {
            let init_seed = derive_seed(seed, 0x44_45_49_4e); // "DEIN"
            exec::map_collect(config.exec, population, |i| {
                let mut rng = stream_rng(init_seed, i as u64);
                super::sample_feasible(&mut rng).as_array()
            })
        }
    };
    let mut fitness: Vec<f64> = exec::map_collect(config.exec, population, |i| fitness_of(&pop[i]));

    let gen_seed = derive_seed(seed, 0x44_45_47_45); // "DEGE"
    let mut generations_run = 0;
    for gen in 0..generations_max {
        let snapshot = &pop;
        let candidates: Vec<[f64; 4]> = exec::map_collect(config.exec, population, |i| {
            let mut rng = stream_rng(gen_seed, gen * population as u64 + i as u64);
            let mut pick_distinct = |exclude: &[usize]| loop {
                let j = rng.gen_range(0..population);
                if !exclude.contains(&j) {
                    return j;
                }
            };
            let a = pick_distinct(&[i]);
            let b = pick_distinct(&[i, a]);
            let c = pick_distinct(&[i, a, b]);
            let forced = rng.gen_range(0..4);
            let mut trial = snapshot[i];
            for d in 0..4 {
                let crossed = rng.gen::<f64>() < config.crossover_rate;
                if crossed || d == forced {
                    trial[d] = snapshot[a][d]
                        + config.mutation_factor * (snapshot[b][d] - snapshot[c][d]);
                }
            }
            PovmParams::from_array(trial).repair().as_array()
        });
        let candidate_fitness: Vec<f64> =
            exec::map_collect(config.exec, population, |i| fitness_of(&candidates[i]));
        for i in 0..population {
            if candidate_fitness[i] <= fitness[i] {
                pop[i] = candidates[i];
                fitness[i] = candidate_fitness[i];
            }
        }
        generations_run = gen + 1;
        let spread = fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - fitness.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread <= config.spread_tol {
            break;
        }
    }

    // Finish every member on the constraint surface and keep the best
    // feasible objective.
    let mut best: Option<(PovmParams, f64)> = None;
    for x in &pop {
        let Some(snapped) = snap_to_constraint(&PovmParams::from_array(*x), threshold) else {
            continue;
        };
        let Ok((obj, _)) = objective(&snapped) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((_, best_obj)) => obj > *best_obj,
        };
        if better {
            best = Some((snapped, obj));
        }
    }
    let (params, _) = best.ok_or(DisturbanceError::NoFeasiblePoint)?;
    let (obj, argmax_b0) = objective(&params)?;
    let constraint_value = constraint(&params)?;
    Ok(OptimizationReport {
        best_params: params,
        objective: obj,
        constraint_value,
        argmax_b0: argmax_b0 as u8,
        solver: SolverKind::Evolution,
        restarts_or_generations: generations_run,
        seed,
        wall_time: t0.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_population_with_zero_mutation_is_a_fixed_point() {
        let point = PovmParams::z_basis();
        let config = EvolutionConfig {
            mutation_factor: 0.0,
            initial_population: Some(vec![point; 8]),
            ..EvolutionConfig::default()
        };
        let report = solve_evolution_with(50, 8, 3, &config).unwrap();
        let (expected, _) = objective(&point).unwrap();
        assert_abs_diff_eq!(report.objective, expected, epsilon = 1e-12);
    }

    #[test]
    fn same_seed_gives_identical_reports() {
        let a = solve_evolution(60, 16, 77).unwrap();
        let b = solve_evolution(60, 16, 77).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let seq = EvolutionConfig {
            exec: ExecMode::Sequential,
            ..EvolutionConfig::default()
        };
        let c = solve_evolution_with(60, 16, 77, &seq).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }
}
