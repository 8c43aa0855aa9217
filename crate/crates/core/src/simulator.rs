//! Synthetic admissions data with known difficulty truth.
//!
//! Students carry standard-normal abilities and are placed stochastically
//! into schools whose mean ability is close to theirs; universities carry
//! standard-normal difficulties. A student is a candidate of every
//! university within the ability window, enters the most difficult one that
//! still has room, and is counted as accepted by every university whose
//! entrant cutoff their ability clears.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, HighSchool, University};
use crate::grid::Grid;
use crate::seeding::child_seed;
use crate::{Error, Result};

const POPULATION_STREAM: u64 = 1;
const ADMISSIONS_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationParams {
    pub student_count: u32,
    pub school_count: u32,
    pub students_per_school: u32,
    /// Spread of school mean abilities.
    pub sigma_a: f64,
    /// Within-school ability spread; sigma_a² + sigma_e² must equal 1.
    pub sigma_e: f64,
    /// A school's realized std-dev must satisfy |σ − sigma_e| ≤ this limit.
    pub school_sigma_limit: f64,
    pub university_count: u32,
    pub entrants_per_university: u32,
    /// Students consider exams within ± this of their own ability.
    pub ability_window: f64,
    pub rng_seed: u64,
    pub max_assignment_retries: u32,
}

impl SimulationParams {
    /// Full-scale defaults: 1,100 schools of 260 students, 160 universities
    /// of 1,600 entrants, σ_a = 0.8, σ_e = 0.6, window 1.0, σ limit 1.96 × 0.20.
    pub fn table_defaults(rng_seed: u64) -> Self {
        Self {
            student_count: 286_000,
            school_count: 1_100,
            students_per_school: 260,
            sigma_a: 0.8,
            sigma_e: 0.6,
            school_sigma_limit: 1.96 * 0.20,
            university_count: 160,
            entrants_per_university: 1_600,
            ability_window: 1.0,
            rng_seed,
            max_assignment_retries: 1_000,
        }
    }

    /// Small instance for quick runs and tests; same shape, reduced counts.
    pub fn small(rng_seed: u64) -> Self {
        Self {
            student_count: 3_000,
            school_count: 60,
            students_per_school: 50,
            university_count: 20,
            entrants_per_university: 120,
            ..Self::table_defaults(rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !check_sigma_identity(self.sigma_a, self.sigma_e) {
            return Err(Error::BadSimulationParams(format!(
                "sigma_a² + sigma_e² must equal 1, got {}",
                self.sigma_a * self.sigma_a + self.sigma_e * self.sigma_e
            )));
        }
        if self.student_count != self.school_count * self.students_per_school {
            return Err(Error::BadSimulationParams(format!(
                "student_count {} != school_count {} × students_per_school {}",
                self.student_count, self.school_count, self.students_per_school
            )));
        }
        for (name, v) in [
            ("student_count", self.student_count),
            ("school_count", self.school_count),
            ("students_per_school", self.students_per_school),
            ("university_count", self.university_count),
            ("entrants_per_university", self.entrants_per_university),
        ] {
            if v == 0 {
                return Err(Error::BadSimulationParams(format!("{name} must be positive")));
            }
        }
        if !(self.ability_window > 0.0) || !(self.school_sigma_limit > 0.0) {
            return Err(Error::BadSimulationParams(
                "ability_window and school_sigma_limit must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn school_id(&self, rank_row: usize) -> String {
        let width = digits(self.school_count);
        format!("s{:0width$}", rank_row + 1)
    }

    pub fn university_id(&self, col: usize) -> String {
        let width = digits(self.university_count);
        format!("u{:0width$}", col + 1)
    }
}

fn digits(n: u32) -> usize {
    n.max(1).to_string().len()
}

/// True iff σ_a² + σ_e² = 1 within 1e-9.
pub fn check_sigma_identity(sigma_a: f64, sigma_e: f64) -> bool {
    (sigma_a * sigma_a + sigma_e * sigma_e - 1.0).abs() <= 1e-9
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// Per-student ability, standard-normal.
    pub abilities: Vec<f64>,
    /// Per-student school assignment (generation index).
    pub school_of: Vec<u32>,
    /// School mean abilities as drawn, Normal(0, σ_a²).
    pub drawn_school_means: Vec<f64>,
    pub realized_school_means: Vec<f64>,
    pub realized_school_stddevs: Vec<f64>,
    /// School generation indices sorted by realized mean, descending.
    pub schools_by_rank: Vec<u32>,
}

/// Draws abilities and school means, then places students with probability
/// ∝ exp(−(ability − school mean)²/(2σ_e²)) among schools with remaining
/// capacity. The whole placement is retried until every school's realized
/// std-dev sits within the limit band.
pub fn generate_population(params: &SimulationParams) -> Result<Population> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(params.rng_seed, POPULATION_STREAM));
    let n_students = params.student_count as usize;
    let n_schools = params.school_count as usize;

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let abilities: Vec<f64> = (0..n_students).map(|_| std_normal.sample(&mut rng)).collect();
    let mean_dist = Normal::new(0.0, params.sigma_a).expect("sigma_a > 0");
    let means: Vec<f64> = (0..n_schools).map(|_| mean_dist.sample(&mut rng)).collect();

    let inv_two_var = 1.0 / (2.0 * params.sigma_e * params.sigma_e);
    let mut order: Vec<u32> = (0..n_students as u32).collect();
    let mut school_of = vec![0u32; n_students];
    let mut weights = vec![0.0f64; n_schools];

    let mut attempt = 0;
    loop {
        order.shuffle(&mut rng);
        let mut remaining = vec![params.students_per_school; n_schools];
        for &student in &order {
            let a = abilities[student as usize];
            let mut total = 0.0;
            for s in 0..n_schools {
                let w = if remaining[s] > 0 {
                    (-(a - means[s]) * (a - means[s]) * inv_two_var).exp()
                } else {
                    0.0
                };
                weights[s] = w;
                total += w;
            }
            let pick = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut chosen = None;
                for (s, &w) in weights.iter().enumerate() {
                    if w > 0.0 {
                        chosen = Some(s);
                        u -= w;
                        if u <= 0.0 {
                            break;
                        }
                    }
                }
                chosen.expect("total > 0 implies a positive weight")
            } else {
                // all reachable weights underflowed; fall back to uniform
                let open: Vec<usize> = (0..n_schools).filter(|&s| remaining[s] > 0).collect();
                open[rng.random_range(0..open.len())]
            };
            school_of[student as usize] = pick as u32;
            remaining[pick] -= 1;
        }

        let (realized_means, realized_stds) = school_moments(&abilities, &school_of, n_schools);
        let violations: Vec<(usize, f64)> = realized_stds
            .iter()
            .enumerate()
            .filter(|(_, &sd)| (sd - params.sigma_e).abs() > params.school_sigma_limit)
            .map(|(s, &sd)| (s, sd))
            .collect();
        if violations.is_empty() {
            let mut schools_by_rank: Vec<u32> = (0..n_schools as u32).collect();
            schools_by_rank.sort_by(|&a, &b| {
                realized_means[b as usize]
                    .total_cmp(&realized_means[a as usize])
                    .then(a.cmp(&b))
            });
            return Ok(Population {
                abilities,
                school_of,
                drawn_school_means: means,
                realized_school_means: realized_means,
                realized_school_stddevs: realized_stds,
                schools_by_rank,
            });
        }
        attempt += 1;
        if attempt > params.max_assignment_retries {
            let mut worst = violations;
            worst.sort_by(|a, b| {
                (b.1 - params.sigma_e)
                    .abs()
                    .total_cmp(&(a.1 - params.sigma_e).abs())
            });
            worst.truncate(5);
            return Err(Error::AssignmentRetriesExhausted {
                retries: params.max_assignment_retries,
                worst,
            });
        }
    }
}

fn school_moments(abilities: &[f64], school_of: &[u32], n_schools: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sums = vec![0.0f64; n_schools];
    let mut sq_sums = vec![0.0f64; n_schools];
    let mut counts = vec![0u32; n_schools];
    for (&a, &s) in abilities.iter().zip(school_of) {
        sums[s as usize] += a;
        sq_sums[s as usize] += a * a;
        counts[s as usize] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&sum, &c)| sum / f64::from(c.max(1)))
        .collect();
    let stds: Vec<f64> = (0..n_schools)
        .map(|s| {
            let c = f64::from(counts[s].max(1));
            (sq_sums[s] / c - means[s] * means[s]).max(0.0).sqrt()
        })
        .collect();
    (means, stds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub params: SimulationParams,
    /// Rows: schools in rank order (row 0 = highest realized mean).
    /// Columns: universities in generation order.
    pub candidate: Grid<u32>,
    pub entrance: Grid<u32>,
    pub acceptance: Grid<u32>,
    /// Per-university difficulty, generation order.
    pub difficulties: Vec<f64>,
    /// Per-university true rank (1 = most difficult), generation order.
    pub true_ranks: Vec<u32>,
    /// Realized entrant count per university.
    pub entrant_counts: Vec<u32>,
    /// Universities that admitted nobody (kept in the matrices, flagged).
    pub zero_entrant_universities: Vec<usize>,
    pub population: Population,
}

/// Runs the candidacy / entrance / acceptance pipeline with freshly drawn
/// difficulty levels.
pub fn run_admissions(population: Population, params: &SimulationParams) -> SimulationOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(params.rng_seed, ADMISSIONS_STREAM));
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let difficulties: Vec<f64> = (0..params.university_count)
        .map(|_| std_normal.sample(&mut rng))
        .collect();
    run_admissions_with_difficulties(population, difficulties, params)
}

/// Same pipeline with caller-supplied difficulties (tests, replays).
pub fn run_admissions_with_difficulties(
    population: Population,
    difficulties: Vec<f64>,
    params: &SimulationParams,
) -> SimulationOutput {
    assert_eq!(difficulties.len(), params.university_count as usize);
    let n_students = population.abilities.len();
    let n_schools = population.realized_school_means.len();
    let n_univ = difficulties.len();
    let window = params.ability_window;

    // row index by school generation index
    let mut row_of = vec![0usize; n_schools];
    for (row, &s) in population.schools_by_rank.iter().enumerate() {
        row_of[s as usize] = row;
    }
    let student_row: Vec<u32> = population
        .school_of
        .iter()
        .map(|&s| row_of[s as usize] as u32)
        .collect();

    // students by descending ability; ties by index
    let mut by_ability: Vec<u32> = (0..n_students as u32).collect();
    by_ability.sort_by(|&a, &b| {
        population.abilities[b as usize]
            .total_cmp(&population.abilities[a as usize])
            .then(a.cmp(&b))
    });
    let sorted_abilities: Vec<f64> = by_ability
        .iter()
        .map(|&i| population.abilities[i as usize])
        .collect();

    // universities by descending difficulty; ties by index
    let mut by_difficulty: Vec<usize> = (0..n_univ).collect();
    by_difficulty.sort_by(|&a, &b| difficulties[b].total_cmp(&difficulties[a]).then(a.cmp(&b)));
    let mut true_ranks = vec![0u32; n_univ];
    for (rank, &u) in by_difficulty.iter().enumerate() {
        true_ranks[u] = rank as u32 + 1;
    }

    let mut candidate = Grid::new(n_schools, n_univ);
    let mut entrance = Grid::new(n_schools, n_univ);
    let mut acceptance = Grid::new(n_schools, n_univ);
    let mut placed = vec![false; n_students];
    let mut entrant_counts = vec![0u32; n_univ];
    let mut zero_entrants = Vec::new();

    for &u in &by_difficulty {
        let d = difficulties[u];
        // candidate range in the ability-sorted list: |ability − d| ≤ window
        let lo = sorted_abilities.partition_point(|&a| a > d + window);
        let hi = sorted_abilities.partition_point(|&a| a >= d - window);
        for p in lo..hi {
            let student = by_ability[p] as usize;
            *candidate.get_mut(student_row[student] as usize, u) += 1;
        }

        // entrance: unplaced candidates in descending ability, up to capacity
        let mut entered = 0u32;
        let mut cutoff_ability = f64::NEG_INFINITY;
        for p in lo..hi {
            if entered >= params.entrants_per_university {
                break;
            }
            let student = by_ability[p] as usize;
            if !placed[student] {
                placed[student] = true;
                *entrance.get_mut(student_row[student] as usize, u) += 1;
                cutoff_ability = sorted_abilities[p];
                entered += 1;
            }
        }
        entrant_counts[u] = entered;
        if entered == 0 {
            zero_entrants.push(u);
            continue; // no cutoff, no acceptances
        }

        // acceptance: every candidate at or above the weakest entrant
        let acc_hi = sorted_abilities.partition_point(|&a| a >= cutoff_ability);
        for p in lo..acc_hi.min(hi) {
            let student = by_ability[p] as usize;
            *acceptance.get_mut(student_row[student] as usize, u) += 1;
        }
    }

    zero_entrants.sort_unstable();
    SimulationOutput {
        params: params.clone(),
        candidate,
        entrance,
        acceptance,
        difficulties,
        true_ranks,
        entrant_counts,
        zero_entrant_universities: zero_entrants,
        population,
    }
}

/// Population generation plus admissions under one seed.
pub fn simulate(params: &SimulationParams) -> Result<SimulationOutput> {
    let population = generate_population(params)?;
    Ok(run_admissions(population, params))
}

impl SimulationOutput {
    /// The estimation dataset: schools in rank order, universities in
    /// generation order with true ranks attached. Universities with no
    /// acceptances at all cannot be ranked and are dropped; their ids are
    /// returned alongside.
    pub fn to_dataset(&self) -> Result<(Dataset, Vec<String>)> {
        let n_schools = self.candidate.rows();
        let n_univ = self.candidate.cols();
        let schools: Vec<HighSchool> = (0..n_schools)
            .map(|row| HighSchool {
                id: self.params.school_id(row),
                student_count: self.params.students_per_school,
            })
            .collect();

        let alive: Vec<usize> = (0..n_univ)
            .filter(|&u| (0..n_schools).any(|r| self.acceptance.at(r, u) > 0))
            .collect();
        let dropped: Vec<String> = (0..n_univ)
            .filter(|u| !alive.contains(u))
            .map(|u| self.params.university_id(u))
            .collect();

        // re-densify true ranks over the surviving universities
        let mut alive_by_rank: Vec<usize> = alive.clone();
        alive_by_rank.sort_by_key(|&u| self.true_ranks[u]);
        let mut dense_rank = vec![0u32; n_univ];
        for (pos, &u) in alive_by_rank.iter().enumerate() {
            dense_rank[u] = pos as u32 + 1;
        }

        let universities: Vec<University> = alive
            .iter()
            .map(|&u| University {
                id: self.params.university_id(u),
                entrant_count: self.entrant_counts[u].max(1),
                true_rank: Some(dense_rank[u]),
            })
            .collect();

        let mut grid = Grid::new(n_schools, alive.len());
        for r in 0..n_schools {
            for (c, &u) in alive.iter().enumerate() {
                grid.set(r, c, self.acceptance.at(r, u));
            }
        }
        Ok((Dataset::build(schools, universities, grid)?, dropped))
    }

    /// The id of the true-rank-1 university.
    pub fn top_university_id(&self) -> String {
        let top = self
            .true_ranks
            .iter()
            .position(|&r| r == 1)
            .expect("rank 1 exists");
        self.params.university_id(top)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_identity_examples() {
        assert!(check_sigma_identity(0.8, 0.6));
        assert!(check_sigma_identity(1.0, 0.0));
        assert!(!check_sigma_identity(0.5, 0.5));
    }

    #[test]
    fn params_validation_rejects_bad_combinations() {
        let mut p = SimulationParams::table_defaults(0);
        p.sigma_a = 0.5;
        p.sigma_e = 0.5;
        assert!(p.validate().is_err());

        let mut p = SimulationParams::table_defaults(0);
        p.student_count = 100;
        assert!(p.validate().is_err());
    }

    fn tiny_population(abilities: Vec<f64>, school_of: Vec<u32>, n_schools: usize) -> Population {
        let (means, stds) = school_moments(&abilities, &school_of, n_schools);
        let mut schools_by_rank: Vec<u32> = (0..n_schools as u32).collect();
        schools_by_rank
            .sort_by(|&a, &b| means[b as usize].total_cmp(&means[a as usize]).then(a.cmp(&b)));
        Population {
            abilities,
            school_of,
            drawn_school_means: means.clone(),
            realized_school_means: means,
            realized_school_stddevs: stds,
            schools_by_rank,
        }
    }

    fn tiny_params(n_students: u32, n_schools: u32, n_univ: u32, capacity: u32) -> SimulationParams {
        SimulationParams {
            student_count: n_students,
            school_count: n_schools,
            students_per_school: n_students / n_schools,
            sigma_a: 0.8,
            sigma_e: 0.6,
            school_sigma_limit: 10.0,
            university_count: n_univ,
            entrants_per_university: capacity,
            ability_window: 1.0,
            rng_seed: 0,
            max_assignment_retries: 10,
        }
    }

    #[test]
    fn admissions_hand_trace() {
        // abilities (1, 0, -1), difficulties (0.5, -0.5), capacity 1, window 1:
        // candidates u1 {s1,s2}, u2 {s2,s3}; entrants u1 {s1}, u2 {s2};
        // accepted u1 {s1}, u2 {s2}
        let pop = tiny_population(vec![1.0, 0.0, -1.0], vec![0, 0, 0], 1);
        let params = tiny_params(3, 1, 2, 1);
        let out = run_admissions_with_difficulties(pop, vec![0.5, -0.5], &params);
        assert_eq!(out.candidate.at(0, 0), 2);
        assert_eq!(out.candidate.at(0, 1), 2);
        assert_eq!(out.entrance.at(0, 0), 1);
        assert_eq!(out.entrance.at(0, 1), 1);
        assert_eq!(out.acceptance.at(0, 0), 1);
        assert_eq!(out.acceptance.at(0, 1), 1);
        assert_eq!(out.true_ranks, vec![1, 2]);
        assert!(out.zero_entrant_universities.is_empty());
    }

    #[test]
    fn single_student_single_university() {
        let pop = tiny_population(vec![0.3], vec![0], 1);
        let params = tiny_params(1, 1, 1, 1);
        let out = run_admissions_with_difficulties(pop, vec![0.0], &params);
        assert_eq!(out.candidate.at(0, 0), 1);
        assert_eq!(out.entrance.at(0, 0), 1);
        assert_eq!(out.acceptance.at(0, 0), 1);
    }

    #[test]
    fn student_outside_every_window_appears_nowhere() {
        let pop = tiny_population(vec![5.0, 0.0], vec![0, 0], 1);
        let params = tiny_params(2, 1, 1, 2);
        let out = run_admissions_with_difficulties(pop, vec![0.0], &params);
        // only the in-window student is counted anywhere
        assert_eq!(out.candidate.at(0, 0), 1);
        assert_eq!(out.entrance.at(0, 0), 1);
        assert_eq!(out.acceptance.at(0, 0), 1);
    }

    #[test]
    fn zero_entrant_university_is_flagged() {
        // second university's window contains nobody
        let pop = tiny_population(vec![0.0, 0.1], vec![0, 0], 1);
        let params = tiny_params(2, 1, 2, 2);
        let out = run_admissions_with_difficulties(pop, vec![0.0, 8.0], &params);
        assert_eq!(out.zero_entrant_universities, vec![1]);
        assert_eq!(out.entrant_counts[1], 0);
    }

    #[test]
    fn single_school_takes_every_student() {
        let mut params = tiny_params(40, 1, 2, 10);
        params.students_per_school = 40;
        let pop = generate_population(&params).unwrap();
        assert!(pop.school_of.iter().all(|&s| s == 0));
    }

    #[test]
    fn population_is_deterministic_per_seed() {
        let mut params = SimulationParams::small(77);
        params.student_count = 600;
        params.school_count = 12;
        params.students_per_school = 50;
        params.university_count = 6;
        params.entrants_per_university = 60;
        let a = generate_population(&params).unwrap();
        let b = generate_population(&params).unwrap();
        assert_eq!(a, b);
        let out_a = run_admissions(a, &params);
        let out_b = run_admissions(b, &params);
        assert_eq!(out_a, out_b);
    }

    #[test]
    fn small_scale_moments_are_sane() {
        let params = SimulationParams::small(3);
        let pop = generate_population(&params).unwrap();
        let n = pop.abilities.len() as f64;
        let mean: f64 = pop.abilities.iter().sum::<f64>() / n;
        let var: f64 = pop.abilities.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.1, "population variance {var}");
        // every school holds exactly its capacity
        let mut counts = vec![0u32; params.school_count as usize];
        for &s in &pop.school_of {
            counts[s as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c == params.students_per_school));
        // std-dev band honored
        for &sd in &pop.realized_school_stddevs {
            assert!((sd - params.sigma_e).abs() <= params.school_sigma_limit);
        }
    }

    #[test]
    fn simulation_invariants_hold_across_seeds() {
        for seed in 0..10 {
            let params = SimulationParams {
                student_count: 800,
                school_count: 16,
                students_per_school: 50,
                university_count: 8,
                entrants_per_university: 80,
                ..SimulationParams::table_defaults(seed)
            };
            let out = simulate(&params).unwrap();
            let mut entered_total = 0u64;
            for r in 0..out.candidate.rows() {
                for c in 0..out.candidate.cols() {
                    assert!(out.entrance.at(r, c) <= out.candidate.at(r, c));
                    assert!(out.acceptance.at(r, c) >= out.entrance.at(r, c));
                    entered_total += u64::from(out.entrance.at(r, c));
                }
            }
            for c in 0..out.entrance.cols() {
                let col: u32 = out.entrance.column(c).iter().sum();
                assert!(col <= params.entrants_per_university);
                assert_eq!(col, out.entrant_counts[c]);
            }
            assert!(
                entered_total
                    <= u64::from(params.student_count).min(
                        u64::from(params.university_count)
                            * u64::from(params.entrants_per_university)
                    )
            );
        }
    }

    #[test]
    fn dataset_conversion_round_trips_counts() {
        let params = SimulationParams {
            student_count: 800,
            school_count: 16,
            students_per_school: 50,
            university_count: 8,
            entrants_per_university: 80,
            ..SimulationParams::table_defaults(11)
        };
        let out = simulate(&params).unwrap();
        let (ds, dropped) = out.to_dataset().unwrap();
        assert_eq!(ds.school_count(), 16);
        assert_eq!(ds.university_count() + dropped.len(), 8);
        // true ranks present and dense
        let mut ranks: Vec<u32> = ds
            .universities()
            .iter()
            .map(|u| u.true_rank.unwrap())
            .collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=ds.university_count() as u32).collect::<Vec<_>>());
    }
}
