//! Named verification scenarios. Each one runs a fixed list of checks, and
//! check `i` of scenario `name` draws from stream
//! `RngSeed::new(seed, fnv1a(name)).derive(i)`, so results depend only on
//! the scenario, the seed, and the replication count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gendep::{
    wnd_diagnostic, DiagnosticMode, Sampler, SamplerConfig, SigmaConfig, TournamentSpec,
};
use crate::rng::RngSeed;
use crate::types::McEstimate;

use super::experiment::{
    ConvexTerm, EMerge, EvaluePipeline, Experiment, ExperimentSpec, Procedure,
};
use super::scan::scan_bivariate_gaussian;
use super::tournament::{tournament_pipeline, TournamentPipeline};
use super::verify::{
    verify_interval, verify_named, verify_two_sided, VerificationResult, DEFAULT_MARGIN_SIGMAS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub default_reps: u64,
}

const TYPE1_REPS: u64 = 100_000;
const FDR_REPS: u64 = 10_000;

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "independent-simes-k2",
        description: "Simes type-1 error equals alpha for 2 independent uniforms",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "independent-simes-k10",
        description: "Simes type-1 error equals alpha for 10 independent uniforms",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "independent-simes-k100",
        description: "Simes type-1 error equals alpha for 100 independent uniforms",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "counter-monotonic-simes",
        description: "Simes under (U, 1-U) pairs: exact alpha at K=2, negative-dependence bounds at K=10",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "comonotonic-simes",
        description: "Simes type-1 error equals alpha for identical p-values",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "bivariate-gaussian-scan",
        description: "Simes type-1 error for two negatively correlated Gaussian p-values over a grid of rho",
        default_reps: 1_000_000,
    },
    ScenarioInfo {
        name: "neg-gaussian-simes",
        description: "Simes type-1 error under nonpositive Gaussian correlation against the negative-dependence bounds",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "independent-bh-null",
        description: "BH FDR equals alpha and FDP equals the Simes indicator when all nulls are independent",
        default_reps: FDR_REPS,
    },
    ScenarioInfo {
        name: "independent-bh-half-null",
        description: "BH FDR equals K0 alpha / K under independence with shifted alternatives",
        default_reps: FDR_REPS,
    },
    ScenarioInfo {
        name: "neg-gaussian-bh",
        description: "BH and BY FDR under negatively dependent nulls against the negative-dependence bound",
        default_reps: FDR_REPS,
    },
    ScenarioInfo {
        name: "evalue-validity",
        description: "Mean of merged e-values under negatively dependent nulls is at most 1",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "tournament-evalue",
        description: "Betting e-values of a fair round-robin have mean at most 1",
        default_reps: FDR_REPS,
    },
    ScenarioInfo {
        name: "wnd-diagnostics",
        description: "Empirical lower-orthant gaps of every negatively dependent sampler are not positive",
        default_reps: TYPE1_REPS,
    },
    ScenarioInfo {
        name: "group-simes-bh",
        description: "Simes-of-Simes type-1 error and group-level BH FDR under negative association",
        default_reps: FDR_REPS,
    },
];

/// Registered scenario names followed by `all`.
pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).chain(["all"]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub reps: u64,
    pub seed: u64,
    pub results: Vec<VerificationResult>,
}

impl ScenarioReport {
    pub fn pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

const ALPHAS: [f64; 3] = [0.01, 0.05, 0.1];

struct Ctx {
    name: &'static str,
    reps: u64,
    seed: u64,
    next: u64,
    results: Vec<VerificationResult>,
}

impl Ctx {
    fn stream(&mut self) -> RngSeed {
        let s = RngSeed::new(self.seed, fnv1a(self.name)).derive(self.next);
        self.next += 1;
        s
    }

    fn push(&mut self, r: VerificationResult, label: &str) {
        self.results.push(r.with_label(label));
    }

    fn experiment(
        &mut self,
        label: &str,
        sampler: SamplerConfig,
        procedure: Procedure,
        alpha: f64,
    ) -> Result<()> {
        let spec = ExperimentSpec {
            sampler,
            procedure,
            alpha,
            reps: self.reps,
            seed: self.stream(),
            null_mask: None,
        };
        let outcome = Experiment::new(spec)?.run()?;
        for r in outcome.verify(DEFAULT_MARGIN_SIGMAS) {
            self.push(r, label);
        }
        if let Some(v) = outcome.identity_violations {
            let est = McEstimate::from_count(v, self.reps, self.seed);
            self.push(verify_named(est, 0.0, "all_null_identity", 0.0), label);
        }
        Ok(())
    }
}

fn equicorrelated(k: usize, rho: f64) -> SamplerConfig {
    SamplerConfig::neg_gaussian(SigmaConfig::Equicorrelation { k, rho })
}

/// Equicorrelation just above the smallest admissible value `−1/(K−1)`.
fn extreme_equicorrelated(k: usize) -> SamplerConfig {
    equicorrelated(k, -1.0 / (k as f64 - 1.0) + 1e-6)
}

fn random_nonpositive(k: usize, seed: u64) -> SamplerConfig {
    SamplerConfig::neg_gaussian(SigmaConfig::RandomNonpositive { k, seed })
}

fn grid(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / k as f64).collect()
}

/// Runs a named scenario, or every scenario for `all`. `reps` overrides
/// each scenario's default replication count.
pub fn run_scenario(name: &str, reps: Option<u64>, seed: u64) -> Result<Vec<ScenarioReport>> {
    if name == "all" {
        return SCENARIOS.iter().map(|s| run_one(s, reps, seed)).collect();
    }
    let info = SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::input(format!("unknown scenario {name:?}")))?;
    Ok(vec![run_one(info, reps, seed)?])
}

/// Runs a single user-supplied experiment as scenario `custom`.
pub fn run_spec(spec: ExperimentSpec) -> Result<ScenarioReport> {
    let (reps, seed) = (spec.reps, spec.seed.seed);
    let outcome = Experiment::new(spec)?.run()?;
    let mut results = outcome.verify(DEFAULT_MARGIN_SIGMAS);
    if let Some(v) = outcome.identity_violations {
        let est = McEstimate::from_count(v, reps, seed);
        results.push(verify_named(est, 0.0, "all_null_identity", 0.0));
    }
    Ok(ScenarioReport {
        scenario: "custom".into(),
        reps,
        seed,
        results,
    })
}

fn run_one(info: &ScenarioInfo, reps: Option<u64>, seed: u64) -> Result<ScenarioReport> {
    let mut ctx = Ctx {
        name: info.name,
        reps: reps.unwrap_or(info.default_reps),
        seed,
        next: 0,
        results: Vec::new(),
    };
    match info.name {
        "independent-simes-k2" => independent_simes(&mut ctx, 2)?,
        "independent-simes-k10" => independent_simes(&mut ctx, 10)?,
        "independent-simes-k100" => independent_simes(&mut ctx, 100)?,
        "counter-monotonic-simes" => {
            for pairs in [1, 5] {
                for a in ALPHAS {
                    let label = format!("K={} alpha={a}", 2 * pairs);
                    ctx.experiment(
                        &label,
                        SamplerConfig::CounterMonotonicPairs { pairs },
                        Procedure::Simes,
                        a,
                    )?;
                }
            }
        }
        "comonotonic-simes" => {
            for a in ALPHAS {
                ctx.experiment(
                    &format!("K=5 alpha={a}"),
                    SamplerConfig::Comonotonic { k: 5 },
                    Procedure::Simes,
                    a,
                )?;
            }
        }
        "bivariate-gaussian-scan" => bivariate_scan(&mut ctx)?,
        "neg-gaussian-simes" => {
            for k in [5, 50] {
                let corpora = [
                    ("equicorrelated", extreme_equicorrelated(k)),
                    ("random_nonpositive", random_nonpositive(k, 17 + k as u64)),
                ];
                for (sigma, sampler) in corpora {
                    for a in ALPHAS {
                        let label = format!("{sigma} K={k} alpha={a}");
                        ctx.experiment(&label, sampler.clone(), Procedure::Simes, a)?;
                    }
                }
            }
        }
        "independent-bh-null" => {
            for k in [2, 10, 100] {
                for a in ALPHAS {
                    ctx.experiment(
                        &format!("K={k} alpha={a}"),
                        SamplerConfig::independent(k),
                        Procedure::Bh,
                        a,
                    )?;
                }
            }
        }
        "independent-bh-half-null" => {
            let shift: Vec<f64> = (0..50).map(|i| if i < 25 { 3.0 } else { 0.0 }).collect();
            for a in [0.05, 0.1] {
                let sampler = SamplerConfig::Independent {
                    k: 50,
                    shift: shift.clone(),
                };
                ctx.experiment(
                    &format!("K=50 K0=25 shift=3 alpha={a}"),
                    sampler,
                    Procedure::Bh,
                    a,
                )?;
            }
        }
        "neg-gaussian-bh" => neg_gaussian_bh(&mut ctx)?,
        "evalue-validity" => evalue_validity(&mut ctx)?,
        "tournament-evalue" => tournament_evalue(&mut ctx)?,
        "wnd-diagnostics" => wnd_diagnostics(&mut ctx)?,
        "group-simes-bh" => group_simes_bh(&mut ctx)?,
        other => unreachable!("scenario {other} is registered but has no body"),
    }
    Ok(ScenarioReport {
        scenario: info.name.to_owned(),
        reps: ctx.reps,
        seed,
        results: ctx.results,
    })
}

fn independent_simes(ctx: &mut Ctx, k: usize) -> Result<()> {
    for a in ALPHAS {
        ctx.experiment(
            &format!("K={k} alpha={a}"),
            SamplerConfig::independent(k),
            Procedure::Simes,
            a,
        )?;
    }
    Ok(())
}

fn bivariate_scan(ctx: &mut Ctx) -> Result<()> {
    let rhos: Vec<f64> = (0..=10).map(|i| -1.0 + 0.1 * i as f64).collect();
    let seed = ctx.stream();
    let cells = scan_bivariate_gaussian(&ALPHAS, &rhos, ctx.reps, seed, false)?;
    for row in &cells {
        for cell in row {
            let label = format!("alpha={} rho={:.1}", cell.alpha, cell.rho);
            let a = cell.alpha;
            if cell.rho == -1.0 || cell.rho.abs() < 1e-12 {
                ctx.push(
                    verify_two_sided(cell.estimate, a, "simes_exact", DEFAULT_MARGIN_SIGMAS),
                    &label,
                );
            }
            let r = verify_named(
                cell.estimate,
                a + a * a,
                "simes_general_k2",
                DEFAULT_MARGIN_SIGMAS,
            );
            ctx.push(r, &label);
        }
    }
    let peak = cells[1][1..10]
        .iter()
        .max_by(|x, y| x.estimate.estimate.total_cmp(&y.estimate.estimate))
        .expect("interior grid is nonempty");
    let label = format!("alpha=0.05 max over interior rho (at rho={:.1})", peak.rho);
    ctx.push(
        verify_interval(peak.estimate, 0.0498, 0.0525, "interior_max_band", 0.0),
        &label,
    );
    Ok(())
}

fn neg_gaussian_bh(ctx: &mut Ctx) -> Result<()> {
    let half_shift: Vec<f64> = (0..20).map(|i| if i < 10 { 3.0 } else { 0.0 }).collect();
    let corpora = [
        ("equicorrelated K=50", extreme_equicorrelated(50)),
        ("random_nonpositive K=20", random_nonpositive(20, 29)),
        (
            "random_nonpositive K=20 K0=10",
            SamplerConfig::NegGaussian {
                sigma: SigmaConfig::RandomNonpositive { k: 20, seed: 29 },
                shift: half_shift,
                allow_mixed_signs: false,
            },
        ),
        ("cyclical K=20", SamplerConfig::Cyclical { k: 20 }),
        (
            "counter_monotonic K=20",
            SamplerConfig::CounterMonotonicPairs { pairs: 10 },
        ),
        (
            "permutation K=20",
            SamplerConfig::Permutation { values: grid(20) },
        ),
    ];
    for (name, sampler) in corpora {
        for a in [0.05, 0.1] {
            ctx.experiment(
                &format!("{name} alpha={a}"),
                sampler.clone(),
                Procedure::Bh,
                a,
            )?;
        }
    }
    ctx.experiment(
        "BY equicorrelated K=50 alpha=0.1",
        extreme_equicorrelated(50),
        Procedure::By,
        0.1,
    )?;
    Ok(())
}

fn evalue_validity(ctx: &mut Ctx) -> Result<()> {
    let k = 5;
    let p_samplers = [
        ("independent", SamplerConfig::independent(k)),
        ("cyclical", SamplerConfig::Cyclical { k }),
        ("neg_gaussian", equicorrelated(k, -0.2)),
        (
            "permutation",
            SamplerConfig::Permutation { values: grid(k) },
        ),
        (
            "counter_monotonic",
            SamplerConfig::CounterMonotonicPairs { pairs: 2 },
        ),
    ];
    let calibrated = |kappa: f64, merge: EMerge| Procedure::EvaluePipeline {
        pipeline: EvaluePipeline::Calibrated { kappa, merge },
    };
    for (name, sampler) in p_samplers {
        let dim = Sampler::new(&sampler)?.dim();
        let pipelines = [
            ("product", calibrated(0.75, EMerge::Product)),
            (
                "lambda_product",
                calibrated(
                    0.5,
                    EMerge::Lambda {
                        lambdas: vec![0.5; dim],
                    },
                ),
            ),
            (
                "u_statistic_2",
                calibrated(0.5, EMerge::UStatistic { k: 2 }),
            ),
            (
                "u_statistic_3",
                calibrated(0.5, EMerge::UStatistic { k: 3 }),
            ),
            ("average", calibrated(0.5, EMerge::Average)),
            (
                "convex",
                calibrated(
                    0.5,
                    EMerge::Convex {
                        terms: vec![
                            ConvexTerm {
                                subset: vec![1, 2],
                                weight: 0.5,
                            },
                            ConvexTerm {
                                subset: (3..=dim).collect(),
                                weight: 0.3,
                            },
                            ConvexTerm {
                                subset: vec![1, dim],
                                weight: 0.2,
                            },
                        ],
                    },
                ),
            ),
            (
                "chernoff",
                Procedure::EvaluePipeline {
                    pipeline: EvaluePipeline::Chernoff { lambda: None },
                },
            ),
        ];
        for (merge, procedure) in pipelines {
            ctx.experiment(&format!("{name} {merge}"), sampler.clone(), procedure, 0.05)?;
        }
    }
    let round_robin = TournamentSpec::fair_round_robin(5, 2, 0.1)?;
    let raw_samplers = [
        (
            "multinomial_indicator",
            SamplerConfig::MultinomialIndicator { k: 6, m: 2 },
        ),
        (
            "without_replacement",
            SamplerConfig::WithoutReplacement {
                bag: (0..8).map(f64::from).collect(),
                k: 4,
            },
        ),
        ("knockout", SamplerConfig::KnockoutRandom { rounds: 3 }),
        (
            "tournament_scores",
            SamplerConfig::TournamentBinary {
                n_games: round_robin.n_games().to_vec(),
                win_prob: round_robin.win_prob().to_vec(),
            },
        ),
    ];
    for (name, sampler) in raw_samplers {
        let procedure = Procedure::EvaluePipeline {
            pipeline: EvaluePipeline::Chernoff { lambda: None },
        };
        ctx.experiment(&format!("{name} chernoff"), sampler, procedure, 0.05)?;
    }
    Ok(())
}

fn tournament_evalue(ctx: &mut Ctx) -> Result<()> {
    let cases = [
        (
            TournamentPipeline {
                k: 8,
                games_per_pair: 2,
                epsilon: 0.3,
                draw_prob: 0.0,
            },
            None,
        ),
        (
            TournamentPipeline {
                k: 5,
                games_per_pair: 3,
                epsilon: 0.5,
                draw_prob: 0.2,
            },
            None,
        ),
        (
            TournamentPipeline {
                k: 12,
                games_per_pair: 1,
                epsilon: 0.9,
                draw_prob: 0.0,
            },
            None,
        ),
        (
            TournamentPipeline {
                k: 2,
                games_per_pair: 1,
                epsilon: 0.5,
                draw_prob: 0.0,
            },
            Some(0.75),
        ),
        (
            TournamentPipeline {
                k: 6,
                games_per_pair: 2,
                epsilon: 0.0,
                draw_prob: 0.1,
            },
            Some(1.0),
        ),
    ];
    for (cfg, exact) in cases {
        let label = format!(
            "K={} M={} epsilon={} draws={}",
            cfg.k, cfg.games_per_pair, cfg.epsilon, cfg.draw_prob
        );
        let seed = ctx.stream();
        let est = tournament_pipeline(&cfg, ctx.reps, seed)?;
        ctx.push(
            verify_named(est, 1.0, "e_value", DEFAULT_MARGIN_SIGMAS),
            &label,
        );
        if let Some(v) = exact {
            ctx.push(
                verify_two_sided(est, v, "exact_mean", DEFAULT_MARGIN_SIGMAS),
                &label,
            );
        }
    }
    Ok(())
}

fn wnd_diagnostics(ctx: &mut Ctx) -> Result<()> {
    let p_levels = vec![0.05, 0.2, 0.5];
    let cases: Vec<(&str, SamplerConfig, Vec<Vec<usize>>, Vec<f64>)> = vec![
        (
            "neg_gaussian",
            equicorrelated(5, -0.2),
            vec![vec![0, 1], vec![0, 1, 2], (0..5).collect()],
            p_levels.clone(),
        ),
        (
            "cyclical",
            SamplerConfig::Cyclical { k: 5 },
            vec![vec![0, 1], vec![1, 2]],
            p_levels.clone(),
        ),
        (
            "counter_monotonic",
            SamplerConfig::CounterMonotonicPairs { pairs: 2 },
            vec![vec![0, 1]],
            p_levels,
        ),
        (
            "permutation",
            SamplerConfig::Permutation { values: grid(5) },
            vec![vec![0, 1], vec![0, 1, 2]],
            vec![0.2, 0.4, 0.6],
        ),
        (
            "without_replacement",
            SamplerConfig::WithoutReplacement {
                bag: (0..9).map(f64::from).collect(),
                k: 4,
            },
            vec![vec![0, 1], (0..4).collect()],
            vec![1.0, 3.0, 5.0],
        ),
        (
            "multinomial_indicator",
            SamplerConfig::MultinomialIndicator { k: 6, m: 2 },
            vec![vec![0, 1], vec![0, 1, 2]],
            vec![0.0],
        ),
        (
            "tournament_scores",
            {
                let spec = TournamentSpec::fair_round_robin(4, 3, 0.0)?;
                SamplerConfig::TournamentBinary {
                    n_games: spec.n_games().to_vec(),
                    win_prob: spec.win_prob().to_vec(),
                }
            },
            vec![vec![0, 1], vec![0, 1, 2]],
            vec![3.0, 4.0, 5.0],
        ),
        (
            "knockout",
            SamplerConfig::KnockoutRandom { rounds: 3 },
            vec![vec![0, 1], (0..4).collect()],
            vec![0.0, 1.0],
        ),
    ];
    let n = usize::try_from(ctx.reps).map_err(|_| Error::input("reps too large"))?;
    for (name, config, subsets, thresholds) in cases {
        let sampler = Sampler::new(&config)?;
        let seed = ctx.stream();
        let samples = sampler.sample_matrix(n, seed);
        let report = wnd_diagnostic(
            &samples,
            &thresholds,
            &subsets,
            DiagnosticMode::Verification,
        )?;
        for e in &report.entries {
            let est = McEstimate {
                estimate: e.gap,
                std_error: e.std_error,
                reps: ctx.reps,
                seed: ctx.seed,
            };
            let subset: Vec<String> = e.subset.iter().map(|i| i.to_string()).collect();
            let label = format!("{name} A={{{}}} x={}", subset.join(","), e.x);
            ctx.push(
                verify_named(est, 0.0, "lower_orthant_gap", DEFAULT_MARGIN_SIGMAS),
                &label,
            );
        }
    }
    Ok(())
}

fn group_simes_bh(ctx: &mut Ctx) -> Result<()> {
    let groups: Vec<Vec<usize>> = (0..5).map(|g| (4 * g + 1..=4 * g + 4).collect()).collect();
    let shift: Vec<f64> = (0..20).map(|i| if i < 8 { 3.0 } else { 0.0 }).collect();
    let corpora = [
        ("equicorrelated K=20", extreme_equicorrelated(20)),
        (
            "equicorrelated K=20 two false groups",
            SamplerConfig::NegGaussian {
                sigma: SigmaConfig::Equicorrelation {
                    k: 20,
                    rho: -1.0 / 19.0 + 1e-6,
                },
                shift,
                allow_mixed_signs: false,
            },
        ),
        ("independent K=20", SamplerConfig::independent(20)),
    ];
    for (name, sampler) in corpora {
        for a in [0.05, 0.1] {
            let procedure = Procedure::GroupSimesBh {
                groups: groups.clone(),
            };
            ctx.experiment(
                &format!("group BH {name} alpha={a}"),
                sampler.clone(),
                procedure,
                a,
            )?;
        }
    }
    for (name, sampler) in [
        ("equicorrelated K=20", extreme_equicorrelated(20)),
        ("independent K=20", SamplerConfig::independent(20)),
    ] {
        for a in [0.05, 0.1] {
            let procedure = Procedure::SimesOfSimes {
                groups: groups.clone(),
            };
            ctx.experiment(
                &format!("simes of simes {name} alpha={a}"),
                sampler.clone(),
                procedure,
                a,
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_runnable() {
        let names = scenario_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(names.last(), Some(&"all"));
        assert!(run_scenario("no-such-scenario", None, 0).is_err());
    }

    #[test]
    fn small_runs_of_every_scenario() {
        // the scan and diagnostics need their own minimums
        for info in SCENARIOS {
            let reps = match info.name {
                "wnd-diagnostics" => 10_000,
                _ => 2_000,
            };
            let reports = run_scenario(info.name, Some(reps), 11).unwrap();
            assert_eq!(reports.len(), 1);
            assert!(!reports[0].results.is_empty(), "{}", info.name);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let a = run_scenario("neg-gaussian-bh", Some(500), 5).unwrap();
        let b = run_scenario("neg-gaussian-bh", Some(500), 5).unwrap();
        assert_eq!(a, b);
        let c = run_scenario("neg-gaussian-bh", Some(500), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn custom_spec_reports_identity() {
        let spec = ExperimentSpec {
            sampler: SamplerConfig::Cyclical { k: 6 },
            procedure: Procedure::Bh,
            alpha: 0.1,
            reps: 1000,
            seed: RngSeed::new(3, 0),
            null_mask: None,
        };
        let report = run_spec(spec).unwrap();
        assert!(report
            .results
            .iter()
            .any(|r| r.bound_name == "all_null_identity" && r.pass));
    }
}
