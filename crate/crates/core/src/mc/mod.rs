//! Monte Carlo verification: experiments tying samplers to procedures,
//! checks of their estimates against the corresponding bounds, and the
//! closed-form bound tables.
//!
//! Every estimate is a deterministic function of its seed. Replications run
//! in fixed chunks with their own random streams and are combined in chunk
//! order, so the worker count never changes a result.

mod engine;
mod experiment;
mod scan;
mod scenarios;
mod tables;
mod tournament;
mod verify;

pub use engine::{run_chunked, run_replications, with_threads, NeumaierSum, Tally, CHUNK_REPS};
pub use experiment::{
    estimate_bh_fdr, estimate_bh_fdr_detailed, estimate_evalue_mean, estimate_simes_type1,
    ConvexTerm, EMerge, EvaluePipeline, Experiment, ExperimentOutcome, ExperimentSpec, Procedure,
    Reference, Statistic, MIN_REPS,
};
pub use scan::{scan_bivariate_gaussian, ScanCell};
pub use scenarios::{
    run_scenario, run_spec, scenario_names, ScenarioInfo, ScenarioReport, SCENARIOS,
};
pub use tables::{
    reproduce_table1, reproduce_table2, table1_csv, table2_csv, Table1Row, Table2Row,
    TABLE1_ALPHAS, TABLE2_ALPHAS,
};
pub use tournament::{tournament_pipeline, TournamentPipeline};
pub use verify::{
    verify, verify_interval, verify_named, verify_two_sided, CheckKind, VerificationResult,
    DEFAULT_MARGIN_SIGMAS,
};
