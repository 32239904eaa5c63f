//! Command handlers. Each prints a human-readable report, or a single JSON
//! document when `json` is set.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use negdep::emerge::{average_e, convex_combo, lambda_product, product_all, u_statistic};
use negdep::fdr::{
    bh, bh_fdr_bound_negdep, bh_fdr_bound_negdep_with_mask, by, fdp, group_simes_bh,
};
use negdep::mc::{
    reproduce_table1, reproduce_table2, run_scenario, run_spec, table1_csv, table2_csv,
    with_threads, CheckKind, ExperimentSpec, ScenarioReport, SCENARIOS,
};
use negdep::pmerge::{
    bound_report, correction_factor, simes, simes_of_simes, simes_test, weighted_simes,
};
use negdep::{harmonic_ell, EVector, GroupPartition, NullMask, PVector, WeightVector};

use crate::error::{CliError, CliResult};
use crate::input::{read_table, InputTable, ValueKind};
use crate::output::{envelope, index_list, num, print_json, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MergeKind {
    Simes,
    WeightedSimes,
    SimesOfSimes,
}

pub fn merge(kind: MergeKind, input: &Path, alpha: f64, json: bool) -> CliResult<()> {
    let table = read_table(input, ValueKind::P)?;
    let p = PVector::new(table.values.clone())?;
    let k = p.len();
    let bounds = bound_report(alpha, k)?;
    let factor = correction_factor(k)?;
    match kind {
        MergeKind::Simes | MergeKind::WeightedSimes => {
            let (name, value) = if kind == MergeKind::Simes {
                ("simes", simes(&p))
            } else {
                let w = WeightVector::new(table.require_weights()?.to_vec())?;
                ("weighted_simes", weighted_simes(&p, &w)?)
            };
            let corrected = (factor * value).min(1.0);
            let reject = if kind == MergeKind::Simes {
                simes_test(&p, alpha)?
            } else {
                value <= alpha
            };
            if json {
                print_json(&envelope(
                    &format!("merge {}", name.replace('_', "-")),
                    json!({
                        "k": k, "alpha": alpha, "value": value, "corrected": corrected,
                        "correction_factor": factor, "reject": reject,
                        "bounds": bounds, "combined_bound": bounds.combined(),
                    }),
                ));
            } else {
                println!("K: {k}");
                println!("{name}: {}", num(value));
                println!("corrected: {} (factor {})", num(corrected), num(factor));
                println!(
                    "reject at alpha={}: {}",
                    num(alpha),
                    if reject { "yes" } else { "no" }
                );
                print_simes_bounds(&bounds);
            }
        }
        MergeKind::SimesOfSimes => {
            let (groups, labels) = GroupPartition::from_labels(table.require_groups()?)?;
            let r = simes_of_simes(&p, &groups)?;
            let inner = negdep::pmerge::group_simes_values(&p, &groups)?;
            let small = (alpha < r.small_alpha_limit).then_some(r.small_alpha_multiplier * alpha);
            if json {
                let per_group: Vec<_> = labels
                    .iter()
                    .zip(&inner)
                    .map(|(l, v)| json!({ "group": l, "simes": v }))
                    .collect();
                print_json(&envelope(
                    "merge simes-of-simes",
                    json!({
                        "k": k, "alpha": alpha, "value": r.value, "corrected": r.corrected(),
                        "groups": per_group, "factors": r,
                        "type1_bound_na": (r.factor_total_k * alpha).min(1.0),
                        "type1_bound_na_small_alpha": small,
                    }),
                ));
            } else {
                println!("K: {k}, groups: {}", groups.len());
                for (l, v) in labels.iter().zip(&inner) {
                    println!("group {l}: simes {}", num(*v));
                }
                println!("simes_of_simes: {}", num(r.value));
                println!(
                    "corrected: {} (factor {})",
                    num(r.corrected()),
                    num(r.factor_total_k)
                );
                println!(
                    "type-1 bound under negative association at alpha={}: {}",
                    num(alpha),
                    num((r.factor_total_k * alpha).min(1.0))
                );
                if let Some(s) = small {
                    println!("small-alpha bound: {}", num(s));
                }
            }
        }
    }
    Ok(())
}

fn print_simes_bounds(b: &negdep::pmerge::SimesBoundReport) {
    println!("bounds at alpha={} K={}:", num(b.alpha), b.k);
    println!("  tilde_s: {}", num(b.tilde_s));
    if let Some(c) = b.cubic {
        println!("  cubic: {}", num(c));
    }
    println!("  additive_general: {}", num(b.additive_general));
    println!("  hommel: {}", num(b.hommel));
    println!("  combined: {}", num(b.combined()));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Correction {
    None,
    By,
}

pub fn bh_cmd(
    input: &Path,
    alpha: f64,
    correction: Correction,
    groups: bool,
    json: bool,
) -> CliResult<()> {
    let table = read_table(input, ValueKind::P)?;
    let p = PVector::new(table.values.clone())?;
    let k = p.len();
    if groups {
        return group_bh(&table, &p, alpha, json);
    }
    let (r, level) = match correction {
        Correction::None => (bh(&p, alpha)?, alpha),
        Correction::By => (by(&p, alpha)?, alpha / harmonic_ell(k)?),
    };
    let mask = table.is_null.clone().map(NullMask::new);
    let report = match &mask {
        Some(m) => bh_fdr_bound_negdep_with_mask(alpha, m)?,
        None => bh_fdr_bound_negdep(alpha, k)?,
    };
    let fdp_value = mask.as_ref().map(|m| fdp(&r, m)).transpose()?;
    let rejected = r.one_based();
    if json {
        print_json(&envelope(
            "bh",
            json!({
                "k": k, "alpha": alpha, "correction": format!("{correction:?}").to_lowercase(),
                "level": level, "k_star": r.k_star(), "rejected": rejected,
                "fdr_bounds": report, "fdp": fdp_value,
            }),
        ));
    } else {
        println!("K: {k}");
        println!("level: {}", num(level));
        println!("k*: {}", r.k_star());
        if r.is_empty() {
            println!("no discoveries");
        } else {
            println!("rejected: {}", index_list(&rejected));
        }
        println!(
            "FDR bound under negative dependence: {}",
            num(report.su_neg_bound)
        );
        println!(
            "FDR bound under arbitrary dependence: {}",
            num(report.hommel_bound)
        );
        if let Some(refined) = report.k0_refined {
            println!("FDR bound with known null count: {}", num(refined));
        }
        if let Some(f) = fdp_value {
            println!("FDP: {}", num(f));
        }
    }
    Ok(())
}

fn group_bh(table: &InputTable, p: &PVector, alpha: f64, json: bool) -> CliResult<()> {
    let (groups, labels) = GroupPartition::from_labels(table.require_groups()?)?;
    let r = group_simes_bh(p, &groups, alpha)?;
    let rejected: Vec<&str> = r
        .rejection
        .rejected()
        .iter()
        .map(|&g| labels[g].as_str())
        .collect();
    if json {
        let per_group: Vec<_> = labels
            .iter()
            .zip(&r.group_pvalues)
            .enumerate()
            .map(|(g, (l, v))| json!({ "group": l, "simes": v, "rejected": r.rejection.contains(g) }))
            .collect();
        print_json(&envelope(
            "bh groups",
            json!({
                "alpha": alpha, "k_star": r.rejection.k_star(), "rejected_groups": rejected,
                "groups": per_group, "fdr_bound_na": r.na_bound,
                "fdr_bound_na_tight": r.na_bound_tight, "fdr_bound_prds": r.prds_bound,
            }),
        ));
    } else {
        for (l, v) in labels.iter().zip(&r.group_pvalues) {
            println!("group {l}: simes {}", num(*v));
        }
        println!("k*: {}", r.rejection.k_star());
        if rejected.is_empty() {
            println!("no discoveries");
        } else {
            println!("rejected groups: {}", rejected.join(","));
        }
        println!(
            "group FDR bound under negative association: {}",
            num(r.na_bound)
        );
        println!("group FDR bound under PRDS: {}", num(r.prds_bound));
    }
    Ok(())
}

/// Merging rule for `merge-e`, written `product`, `lambda`, `ustat:K`,
/// `average` or `convex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EMethod {
    Product,
    Lambda,
    UStat(usize),
    Average,
    Convex,
}

impl std::str::FromStr for EMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "product" => Ok(EMethod::Product),
            "lambda" => Ok(EMethod::Lambda),
            "average" => Ok(EMethod::Average),
            "convex" => Ok(EMethod::Convex),
            _ => match s.strip_prefix("ustat:").map(str::parse::<usize>) {
                Some(Ok(k)) => Ok(EMethod::UStat(k)),
                _ => Err(format!(
                    "unknown method {s:?}; expected product, lambda, ustat:K, average or convex"
                )),
            },
        }
    }
}

/// A convex term `i,j,...:weight` with 1-based indices.
pub fn parse_term(s: &str) -> Result<(Vec<usize>, f64), String> {
    let (set, w) = s
        .rsplit_once(':')
        .ok_or_else(|| format!("term {s:?} must look like 1,2:0.5"))?;
    let weight = w
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("bad weight in {s:?}"))?;
    let subset = set
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match t.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(format!("bad 1-based index {t:?} in {s:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((subset, weight))
}

pub fn merge_e(
    input: &Path,
    method: EMethod,
    lambdas: &[f64],
    terms: &[(Vec<usize>, f64)],
    json: bool,
) -> CliResult<()> {
    let table = read_table(input, ValueKind::E)?;
    let e = EVector::new(table.values.clone())?;
    let value = match method {
        EMethod::Product => product_all(&e),
        EMethod::Lambda => {
            let lambdas = match lambdas {
                [l] => vec![*l; e.len()],
                _ => lambdas.to_vec(),
            };
            lambda_product(&e, &lambdas)?
        }
        EMethod::UStat(k) => u_statistic(&e, k)?,
        EMethod::Average => average_e(&e),
        EMethod::Convex => {
            if terms.is_empty() {
                return Err(CliError::input("convex merging needs at least one --term"));
            }
            convex_combo(&e, terms)?
        }
    };
    let p = if value > 1.0 { 1.0 / value } else { 1.0 };
    let name = match method {
        EMethod::Product => "product".to_string(),
        EMethod::Lambda => "lambda".into(),
        EMethod::UStat(k) => format!("ustat:{k}"),
        EMethod::Average => "average".into(),
        EMethod::Convex => "convex".into(),
    };
    if json {
        print_json(&envelope(
            "merge-e",
            json!({ "k": e.len(), "method": name, "e_value": value, "p_value": p }),
        ));
    } else {
        println!("K: {}", e.len());
        println!("{name}: {}", num(value));
        println!("p-value (1/e): {}", num(p));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Simes,
    Fdr,
    All,
}

pub fn bounds(alpha: f64, k: usize, which: Which, json: bool) -> CliResult<()> {
    let simes_rows = matches!(which, Which::Simes | Which::All)
        .then(|| bound_report(alpha, k))
        .transpose()?;
    let fdr_rows = matches!(which, Which::Fdr | Which::All)
        .then(|| bh_fdr_bound_negdep(alpha, k))
        .transpose()?;
    if json {
        print_json(&envelope(
            "bounds",
            json!({ "alpha": alpha, "k": k, "simes": simes_rows, "fdr": fdr_rows }),
        ));
        return Ok(());
    }
    println!("bound,value");
    if let Some(b) = simes_rows {
        println!("tilde_s,{}", num(b.tilde_s));
        if let Some(s) = b.succinct {
            println!("succinct,{}", num(s));
        }
        if let Some(c) = b.cubic {
            println!("cubic,{}", num(c));
        }
        println!("additive_general,{}", num(b.additive_general));
        println!("hommel,{}", num(b.hommel));
        println!("simes_combined,{}", num(b.combined()));
    }
    if let Some(f) = fdr_rows {
        println!("su_neg,{}", num(f.su_neg_bound));
        println!("su_neg_headline,{}", num(f.su_neg_headline));
        println!("by_arbitrary,{}", num(f.hommel_bound));
        println!("fdr_combined,{}", num(f.combined));
    }
    Ok(())
}

/// Writes `table1.csv` and `table2.csv` into `out_dir`, or prints both
/// separated by a blank line.
pub fn paper_tables(out_dir: Option<&Path>) -> CliResult<()> {
    let t1 = table1_csv(&reproduce_table1());
    let t2 = table2_csv(&reproduce_table2());
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("table1.csv"), t1)?;
            fs::write(dir.join("table2.csv"), t2)?;
        }
        None => print!("{t1}\n{t2}"),
    }
    Ok(())
}

pub fn list_scenarios() {
    for s in SCENARIOS {
        println!(
            "{:<26} reps={:<8} {}",
            s.name, s.default_reps, s.description
        );
    }
    println!("{:<26} {:<13} every scenario above", "all", "");
}

#[derive(Serialize)]
struct Record<'a> {
    schema_version: u32,
    scenario: &'a str,
    seed: u64,
    label: &'a str,
    bound_name: &'a str,
    check: &'static str,
    estimate: f64,
    std_error: f64,
    reps: u64,
    lower: Option<f64>,
    bound: f64,
    margin_sigmas: f64,
    excess_sigmas: Option<f64>,
    pass: bool,
}

const CSV_HEADER: &str =
    "scenario,seed,label,bound_name,check,estimate,std_error,reps,lower,bound,margin_sigmas,excess_sigmas,pass";

fn records(reports: &[ScenarioReport]) -> Vec<Record<'_>> {
    reports
        .iter()
        .flat_map(|rep| {
            rep.results.iter().map(move |r| {
                let (check, lower) = match r.kind {
                    CheckKind::Upper => ("upper", None),
                    CheckKind::TwoSided => ("two_sided", None),
                    CheckKind::Interval { lower } => ("interval", Some(lower)),
                };
                Record {
                    schema_version: SCHEMA_VERSION,
                    scenario: &rep.scenario,
                    seed: rep.seed,
                    label: &r.label,
                    bound_name: &r.bound_name,
                    check,
                    estimate: r.estimate.estimate,
                    std_error: r.estimate.std_error,
                    reps: r.estimate.reps,
                    lower,
                    bound: r.bound,
                    margin_sigmas: r.margin_sigmas,
                    excess_sigmas: r.excess_sigmas.is_finite().then_some(r.excess_sigmas),
                    pass: r.pass,
                }
            })
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn to_csv(records: &[Record<'_>]) -> String {
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    let mut out = format!("{CSV_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(r.scenario),
            r.seed,
            csv_field(r.label),
            r.bound_name,
            r.check,
            num(r.estimate),
            num(r.std_error),
            r.reps,
            opt(r.lower),
            num(r.bound),
            num(r.margin_sigmas),
            opt(r.excess_sigmas),
            r.pass
        ));
    }
    out
}

fn to_json_lines(records: &[Record<'_>]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

pub struct SimulateArgs<'a> {
    pub scenario: Option<&'a str>,
    pub spec: Option<&'a Path>,
    pub reps: Option<u64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<&'a Path>,
    pub csv: Option<&'a Path>,
}

pub fn simulate(args: SimulateArgs<'_>) -> CliResult<()> {
    let start = Instant::now();
    let run = || -> CliResult<Vec<ScenarioReport>> {
        match (args.scenario, args.spec) {
            (Some(name), None) => Ok(run_scenario(name, args.reps, args.seed)?),
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                let mut spec: ExperimentSpec = serde_json::from_str(&text)
                    .map_err(|e| CliError::input(format!("line {}: {e}", e.line())))?;
                if let Some(r) = args.reps {
                    spec.reps = r;
                }
                Ok(vec![run_spec(spec)?])
            }
            _ => Err(CliError::input("give exactly one of --scenario and --spec")),
        }
    };
    let reports = with_threads(args.threads, run)??;
    let recs = records(&reports);
    let jsonl = to_json_lines(&recs);
    match args.out {
        Some(path) => fs::write(path, &jsonl)?,
        None => std::io::stdout().write_all(jsonl.as_bytes())?,
    }
    if let Some(path) = args.csv {
        fs::write(path, to_csv(&recs))?;
    }
    let total = recs.len();
    let failed = recs.iter().filter(|r| !r.pass).count();
    let mut summary = String::new();
    for rep in &reports {
        let bad: Vec<_> = rep.results.iter().filter(|r| !r.pass).collect();
        summary.push_str(&format!(
            "{}: {}/{} checks pass (reps={}, seed={})\n",
            rep.scenario,
            rep.results.len() - bad.len(),
            rep.results.len(),
            rep.reps,
            rep.seed
        ));
        for r in bad {
            summary.push_str(&format!(
                "  FAIL {} [{}]: estimate {} se {} vs {} ({} sigma)\n",
                r.label,
                r.bound_name,
                num(r.estimate.estimate),
                num(r.estimate.std_error),
                num(r.bound),
                num(r.excess_sigmas)
            ));
        }
    }
    summary.push_str(&format!(
        "{} of {total} checks pass in {:.1}s\n",
        total - failed,
        start.elapsed().as_secs_f64()
    ));
    // keep stdout clean for records when they go there
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    if failed > 0 {
        return Err(CliError::Verification { failed, total });
    }
    Ok(())
}
