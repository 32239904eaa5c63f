//! Experiments: a sampler, a procedure, and the quantity to estimate.

use serde::{Deserialize, Serialize};

use crate::emerge::{
    check_convex_weights, chernoff_unchecked, convex_unchecked, hoeffding_lambda,
    lambda_product_unchecked, product_slice, u_statistic_unchecked, Calibrator, CalibratorSpec,
    SubPsiSpec,
};
use crate::error::{check_alpha, Error, Result};
use crate::fdr::{bh_fdr_bound_negdep, bh_slice, fdp_unchecked, group_simes_bh};
use crate::gendep::{Dependence, Sampler, SamplerConfig, Scratch};
use crate::pmerge::{
    correction_factor, hommel_bound, simes_bound_additive, simes_bound_tilde, simes_of_sorted,
    simes_test_sorted, SIMES_OF_SIMES_ALPHA_LIMIT, SIMES_OF_SIMES_SMALL_MULTIPLIER,
};
use crate::rng::RngSeed;
use crate::types::{harmonic_ell, GroupPartition, McEstimate, NullMask, PVector, WeightVector};

use super::engine::{run_replications, Tally};
use super::verify::{verify_named, verify_two_sided, VerificationResult};

/// Fewest replications an experiment accepts.
pub const MIN_REPS: u64 = 100;

/// How the e-values of an e-value pipeline are merged. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EMerge {
    Product,
    Lambda { lambdas: Vec<f64> },
    UStatistic { k: usize },
    Average,
    Convex { terms: Vec<ConvexTerm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexTerm {
    pub subset: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluePipeline {
    /// Calibrate each p-value with `κ p^(κ−1)`, then merge.
    Calibrated { kappa: f64, merge: EMerge },
    /// Chernoff e-variable on the raw draws with a common bet `lambda ≥ 0`;
    /// without `lambda` each coordinate uses the Hoeffding bet for level α.
    Chernoff {
        #[serde(default)]
        lambda: Option<f64>,
    },
}

/// Groups are lists of 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Procedure {
    Simes,
    WeightedSimes { weights: Vec<f64> },
    SimesOfSimes { groups: Vec<Vec<usize>> },
    Bh,
    By,
    GroupSimesBh { groups: Vec<Vec<usize>> },
    EvaluePipeline { pipeline: EvaluePipeline },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sampler: SamplerConfig,
    pub procedure: Procedure,
    pub alpha: f64,
    pub reps: u64,
    pub seed: RngSeed,
    /// Defaults to the sampler's own mask (zero-shift coordinates).
    #[serde(default)]
    pub null_mask: Option<NullMask>,
}

/// The quantity an experiment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `P(test rejects)` under the global null.
    Type1,
    /// `E[FDP]`.
    Fdr,
    /// Mean of the merged e-value under the null.
    EMean,
}

/// A bound the estimate is expected to respect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub name: &'static str,
    pub value: f64,
    /// The bound holds with equality.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub statistic: Statistic,
    pub estimate: McEstimate,
    pub dependence: Dependence,
    /// Draws on which an all-null BH run had `FDP ≠ 𝟙{Simes rejects}`;
    /// `None` unless the procedure is BH with every hypothesis null.
    pub identity_violations: Option<u64>,
    pub references: Vec<Reference>,
}

impl ExperimentOutcome {
    pub fn verify(&self, margin_sigmas: f64) -> Vec<VerificationResult> {
        self.references
            .iter()
            .map(|r| {
                if r.exact {
                    verify_two_sided(self.estimate, r.value, r.name, margin_sigmas)
                } else {
                    verify_named(self.estimate, r.value, r.name, margin_sigmas)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Merge {
    Product,
    Lambda(Vec<f64>),
    UStat(usize),
    Average,
    Convex(Vec<(Vec<usize>, f64)>),
}

#[derive(Debug, Clone)]
enum Prepared {
    Simes,
    WeightedSimes(Vec<f64>),
    SimesOfSimes(GroupPartition),
    Bh {
        level: f64,
    },
    GroupBh {
        groups: GroupPartition,
        group_mask: NullMask,
    },
    Calibrated {
        calibrator: CalibratorSpec,
        merge: Merge,
    },
    Chernoff {
        specs: Vec<SubPsiSpec>,
        lambdas: Vec<f64>,
    },
}

/// A validated [`ExperimentSpec`].
#[derive(Debug, Clone)]
pub struct Experiment {
    spec: ExperimentSpec,
    sampler: Sampler,
    mask: NullMask,
    prepared: Prepared,
}

fn to_zero_based(groups: &[Vec<usize>], k: usize) -> Result<GroupPartition> {
    let zero: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|&i| {
                    if i == 0 {
                        Err(Error::input("group indices are 1-based"))
                    } else {
                        Ok(i - 1)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    GroupPartition::new(zero, k)
}

struct State {
    scratch: Scratch,
    x: Vec<f64>,
    buf: Vec<f64>,
    groups: Vec<f64>,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        check_alpha(spec.alpha)?;
        if spec.reps < MIN_REPS {
            return Err(Error::input(format!(
                "reps must be at least {MIN_REPS}, got {}",
                spec.reps
            )));
        }
        let sampler = Sampler::new(&spec.sampler)?;
        let k = sampler.dim();
        let mask = match &spec.null_mask {
            Some(m) if m.len() != k => {
                return Err(Error::input(format!(
                    "null mask has {} entries but K={k}",
                    m.len()
                )))
            }
            Some(m) => m.clone(),
            None => sampler.null_mask(),
        };
        let all_null = mask.k0() == k;
        let need_pvalues = || {
            if sampler.yields_pvalues() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "sampler {} does not produce p-values",
                    spec.sampler.kind_name()
                )))
            }
        };
        let need_all_null = |what: &str| {
            if all_null {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{what} is estimated under the global null but the null mask has {} of {k} nulls",
                    mask.k0()
                )))
            }
        };
        let prepared = match &spec.procedure {
            Procedure::Simes => {
                need_pvalues()?;
                need_all_null("type-1 error")?;
                Prepared::Simes
            }
            Procedure::WeightedSimes { weights } => {
                need_pvalues()?;
                need_all_null("type-1 error")?;
                if weights.len() != k {
                    return Err(Error::input(format!(
                        "weights have {} entries but K={k}",
                        weights.len()
                    )));
                }
                Prepared::WeightedSimes(WeightVector::new(weights.clone())?.values().to_vec())
            }
            Procedure::SimesOfSimes { groups } => {
                need_pvalues()?;
                need_all_null("type-1 error")?;
                Prepared::SimesOfSimes(to_zero_based(groups, k)?)
            }
            Procedure::Bh => {
                need_pvalues()?;
                Prepared::Bh { level: spec.alpha }
            }
            Procedure::By => {
                need_pvalues()?;
                Prepared::Bh {
                    level: spec.alpha / harmonic_ell(k)?,
                }
            }
            Procedure::GroupSimesBh { groups } => {
                need_pvalues()?;
                let groups = to_zero_based(groups, k)?;
                let group_mask = NullMask::new(
                    groups
                        .groups()
                        .iter()
                        .map(|g| g.iter().all(|&i| mask.is_null(i)))
                        .collect(),
                );
                Prepared::GroupBh { groups, group_mask }
            }
            Procedure::EvaluePipeline { pipeline } => {
                need_all_null("the e-value mean")?;
                match pipeline {
                    EvaluePipeline::Calibrated { kappa, merge } => {
                        need_pvalues()?;
                        let merge = match merge {
                            EMerge::Product => Merge::Product,
                            EMerge::Average => Merge::Average,
                            EMerge::Lambda { lambdas } => {
                                if lambdas.len() != k {
                                    return Err(Error::input(format!(
                                        "lambdas have {} entries but K={k}",
                                        lambdas.len()
                                    )));
                                }
                                if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l))
                                {
                                    return Err(Error::domain(format!(
                                        "lambda must lie in [0,1], got {l}"
                                    )));
                                }
                                Merge::Lambda(lambdas.clone())
                            }
                            EMerge::UStatistic { k: order } => {
                                if *order == 0 || *order > k {
                                    return Err(Error::domain(format!(
                                        "U-statistic order must lie in 1..={k}, got {order}"
                                    )));
                                }
                                Merge::UStat(*order)
                            }
                            EMerge::Convex { terms } => {
                                check_convex_weights(terms.iter().map(|t| t.weight))?;
                                let terms = terms
                                    .iter()
                                    .map(|t| {
                                        let set = t
                                            .subset
                                            .iter()
                                            .map(|&i| {
                                                if i == 0 || i > k {
                                                    Err(Error::input(format!(
                                                        "subset index {i} outside 1..={k}"
                                                    )))
                                                } else {
                                                    Ok(i - 1)
                                                }
                                            })
                                            .collect::<Result<Vec<_>>>()?;
                                        Ok((set, t.weight))
                                    })
                                    .collect::<Result<Vec<_>>>()?;
                                Merge::Convex(terms)
                            }
                        };
                        Prepared::Calibrated {
                            calibrator: CalibratorSpec::new(*kappa)?,
                            merge,
                        }
                    }
                    EvaluePipeline::Chernoff { lambda } => {
                        let specs = sampler.sub_gaussian_specs()?;
                        let lambdas = match lambda {
                            Some(l) if !(l.is_finite() && *l >= 0.0) => {
                                return Err(Error::domain(format!(
                                    "bet lambda must be finite and nonnegative, got {l}"
                                )))
                            }
                            Some(l) => vec![*l; k],
                            None => specs
                                .iter()
                                .map(|s| hoeffding_lambda(spec.alpha, k, s.v))
                                .collect::<Result<_>>()?,
                        };
                        Prepared::Chernoff { specs, lambdas }
                    }
                }
            }
        };
        Ok(Experiment {
            spec,
            sampler,
            mask,
            prepared,
        })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn null_mask(&self) -> &NullMask {
        &self.mask
    }

    pub fn statistic(&self) -> Statistic {
        match self.prepared {
            Prepared::Simes | Prepared::WeightedSimes(_) | Prepared::SimesOfSimes(_) => {
                Statistic::Type1
            }
            Prepared::Bh { .. } | Prepared::GroupBh { .. } => Statistic::Fdr,
            Prepared::Calibrated { .. } | Prepared::Chernoff { .. } => Statistic::EMean,
        }
    }

    fn bh_identity_applies(&self) -> bool {
        matches!(self.spec.procedure, Procedure::Bh) && self.mask.k0() == self.mask.len()
    }

    fn new_state(&self) -> State {
        let k = self.sampler.dim();
        let n_groups = match &self.prepared {
            Prepared::SimesOfSimes(g) | Prepared::GroupBh { groups: g, .. } => g.len(),
            _ => 0,
        };
        State {
            scratch: self.sampler.scratch(),
            x: vec![0.0; k],
            buf: Vec::with_capacity(k),
            groups: vec![0.0; n_groups],
        }
    }

    fn group_values(groups: &GroupPartition, x: &[f64], buf: &mut Vec<f64>, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(groups.groups()) {
            buf.clear();
            buf.extend(g.iter().map(|&i| x[i]));
            buf.sort_unstable_by(f64::total_cmp);
            *o = simes_of_sorted(buf).clamp(0.0, 1.0);
        }
    }

    fn replicate(&self, rng: &mut rand_chacha::ChaCha8Rng, st: &mut State, tally: &mut Tally) {
        let alpha = self.spec.alpha;
        self.sampler.draw(rng, &mut st.scratch, &mut st.x);
        match &self.prepared {
            Prepared::Simes => {
                st.buf.clear();
                st.buf.extend_from_slice(&st.x);
                st.buf.sort_unstable_by(f64::total_cmp);
                tally.hit(simes_test_sorted(&st.buf, alpha));
            }
            Prepared::WeightedSimes(w) => {
                st.buf.clear();
                st.buf.extend(st.x.iter().zip(w).map(|(&p, &wk)| {
                    if wk > 0.0 {
                        p / wk
                    } else if p == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }));
                st.buf.sort_unstable_by(f64::total_cmp);
                tally.hit(simes_test_sorted(&st.buf, alpha));
            }
            Prepared::SimesOfSimes(groups) => {
                Self::group_values(groups, &st.x, &mut st.buf, &mut st.groups);
                st.groups.sort_unstable_by(f64::total_cmp);
                tally.hit(simes_test_sorted(&st.groups, alpha));
            }
            Prepared::Bh { level } => {
                let r = bh_slice(&st.x, *level);
                let f = fdp_unchecked(&r, &self.mask);
                tally.value(f);
                if self.bh_identity_applies() {
                    st.buf.clear();
                    st.buf.extend_from_slice(&st.x);
                    st.buf.sort_unstable_by(f64::total_cmp);
                    let expected = if simes_test_sorted(&st.buf, alpha) {
                        1.0
                    } else {
                        0.0
                    };
                    tally.violations += (f != expected) as u64;
                }
            }
            Prepared::GroupBh { groups, group_mask } => {
                Self::group_values(groups, &st.x, &mut st.buf, &mut st.groups);
                let r = bh_slice(&st.groups, alpha);
                tally.value(fdp_unchecked(&r, group_mask));
            }
            Prepared::Calibrated { calibrator, merge } => {
                st.buf.clear();
                st.buf
                    .extend(st.x.iter().map(|&p| calibrator.calibrate_one(p)));
                let e = &st.buf;
                let merged = match merge {
                    Merge::Product => product_slice(e),
                    Merge::Lambda(l) => lambda_product_unchecked(e, l),
                    Merge::UStat(order) => u_statistic_unchecked(e, *order),
                    Merge::Average => e.iter().sum::<f64>() / e.len() as f64,
                    Merge::Convex(terms) => convex_unchecked(e, terms),
                };
                tally.value(merged);
            }
            Prepared::Chernoff { specs, lambdas } => {
                tally.value(chernoff_unchecked(&st.x, specs, lambdas));
            }
        }
    }

    /// Runs every replication. Deterministic in the spec, including the
    /// seed, at any worker count.
    pub fn run(&self) -> Result<ExperimentOutcome> {
        let reps = self.spec.reps;
        let tally = run_replications(
            reps,
            self.spec.seed,
            || self.new_state(),
            |rng, st, t| self.replicate(rng, st, t),
        );
        let statistic = self.statistic();
        let estimate = match statistic {
            Statistic::Type1 => McEstimate::from_count(tally.hits, reps, self.spec.seed.seed),
            Statistic::Fdr | Statistic::EMean => {
                let (mean, sd) = tally.mean_sd();
                McEstimate::from_mean(mean, sd, reps, self.spec.seed.seed)
            }
        };
        Ok(ExperimentOutcome {
            statistic,
            estimate,
            dependence: self.sampler.dependence(),
            identity_violations: self.bh_identity_applies().then_some(tally.violations),
            references: self.references()?,
        })
    }

    /// Bounds that the experiment's estimate must respect, given the
    /// sampler's dependence class.
    pub fn references(&self) -> Result<Vec<Reference>> {
        let alpha = self.spec.alpha;
        let k = self.sampler.dim();
        let dep = self.sampler.dependence();
        let k0_ratio = self.mask.k0() as f64 / k as f64;
        let continuous = !matches!(
            self.spec.sampler,
            SamplerConfig::Permutation { .. } | SamplerConfig::WithoutReplacement { .. }
        );
        let upper = |name, value: f64| Reference {
            name,
            value: value.min(1.0),
            exact: false,
        };
        let exact = |name, value| Reference {
            name,
            value,
            exact: true,
        };
        let negdep_simes = || -> Result<Vec<Reference>> {
            Ok(vec![
                upper("tilde_s", simes_bound_tilde(alpha)?),
                upper("additive_general", simes_bound_additive(alpha, k)?),
                upper("hommel", hommel_bound(alpha, k)?),
            ])
        };
        let mut refs = Vec::new();
        match (&self.spec.procedure, dep) {
            (Procedure::Simes, Dependence::Independent | Dependence::Comonotonic) => {
                refs.push(exact("simes_exact", alpha))
            }
            (Procedure::Simes | Procedure::WeightedSimes { .. }, d) if d.is_negative() => {
                // (U, 1 − U): S₂ ≤ α iff min(U, 1 − U) ≤ α/2, probability α for α < 1/2
                let antithetic = matches!(
                    self.spec.sampler,
                    SamplerConfig::CounterMonotonicPairs { pairs: 1 }
                );
                if antithetic && alpha < 0.5 && matches!(self.spec.procedure, Procedure::Simes) {
                    refs.push(exact("counter_monotonic_exact", alpha));
                }
                refs.extend(negdep_simes()?)
            }
            (Procedure::Simes, _) => refs.push(upper("hommel", hommel_bound(alpha, k)?)),
            // identical p-values: P(S^w ≤ α) = P(U ≤ α max_k k w_[k] / K) ≤ α
            (
                Procedure::WeightedSimes { .. },
                Dependence::Independent | Dependence::Comonotonic,
            ) => refs.push(upper("simes_prds", alpha)),
            (Procedure::WeightedSimes { .. }, _) => {}
            (Procedure::SimesOfSimes { .. }, Dependence::Independent | Dependence::Comonotonic) => {
                refs.push(upper("simes_of_simes_prd", alpha))
            }
            (Procedure::SimesOfSimes { .. }, Dependence::NegativelyAssociated) => {
                let f = correction_factor(k)?;
                refs.push(upper("simes_of_simes_squared", f * f * alpha));
                if alpha < SIMES_OF_SIMES_ALPHA_LIMIT {
                    refs.push(upper(
                        "simes_of_simes_small_alpha",
                        SIMES_OF_SIMES_SMALL_MULTIPLIER * alpha,
                    ));
                }
            }
            (Procedure::SimesOfSimes { .. }, _) => {}
            (Procedure::Bh, Dependence::Independent) => {
                refs.push(exact("bh_exact", k0_ratio * alpha))
            }
            (Procedure::Bh, Dependence::Comonotonic) if k0_ratio == 1.0 => {
                refs.push(exact("bh_exact", alpha))
            }
            (Procedure::Bh, d) => {
                if d.is_negative() {
                    let report = bh_fdr_bound_negdep(alpha, k)?;
                    refs.push(upper("su_neg", report.su_neg_bound));
                    if k0_ratio == 1.0 {
                        refs.push(upper("all_null_tilde_s", simes_bound_tilde(alpha)?));
                    }
                }
                refs.push(upper("by_arbitrary", harmonic_ell(k)? * k0_ratio * alpha));
            }
            (Procedure::By, _) => refs.push(upper("by", k0_ratio * alpha)),
            (Procedure::GroupSimesBh { .. }, d) => {
                let dummy = PVector::new(vec![1.0; k])?;
                let groups = match &self.prepared {
                    Prepared::GroupBh { groups, .. } => groups,
                    _ => unreachable!("group procedure is prepared as GroupBh"),
                };
                let r = group_simes_bh(&dummy, groups, alpha)?;
                match d {
                    Dependence::Independent | Dependence::Comonotonic => {
                        refs.push(upper("group_prds", r.prds_bound))
                    }
                    Dependence::NegativelyAssociated => refs.push(upper("group_na", r.na_bound)),
                    _ => {}
                }
            }
            (Procedure::EvaluePipeline { pipeline }, d) => {
                let averaging = matches!(
                    pipeline,
                    EvaluePipeline::Calibrated {
                        merge: EMerge::Average,
                        ..
                    }
                );
                let calibrated = matches!(pipeline, EvaluePipeline::Calibrated { .. });
                if calibrated && continuous && (averaging || d == Dependence::Independent) {
                    refs.push(exact("unit_mean", 1.0));
                } else if averaging || d == Dependence::Independent || d.is_negative() {
                    refs.push(upper("e_value", 1.0));
                }
            }
        }
        Ok(refs)
    }
}

/// Type-1 error of a Simes-type test under the global null.
pub fn estimate_simes_type1(spec: &ExperimentSpec) -> Result<McEstimate> {
    let exp = Experiment::new(spec.clone())?;
    if exp.statistic() != Statistic::Type1 {
        return Err(Error::input("procedure is not a global-null test"));
    }
    Ok(exp.run()?.estimate)
}

/// FDR of BH, BY, or group Simes+BH.
pub fn estimate_bh_fdr(spec: &ExperimentSpec) -> Result<McEstimate> {
    Ok(estimate_bh_fdr_detailed(spec)?.estimate)
}

/// As [`estimate_bh_fdr`], also counting draws on which the all-null
/// identity `FDP = 𝟙{Simes rejects}` fails.
pub fn estimate_bh_fdr_detailed(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let exp = Experiment::new(spec.clone())?;
    if exp.statistic() != Statistic::Fdr {
        return Err(Error::input("procedure is not a step-up procedure"));
    }
    exp.run()
}

/// Mean of a merged e-value under the global null.
pub fn estimate_evalue_mean(spec: &ExperimentSpec) -> Result<McEstimate> {
    let exp = Experiment::new(spec.clone())?;
    if exp.statistic() != Statistic::EMean {
        return Err(Error::input("procedure is not an e-value pipeline"));
    }
    Ok(exp.run()?.estimate)
}
