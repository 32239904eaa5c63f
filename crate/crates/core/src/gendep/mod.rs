//! Samplers for negatively dependent vectors and empirical dependence
//! diagnostics.
//!
//! Every sampler is a pure function of its configuration and the random
//! stream it is handed. [`SamplerConfig`] is the serializable description;
//! [`Sampler`] is the validated, precomputed form used in simulation loops.

mod combinatorial;
mod diagnostic;
mod gaussian;
mod tournament;

pub use combinatorial::{
    sample_multinomial_indicator, sample_permutation, sample_without_replacement,
};
pub use diagnostic::{
    wnd_diagnostic, DiagnosticMode, WndEntry, WndReport, FLAG_SIGMAS, MIN_DIAGNOSTIC_SAMPLES,
};
pub use gaussian::{
    normal_cdf, random_nonpositive_corr, sample_cyclical_pvalues, sample_neg_gaussian_p,
    FactorKind, GaussianFactor,
};
pub use tournament::{
    sample_knockout_scores, sample_tournament, sample_tournament_scores, TournamentSpec,
    MAX_KNOCKOUT_ROUNDS,
};

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::emerge::SubPsiSpec;
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::types::{CorrMatrix, NullMask};

/// How the correlation matrix of a Gaussian sampler is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaConfig {
    Matrix {
        rows: Vec<Vec<f64>>,
    },
    Equicorrelation {
        k: usize,
        rho: f64,
    },
    /// See [`random_nonpositive_corr`]; `seed` fixes the matrix.
    RandomNonpositive {
        k: usize,
        seed: u64,
    },
}

impl SigmaConfig {
    pub fn build(&self) -> Result<CorrMatrix> {
        match self {
            SigmaConfig::Matrix { rows } => CorrMatrix::from_rows(rows),
            SigmaConfig::Equicorrelation { k, rho } => CorrMatrix::equicorrelation(*k, *rho),
            SigmaConfig::RandomNonpositive { k, seed } => {
                random_nonpositive_corr(*k, &mut RngSeed::new(*seed, 0).rng())
            }
        }
    }
}

/// Serializable sampler description. A nonempty `shift` moves coordinate
/// `k` to an alternative with latent mean `shift_k > 0`; zero entries are
/// nulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Independent {
        k: usize,
        #[serde(default)]
        shift: Vec<f64>,
    },
    NegGaussian {
        sigma: SigmaConfig,
        #[serde(default)]
        shift: Vec<f64>,
        /// Accept positive off-diagonal entries.
        #[serde(default)]
        allow_mixed_signs: bool,
    },
    /// `K = 2·pairs` with `(P_{2i−1}, P_{2i}) = (U_i, 1 − U_i)`.
    CounterMonotonicPairs {
        pairs: usize,
    },
    /// `K` copies of one uniform; not negatively dependent.
    Comonotonic {
        k: usize,
    },
    Cyclical {
        k: usize,
    },
    Permutation {
        values: Vec<f64>,
    },
    WithoutReplacement {
        bag: Vec<f64>,
        k: usize,
    },
    MultinomialIndicator {
        k: usize,
        m: usize,
    },
    TournamentBinary {
        n_games: Vec<Vec<u32>>,
        win_prob: Vec<Vec<f64>>,
    },
    KnockoutRandom {
        rounds: u32,
    },
}

impl SamplerConfig {
    pub fn independent(k: usize) -> Self {
        SamplerConfig::Independent { k, shift: vec![] }
    }

    pub fn neg_gaussian(sigma: SigmaConfig) -> Self {
        SamplerConfig::NegGaussian {
            sigma,
            shift: vec![],
            allow_mixed_signs: false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerConfig::Independent { .. } => "independent",
            SamplerConfig::NegGaussian { .. } => "neg_gaussian",
            SamplerConfig::CounterMonotonicPairs { .. } => "counter_monotonic_pairs",
            SamplerConfig::Comonotonic { .. } => "comonotonic",
            SamplerConfig::Cyclical { .. } => "cyclical",
            SamplerConfig::Permutation { .. } => "permutation",
            SamplerConfig::WithoutReplacement { .. } => "without_replacement",
            SamplerConfig::MultinomialIndicator { .. } => "multinomial_indicator",
            SamplerConfig::TournamentBinary { .. } => "tournament_binary",
            SamplerConfig::KnockoutRandom { .. } => "knockout_random",
        }
    }
}

/// The dependence structure a sampler is known to have; decides which
/// bounds apply to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    /// Negatively associated, hence also negatively orthant dependent.
    NegativelyAssociated,
    /// Negatively lower and upper orthant dependent.
    NegativeOrthant,
    /// All coordinates equal; positively dependent.
    Comonotonic,
    /// No structure is assumed.
    Unrestricted,
}

impl Dependence {
    /// Whether the class implies weak negative dependence.
    pub fn is_negative(self) -> bool {
        matches!(
            self,
            Dependence::NegativelyAssociated | Dependence::NegativeOrthant
        )
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Independent {
        shift: Vec<f64>,
    },
    Gaussian {
        factor: GaussianFactor,
        shift: Vec<f64>,
    },
    CounterMonotonic,
    Comonotonic,
    Cyclical,
    Permutation {
        values: Vec<f64>,
    },
    WithoutReplacement {
        bag: Vec<f64>,
    },
    Indicator {
        m: usize,
    },
    Tournament {
        spec: TournamentSpec,
    },
    Knockout,
}

/// A validated sampler producing one `K`-vector per call to [`Sampler::draw`].
#[derive(Debug, Clone)]
pub struct Sampler {
    prepared: Prepared,
    k: usize,
    dependence: Dependence,
    config: SamplerConfig,
}

/// Per-thread working memory for [`Sampler::draw`].
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    reals: Vec<f64>,
    indices: Vec<usize>,
    wins: Vec<u32>,
}

fn require_k(k: usize) -> Result<usize> {
    if k == 0 {
        Err(Error::input("K must be at least 1"))
    } else {
        Ok(k)
    }
}

/// Whether a uniform draw from `values` satisfies `P(V ≤ x) ≤ x` for all x.
fn is_superuniform(values: &[f64]) -> bool {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().all(|x| (0.0..=1.0).contains(x))
        && (0..v.len()).all(|i| {
            let at_or_below = v.partition_point(|y| *y <= v[i]);
            at_or_below as f64 / n <= v[i]
        })
}

impl Sampler {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        let mut dependence = Dependence::NegativelyAssociated;
        let (prepared, k) = match config {
            SamplerConfig::Independent { k, shift } => {
                let k = require_k(*k)?;
                gaussian::check_shift(shift, k)?;
                dependence = Dependence::Independent;
                (
                    Prepared::Independent {
                        shift: shift.clone(),
                    },
                    k,
                )
            }
            SamplerConfig::NegGaussian {
                sigma,
                shift,
                allow_mixed_signs,
            } => {
                let sigma = sigma.build()?;
                if !allow_mixed_signs && !sigma.all_offdiag_nonpositive() {
                    return Err(Error::domain(
                        "correlation matrix has positive off-diagonal entries; set allow_mixed_signs to accept",
                    ));
                }
                let k = sigma.dim();
                gaussian::check_shift(shift, k)?;
                let m = sigma.entries();
                let offdiag =
                    |f: fn(f64) -> bool| (0..k).all(|i| (0..k).all(|j| i == j || f(m[(i, j)])));
                dependence = if offdiag(|x| x == 0.0) {
                    Dependence::Independent
                } else if offdiag(|x| x <= 0.0) {
                    Dependence::NegativelyAssociated
                } else {
                    Dependence::Unrestricted
                };
                let factor = GaussianFactor::new(&sigma);
                (
                    Prepared::Gaussian {
                        factor,
                        shift: shift.clone(),
                    },
                    k,
                )
            }
            SamplerConfig::CounterMonotonicPairs { pairs } => {
                (Prepared::CounterMonotonic, 2 * require_k(*pairs)?)
            }
            SamplerConfig::Comonotonic { k } => {
                dependence = Dependence::Comonotonic;
                (Prepared::Comonotonic, require_k(*k)?)
            }
            SamplerConfig::Cyclical { k } => {
                if *k < 2 {
                    return Err(Error::input("cyclical construction needs K >= 2"));
                }
                dependence = Dependence::NegativeOrthant;
                (Prepared::Cyclical, *k)
            }
            SamplerConfig::Permutation { values } => {
                let k = require_k(values.len())?;
                check_finite(values)?;
                (
                    Prepared::Permutation {
                        values: values.clone(),
                    },
                    k,
                )
            }
            SamplerConfig::WithoutReplacement { bag, k } => {
                let k = require_k(*k)?;
                check_finite(bag)?;
                if k > bag.len() {
                    return Err(Error::domain(format!(
                        "cannot draw {k} items from a bag of {}",
                        bag.len()
                    )));
                }
                (Prepared::WithoutReplacement { bag: bag.clone() }, k)
            }
            SamplerConfig::MultinomialIndicator { k, m } => {
                let k = require_k(*k)?;
                if *m > k {
                    return Err(Error::domain(format!("m={m} exceeds K={k}")));
                }
                (Prepared::Indicator { m: *m }, k)
            }
            SamplerConfig::TournamentBinary { n_games, win_prob } => {
                let spec = TournamentSpec::new(n_games.clone(), win_prob.clone())?;
                let k = spec.k();
                (Prepared::Tournament { spec }, k)
            }
            SamplerConfig::KnockoutRandom { rounds } => {
                tournament::check_rounds(*rounds)?;
                (Prepared::Knockout, 1usize << rounds)
            }
        };
        Ok(Sampler {
            prepared,
            k,
            dependence,
            config: config.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Counter-monotonic pairs, permutations, draws without replacement,
    /// subset indicators, and tournament scores with independent games are
    /// negatively associated; the cyclical construction is negatively
    /// orthant dependent.
    pub fn dependence(&self) -> Dependence {
        self.dependence
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Whether each null coordinate is a valid p-value, so that p-value
    /// procedures may consume the draws directly.
    pub fn yields_pvalues(&self) -> bool {
        match &self.prepared {
            Prepared::Independent { .. }
            | Prepared::Gaussian { .. }
            | Prepared::CounterMonotonic
            | Prepared::Comonotonic
            | Prepared::Cyclical => true,
            Prepared::Permutation { values } => is_superuniform(values),
            Prepared::WithoutReplacement { bag } => is_superuniform(bag),
            Prepared::Indicator { .. } | Prepared::Tournament { .. } | Prepared::Knockout => false,
        }
    }

    /// Nulls are the zero-shift coordinates; shift-free samplers are all null.
    pub fn null_mask(&self) -> NullMask {
        match &self.prepared {
            Prepared::Independent { shift } | Prepared::Gaussian { shift, .. }
                if !shift.is_empty() =>
            {
                NullMask::new(shift.iter().map(|&s| s == 0.0).collect())
            }
            _ => NullMask::all_null(self.k),
        }
    }

    /// Per-coordinate sub-Gaussian description `(μ_k, v_k)` of the draws:
    /// p-values are bounded in [0,1] with null mean 1/2, bag values use
    /// their mean and `range²/4`, counts of independent binary games use
    /// `games/4`.
    pub fn sub_gaussian_specs(&self) -> Result<Vec<SubPsiSpec>> {
        let k = self.k;
        let same = |v: f64, mu: f64| -> Result<Vec<SubPsiSpec>> {
            Ok(vec![SubPsiSpec::sub_gaussian(v, mu)?; k])
        };
        match &self.prepared {
            Prepared::Independent { .. }
            | Prepared::Gaussian { .. }
            | Prepared::CounterMonotonic
            | Prepared::Comonotonic
            | Prepared::Cyclical => same(0.25, 0.5),
            Prepared::Permutation { values: bag } | Prepared::WithoutReplacement { bag } => {
                let mean = bag.iter().sum::<f64>() / bag.len() as f64;
                let lo = bag.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = bag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                same((hi - lo).powi(2) / 4.0, mean)
            }
            Prepared::Indicator { m } => same(0.25, *m as f64 / k as f64),
            Prepared::Tournament { spec } => (0..k)
                .map(|i| {
                    SubPsiSpec::sub_gaussian(
                        spec.games_played(i) as f64 / 4.0,
                        spec.expected_score(i),
                    )
                })
                .collect(),
            Prepared::Knockout => {
                let rounds = k.trailing_zeros() as f64;
                same(rounds * rounds / 4.0, 1.0 - 0.5f64.powf(rounds))
            }
        }
    }

    pub fn scratch(&self) -> Scratch {
        let k = self.k;
        match &self.prepared {
            Prepared::Gaussian { .. } | Prepared::Cyclical => Scratch {
                reals: vec![0.0; k],
                ..Scratch::default()
            },
            Prepared::WithoutReplacement { bag } => Scratch {
                reals: bag.clone(),
                ..Scratch::default()
            },
            Prepared::Tournament { .. } => Scratch {
                wins: vec![0; k * k],
                ..Scratch::default()
            },
            Prepared::Knockout => Scratch {
                indices: vec![0; k],
                ..Scratch::default()
            },
            _ => Scratch::default(),
        }
    }

    /// Writes one draw into `out`, which must have length [`Sampler::dim`].
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, out: &mut [f64]) {
        assert_eq!(out.len(), self.k, "output buffer has wrong length");
        match &self.prepared {
            Prepared::Independent { shift } if shift.is_empty() => {
                let unit = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
                for o in out.iter_mut() {
                    *o = unit.sample(rng);
                }
            }
            Prepared::Independent { shift } => {
                for (o, &s) in out.iter_mut().zip(shift) {
                    let z: f64 = rand_distr::StandardNormal.sample(rng);
                    *o = normal_cdf(-(z + s));
                }
            }
            Prepared::Gaussian { factor, shift } => {
                factor.sample_latent(rng, shift, &mut scratch.reals, out);
                for o in out.iter_mut() {
                    *o = normal_cdf(-*o);
                }
            }
            Prepared::CounterMonotonic => {
                for pair in out.chunks_exact_mut(2) {
                    let u: f64 = rng.random();
                    pair[0] = u;
                    pair[1] = 1.0 - u;
                }
            }
            Prepared::Comonotonic => {
                let u: f64 = rng.random();
                out.fill(u);
            }
            Prepared::Cyclical => gaussian::draw_cyclical(rng, &mut scratch.reals, out),
            Prepared::Permutation { values } => {
                out.copy_from_slice(values);
                rand::seq::SliceRandom::shuffle(out, rng);
            }
            Prepared::WithoutReplacement { .. } => {
                combinatorial::draw_without_replacement(rng, &mut scratch.reals, out)
            }
            Prepared::Indicator { m } => combinatorial::draw_indicator(rng, *m, out),
            Prepared::Tournament { spec } => {
                spec.draw_wins(rng, &mut scratch.wins);
                for (o, row) in out.iter_mut().zip(scratch.wins.chunks(self.k)) {
                    *o = row.iter().map(|&w| f64::from(w)).sum();
                }
            }
            Prepared::Knockout => tournament::draw_knockout(rng, &mut scratch.indices, out),
        }
    }

    /// `n` draws from `seed`, one row each.
    pub fn sample_matrix(&self, n: usize, seed: RngSeed) -> Vec<Vec<f64>> {
        let mut rng = seed.rng();
        let mut scratch = self.scratch();
        (0..n)
            .map(|_| {
                let mut row = vec![0.0; self.k];
                self.draw(&mut rng, &mut scratch, &mut row);
                row
            })
            .collect()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("values must be finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(json: &str) -> Sampler {
        Sampler::new(&serde_json::from_str(json).unwrap()).unwrap()
    }

    /// Kolmogorov–Smirnov distance of the sample from Uniform[0,1].
    fn ks_uniform(mut x: Vec<f64>) -> f64 {
        x.sort_by(f64::total_cmp);
        let n = x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
            .fold(0.0, f64::max)
    }

    #[test]
    fn config_round_trip_and_unknown_fields() {
        let cfg = SamplerConfig::NegGaussian {
            sigma: SigmaConfig::Equicorrelation { k: 3, rho: -0.4 },
            shift: vec![0.0, 0.0, 2.0],
            allow_mixed_signs: false,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SamplerConfig>(&text).unwrap(), cfg);
        assert!(
            serde_json::from_str::<SamplerConfig>(r#"{"kind":"cyclical","k":3,"kk":1}"#).is_err()
        );
        assert!(serde_json::from_str::<SamplerConfig>(r#"{"kind":"nope"}"#).is_err());
        let s = sampler(r#"{"kind":"independent","k":4,"shift":[0,1,0,2]}"#);
        assert_eq!(s.null_mask().as_slice(), &[true, false, true, false]);
    }

    #[test]
    fn validation() {
        let bad = [
            r#"{"kind":"independent","k":0}"#,
            r#"{"kind":"independent","k":2,"shift":[1]}"#,
            r#"{"kind":"neg_gaussian","sigma":{"type":"equicorrelation","k":3,"rho":0.1}}"#,
            r#"{"kind":"neg_gaussian","sigma":{"type":"equicorrelation","k":3,"rho":-0.6}}"#,
            r#"{"kind":"cyclical","k":1}"#,
            r#"{"kind":"without_replacement","bag":[1,2],"k":3}"#,
            r#"{"kind":"multinomial_indicator","k":2,"m":3}"#,
            r#"{"kind":"knockout_random","rounds":0}"#,
        ];
        for b in bad {
            assert!(
                Sampler::new(&serde_json::from_str(b).unwrap()).is_err(),
                "{b}"
            );
        }
        let mixed = r#"{"kind":"neg_gaussian","sigma":{"type":"equicorrelation","k":3,"rho":0.1},"allow_mixed_signs":true}"#;
        assert!(Sampler::new(&serde_json::from_str(mixed).unwrap()).is_ok());
    }

    #[test]
    fn null_marginals_are_uniform() {
        let configs = [
            r#"{"kind":"independent","k":3}"#,
            r#"{"kind":"independent","k":3,"shift":[0,0,0]}"#,
            r#"{"kind":"neg_gaussian","sigma":{"type":"equicorrelation","k":3,"rho":-0.5}}"#,
            r#"{"kind":"neg_gaussian","sigma":{"type":"random_nonpositive","k":4,"seed":7}}"#,
            r#"{"kind":"counter_monotonic_pairs","pairs":2}"#,
            r#"{"kind":"comonotonic","k":3}"#,
            r#"{"kind":"cyclical","k":5}"#,
        ];
        let n = 100_000;
        // asymptotic KS critical value at level 1e-3
        let crit = 1.949 / (n as f64).sqrt();
        for c in configs {
            let s = sampler(c);
            assert!(s.yields_pvalues());
            let m = s.sample_matrix(n, RngSeed::new(77, 0));
            for j in 0..s.dim() {
                let d = ks_uniform(m.iter().map(|r| r[j]).collect());
                assert!(d < crit, "{c} coordinate {j}: KS {d}");
            }
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let s = sampler(
            r#"{"kind":"tournament_binary","n_games":[[0,2,2],[2,0,2],[2,2,0]],"win_prob":[[0,0.4,0.4],[0.4,0,0.4],[0.4,0.4,0]]}"#,
        );
        assert_eq!(
            s.sample_matrix(50, RngSeed::new(1, 2)),
            s.sample_matrix(50, RngSeed::new(1, 2))
        );
        assert_ne!(
            s.sample_matrix(50, RngSeed::new(1, 2)),
            s.sample_matrix(50, RngSeed::new(1, 3))
        );
    }

    #[test]
    fn discrete_samplers_preserve_structure() {
        let s = sampler(r#"{"kind":"knockout_random","rounds":3}"#);
        for row in s.sample_matrix(100, RngSeed::new(3, 0)) {
            let mut r = row.clone();
            r.sort_by(f64::total_cmp);
            assert_eq!(r, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 3.0]);
        }
        let s = sampler(r#"{"kind":"multinomial_indicator","k":5,"m":2}"#);
        for row in s.sample_matrix(100, RngSeed::new(3, 0)) {
            assert_eq!(row.iter().sum::<f64>(), 2.0);
        }
        let s = sampler(r#"{"kind":"without_replacement","bag":[0.2,0.4,0.6,0.8,1.0],"k":3}"#);
        assert!(s.yields_pvalues());
        for row in s.sample_matrix(100, RngSeed::new(3, 0)) {
            assert!(row[0] != row[1] && row[1] != row[2] && row[0] != row[2]);
        }
        assert!(!sampler(r#"{"kind":"permutation","values":[0.1,0.5]}"#).yields_pvalues());
        assert!(sampler(r#"{"kind":"permutation","values":[0.5,1.0]}"#).yields_pvalues());
    }

    #[test]
    fn sub_gaussian_means_match_samples() {
        let configs = [
            r#"{"kind":"knockout_random","rounds":3}"#,
            r#"{"kind":"multinomial_indicator","k":5,"m":2}"#,
            r#"{"kind":"without_replacement","bag":[1,2,3,10],"k":2}"#,
            r#"{"kind":"tournament_binary","n_games":[[0,3],[3,0]],"win_prob":[[0,0.3],[0.5,0]]}"#,
            r#"{"kind":"cyclical","k":3}"#,
        ];
        let n = 50_000;
        for c in configs {
            let s = sampler(c);
            let specs = s.sub_gaussian_specs().unwrap();
            let m = s.sample_matrix(n, RngSeed::new(5, 0));
            for (j, spec) in specs.iter().enumerate() {
                let col: Vec<f64> = m.iter().map(|r| r[j]).collect();
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                assert!(
                    (mean - spec.mu).abs() <= 4.0 * (var / n as f64).sqrt() + 1e-12,
                    "{c}"
                );
                assert!(
                    var <= spec.v + 1e-9,
                    "{c}: variance {var} above proxy {}",
                    spec.v
                );
            }
        }
    }
}
