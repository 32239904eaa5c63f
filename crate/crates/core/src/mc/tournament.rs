//! Testing for equal strength in a round-robin by betting on every game.
//!
//! Player `i` stakes a fraction ε of its wealth on winning each game, so a
//! win multiplies wealth by `1 + ε`, a loss by `1 − ε`, a draw by 1. Its
//! e-value is the final wealth `E_i = ∏_{j≠i} (1+ε)^{X_ij} (1−ε)^{X_ji}`,
//! and the global e-value is the order-2 U-statistic of `(E_1, …, E_K)`.

use serde::{Deserialize, Serialize};

use crate::emerge::u_statistic_unchecked;
use crate::error::{Error, Result};
use crate::gendep::TournamentSpec;
use crate::rng::RngSeed;
use crate::types::McEstimate;

use super::engine::run_replications;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentPipeline {
    pub k: usize,
    pub games_per_pair: u32,
    pub epsilon: f64,
    /// Probability that a game is drawn; wins split the rest evenly.
    #[serde(default)]
    pub draw_prob: f64,
}

impl TournamentPipeline {
    fn check(&self) -> Result<TournamentSpec> {
        if self.k < 2 {
            return Err(Error::input("tournament pipeline needs K >= 2"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::domain(format!(
                "epsilon must lie in [0,1], got {}",
                self.epsilon
            )));
        }
        TournamentSpec::fair_round_robin(self.k, self.games_per_pair, self.draw_prob)
    }
}

/// Player e-values from a row-major win matrix.
pub(crate) fn player_evalues(wins: &[u32], k: usize, epsilon: f64, out: &mut [f64]) {
    let (up, down) = (1.0 + epsilon, 1.0 - epsilon);
    for (i, o) in out.iter_mut().enumerate() {
        let mut e = 1.0;
        for j in 0..k {
            if j != i {
                e *= up.powi(wins[i * k + j] as i32) * down.powi(wins[j * k + i] as i32);
            }
        }
        *o = e;
    }
}

/// Mean of the global e-value over `reps` fair tournaments.
pub fn tournament_pipeline(
    cfg: &TournamentPipeline,
    reps: u64,
    seed: RngSeed,
) -> Result<McEstimate> {
    let spec = cfg.check()?;
    if reps == 0 {
        return Err(Error::input("reps must be positive"));
    }
    let k = cfg.k;
    let tally = run_replications(
        reps,
        seed,
        || (vec![0u32; k * k], vec![0.0; k]),
        |rng, (wins, e), t| {
            spec.draw_wins(rng, wins);
            player_evalues(wins, k, cfg.epsilon, e);
            t.value(u_statistic_unchecked(e, 2));
        },
    );
    let (mean, sd) = tally.mean_sd();
    Ok(McEstimate::from_mean(mean, sd, reps, seed.seed))
}
