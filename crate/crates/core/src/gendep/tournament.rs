//! Round-robin tournaments with binary outcomes and random-bracket knockouts.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed in `p_ij + p_ji ≤ 1`.
const WIN_PROB_TOL: f64 = 1e-12;
/// Largest supported knockout depth (2^20 players).
pub const MAX_KNOCKOUT_ROUNDS: u32 = 20;

/// Games per pair and win probabilities; `1 − p_ij − p_ji` is the draw
/// probability of each game between `i` and `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentSpec {
    n_games: Vec<Vec<u32>>,
    win_prob: Vec<Vec<f64>>,
}

impl TournamentSpec {
    pub fn new(n_games: Vec<Vec<u32>>, win_prob: Vec<Vec<f64>>) -> Result<Self> {
        let k = n_games.len();
        if k == 0 {
            return Err(Error::input("tournament needs at least one player"));
        }
        if win_prob.len() != k || n_games.iter().any(|r| r.len() != k) {
            return Err(Error::input("n_games must be KxK"));
        }
        if win_prob.iter().any(|r| r.len() != k) {
            return Err(Error::input("win_prob must be KxK"));
        }
        for i in 0..k {
            if n_games[i][i] != 0 {
                return Err(Error::domain(format!("player {} plays itself", i + 1)));
            }
            for j in 0..k {
                if n_games[i][j] != n_games[j][i] {
                    return Err(Error::domain(format!(
                        "n_games is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                let p = win_prob[i][j];
                if i != j && !(0.0..=1.0).contains(&p) {
                    return Err(Error::domain(format!(
                        "win probability {p} at ({}, {}) outside [0,1]",
                        i + 1,
                        j + 1
                    )));
                }
                if i < j && p + win_prob[j][i] > 1.0 + WIN_PROB_TOL {
                    return Err(Error::domain(format!(
                        "p_ij + p_ji exceeds 1 for players {} and {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(TournamentSpec { n_games, win_prob })
    }

    /// Every pair plays `games` times; each game is drawn with probability
    /// `draw_prob` and otherwise won by either side with equal probability.
    pub fn fair_round_robin(k: usize, games: u32, draw_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&draw_prob) {
            return Err(Error::domain(format!(
                "draw probability {draw_prob} outside [0,1]"
            )));
        }
        let p = (1.0 - draw_prob) / 2.0;
        TournamentSpec::new(
            (0..k)
                .map(|i| (0..k).map(|j| if i == j { 0 } else { games }).collect())
                .collect(),
            (0..k)
                .map(|i| (0..k).map(|j| if i == j { 0.0 } else { p }).collect())
                .collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.n_games.len()
    }

    pub fn n_games(&self) -> &[Vec<u32>] {
        &self.n_games
    }

    pub fn win_prob(&self) -> &[Vec<f64>] {
        &self.win_prob
    }

    /// Games played by player `i`.
    pub fn games_played(&self, i: usize) -> u64 {
        self.n_games[i].iter().map(|&n| n as u64).sum()
    }

    /// `E S_i = Σ_j n_ij p_ij`.
    pub fn expected_score(&self, i: usize) -> f64 {
        (0..self.k())
            .filter(|&j| j != i)
            .map(|j| self.n_games[i][j] as f64 * self.win_prob[i][j])
            .sum()
    }

    /// Plays every game; `wins` is row-major `K×K`, `wins[i·K + j]` counting
    /// wins of `i` over `j`.
    pub(crate) fn draw_wins<R: Rng + ?Sized>(&self, rng: &mut R, wins: &mut [u32]) {
        let k = self.k();
        wins.fill(0);
        for i in 0..k {
            for j in (i + 1)..k {
                let (p_i, p_j) = (self.win_prob[i][j], self.win_prob[j][i]);
                for _ in 0..self.n_games[i][j] {
                    let u: f64 = rng.random();
                    if u < p_i {
                        wins[i * k + j] += 1;
                    } else if u < p_i + p_j {
                        wins[j * k + i] += 1;
                    }
                }
            }
        }
    }
}

/// Win matrix `X` with `X[i][j] ~ Binomial(n_ij, p_ij)`, one draw of every game.
pub fn sample_tournament<R: Rng + ?Sized>(spec: &TournamentSpec, rng: &mut R) -> Vec<Vec<u32>> {
    let k = spec.k();
    let mut wins = vec![0; k * k];
    spec.draw_wins(rng, &mut wins);
    wins.chunks(k).map(<[u32]>::to_vec).collect()
}

/// Scores `S_i = Σ_{j≠i} X_ij`.
pub fn sample_tournament_scores<R: Rng + ?Sized>(spec: &TournamentSpec, rng: &mut R) -> Vec<u64> {
    sample_tournament(spec, rng)
        .iter()
        .map(|row| row.iter().map(|&x| x as u64).sum())
        .collect()
}

/// Win counts of `2^rounds` players in a single-elimination bracket drawn
/// uniformly at random, every match a fair coin flip.
pub fn sample_knockout_scores<R: Rng + ?Sized>(rounds: u32, rng: &mut R) -> Result<Vec<u32>> {
    check_rounds(rounds)?;
    let n = 1usize << rounds;
    let mut wins = vec![0; n];
    let mut bracket = vec![0; n];
    draw_knockout(rng, &mut bracket, &mut wins);
    Ok(wins)
}

pub(crate) fn check_rounds(rounds: u32) -> Result<()> {
    if rounds == 0 || rounds > MAX_KNOCKOUT_ROUNDS {
        return Err(Error::input(format!(
            "knockout rounds must be in 1..={MAX_KNOCKOUT_ROUNDS}, got {rounds}"
        )));
    }
    Ok(())
}

/// `bracket` has length `n` and is scratch; `wins` receives the counts.
pub(crate) fn draw_knockout<R: Rng + ?Sized, W: Copy + From<u8> + std::ops::AddAssign>(
    rng: &mut R,
    bracket: &mut [usize],
    wins: &mut [W],
) {
    wins.fill(W::from(0));
    for (i, b) in bracket.iter_mut().enumerate() {
        *b = i;
    }
    bracket.shuffle(rng);
    let mut alive = bracket.len();
    while alive > 1 {
        for m in 0..alive / 2 {
            let (a, b) = (bracket[2 * m], bracket[2 * m + 1]);
            let winner = if rng.random::<bool>() { a } else { b };
            wins[winner] += W::from(1);
            bracket[m] = winner;
        }
        alive /= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    /// Sample covariance of columns `a` and `b` with a plug-in standard error.
    fn cov_with_se(rows: &[Vec<f64>], a: usize, b: usize) -> (f64, f64) {
        let n = rows.len() as f64;
        let ma = rows.iter().map(|r| r[a]).sum::<f64>() / n;
        let mb = rows.iter().map(|r| r[b]).sum::<f64>() / n;
        let prods: Vec<f64> = rows.iter().map(|r| (r[a] - ma) * (r[b] - mb)).collect();
        let c = prods.iter().sum::<f64>() / n;
        let var = prods.iter().map(|x| (x - c).powi(2)).sum::<f64>() / (n - 1.0);
        (c, (var / n).sqrt())
    }

    #[test]
    fn validation() {
        assert!(TournamentSpec::new(vec![vec![1]], vec![vec![0.0]]).is_err());
        assert!(TournamentSpec::new(vec![vec![0, 1], vec![2, 0]], vec![vec![0.0; 2]; 2]).is_err());
        let g = vec![vec![0, 1], vec![1, 0]];
        assert!(
            TournamentSpec::new(g.clone(), vec![vec![0.0, 0.7], vec![0.4, 0.0]])
                .unwrap_err()
                .is_domain()
        );
        assert!(TournamentSpec::new(g, vec![vec![0.0, 0.6], vec![0.4, 0.0]]).is_ok());
        assert!(TournamentSpec::fair_round_robin(3, 1, 1.5).is_err());
    }

    #[test]
    fn no_games_no_points() {
        let spec = TournamentSpec::fair_round_robin(4, 0, 0.0).unwrap();
        let mut rng = RngSeed::new(1, 0).rng();
        assert_eq!(sample_tournament_scores(&spec, &mut rng), vec![0; 4]);
    }

    #[test]
    fn two_player_outcomes() {
        let mut rng = RngSeed::new(2, 0).rng();
        let spec = TournamentSpec::fair_round_robin(2, 1, 0.0).unwrap();
        let n = 100_000u64;
        let mut first = 0u64;
        for _ in 0..n {
            let s = sample_tournament_scores(&spec, &mut rng);
            assert!(s == vec![1, 0] || s == vec![0, 1]);
            first += s[0];
        }
        let se = (0.25 / n as f64).sqrt();
        assert!((first as f64 / n as f64 - 0.5).abs() <= 3.0 * se);

        let spec = TournamentSpec::fair_round_robin(2, 1, 0.5).unwrap();
        let mut seen_draw = false;
        for _ in 0..1000 {
            let s = sample_tournament_scores(&spec, &mut rng);
            assert!(s[0] + s[1] <= 1);
            seen_draw |= s == vec![0, 0];
        }
        assert!(seen_draw);
    }

    #[test]
    fn fair_scores_negatively_correlated() {
        let spec = TournamentSpec::fair_round_robin(5, 2, 0.2).unwrap();
        assert!((spec.expected_score(0) - 4.0 * 2.0 * 0.4).abs() < 1e-12);
        let mut rng = RngSeed::new(3, 0).rng();
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                sample_tournament_scores(&spec, &mut rng)
                    .into_iter()
                    .map(|s| s as f64)
                    .collect()
            })
            .collect();
        for a in 0..5 {
            for b in (a + 1)..5 {
                let (c, se) = cov_with_se(&rows, a, b);
                assert!(c <= 3.0 * se, "cov({a},{b}) = {c}");
            }
        }
    }

    #[test]
    fn knockout_structure() {
        let mut rng = RngSeed::new(4, 0).rng();
        let mut s = sample_knockout_scores(1, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1]);
        let mut s = sample_knockout_scores(2, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 0, 1, 2]);
        for _ in 0..50 {
            let s = sample_knockout_scores(4, &mut rng).unwrap();
            assert_eq!(s.iter().filter(|&&w| w == 4).count(), 1);
            for w in 0..4 {
                assert_eq!(s.iter().filter(|&&x| x == w).count(), 1 << (4 - w - 1));
            }
        }
        assert!(sample_knockout_scores(0, &mut rng).is_err());
    }

    #[test]
    fn knockout_scores_negatively_correlated() {
        let mut rng = RngSeed::new(5, 0).rng();
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                sample_knockout_scores(3, &mut rng)
                    .unwrap()
                    .into_iter()
                    .map(f64::from)
                    .collect()
            })
            .collect();
        for a in 0..8 {
            for b in (a + 1)..8 {
                let (c, se) = cov_with_se(&rows, a, b);
                assert!(c <= 3.0 * se, "cov({a},{b}) = {c}");
            }
        }
    }
}
