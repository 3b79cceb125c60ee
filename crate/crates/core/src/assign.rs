//! Binary group assignment.
//!
//! `a[k][l] = 1` means user `k` harvests in phase `l` (it belongs to `S_l`)
//! and transmits in the other phase. Assignments are stored as one harvest
//! phase per user, so `a[k][0] + a[k][1] = 1` holds by construction.
//!
//! [`coordinate_assign`] sweeps users in index order and keeps whichever of the
//! two options scores higher with everybody else fixed. [`enumerate_assign`]
//! scores all `2^K` assignments and is the reference the sweep is tested
//! against.

use crate::error::{Error, Result};
use crate::scenario::Phase;

/// Largest user count [`enumerate_assign`] accepts.
pub const MAX_ENUMERATE_USERS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    harvest: Vec<Phase>,
}

impl Assignment {
    pub fn from_harvest_phases(harvest: Vec<Phase>) -> Self {
        Assignment { harvest }
    }

    /// Even-indexed users harvest in phase one, odd-indexed in phase two.
    pub fn parity(k: usize) -> Self {
        Assignment {
            harvest: (0..k)
                .map(|i| if i % 2 == 0 { Phase::One } else { Phase::Two })
                .collect(),
        }
    }

    /// Every user harvests in `phase`.
    pub fn all_harvest_in(k: usize, phase: Phase) -> Self {
        Assignment {
            harvest: vec![phase; k],
        }
    }

    /// Builds from a bitmask; bit `k` set means user `k` harvests in phase two.
    pub fn from_mask(k: usize, mask: u64) -> Self {
        Assignment {
            harvest: (0..k)
                .map(|i| if mask >> i & 1 == 1 { Phase::Two } else { Phase::One })
                .collect(),
        }
    }

    /// Builds from the `a[k] = [a_k1, a_k2]` rows, rejecting rows that do not sum to one.
    pub fn from_matrix(rows: &[[u8; 2]]) -> Result<Self> {
        rows.iter()
            .enumerate()
            .map(|(k, row)| match row {
                [1, 0] => Ok(Phase::One),
                [0, 1] => Ok(Phase::Two),
                _ => Err(Error::Domain(format!("user {k}: assignment row {row:?} is not one-hot"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment::from_harvest_phases)
    }

    pub fn num_users(&self) -> usize {
        self.harvest.len()
    }

    pub fn harvest_phase(&self, k: usize) -> Phase {
        self.harvest[k]
    }

    pub fn ul_phase(&self, k: usize) -> Phase {
        self.harvest[k].other()
    }

    /// `a_{k,l}`.
    pub fn a(&self, k: usize, l: Phase) -> u8 {
        u8::from(self.harvest[k] == l)
    }

    pub fn matrix(&self) -> Vec<[u8; 2]> {
        (0..self.num_users())
            .map(|k| [self.a(k, Phase::One), self.a(k, Phase::Two)])
            .collect()
    }

    /// Harvesting group `S_l`.
    pub fn harvest_group(&self, l: Phase) -> Vec<usize> {
        (0..self.num_users()).filter(|&k| self.harvest[k] == l).collect()
    }

    /// Users transmitting in phase `l`, i.e. `S_lhat`.
    pub fn ul_group(&self, l: Phase) -> Vec<usize> {
        self.harvest_group(l.other())
    }

    pub fn set(&mut self, k: usize, harvest: Phase) {
        self.harvest[k] = harvest;
    }

    pub fn flipped(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.harvest[k] = out.harvest[k].other();
        out
    }

    pub fn is_feasible(&self) -> bool {
        self.matrix().iter().all(|r| r[0] + r[1] == 1)
    }
}

/// Scores a candidate assignment with all continuous variables held fixed.
pub trait AssignmentObjective {
    fn score(&self, candidate: &Assignment) -> f64;
}

impl<F: Fn(&Assignment) -> f64> AssignmentObjective for F {
    fn score(&self, candidate: &Assignment) -> f64 {
        self(candidate)
    }
}

/// One coordinate sweep from `incumbent`. Returns the new assignment and its
/// score; a move is kept only on strict improvement, so the score never drops.
pub fn coordinate_assign<O: AssignmentObjective + ?Sized>(
    objective: &O,
    incumbent: &Assignment,
) -> (Assignment, f64) {
    let mut current = incumbent.clone();
    let mut best = objective.score(&current);
    for k in 0..current.num_users() {
        let candidate = current.flipped(k);
        let score = objective.score(&candidate);
        if score > best {
            best = score;
            current = candidate;
        }
    }
    (current, best)
}

/// Exhaustive search over all `2^K` assignments. Ties resolve to the
/// lexicographically smallest harvest-phase sequence (phase one before two).
pub fn enumerate_assign<O: AssignmentObjective + ?Sized>(
    objective: &O,
    k: usize,
) -> Result<(Assignment, f64)> {
    if k > MAX_ENUMERATE_USERS {
        return Err(Error::TooManyUsers(k));
    }
    let mut best: Option<(Assignment, f64)> = None;
    // Bit k-1-i of `code` is user i, so counting up walks lexicographic order.
    for code in 0u64..(1u64 << k) {
        let candidate = Assignment::from_harvest_phases(
            (0..k)
                .map(|i| if code >> (k - 1 - i) & 1 == 1 { Phase::Two } else { Phase::One })
                .collect(),
        );
        let score = objective.score(&candidate);
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((candidate, score));
        }
    }
    Ok(best.expect("at least one assignment"))
}
