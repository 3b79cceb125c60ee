//! UL rate evaluation and the two solvers.
//!
//! [`algorithm1`] optimizes a fixed time split by cycling through the energy
//! beams, the WMMSE block (filters, weights, duals, powers) and the group
//! assignment until the sum-rate settles. [`algorithm2`] wraps it in a
//! golden-section search over `tau1`.
//!
//! Every reported iterate uses fresh MMSE filters and weights `1/e`, so the
//! traced WMMSE objective `sum tau (theta e - ln theta - 1)` equals `-ln 2`
//! times the sum-rate. The filter, weight and power updates each minimize that
//! objective exactly. The assignment sweep only accepts improving moves, and a
//! new energy beam is only adopted when it does not lower the sum-rate, so the
//! trace is monotone.
//!
//! In HD mode all users harvest in phase one and transmit in phase two, the
//! assignment is frozen, and the filters see no self-interference.

use crate::assign::{coordinate_assign, enumerate_assign, Assignment, AssignmentObjective};
use crate::beamform::{build_b, optimal_beamformer, BeamformerSolution};
use crate::config::{Duplex, SystemConfig};
use crate::ehmodel::{harvested_energy, HarvestResult};
use crate::error::{Error, Result};
use crate::scenario::{ChannelRealization, Phase};
use crate::timesearch::{golden_search, TauSearchTrace};
use crate::wmmse::{dual_lambda, mmse_filters, mse, optimal_weight, ul_power, wmmse_objective, UlState};
use crate::CVector;

/// Evaluation budget of the outer time search.
pub const MAX_TAU_EVALS: usize = 64;

/// Relative slack used to decide that a UL power sits on its budget.
const ON_BUDGET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentPolicy {
    /// One coordinate sweep per iteration.
    Coordinate,
    /// Exhaustive search per iteration (K <= 16).
    Enumerate,
    /// Keep this assignment throughout.
    Fixed(Assignment),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub assignment: AssignmentPolicy,
    /// Only adopt a recomputed energy beam when the sum-rate does not drop.
    pub beam_safeguard: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            assignment: AssignmentPolicy::Coordinate,
            beam_safeguard: true,
        }
    }
}

/// Full decision state of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub assignment: Assignment,
    /// `(tau1, tau2)`.
    pub tau: [f64; 2],
    /// Energy beam radiated in each phase.
    pub beams: [BeamformerSolution; 2],
    /// UL iterate of each phase.
    pub ul_state: [UlState; 2],
    pub mode: Duplex,
}

impl Allocation {
    pub fn tau_of(&self, l: Phase) -> f64 {
        self.tau[l.index()]
    }

    /// UL power of user `k` in its transmit phase.
    pub fn p_ul(&self, k: usize) -> f64 {
        self.ul_state[self.assignment.ul_phase(k).index()].p_ul[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub sum_rate: f64,
    /// WMMSE objective at the iterate, `-ln 2 * sum_rate`.
    pub gamma_u: f64,
    pub beam_accepted: bool,
    pub moved_users: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Bits per second per hertz, summed over users.
    pub sum_rate: f64,
    pub per_user_rate: Vec<f64>,
    /// Average power converted while harvesting, watts.
    pub per_user_harvest: Vec<f64>,
    pub snr: Vec<f64>,
    /// Entry 0 is the initial point.
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

/// Rates, SNRs and harvested powers of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub sum_rate: f64,
    pub per_user_rate: Vec<f64>,
    pub per_user_harvest: Vec<f64>,
    pub snr: Vec<f64>,
}

/// UL SNR of member `k` after filter `v`.
///
/// `w_norm2` is the energy-beam power radiated in the same phase; in FD it
/// leaks into the receiver as `sigma2_rsi * ||v||^2 * w_norm2`.
#[allow(clippy::too_many_arguments)]
pub fn ul_snr(
    v: &CVector,
    g_hats: &[CVector],
    p_uls: &[f64],
    w_norm2: f64,
    sigma2_rsi: f64,
    sigma2_ul: f64,
    k: usize,
    mode: Duplex,
) -> f64 {
    let signal = p_uls[k] * v.dotc(&g_hats[k]).norm_sqr();
    let interference: f64 = (0..g_hats.len())
        .filter(|&j| j != k)
        .map(|j| p_uls[j] * v.dotc(&g_hats[j]).norm_sqr())
        .sum();
    let v2 = v.norm_squared();
    let rsi = match mode {
        Duplex::Fd => sigma2_rsi * v2 * w_norm2,
        Duplex::Hd => 0.0,
    };
    let denominator = interference + rsi + sigma2_ul * v2;
    if denominator > 0.0 {
        signal / denominator
    } else {
        0.0
    }
}

/// Sum-rate, per-user rates, SNRs and harvests of `alloc` using its stored filters.
pub fn sum_rate(alloc: &Allocation, real: &ChannelRealization, cfg: &SystemConfig) -> Result<RateSummary> {
    let prob = Problem::new(cfg, real, alloc.tau, alloc.mode)?;
    let k = prob.k;
    let mut per_user_rate = vec![0.0; k];
    let mut snr = vec![0.0; k];
    for l in Phase::ALL {
        let members = alloc.assignment.ul_group(l);
        let (g, p) = prob.group_inputs(l, &members, &alloc.ul_state[l.index()].p_ul);
        for (i, &user) in members.iter().enumerate() {
            let gamma = ul_snr(
                &alloc.ul_state[l.index()].v[user],
                &g,
                &p,
                alloc.beams[l.index()].power(),
                cfg.sigma2_rsi,
                cfg.sigma2_ul,
                i,
                alloc.mode,
            );
            snr[user] = gamma;
            per_user_rate[user] = prob.tau_of(l) * (1.0 + gamma).log2();
        }
    }
    let per_user_harvest = (0..k)
        .map(|user| {
            let l = alloc.assignment.harvest_phase(user);
            prob.harvest(user, l, &alloc.beams)
                .map(|h| h.converted_power)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSummary {
        sum_rate: per_user_rate.iter().sum(),
        per_user_rate,
        per_user_harvest,
        snr,
    })
}

/// Scenario data shared by every step of one solve at a fixed time split.
struct Problem<'a> {
    cfg: &'a SystemConfig,
    real: &'a ChannelRealization,
    k: usize,
    m: usize,
    tau: [f64; 2],
    mode: Duplex,
    h_true: [Vec<CVector>; 2],
    g_hat: [Vec<CVector>; 2],
}

impl<'a> Problem<'a> {
    fn new(cfg: &'a SystemConfig, real: &'a ChannelRealization, tau: [f64; 2], mode: Duplex) -> Result<Self> {
        let k = real.num_users();
        if k != cfg.k || real.num_antennas() != cfg.m {
            return Err(Error::Config(format!(
                "realization is {}x{}, configuration expects K={} M={}",
                k,
                real.num_antennas(),
                cfg.k,
                cfg.m
            )));
        }
        if !(tau[0] > 0.0 && tau[0] < 1.0) || (tau[0] + tau[1] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("time split {tau:?} must lie in (0,1) and sum to 1")));
        }
        let per_phase = |f: &dyn Fn(usize, Phase) -> CVector| -> [Vec<CVector>; 2] {
            [
                (0..k).map(|u| f(u, Phase::One)).collect(),
                (0..k).map(|u| f(u, Phase::Two)).collect(),
            ]
        };
        Ok(Problem {
            cfg,
            real,
            k,
            m: cfg.m,
            tau,
            mode,
            h_true: per_phase(&|u, l| real.true_channel(u, l)),
            g_hat: per_phase(&|u, l| real.h_hat(u, l).conjugate()),
        })
    }

    fn tau_of(&self, l: Phase) -> f64 {
        self.tau[l.index()]
    }

    fn c_noise(&self, l: Phase, beams: &[BeamformerSolution; 2]) -> f64 {
        match self.mode {
            Duplex::Fd => self.cfg.sigma2_rsi * beams[l.index()].power() + self.cfg.sigma2_ul,
            Duplex::Hd => self.cfg.sigma2_ul,
        }
    }

    /// Harvest of user `k` while in the EH group of phase `l`.
    fn harvest(&self, k: usize, l: Phase, beams: &[BeamformerSolution; 2]) -> Result<HarvestResult> {
        harvested_energy(
            &self.h_true[l.index()][k],
            &beams[l.index()].w,
            self.tau_of(l),
            self.tau_of(l.other()),
            self.cfg.beta_of(k),
            self.cfg.p_th,
            self.cfg.eh_model,
        )
    }

    /// UL budget of every user for each possible harvest phase, `[user][harvest phase]`.
    fn budget_table(&self, beams: &[BeamformerSolution; 2]) -> Result<Vec<[f64; 2]>> {
        (0..self.k)
            .map(|u| {
                Ok([
                    self.harvest(u, Phase::One, beams)?.q_hat,
                    self.harvest(u, Phase::Two, beams)?.q_hat,
                ])
            })
            .collect()
    }

    fn group_inputs(&self, l: Phase, members: &[usize], p: &[f64]) -> (Vec<CVector>, Vec<f64>) {
        (
            members.iter().map(|&u| self.g_hat[l.index()][u].clone()).collect(),
            members.iter().map(|&u| p[u]).collect(),
        )
    }

    /// Energy beams of both phases for the harvest groups of `assign`.
    ///
    /// An empty group gets the degenerate beam. A group whose duals are all
    /// zero keeps `incumbent` when that is a proper beam, otherwise falls
    /// back to unit duals.
    fn beams(
        &self,
        assign: &Assignment,
        lambda: &[f64],
        incumbent: Option<&[BeamformerSolution; 2]>,
    ) -> [BeamformerSolution; 2] {
        let p = self.cfg.per_phase_dl_power();
        let one = |l: Phase| -> BeamformerSolution {
            let members = assign.harvest_group(l);
            let hs: Vec<&CVector> = members.iter().map(|&u| self.real.h_hat(u, l)).collect();
            let betas: Vec<f64> = members.iter().map(|&u| self.cfg.beta_of(u)).collect();
            let build = |duals: &[f64]| build_b(self.tau_of(l), self.tau_of(l.other()), duals, &betas, &hs, self.m);
            let duals: Vec<f64> = members.iter().map(|&u| lambda[u]).collect();
            let sol = optimal_beamformer(&build(&duals), p);
            if !sol.degenerate || members.is_empty() {
                return sol;
            }
            match incumbent.map(|b| &b[l.index()]) {
                Some(prev) if !prev.degenerate => prev.clone(),
                _ => optimal_beamformer(&build(&vec![1.0; members.len()]), p),
            }
        };
        [one(Phase::One), one(Phase::Two)]
    }

    /// UL state of both phases with fresh MMSE filters, weights and duals.
    fn ul_states(
        &self,
        assign: &Assignment,
        beams: &[BeamformerSolution; 2],
        p: &[f64],
        budgets: &[[f64; 2]],
    ) -> Result<[UlState; 2]> {
        let one = |l: Phase| -> Result<UlState> {
            let c = self.c_noise(l, beams);
            let mut st = UlState::empty(self.k, self.m, c);
            let members = assign.ul_group(l);
            let (g, pm) = self.group_inputs(l, &members, p);
            let vs = mmse_filters(&g, &pm, c)?;
            let thetas = (0..members.len())
                .map(|i| optimal_weight(mse(&vs[i], &g, &pm, c, i)))
                .collect::<Result<Vec<_>>>()?;
            let active = vec![true; members.len()];
            for (i, &u) in members.iter().enumerate() {
                let q_hat = budgets[u][l.other().index()];
                st.q_hat[u] = q_hat;
                st.p_ul[u] = p[u];
                st.theta[u] = thetas[i];
                st.lambda_ul[u] = dual_lambda(&thetas, &vs, &g, &active, q_hat, i);
                st.v[u] = vs[i].clone();
            }
            Ok(st)
        };
        Ok([one(Phase::One)?, one(Phase::Two)?])
    }

    /// Sum-rate of `(assign, beams, p)` with MMSE filters.
    fn score(&self, assign: &Assignment, beams: &[BeamformerSolution; 2], p: &[f64]) -> f64 {
        let mut total = 0.0;
        for l in Phase::ALL {
            let members = assign.ul_group(l);
            if members.is_empty() {
                continue;
            }
            let c = self.c_noise(l, beams);
            let (g, pm) = self.group_inputs(l, &members, p);
            let Ok(vs) = mmse_filters(&g, &pm, c) else {
                return f64::NEG_INFINITY;
            };
            let w2 = beams[l.index()].power();
            let mut phase_rate = 0.0;
            for (i, v) in vs.iter().enumerate() {
                let gamma = ul_snr(v, &g, &pm, w2, self.cfg.sigma2_rsi, self.cfg.sigma2_ul, i, self.mode);
                phase_rate += (1.0 + gamma).log2();
            }
            total += self.tau_of(l) * phase_rate;
        }
        total
    }

    fn gamma_u(&self, assign: &Assignment, states: &[UlState; 2]) -> f64 {
        Phase::ALL
            .iter()
            .map(|&l| {
                let st = &states[l.index()];
                let members = assign.ul_group(l);
                let (g, pm) = self.group_inputs(l, &members, &st.p_ul);
                let vs: Vec<CVector> = members.iter().map(|&u| st.v[u].clone()).collect();
                let thetas: Vec<f64> = members.iter().map(|&u| st.theta[u]).collect();
                let weights = vec![self.tau_of(l); members.len()];
                wmmse_objective(&weights, &thetas, &vs, &g, &pm, st.c_noise)
            })
            .sum()
    }

    /// One pass of the WMMSE block: filters, weights, duals, powers.
    fn wmmse_pass(
        &self,
        assign: &Assignment,
        beams: &[BeamformerSolution; 2],
        p: &[f64],
        budgets: &[[f64; 2]],
    ) -> Result<Vec<f64>> {
        let mut next = vec![0.0; self.k];
        for l in Phase::ALL {
            let members = assign.ul_group(l);
            if members.is_empty() {
                continue;
            }
            let c = self.c_noise(l, beams);
            let (g, pm) = self.group_inputs(l, &members, p);
            let vs = mmse_filters(&g, &pm, c)?;
            let thetas = (0..members.len())
                .map(|i| optimal_weight(mse(&vs[i], &g, &pm, c, i)))
                .collect::<Result<Vec<_>>>()?;
            let active = vec![true; members.len()];
            for (i, &u) in members.iter().enumerate() {
                next[u] = ul_power(&thetas, &vs, &g, &active, budgets[u][l.other().index()], i);
            }
        }
        Ok(next)
    }
}

fn budgets_of(assign: &Assignment, table: &[[f64; 2]]) -> Vec<f64> {
    (0..assign.num_users())
        .map(|u| table[u][assign.harvest_phase(u).index()])
        .collect()
}

/// Powers after the beams change: users that were spending their whole budget
/// follow the new budget, the rest are clipped to it.
fn carry_powers(p: &[f64], old_budget: &[f64], new_budget: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(old_budget.iter().zip(new_budget))
        .map(|(&p, (&q_old, &q_new))| {
            if q_old > 0.0 && p >= q_old * (1.0 - ON_BUDGET) {
                q_new
            } else {
                p.min(q_new)
            }
        })
        .collect()
}

/// Powers for a candidate assignment: movers spend their whole new budget.
fn powers_for(candidate: &Assignment, current: &Assignment, p: &[f64], table: &[[f64; 2]]) -> Vec<f64> {
    (0..candidate.num_users())
        .map(|u| {
            if candidate.harvest_phase(u) == current.harvest_phase(u) {
                p[u]
            } else {
                table[u][candidate.harvest_phase(u).index()]
            }
        })
        .collect()
}

/// Scores candidate assignments around a solved allocation, the way the
/// solver's assignment step does: beams and the powers of users that stay
/// put are frozen, movers spend their whole new budget, and the score is the
/// sum-rate with MMSE filters.
pub struct AssignmentScorer<'a> {
    prob: Problem<'a>,
    beams: [BeamformerSolution; 2],
    table: Vec<[f64; 2]>,
    incumbent: Assignment,
    p: Vec<f64>,
}

impl<'a> AssignmentScorer<'a> {
    pub fn new(alloc: &Allocation, real: &'a ChannelRealization, cfg: &'a SystemConfig) -> Result<Self> {
        let prob = Problem::new(cfg, real, alloc.tau, alloc.mode)?;
        let table = prob.budget_table(&alloc.beams)?;
        Ok(AssignmentScorer {
            p: (0..prob.k).map(|u| alloc.p_ul(u)).collect(),
            prob,
            beams: alloc.beams.clone(),
            table,
            incumbent: alloc.assignment.clone(),
        })
    }
}

impl AssignmentObjective for AssignmentScorer<'_> {
    fn score(&self, candidate: &Assignment) -> f64 {
        let p = powers_for(candidate, &self.incumbent, &self.p, &self.table);
        self.prob.score(candidate, &self.beams, &p)
    }
}

/// The assignment HD mode always uses.
pub fn hd_assignment(k: usize) -> Assignment {
    Assignment::all_harvest_in(k, Phase::One)
}

/// Fixed-split solver with default options.
pub fn algorithm1(cfg: &SystemConfig, real: &ChannelRealization, tau1: f64) -> Result<(Allocation, SolveReport)> {
    algorithm1_with(cfg, real, tau1, &SolverOptions::default())
}

/// Fixed-split solver: beams, WMMSE block and assignment until the sum-rate
/// changes by at most `tol_rate` or `max_iters` passes have run.
pub fn algorithm1_with(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    tau1: f64,
    opts: &SolverOptions,
) -> Result<(Allocation, SolveReport)> {
    if !(tau1 > 0.0 && tau1 < 1.0) {
        return Err(Error::Domain(format!("tau1 = {tau1} outside (0, 1)")));
    }
    let tau = [tau1, 1.0 - tau1];
    let prob = Problem::new(cfg, real, tau, cfg.duplex)?;
    let k = prob.k;

    let frozen = match (cfg.duplex, &opts.assignment) {
        (Duplex::Hd, _) => Some(hd_assignment(k)),
        (Duplex::Fd, AssignmentPolicy::Fixed(a)) => {
            if a.num_users() != k {
                return Err(Error::Config(format!("fixed assignment has {} users, K = {k}", a.num_users())));
            }
            Some(a.clone())
        }
        _ => None,
    };
    let mut assign = frozen.clone().unwrap_or_else(|| Assignment::parity(k));
    let mut lambda = vec![1.0; k];
    let mut beams = prob.beams(&assign, &lambda, None);
    let mut table = prob.budget_table(&beams)?;
    let mut p = budgets_of(&assign, &table);

    let mut states = prob.ul_states(&assign, &beams, &p, &table)?;
    let mut rate = prob.score(&assign, &beams, &p);
    let mut trace = vec![IterationRecord {
        iteration: 0,
        sum_rate: rate,
        gamma_u: prob.gamma_u(&assign, &states),
        beam_accepted: true,
        moved_users: 0,
    }];
    lambda = duals_of(&assign, &states);

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        iterations = it;

        let candidate = prob.beams(&assign, &lambda, Some(&beams));
        let cand_table = prob.budget_table(&candidate)?;
        let cand_p = carry_powers(&p, &budgets_of(&assign, &table), &budgets_of(&assign, &cand_table));
        let accept = !opts.beam_safeguard || prob.score(&assign, &candidate, &cand_p) >= rate;
        if accept {
            beams = candidate;
            table = cand_table;
            p = cand_p;
        }

        p = prob.wmmse_pass(&assign, &beams, &p, &table)?;

        let mut moved = 0;
        if frozen.is_none() {
            let objective = |cand: &Assignment| prob.score(cand, &beams, &powers_for(cand, &assign, &p, &table));
            let (next, _) = match opts.assignment {
                AssignmentPolicy::Enumerate => enumerate_assign(&objective, k)?,
                _ => coordinate_assign(&objective, &assign),
            };
            moved = (0..k).filter(|&u| next.harvest_phase(u) != assign.harvest_phase(u)).count();
            p = powers_for(&next, &assign, &p, &table);
            assign = next;
        }

        states = prob.ul_states(&assign, &beams, &p, &table)?;
        let new_rate = prob.score(&assign, &beams, &p);
        lambda = duals_of(&assign, &states);
        trace.push(IterationRecord {
            iteration: it,
            sum_rate: new_rate,
            gamma_u: prob.gamma_u(&assign, &states),
            beam_accepted: accept,
            moved_users: moved,
        });
        let delta = (new_rate - rate).abs();
        rate = new_rate;
        if delta <= cfg.tol_rate {
            converged = true;
            break;
        }
    }

    let alloc = Allocation {
        assignment: assign,
        tau,
        beams,
        ul_state: states,
        mode: cfg.duplex,
    };
    let summary = sum_rate(&alloc, real, cfg)?;
    let report = SolveReport {
        sum_rate: summary.sum_rate,
        per_user_rate: summary.per_user_rate,
        per_user_harvest: summary.per_user_harvest,
        snr: summary.snr,
        trace,
        iterations,
        converged,
    };
    Ok((alloc, report))
}

fn duals_of(assign: &Assignment, states: &[UlState; 2]) -> Vec<f64> {
    (0..assign.num_users())
        .map(|u| states[assign.ul_phase(u).index()].lambda_ul[u])
        .collect()
}

/// Optimal-split solver with default options.
pub fn algorithm2(
    cfg: &SystemConfig,
    real: &ChannelRealization,
) -> Result<(Allocation, SolveReport, TauSearchTrace)> {
    algorithm2_with(cfg, real, &SolverOptions::default())
}

/// Golden-section search over `tau1` of the converged fixed-split sum-rate,
/// then a final solve at the best split.
pub fn algorithm2_with(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    opts: &SolverOptions,
) -> Result<(Allocation, SolveReport, TauSearchTrace)> {
    let mut inner_error = None;
    let trace = golden_search(
        |t| match algorithm1_with(cfg, real, t, opts) {
            Ok((_, report)) => report.sum_rate,
            Err(e) => {
                inner_error.get_or_insert(e);
                f64::NAN
            }
        },
        cfg.tol_tau,
        MAX_TAU_EVALS,
    );
    if let Some(e) = inner_error {
        return Err(e);
    }
    let trace = trace?;
    let (alloc, report) = algorithm1_with(cfg, real, trace.tau_star, opts)?;
    Ok((alloc, report, trace))
}

/// Result of [`audit`]: every violated constraint, empty when feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks an allocation against every constraint of the sum-rate problem,
/// recomputing the UL budgets from the channels rather than trusting the
/// stored ones.
pub fn audit(alloc: &Allocation, real: &ChannelRealization, cfg: &SystemConfig) -> AuditReport {
    let mut v = Vec::new();
    let k = real.num_users();
    let [t1, t2] = alloc.tau;
    if !(t1 > 0.0 && t1 < 1.0 && t2 > 0.0 && t2 < 1.0) || (t1 + t2 - 1.0).abs() > 1e-12 {
        v.push(format!("time split ({t1}, {t2}) infeasible"));
    }
    if alloc.assignment.num_users() != k || !alloc.assignment.is_feasible() {
        v.push("assignment is not one-hot per user".into());
    }
    if alloc.mode == Duplex::Hd && alloc.assignment != hd_assignment(k) {
        v.push("HD mode must have every user harvest in phase one".into());
    }
    let cap = cfg.per_phase_dl_power();
    for l in Phase::ALL {
        let pw = alloc.beams[l.index()].w.norm_squared();
        if pw > cap * (1.0 + 1e-9) {
            v.push(format!("phase {} beam power {pw:e} exceeds {cap:e}", l.index() + 1));
        }
        let st = &alloc.ul_state[l.index()];
        let expected_c = match alloc.mode {
            Duplex::Hd => cfg.sigma2_ul,
            Duplex::Fd => cfg.sigma2_rsi * pw + cfg.sigma2_ul,
        };
        let c_ok = match alloc.mode {
            Duplex::Hd => st.c_noise == expected_c,
            Duplex::Fd => (st.c_noise - expected_c).abs() <= 1e-12 * expected_c,
        };
        if !c_ok {
            v.push(format!("phase {} noise floor {:e}, expected {expected_c:e}", l.index() + 1, st.c_noise));
        }
    }
    if v.iter().any(|s| s.starts_with("assignment")) || alloc.ul_state.iter().any(|s| s.p_ul.len() != k) {
        v.push("allocation dimensions do not match the realization".into());
        return AuditReport { violations: v };
    }
    for u in 0..k {
        let harvest = alloc.assignment.harvest_phase(u);
        let ul = harvest.other();
        let off = alloc.ul_state[harvest.index()].p_ul[u];
        if off != 0.0 {
            v.push(format!("user {u} transmits {off:e} W in its harvesting phase"));
        }
        let p = alloc.ul_state[ul.index()].p_ul[u];
        let h = real.h_hat(u, harvest) + real.h_err(u, harvest);
        let incident = h.dotc(&alloc.beams[harvest.index()].w).norm_sqr();
        let converted = match cfg.eh_model {
            crate::config::EhModel::NonLinear => incident.min(cfg.p_th),
            crate::config::EhModel::Linear => incident,
        };
        let budget = alloc.tau_of(harvest) / alloc.tau_of(ul) * cfg.beta_of(u) * converted;
        if !(p >= 0.0 && p.is_finite()) {
            v.push(format!("user {u} UL power {p} invalid"));
        } else if p > budget * (1.0 + 1e-9) {
            v.push(format!("user {u} UL power {p:e} exceeds harvested budget {budget:e}"));
        }
    }
    AuditReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::sample_realization;
    use crate::C64;

    fn cv(xs: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(xs.len(), xs.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn scalar_snr_and_structural_hd_identity() {
        let g = [cv(&[(1.0, 0.0)])];
        let v = cv(&[(0.5, 0.0)]);
        assert!((ul_snr(&v, &g, &[1.0], 0.0, 0.0, 1.0, 0, Duplex::Hd) - 1.0).abs() < 1e-15);
        let g2 = [cv(&[(0.3, 0.1), (-0.2, 0.4)]), cv(&[(0.1, -0.5), (0.7, 0.2)])];
        let v2 = cv(&[(0.2, 0.3), (-0.1, 0.6)]);
        let fd = ul_snr(&v2, &g2, &[0.4, 0.9], 2.0, 0.0, 0.1, 1, Duplex::Fd);
        let hd = ul_snr(&v2, &g2, &[0.4, 0.9], 2.0, 0.0, 0.1, 1, Duplex::Hd);
        assert_eq!(fd, hd);
        assert_eq!(ul_snr(&CVector::zeros(2), &g2, &[0.0, 0.0], 1.0, 1.0, 1.0, 0, Duplex::Fd), 0.0);
    }

    #[test]
    fn snr_matches_term_by_term_accumulation() {
        let g = [cv(&[(0.3, 0.1), (-0.2, 0.4)]), cv(&[(0.1, -0.5), (0.7, 0.2)]), cv(&[(1.1, 0.0), (0.0, -0.3)])];
        let v = cv(&[(0.2, 0.3), (-0.1, 0.6)]);
        let p = [0.4, 0.9, 0.2];
        let (w2, s_rsi, s2) = (3.0, 0.05, 0.1);
        let inner = |a: &CVector, b: &CVector| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..a.len() {
                acc += a[i].conj() * b[i];
            }
            acc.norm_sqr()
        };
        let vv = inner(&v, &v).sqrt();
        let den = p[1] * inner(&v, &g[1]) + p[2] * inner(&v, &g[2]) + s_rsi * vv * w2 + s2 * vv;
        let expected = p[0] * inner(&v, &g[0]) / den;
        let got = ul_snr(&v, &g, &p, w2, s_rsi, s2, 0, Duplex::Fd);
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn dead_network_has_zero_rate() {
        let mut cfg = SystemConfig::default();
        cfg.p_dl_max = 0.0;
        let real = sample_realization(&cfg, 1).unwrap();
        let (alloc, rep) = algorithm1(&cfg, &real, 0.5).unwrap();
        assert_eq!(rep.sum_rate, 0.0);
        assert!(rep.per_user_harvest.iter().all(|&h| h == 0.0));
        assert!(rep.converged);
        assert!(audit(&alloc, &real, &cfg).passed());
    }

    #[test]
    fn zero_channels_converge_immediately() {
        let cfg = SystemConfig::default();
        let real = sample_realization(&cfg, 2)
            .unwrap()
            .map_channels(|a, _| (CVector::zeros(a.len()), CVector::zeros(a.len())));
        let (_, rep) = algorithm1(&cfg, &real, 0.5).unwrap();
        assert_eq!(rep.sum_rate, 0.0);
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn extreme_split_stays_finite() {
        let cfg = SystemConfig::default();
        let real = sample_realization(&cfg, 3).unwrap();
        for t in [1e-3, 1.0 - 1e-3] {
            let (alloc, rep) = algorithm1(&cfg, &real, t).unwrap();
            assert!(rep.sum_rate.is_finite() && rep.sum_rate >= 0.0);
            assert!(audit(&alloc, &real, &cfg).passed());
        }
        assert!(algorithm1(&cfg, &real, 1.0).is_err());
    }

    #[test]
    fn reported_sum_equals_user_sum() {
        let cfg = SystemConfig::default();
        let real = sample_realization(&cfg, 4).unwrap();
        let (_, rep) = algorithm1(&cfg, &real, 0.4).unwrap();
        let s: f64 = rep.per_user_rate.iter().sum();
        assert!((s - rep.sum_rate).abs() <= 1e-12);
        assert_eq!(rep.trace.last().unwrap().sum_rate, rep.sum_rate);
    }

    #[test]
    fn audit_flags_overspent_budget() {
        let cfg = SystemConfig::default();
        let real = sample_realization(&cfg, 5).unwrap();
        let (mut alloc, _) = algorithm1(&cfg, &real, 0.5).unwrap();
        let u = alloc.assignment.ul_group(Phase::One)[0];
        alloc.ul_state[0].p_ul[u] *= 2.0;
        alloc.ul_state[0].p_ul[u] += 1e-9;
        assert!(!audit(&alloc, &real, &cfg).passed());
    }
}
