//! Beamwidth-selection potential game over established D2D links.
//!
//! Each link (player) picks one beamwidth that both endpoints adopt. A link's
//! utility is its interference-limited rate plus a deadline penalty; its total
//! utility adds the utilities of its interference neighbors, which makes every
//! unilateral change move the network potential (the sum of link utilities) by
//! exactly the same amount. Synchronous log-linear learning over independent
//! update sets then climbs the potential; exhaustive search, equilibrium
//! checking, and the closed-form stationary distribution serve as oracles.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{
    classify_interference_gain, data_rate, main_lobe_gain, sinr, ChannelParams,
    DirectionalAntenna, LosField,
};
use crate::geometry::{bearing, distance, Position, RelativeMotion};
use crate::linkdyn::{alignment_efficiency, alignment_time, stability_for, TimingBudget};
use crate::{Error, Real, Result};

/// Game-level tuning: interference threshold for neighborhood formation,
/// optional fixed penalty scalar, and the rate scale utilities are quoted in.
#[derive(Debug, Clone, Copy)]
pub struct UtilityParams {
    /// Interference above this (watts, unit fading) makes two links neighbors.
    pub interference_threshold: Real,
    /// Fixed penalty scalar in bits/s; `None` uses each link's maximum
    /// interference-free rate over its action set.
    pub penalty_scalar: Option<Real>,
    /// Utilities are rates divided by this (1e9 quotes them in Gb/s, keeping
    /// them commensurate with O(1) learning temperatures).
    pub rate_unit: Real,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams { interference_threshold: 1e-12, penalty_scalar: None, rate_unit: 1e9 }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.interference_threshold >= 0.0) || !self.interference_threshold.is_finite() {
            return Err(Error::InvalidParameter(
                "interference threshold must be finite and non-negative".into(),
            ));
        }
        if let Some(c) = self.penalty_scalar {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter("penalty scalar must be positive".into()));
            }
        }
        if !(self.rate_unit > 0.0) {
            return Err(Error::InvalidParameter("rate unit must be positive".into()));
        }
        Ok(())
    }
}

/// One player: an established transmitter-receiver pair with its candidate
/// beamwidths and outstanding demand.
#[derive(Debug, Clone)]
pub struct GameLink {
    pub tx_node: usize,
    pub rx_node: usize,
    pub tx_pos: Position,
    pub rx_pos: Position,
    /// Receiver motion relative to its transmitter (drives stability).
    pub motion: RelativeMotion,
    pub psi_tx: Real,
    pub psi_rx: Real,
    /// Candidate common beamwidths, radians; filtered to feasible at build.
    pub actions: Vec<Real>,
    /// Outstanding requested bits (the deadline pressure).
    pub demand_bits: Real,
    /// Whether the pair itself has line of sight (a blocked link rates 0).
    pub los: bool,
}

/// Read-only environment a game is built against.
#[derive(Debug, Clone, Copy)]
pub struct GameContext<'a> {
    pub channel: &'a ChannelParams,
    pub timing: &'a TimingBudget,
    pub los: &'a LosField,
    /// Interference coupling radius (same scale as association coverage).
    pub coverage: Real,
    pub params: UtilityParams,
}

/// Pure strategy profile: per-player index into that player's action set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    pub choices: Vec<usize>,
}

/// Per-action probabilities for one player.
#[derive(Debug, Clone)]
pub struct MixedStrategy {
    pub probs: Vec<Real>,
}

impl MixedStrategy {
    pub fn uniform(n: usize) -> Self {
        MixedStrategy { probs: vec![1.0 / n as Real; n.max(1)] }
    }

    /// Nonnegative and sums to one within 1e-12.
    pub fn validate(&self) -> Result<()> {
        if self.probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter("mixed strategy has negative mass".into()));
        }
        let sum: Real = self.probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixed strategy sums to {sum}, not 1"
            )));
        }
        Ok(())
    }

    pub fn max_component(&self) -> Real {
        self.probs.iter().copied().fold(0.0, Real::max)
    }

    /// Index of the heaviest action (first one on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: Real = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Boltzmann (softmax) response to per-action utilities at temperature `tau`,
/// computed with a max shift so large utility scales cannot overflow.
pub fn boltzmann_update(action_utilities: &[Real], tau: Real) -> Result<MixedStrategy> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be positive, got {tau}")));
    }
    if action_utilities.is_empty() {
        return Err(Error::InvalidParameter("no actions to weight".into()));
    }
    let m = action_utilities.iter().copied().fold(Real::NEG_INFINITY, Real::max);
    let weights: Vec<Real> = action_utilities.iter().map(|&u| ((u - m) / tau).exp()).collect();
    let z: Real = weights.iter().sum();
    Ok(MixedStrategy { probs: weights.iter().map(|w| w / z).collect() })
}

/// The assembled game with everything geometric precomputed: per-action signal
/// power, transmission window, and alignment efficiency per link, plus the
/// pairwise interference tensor over the symmetrized neighborhood graph.
#[derive(Debug, Clone)]
pub struct BeamwidthGame {
    links: Vec<GameLink>,
    /// [l][a]: received signal power at unit fading, watts.
    signal: Vec<Vec<Real>>,
    /// [l][a]: transmission window T' = stability - alignment, seconds.
    window: Vec<Vec<Real>>,
    /// [l][a]: alignment efficiency factor in the rate.
    efficiency: Vec<Vec<Real>>,
    /// Per-link penalty scalar, bits/s.
    penalty: Vec<Real>,
    neighborhoods: Vec<Vec<usize>>,
    /// [l][j][a_i][a_l]: interference at l's receiver from neighborhood entry
    /// j choosing a_i while l chooses a_l; watts at unit fading, zero when the
    /// interfering path is blocked.
    interference: Vec<Vec<Vec<Vec<Real>>>>,
    noise: Real,
    bandwidth: Real,
    rate_unit: Real,
}

impl BeamwidthGame {
    /// Build the game: filter each link's actions to feasible ones, derive
    /// neighborhoods (within coverage, line of sight, unit-fading widest-beam
    /// interference strictly above threshold, then symmetrized), and
    /// precompute signal and interference terms.
    pub fn new(links: &[GameLink], ctx: &GameContext) -> Result<BeamwidthGame> {
        ctx.params.validate()?;
        ctx.channel.validate()?;
        ctx.timing.validate()?;
        let alpha = ctx.timing.misalignment_threshold;
        let mut kept: Vec<GameLink> = Vec::with_capacity(links.len());
        let mut signal = Vec::with_capacity(links.len());
        let mut window = Vec::with_capacity(links.len());
        let mut efficiency = Vec::with_capacity(links.len());
        let mut penalty = Vec::with_capacity(links.len());
        for link in links {
            let d = distance(link.tx_pos, link.rx_pos);
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(
                    "link endpoints must be spatially distinct".into(),
                ));
            }
            let mut actions: Vec<Real> = link.actions.clone();
            actions.sort_by(|a, b| a.partial_cmp(b).unwrap());
            actions.dedup();
            let mut feasible = Vec::new();
            let mut sig = Vec::new();
            let mut win = Vec::new();
            let mut eff = Vec::new();
            for &a in &actions {
                if a > link.psi_tx || a > link.psi_rx {
                    continue;
                }
                let stab = stability_for(d, a, link.motion, alpha)?;
                if a * a < link.psi_tx * link.psi_rx * ctx.timing.t_pilot / stab {
                    continue;
                }
                let align = alignment_time(link.psi_tx, link.psi_rx, a, a, ctx.timing.t_pilot)?;
                if align > stab {
                    continue;
                }
                feasible.push(a);
                let g = main_lobe_gain(a)?;
                sig.push(ctx.channel.tx_power * g * g * ctx.channel.path_loss(d)?);
                win.push(stab - align);
                eff.push(alignment_efficiency(align, stab));
            }
            if feasible.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "link {} -> {} has no feasible beamwidth",
                    link.tx_node, link.rx_node
                )));
            }
            let free_max = sig
                .iter()
                .zip(&eff)
                .map(|(&s, &e)| {
                    data_rate(e, ctx.channel.bandwidth, s / ctx.channel.noise_power())
                        .expect("positive inputs")
                })
                .fold(0.0, Real::max);
            penalty.push(ctx.params.penalty_scalar.unwrap_or(free_max));
            signal.push(sig);
            window.push(win);
            efficiency.push(eff);
            kept.push(GameLink { actions: feasible, ..link.clone() });
        }

        // Directed neighbor test, then closure to a symmetric relation.
        let n = kept.len();
        let mut adjacent = vec![vec![false; n]; n];
        for l in 0..n {
            for i in 0..n {
                if i == l {
                    continue;
                }
                let d = distance(kept[i].tx_pos, kept[l].rx_pos);
                if d > ctx.coverage || d == 0.0 {
                    continue;
                }
                if !ctx.los.is_los(kept[i].tx_node, kept[l].rx_node, d) {
                    continue;
                }
                let widest_i = *kept[i].actions.last().unwrap();
                let widest_l = *kept[l].actions.last().unwrap();
                let tx = DirectionalAntenna::new(widest_i, bearing(kept[i].tx_pos, kept[i].rx_pos))?;
                let rx = DirectionalAntenna::new(widest_l, bearing(kept[l].rx_pos, kept[l].tx_pos))?;
                let (_, gain) = classify_interference_gain(kept[i].tx_pos, &tx, kept[l].rx_pos, &rx);
                let power = ctx.channel.tx_power * gain * ctx.channel.path_loss(d)?;
                if power > ctx.params.interference_threshold {
                    adjacent[l][i] = true;
                }
            }
        }
        for l in 0..n {
            for i in 0..n {
                if adjacent[l][i] {
                    adjacent[i][l] = true;
                }
            }
        }
        let neighborhoods: Vec<Vec<usize>> =
            (0..n).map(|l| (0..n).filter(|&i| adjacent[l][i]).collect()).collect();

        let mut interference = Vec::with_capacity(n);
        for l in 0..n {
            let mut per_neighbor = Vec::with_capacity(neighborhoods[l].len());
            for &i in &neighborhoods[l] {
                let d = distance(kept[i].tx_pos, kept[l].rx_pos);
                let blocked = !ctx.los.is_los(kept[i].tx_node, kept[l].rx_node, d);
                let pl = if blocked { 0.0 } else { ctx.channel.path_loss(d)? };
                let mut matrix = Vec::with_capacity(kept[i].actions.len());
                for &ai in &kept[i].actions {
                    let tx = DirectionalAntenna::new(ai, bearing(kept[i].tx_pos, kept[i].rx_pos))?;
                    let mut row = Vec::with_capacity(kept[l].actions.len());
                    for &al in &kept[l].actions {
                        let rx =
                            DirectionalAntenna::new(al, bearing(kept[l].rx_pos, kept[l].tx_pos))?;
                        let (_, gain) =
                            classify_interference_gain(kept[i].tx_pos, &tx, kept[l].rx_pos, &rx);
                        row.push(ctx.channel.tx_power * gain * pl);
                    }
                    matrix.push(row);
                }
                per_neighbor.push(matrix);
            }
            interference.push(per_neighbor);
        }

        Ok(BeamwidthGame {
            links: kept,
            signal,
            window,
            efficiency,
            penalty,
            neighborhoods,
            interference,
            noise: ctx.channel.noise_power(),
            bandwidth: ctx.channel.bandwidth,
            rate_unit: ctx.params.rate_unit,
        })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn link(&self, l: usize) -> &GameLink {
        &self.links[l]
    }

    /// Feasible beamwidths of player `l`, ascending.
    pub fn actions(&self, l: usize) -> &[Real] {
        &self.links[l].actions
    }

    /// Symmetrized interference neighbors of player `l`.
    pub fn neighborhood(&self, l: usize) -> &[usize] {
        &self.neighborhoods[l]
    }

    /// Penalty scalar of player `l`, bits/s.
    pub fn penalty_scalar(&self, l: usize) -> Real {
        self.penalty[l]
    }

    /// Transmission window T' for player `l` at action index `a`, seconds.
    pub fn window(&self, l: usize, a: usize) -> Real {
        self.window[l][a]
    }

    /// Chosen beamwidths, radians.
    pub fn profile_beamwidths(&self, profile: &StrategyProfile) -> Vec<Real> {
        profile
            .choices
            .iter()
            .zip(&self.links)
            .map(|(&a, link)| link.actions[a])
            .collect()
    }

    /// Total neighbor interference at l's receiver, watts (unit fading).
    pub fn interference_at(&self, l: usize, profile: &StrategyProfile) -> Real {
        let al = profile.choices[l];
        self.neighborhoods[l]
            .iter()
            .enumerate()
            .map(|(j, &i)| self.interference[l][j][profile.choices[i]][al])
            .sum()
    }

    /// Link l's rate under the profile, bits/s: alignment efficiency times
    /// bandwidth times log2(1 + SINR), interference restricted to l's
    /// neighborhood, unit fading, zero if the pair is blocked.
    pub fn rate_bits(&self, l: usize, profile: &StrategyProfile) -> Real {
        if !self.links[l].los {
            return 0.0;
        }
        let a = profile.choices[l];
        let s = sinr(self.signal[l][a], self.interference_at(l, profile), self.noise);
        data_rate(self.efficiency[l][a], self.bandwidth, s).expect("valid precomputed inputs")
    }

    /// Whether the deadline penalty fires for l under the profile.
    pub fn penalty_active(&self, l: usize, profile: &StrategyProfile) -> bool {
        let demand = self.links[l].demand_bits;
        if demand <= 0.0 {
            return false;
        }
        let r = self.rate_bits(l, profile);
        if r == 0.0 {
            return true;
        }
        demand / r > self.window[l][profile.choices[l]]
    }

    /// Link utility u_l: rate minus the deadline penalty, in `rate_unit`s.
    /// The penalty is C·|1 − T'/T^need| when the needed transmission time
    /// T^need = demand/rate exceeds the window T', with the shortfall fraction
    /// capped at 1 as the rate vanishes.
    pub fn individual_utility(&self, l: usize, profile: &StrategyProfile) -> Real {
        let demand = self.links[l].demand_bits;
        let r = self.rate_bits(l, profile);
        let u = if demand <= 0.0 {
            r
        } else if r == 0.0 {
            r - self.penalty[l]
        } else {
            let needed = demand / r;
            let w = self.window[l][profile.choices[l]];
            if needed > w {
                r - self.penalty[l] * (1.0 - w / needed).abs()
            } else {
                r
            }
        };
        u / self.rate_unit
    }

    /// Neighborhood utility U_l: own utility plus all neighbors'.
    pub fn total_utility(&self, l: usize, profile: &StrategyProfile) -> Real {
        self.individual_utility(l, profile)
            + self
                .neighborhoods[l]
                .iter()
                .map(|&i| self.individual_utility(i, profile))
                .sum::<Real>()
    }

    /// Network potential Θ: the sum of all link utilities. Any unilateral
    /// action change moves Θ by exactly the change in that player's U_l.
    pub fn potential(&self, profile: &StrategyProfile) -> Real {
        (0..self.len()).map(|l| self.individual_utility(l, profile)).sum()
    }

    /// Number of pure profiles, or None on overflow.
    pub fn profile_count(&self) -> Option<u64> {
        self.links
            .iter()
            .try_fold(1u64, |acc, link| acc.checked_mul(link.actions.len() as u64))
    }

    /// Global potential maximizer by enumeration (ascending lexicographic
    /// order, so ties resolve to the lexicographically smallest profile).
    pub fn exhaustive_optimum(&self, budget: u64) -> Result<(StrategyProfile, Real)> {
        let count = self
            .profile_count()
            .filter(|&c| c <= budget)
            .ok_or_else(|| Error::BudgetExceeded(format!("profile count exceeds budget {budget}")))?;
        let mut current = StrategyProfile { choices: vec![0; self.len()] };
        let mut best = current.clone();
        let mut best_theta = self.potential(&current);
        for _ in 1..count {
            // Mixed-radix increment, most significant digit first.
            for l in (0..self.len()).rev() {
                current.choices[l] += 1;
                if current.choices[l] < self.links[l].actions.len() {
                    break;
                }
                current.choices[l] = 0;
            }
            let theta = self.potential(&current);
            if theta > best_theta {
                best_theta = theta;
                best = current.clone();
            }
        }
        Ok((best, best_theta))
    }

    /// True iff no player can strictly improve U_l by deviating alone
    /// (relative tolerance 1e-9).
    pub fn is_nash_equilibrium(&self, profile: &StrategyProfile) -> bool {
        let mut work = profile.clone();
        for l in 0..self.len() {
            let here = self.total_utility(l, profile);
            let original = work.choices[l];
            for a in 0..self.links[l].actions.len() {
                if a == original {
                    continue;
                }
                work.choices[l] = a;
                let there = self.total_utility(l, &work);
                if there > here + 1e-9 * here.abs().max(there.abs()).max(1e-12) {
                    work.choices[l] = original;
                    return false;
                }
            }
            work.choices[l] = original;
        }
        true
    }

    /// Gibbs measure over all pure profiles at temperature `tau`:
    /// π(a) ∝ exp(Θ(a)/τ). Profiles enumerate in ascending lexicographic
    /// order; the caller's budget is capped at 10⁴ profiles.
    pub fn stationary_distribution(&self, tau: Real) -> Result<Vec<(StrategyProfile, Real)>> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {tau}"
            )));
        }
        let count = self
            .profile_count()
            .filter(|&c| c <= 10_000)
            .ok_or_else(|| Error::BudgetExceeded("more than 10000 profiles".into()))?;
        let mut profiles = Vec::with_capacity(count as usize);
        let mut current = StrategyProfile { choices: vec![0; self.len()] };
        for step in 0..count {
            if step > 0 {
                for l in (0..self.len()).rev() {
                    current.choices[l] += 1;
                    if current.choices[l] < self.links[l].actions.len() {
                        break;
                    }
                    current.choices[l] = 0;
                }
            }
            let theta = self.potential(&current);
            profiles.push((current.clone(), theta));
        }
        let m = profiles.iter().map(|&(_, t)| t).fold(Real::NEG_INFINITY, Real::max);
        let mut z = 0.0;
        for (_, t) in profiles.iter_mut() {
            *t = ((*t - m) / tau).exp();
            z += *t;
        }
        for (_, t) in profiles.iter_mut() {
            *t /= z;
        }
        Ok(profiles)
    }
}

/// Random maximal-up-to-cap independent set in the interference graph:
/// greedily admit links in a random order, skipping anything adjacent to an
/// admitted link. Returned sorted.
pub fn select_update_set<R: Rng>(game: &BeamwidthGame, cap: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..game.len()).collect();
    order.shuffle(rng);
    let mut chosen = Vec::new();
    for l in order {
        if chosen.len() >= cap {
            break;
        }
        if chosen.iter().all(|&c| !game.neighborhood(l).contains(&c)) {
            chosen.push(l);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Temperature schedule for the learning loop.
#[derive(Debug, Clone, Copy)]
pub enum TauSchedule {
    /// τ_k = scale / k (cools toward best response).
    Harmonic { scale: Real },
    /// Constant temperature (the analysis regime for stationarity checks).
    Fixed { tau: Real },
}

impl TauSchedule {
    pub fn tau(&self, iteration: u64) -> Real {
        match *self {
            TauSchedule::Harmonic { scale } => scale / iteration.max(1) as Real,
            TauSchedule::Fixed { tau } => tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            TauSchedule::Harmonic { scale } => scale,
            TauSchedule::Fixed { tau } => tau,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter("temperature must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Learning-loop controls.
#[derive(Debug, Clone, Copy)]
pub struct LllOptions {
    pub schedule: TauSchedule,
    /// Iteration budget before giving up.
    pub max_iterations: u64,
    /// Consecutive iterations of unchanged potential that count as converged.
    pub stagnation_window: u32,
    /// Converged when every player's mixed strategy has a component at least
    /// this large.
    pub prob_threshold: Real,
    /// Maximum simultaneously updating links |L̃|.
    pub update_cap: usize,
}

impl Default for LllOptions {
    fn default() -> Self {
        LllOptions {
            schedule: TauSchedule::Harmonic { scale: 1.0 },
            max_iterations: 2000,
            stagnation_window: 50,
            prob_threshold: 0.99,
            update_cap: 8,
        }
    }
}

impl LllOptions {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.max_iterations == 0 || self.update_cap == 0 {
            return Err(Error::InvalidParameter(
                "iteration budget and update cap must be positive".into(),
            ));
        }
        if !(self.prob_threshold > 0.0 && self.prob_threshold <= 1.0) {
            return Err(Error::InvalidParameter("prob threshold must lie in (0, 1]".into()));
        }
        if self.stagnation_window == 0 {
            return Err(Error::InvalidParameter("stagnation window must be positive".into()));
        }
        Ok(())
    }
}

/// Mutable learning state, stepped one synchronous iteration at a time.
#[derive(Debug, Clone)]
pub struct LllState {
    pub profile: StrategyProfile,
    pub strategies: Vec<MixedStrategy>,
    iteration: u64,
}

impl LllState {
    /// Uniform mixed strategies; initial actions drawn uniformly.
    pub fn new<R: Rng>(game: &BeamwidthGame, rng: &mut R) -> LllState {
        let choices =
            (0..game.len()).map(|l| rng.gen_range(0..game.actions(l).len())).collect();
        let strategies = (0..game.len()).map(|l| MixedStrategy::uniform(game.actions(l).len())).collect();
        LllState { profile: StrategyProfile { choices }, strategies, iteration: 0 }
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// One synchronous iteration: draw an independent update set; each
    /// selected player scores its actions with everyone else frozen, refreshes
    /// its mixed strategy by the Boltzmann rule, and samples its next action
    /// from the refreshed strategy; all new actions apply together.
    pub fn step<R: Rng>(
        &mut self,
        game: &BeamwidthGame,
        tau: Real,
        cap: usize,
        rng: &mut R,
    ) -> Result<()> {
        let selected = select_update_set(game, cap, rng);
        let mut staged = Vec::with_capacity(selected.len());
        for &l in &selected {
            let original = self.profile.choices[l];
            let n = game.actions(l).len();
            let mut utilities = Vec::with_capacity(n);
            for a in 0..n {
                self.profile.choices[l] = a;
                utilities.push(game.total_utility(l, &self.profile));
            }
            self.profile.choices[l] = original;
            let strategy = boltzmann_update(&utilities, tau)?;
            let next = strategy.sample(rng);
            self.strategies[l] = strategy;
            staged.push((l, next));
        }
        for (l, a) in staged {
            self.profile.choices[l] = a;
        }
        self.iteration += 1;
        Ok(())
    }
}

/// What a learning run produced.
#[derive(Debug, Clone)]
pub struct LllOutcome {
    pub profile: StrategyProfile,
    pub theta: Real,
    pub iterations: u64,
    /// Potential after initialization and after every iteration.
    pub trace: Vec<Real>,
    pub converged: bool,
}

/// Run synchronous log-linear learning to convergence or budget exhaustion.
///
/// Converges when the potential is unchanged (1e-9 relative) for
/// `stagnation_window` consecutive iterations, or when every player's stored
/// strategy concentrates past `prob_threshold`. A spent budget returns the
/// best profile seen with `converged = false`.
pub fn lll_run<R: Rng>(
    game: &BeamwidthGame,
    options: &LllOptions,
    rng: &mut R,
) -> Result<LllOutcome> {
    options.validate()?;
    let mut state = LllState::new(game, rng);
    let mut theta = game.potential(&state.profile);
    let mut trace = vec![theta];
    let mut best = (state.profile.clone(), theta);
    let mut stagnant = 0u32;
    for k in 1..=options.max_iterations {
        state.step(game, options.schedule.tau(k), options.update_cap, rng)?;
        let next = game.potential(&state.profile);
        trace.push(next);
        if next > best.1 {
            best = (state.profile.clone(), next);
        }
        if (next - theta).abs() <= 1e-9 * next.abs().max(theta.abs()) {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        theta = next;
        // Concentration alone is not settlement: a freshly drawn action can
        // land off the mode with probability up to 1 - prob_threshold, so the
        // exit also requires the played profile to sit on every mode.
        let concentrated = state
            .strategies
            .iter()
            .zip(&state.profile.choices)
            .all(|(s, &c)| s.max_component() >= options.prob_threshold && s.mode() == c);
        if stagnant >= options.stagnation_window || concentrated {
            return Ok(LllOutcome {
                profile: state.profile,
                theta: next,
                iterations: k,
                trace,
                converged: true,
            });
        }
    }
    Ok(LllOutcome {
        profile: best.0,
        theta: best.1,
        iterations: options.max_iterations,
        trace,
        converged: false,
    })
}

/// Every player takes the action nearest the fixed beamwidth (exact when the
/// fixed value is feasible; otherwise clipped to the closest feasible one).
pub fn cbws(game: &BeamwidthGame, fixed: Real) -> StrategyProfile {
    let choices = (0..game.len())
        .map(|l| {
            game.actions(l)
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - fixed).abs().partial_cmp(&(*b - fixed).abs()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    StrategyProfile { choices }
}

/// Every player draws uniformly from its feasible actions.
pub fn rbws<R: Rng>(game: &BeamwidthGame, rng: &mut R) -> StrategyProfile {
    let choices = (0..game.len()).map(|l| rng.gen_range(0..game.actions(l).len())).collect();
    StrategyProfile { choices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn channel() -> ChannelParams {
        ChannelParams {
            tx_power: 1.0,
            bandwidth: 1e8,
            noise_density: 10f64.powf(-17.4),
            pathloss_intercept: 10f64.powf(-6.17),
            pathloss_exponent: 2.0,
            nakagami_shape: 3.0,
            blockage_beta: 0.0,
        }
    }

    fn timing() -> TimingBudget {
        TimingBudget {
            t_pilot: 10e-6,
            t_reply: 1e-3,
            t_decide: 1e-3,
            t_ack: 1e-3,
            misalignment_threshold: 0.5,
        }
    }

    fn actions4() -> Vec<Real> {
        vec![
            5f64.to_radians(),
            15f64.to_radians(),
            30f64.to_radians(),
            45f64.to_radians(),
        ]
    }

    fn link_at(
        tx: (Real, Real),
        rx: (Real, Real),
        ids: (usize, usize),
        demand: Real,
    ) -> GameLink {
        GameLink {
            tx_node: ids.0,
            rx_node: ids.1,
            tx_pos: Position::new(tx.0, tx.1),
            rx_pos: Position::new(rx.0, rx.1),
            motion: RelativeMotion { speed: 1.0, angle: FRAC_PI_2 },
            psi_tx: FRAC_PI_2,
            psi_rx: FRAC_PI_2,
            actions: actions4(),
            demand_bits: demand,
            los: true,
        }
    }

    fn build(links: &[GameLink], threshold: Real, coverage: Real) -> BeamwidthGame {
        let ch = channel();
        let tm = timing();
        let los = LosField::new(7, 0.0);
        let ctx = GameContext {
            channel: &ch,
            timing: &tm,
            los: &los,
            coverage,
            params: UtilityParams {
                interference_threshold: threshold,
                ..UtilityParams::default()
            },
        };
        BeamwidthGame::new(links, &ctx).unwrap()
    }

    fn random_game(seed: u64, n: usize) -> BeamwidthGame {
        let mut rng = stream(seed, 0, StreamPurpose::Game);
        let links: Vec<GameLink> = (0..n)
            .map(|l| {
                let tx = (rng.gen_range(-80.0..80.0), rng.gen_range(-80.0..80.0));
                let heading = rng.gen_range(0.0..TAU);
                let d = rng.gen_range(10.0..40.0);
                let rx = (tx.0 + d * heading.cos(), tx.1 + d * heading.sin());
                let mut link = link_at(tx, rx, (2 * l, 2 * l + 1), rng.gen_range(1e8..8e9));
                link.motion = RelativeMotion {
                    speed: rng.gen_range(0.5..3.0),
                    angle: rng.gen_range(0.1..PI - 0.1),
                };
                link
            })
            .collect();
        build(&links, 1e-12, 150.0)
    }

    #[test]
    fn boltzmann_limits_and_shift_invariance() {
        let u = [1.0, 1.0, 1.0, 1.0];
        for p in boltzmann_update(&u, 0.7).unwrap().probs {
            assert_relative_eq!(p, 0.25);
        }
        // Cold limit: argmax keeps almost all mass.
        let cold = boltzmann_update(&[1.0, 2.0, 0.5], 1e-3).unwrap();
        assert!(cold.probs[1] > 0.999);
        // Hot limit: near uniform.
        let hot = boltzmann_update(&[1.0, 2.0, 0.5], 1e6).unwrap();
        for p in hot.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-5);
        }
        // Adding a constant changes nothing.
        let a = boltzmann_update(&[3.0, 1.0, 2.0], 0.5).unwrap();
        let b = boltzmann_update(&[103.0, 101.0, 102.0], 0.5).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        assert!(boltzmann_update(&[1.0], 0.0).is_err());
        assert!(boltzmann_update(&[1.0], -1.0).is_err());
    }

    #[test]
    fn mixed_strategy_validates_and_samples() {
        let s = MixedStrategy { probs: vec![0.3, 0.7] };
        s.validate().unwrap();
        assert!(MixedStrategy { probs: vec![0.5, 0.6] }.validate().is_err());
        assert!(MixedStrategy { probs: vec![-0.1, 1.1] }.validate().is_err());
        let mut rng = stream(11, 0, StreamPurpose::Game);
        let n = 20_000;
        let ones = (0..n).filter(|_| s.sample(&mut rng) == 1).count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.7).abs() < 0.01, "sampled frequency {f}");
        assert_eq!(MixedStrategy::uniform(4).probs, vec![0.25; 4]);
    }

    #[test]
    fn neighborhoods_isolated_vacuous_and_facing() {
        // Far apart: empty neighborhoods.
        let far = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9), link_at((500.0, 0.0), (520.0, 0.0), (2, 3), 1e9)],
            1e-12,
            150.0,
        );
        assert!(far.neighborhood(0).is_empty());
        assert!(far.neighborhood(1).is_empty());

        // Zero threshold: any in-range LOS link is a neighbor.
        let near = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9), link_at((0.0, 80.0), (20.0, 80.0), (2, 3), 1e9)],
            0.0,
            150.0,
        );
        assert_eq!(near.neighborhood(0), &[1]);
        assert_eq!(near.neighborhood(1), &[0]);

        // Mutually facing main lobes couple strongly.
        let facing = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9), link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 1e9)],
            1e-12,
            150.0,
        );
        assert_eq!(facing.neighborhood(0), &[1]);
        assert_eq!(facing.neighborhood(1), &[0]);
    }

    #[test]
    fn neighborhood_symmetry_holds_on_random_games() {
        for seed in 0..10 {
            let game = random_game(seed, 6);
            for l in 0..game.len() {
                for &i in game.neighborhood(l) {
                    assert!(
                        game.neighborhood(i).contains(&l),
                        "asymmetric neighborhood at seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_isolated_link_utility_is_plain_rate() {
        // Tiny demand fits any window: utility equals the rate.
        let game = build(&[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e6)], 1e-12, 150.0);
        let profile = StrategyProfile { choices: vec![1] };
        let r = game.rate_bits(0, &profile);
        assert!(r > 1e9, "strong short link should be multi-Gb/s, got {r}");
        assert!(!game.penalty_active(0, &profile));
        assert_relative_eq!(game.individual_utility(0, &profile), r / 1e9, max_relative = 1e-12);
        // No neighbors: U = u = Θ.
        assert_relative_eq!(game.total_utility(0, &profile), game.potential(&profile));
        // Zero demand: same, penalty cannot fire.
        let free = build(&[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 0.0)], 1e-12, 150.0);
        assert_relative_eq!(free.individual_utility(0, &profile), r / 1e9, max_relative = 1e-12);
    }

    #[test]
    fn deadline_penalty_fires_with_shortfall_fraction() {
        // Fast receiver shrinks the window; huge demand cannot fit.
        let mut link = link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9);
        link.motion = RelativeMotion { speed: 10.0, angle: FRAC_PI_2 };
        let game = build(&[link], 1e-12, 150.0);
        let profile = StrategyProfile { choices: vec![1] };
        let r = game.rate_bits(0, &profile);
        let w = game.window(0, 1);
        let needed = 1e9 / r;
        assert!(needed > w, "construction should overflow the window");
        assert!(game.penalty_active(0, &profile));
        let expected = (r - game.penalty_scalar(0) * (1.0 - w / needed)) / 1e9;
        assert_relative_eq!(game.individual_utility(0, &profile), expected, max_relative = 1e-12);
    }

    #[test]
    fn blocked_link_rates_zero_and_pays_full_penalty() {
        let mut link = link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9);
        link.los = false;
        let game = build(&[link], 1e-12, 150.0);
        let profile = StrategyProfile { choices: vec![2] };
        assert_eq!(game.rate_bits(0, &profile), 0.0);
        assert_relative_eq!(
            game.individual_utility(0, &profile),
            -game.penalty_scalar(0) / 1e9,
            max_relative = 1e-12
        );
        // All actions equal here, so the profile is trivially an equilibrium.
        assert!(game.is_nash_equilibrium(&profile));
    }

    #[test]
    fn mutual_neighbors_share_total_utility() {
        let game = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9), link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 1e9)],
            1e-12,
            150.0,
        );
        let profile = StrategyProfile { choices: vec![2, 1] };
        let u0 = game.individual_utility(0, &profile);
        let u1 = game.individual_utility(1, &profile);
        assert_relative_eq!(game.total_utility(0, &profile), u0 + u1, max_relative = 1e-12);
        assert_relative_eq!(game.total_utility(1, &profile), u0 + u1, max_relative = 1e-12);
        assert_relative_eq!(game.potential(&profile), u0 + u1, max_relative = 1e-12);
    }

    #[test]
    fn unilateral_deviations_move_potential_exactly() {
        let mut rng = stream(42, 0, StreamPurpose::Game);
        for seed in 0..25 {
            let game = random_game(seed, 2 + (seed as usize % 5));
            let base = StrategyProfile {
                choices: (0..game.len())
                    .map(|l| rng.gen_range(0..game.actions(l).len()))
                    .collect(),
            };
            let theta = game.potential(&base);
            let mut work = base.clone();
            for l in 0..game.len() {
                let here = game.total_utility(l, &base);
                let original = work.choices[l];
                for a in 0..game.actions(l).len() {
                    work.choices[l] = a;
                    let du = game.total_utility(l, &work) - here;
                    let dt = game.potential(&work) - theta;
                    let scale = du.abs().max(dt.abs()).max(1.0);
                    assert!(
                        (du - dt).abs() <= 1e-9 * scale,
                        "potential identity broken: dU={du} dTheta={dt} seed={seed}"
                    );
                }
                work.choices[l] = original;
            }
        }
    }

    #[test]
    fn exhaustive_matches_manual_enumeration() {
        let game = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 2e9), link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 2e9)],
            1e-12,
            150.0,
        );
        let (best, theta) = game.exhaustive_optimum(1_000_000).unwrap();
        let mut manual = Real::NEG_INFINITY;
        for a in 0..4 {
            for b in 0..4 {
                manual = manual.max(game.potential(&StrategyProfile { choices: vec![a, b] }));
            }
        }
        assert_relative_eq!(theta, manual, max_relative = 1e-12);
        assert_relative_eq!(theta, game.potential(&best), max_relative = 1e-12);
        assert!(game.is_nash_equilibrium(&best), "optimum must be an equilibrium");
        // A one-profile budget is insufficient for 16 profiles.
        assert!(matches!(
            game.exhaustive_optimum(1),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn single_player_nash_is_argmax() {
        let game = build(&[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 5e9)], 1e-12, 150.0);
        let (best, _) = game.exhaustive_optimum(100).unwrap();
        assert!(game.is_nash_equilibrium(&best));
        for a in 0..4 {
            let p = StrategyProfile { choices: vec![a] };
            if p != best {
                let worse = game.potential(&p) < game.potential(&best) - 1e-12;
                assert_eq!(game.is_nash_equilibrium(&p), !worse);
            }
        }
    }

    #[test]
    fn update_sets_are_independent_and_respect_cap() {
        let mut rng = stream(9, 0, StreamPurpose::Game);
        for seed in 0..10 {
            let game = random_game(seed + 50, 8);
            for cap in [1usize, 3, 8] {
                let set = select_update_set(&game, cap, &mut rng);
                assert!(set.len() <= cap);
                assert!(!set.is_empty());
                for (i, &a) in set.iter().enumerate() {
                    for &b in &set[i + 1..] {
                        assert!(
                            !game.neighborhood(a).contains(&b),
                            "update set not independent"
                        );
                    }
                }
            }
        }
        // Edgeless graph with a generous cap selects everyone.
        let far = build(
            &[
                link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9),
                link_at((3000.0, 0.0), (3020.0, 0.0), (2, 3), 1e9),
                link_at((6000.0, 0.0), (6020.0, 0.0), (4, 5), 1e9),
            ],
            1e-12,
            150.0,
        );
        let all = select_update_set(&far, 10, &mut rng);
        assert_eq!(all, vec![0, 1, 2]);
        let single = select_update_set(&far, 1, &mut rng);
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn lll_single_player_converges_to_argmax() {
        let game = build(&[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 5e9)], 1e-12, 150.0);
        let (best, theta) = game.exhaustive_optimum(100).unwrap();
        let mut rng = stream(13, 0, StreamPurpose::Game);
        let out = lll_run(
            &game,
            &LllOptions {
                schedule: TauSchedule::Harmonic { scale: 1.0 },
                max_iterations: 500,
                ..LllOptions::default()
            },
            &mut rng,
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.profile, best);
        assert_relative_eq!(out.theta, theta, max_relative = 1e-9);
        assert_eq!(out.trace.len() as u64, out.iterations + 1);
    }

    #[test]
    fn lll_reaches_exhaustive_optimum_on_coupled_pairs() {
        let mut hits = 0;
        for seed in 0..20 {
            let game = build(
                &[
                    link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 4e9),
                    link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 4e9),
                ],
                1e-12,
                150.0,
            );
            let (_, theta_star) = game.exhaustive_optimum(100).unwrap();
            let mut rng = stream(seed, 1, StreamPurpose::Game);
            let out = lll_run(
                &game,
                &LllOptions { max_iterations: 600, ..LllOptions::default() },
                &mut rng,
            )
            .unwrap();
            if out.converged && (out.theta - theta_star).abs() <= 1e-9 * theta_star.abs() {
                hits += 1;
            }
        }
        assert!(hits >= 18, "only {hits}/20 runs reached the optimum");
    }

    #[test]
    fn stationary_distribution_is_gibbs_and_normalized() {
        let game = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 2e9), link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 2e9)],
            1e-12,
            150.0,
        );
        let pi = game.stationary_distribution(0.5).unwrap();
        assert_eq!(pi.len(), 16);
        let total: Real = pi.iter().map(|&(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Ratios follow exp(ΔΘ/τ).
        let t0 = game.potential(&pi[0].0);
        let t5 = game.potential(&pi[5].0);
        assert_relative_eq!(pi[5].1 / pi[0].1, ((t5 - t0) / 0.5).exp(), max_relative = 1e-9);
        // Cold temperature concentrates on the maximizer.
        let cold = game.stationary_distribution(1e-3).unwrap();
        let (best, _) = game.exhaustive_optimum(100).unwrap();
        let mass: Real =
            cold.iter().filter(|(p, _)| *p == best).map(|&(_, m)| m).sum();
        assert!(mass > 0.999, "cold mass on maximizer {mass}");
    }

    #[test]
    fn asynchronous_chain_tracks_gibbs_frequencies() {
        // Two coupled links, two actions each, fixed temperature: long-run
        // visit frequencies approximate the closed-form distribution.
        let mut l0 = link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 2e9);
        let mut l1 = link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 2e9);
        l0.actions = vec![15f64.to_radians(), 45f64.to_radians()];
        l1.actions = vec![15f64.to_radians(), 45f64.to_radians()];
        let game = build(&[l0, l1], 1e-12, 150.0);
        let pi = game.stationary_distribution(0.5).unwrap();
        let mut counts = vec![0u64; 4];
        let mut rng = stream(3, 0, StreamPurpose::Game);
        let mut state = LllState::new(&game, &mut rng);
        let steps = 20_000;
        for _ in 0..steps {
            state.step(&game, 0.5, 1, &mut rng).unwrap();
            counts[state.profile.choices[0] * 2 + state.profile.choices[1]] += 1;
        }
        let tv: Real = (0..4)
            .map(|i| (counts[i] as Real / steps as Real - pi[i].1).abs())
            .sum::<Real>()
            / 2.0;
        assert!(tv < 0.1, "total variation {tv} too large");
    }

    #[test]
    fn baseline_profiles_fixed_and_random() {
        let game = build(
            &[link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9), link_at((-20.0, 0.0), (0.0, 5.0), (2, 3), 1e9)],
            1e-12,
            150.0,
        );
        let fixed = cbws(&game, 15f64.to_radians());
        for (l, &a) in fixed.choices.iter().enumerate() {
            assert_relative_eq!(game.actions(l)[a], 15f64.to_radians());
        }
        // An off-grid target clips to the nearest feasible beamwidth.
        let clipped = cbws(&game, 21f64.to_radians());
        for (l, &a) in clipped.choices.iter().enumerate() {
            assert_relative_eq!(game.actions(l)[a], 15f64.to_radians());
        }
        let mut counts = [0u64; 4];
        for seed in 0..10_000 {
            let mut rng = stream(seed, 2, StreamPurpose::Game);
            let p = rbws(&game, &mut rng);
            counts[p.choices[0]] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.25).abs() < 0.02, "random baseline frequency {f}");
        }
    }

    #[test]
    fn infeasible_action_sets_are_rejected() {
        // Sector narrower than every candidate beamwidth: nothing feasible.
        let mut link = link_at((0.0, 0.0), (20.0, 0.0), (0, 1), 1e9);
        link.psi_tx = 2f64.to_radians();
        link.psi_rx = 2f64.to_radians();
        let ch = channel();
        let tm = timing();
        let los = LosField::new(7, 0.0);
        let ctx = GameContext {
            channel: &ch,
            timing: &tm,
            los: &los,
            coverage: 150.0,
            params: UtilityParams::default(),
        };
        assert!(matches!(
            BeamwidthGame::new(&[link], &ctx),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn empty_game_degenerates_cleanly() {
        let game = build(&[], 1e-12, 150.0);
        let empty = StrategyProfile { choices: vec![] };
        assert_eq!(game.potential(&empty), 0.0);
        assert!(game.is_nash_equilibrium(&empty));
        let mut rng = stream(1, 0, StreamPurpose::Game);
        let out = lll_run(&game, &LllOptions::default(), &mut rng).unwrap();
        assert!(out.converged);
        assert!(out.profile.choices.is_empty());
    }
}
