//! Peer association: pairing requesters with content-holding transmitters.
//!
//! The primary heuristic scores each feasible transmitter by normalized link
//! stability plus normalized segment availability; requesters pick the argmax
//! and contended transmitters acknowledge the strongest requester. Deferred
//! acceptance (stable matching with signaling overhead), minimum-distance, and
//! random baselines share the same feasibility layer.

use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

use crate::channel::LosField;
use crate::content::Cache;
use crate::geometry::{distance, relative_motion, Node, Role};
use crate::linkdyn::{stability_for, TimingBudget};
use crate::{Error, Real, Result};

/// Normalizers for the association utility.
#[derive(Debug, Clone, Copy)]
pub struct PAUtilityParams {
    /// Stability cap/normalizer, seconds.
    pub stability_norm: Real,
    /// Availability normalizer, segments (largest requestable count).
    pub availability_norm: Real,
}

impl PAUtilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.stability_norm > 0.0) || !(self.availability_norm > 0.0) {
            return Err(Error::Config("association utility normalizers must be positive".into()));
        }
        Ok(())
    }
}

/// Association score: stability term (capped at the normalizer, so unbounded
/// stability saturates at 1 and availability still discriminates) plus
/// availability term.
pub fn pa_utility(stability: Real, availability: Real, params: &PAUtilityParams) -> Real {
    stability.min(params.stability_norm) / params.stability_norm
        + availability / params.availability_norm
}

/// Why a requester left a frame without a transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnmatchedReason {
    /// No transmitter in coverage with line of sight.
    NoFeasibleTransmitter,
    /// Transmitters in reach, but none caches the requested content.
    NoContent,
    /// Lost contention (or ran out of willing transmitters) this frame.
    AckTimeout,
    /// Retry budget exhausted; remaining demand goes to cellular.
    SwitchedToCellular,
}

/// One matched pair with the context it was chosen under.
#[derive(Debug, Clone)]
pub struct MatchRecord {
    pub requester: usize,
    pub transmitter: usize,
    pub distance: Real,
    /// Stability at the narrowest candidate beamwidth, seconds.
    pub stability: Real,
    /// Requested segments the transmitter can serve.
    pub availability: u32,
    pub utility: Real,
}

/// Outcome of one association frame.
#[derive(Debug, Clone, Default)]
pub struct Matching {
    pub pairs: Vec<MatchRecord>,
    pub unmatched: Vec<(usize, UnmatchedReason)>,
    /// Proposal rounds consumed (deferred acceptance only).
    pub rounds: u32,
    /// Signaling time to subtract from each matched link's window, seconds.
    pub overhead: Real,
}

impl Matching {
    fn sort(mut self) -> Self {
        self.pairs.sort_by_key(|p| p.requester);
        self.unmatched.sort_by_key(|u| u.0);
        self
    }
}

/// A requester still fetching over D2D, as seen by one frame.
#[derive(Debug, Clone, Copy)]
pub struct RequestView {
    pub node: usize,
    pub content: u32,
    pub remaining: u32,
}

/// Shared read-only state for one association frame.
#[derive(Debug, Clone, Copy)]
pub struct AssocContext<'a> {
    pub nodes: &'a [Node],
    pub caches: &'a [Cache],
    pub los: &'a LosField,
    /// D2D coverage radius, meters (closed boundary).
    pub coverage: Real,
    /// Narrowest candidate beamwidth; association evaluates stability here.
    pub narrow_beamwidth: Real,
    pub timing: &'a TimingBudget,
    pub utility: PAUtilityParams,
}

/// A transmitter a requester could associate with this frame.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub transmitter: usize,
    pub distance: Real,
    pub stability: Real,
    pub availability: u32,
}

impl Candidate {
    fn utility(&self, params: &PAUtilityParams) -> Real {
        pa_utility(self.stability, self.availability as Real, params)
    }
}

/// Transmitters within coverage and line of sight of the requester, with the
/// stability and availability context the utilities need.
pub fn feasible_transmitters(ctx: &AssocContext, request: &RequestView) -> Vec<Candidate> {
    let requester = &ctx.nodes[request.node];
    debug_assert_eq!(requester.role, Role::Requester);
    ctx.nodes
        .iter()
        .filter(|n| n.role == Role::Transmitter)
        .filter_map(|tx| {
            let d = distance(requester.position, tx.position);
            if d > ctx.coverage || d == 0.0 || !ctx.los.is_los(requester.id, tx.id, d) {
                return None;
            }
            let motion = relative_motion(requester, tx);
            let stability =
                stability_for(d, ctx.narrow_beamwidth, motion, ctx.timing.misalignment_threshold)
                    .expect("threshold validated at config time");
            let availability = if ctx.caches[tx.id].holds(request.content) {
                request.remaining
            } else {
                0
            };
            Some(Candidate { transmitter: tx.id, distance: d, stability, availability })
        })
        .collect()
}

fn record(req: &RequestView, c: &Candidate, params: &PAUtilityParams) -> MatchRecord {
    MatchRecord {
        requester: req.node,
        transmitter: c.transmitter,
        distance: c.distance,
        stability: c.stability,
        availability: c.availability,
        utility: c.utility(params),
    }
}

/// One frame of the heuristic association.
///
/// Every active requester polls its feasible transmitters, scores the ones
/// holding content, and requests the argmax (ties to the lower transmitter
/// id). A transmitter picked by several requesters acknowledges the one with
/// the highest utility toward it (ties to the lower requester id); the rest
/// time out for this frame. Retry counters live with the caller.
pub fn hpa_round<R: Rng>(ctx: &AssocContext, active: &[RequestView], rng: &mut R) -> Matching {
    let mut order: Vec<usize> = (0..active.len()).collect();
    // Processing order is shuffled to keep id-dependent behavior out of the
    // gather phase; the outcome is fixed by the utility tie rules below.
    order.shuffle(rng);

    let mut out = Matching::default();
    // transmitter -> contending (utility, requester id, candidate)
    let mut claims: BTreeMap<usize, Vec<(Real, usize, Candidate)>> = BTreeMap::new();
    for &idx in &order {
        let req = &active[idx];
        let candidates = feasible_transmitters(ctx, req);
        if candidates.is_empty() {
            out.unmatched.push((req.node, UnmatchedReason::NoFeasibleTransmitter));
            continue;
        }
        let mut best: Option<(Real, &Candidate)> = None;
        for c in candidates.iter().filter(|c| c.availability > 0) {
            let u = c.utility(&ctx.utility);
            let better = match best {
                None => true,
                Some((bu, bc)) => u > bu || (u == bu && c.transmitter < bc.transmitter),
            };
            if better {
                best = Some((u, c));
            }
        }
        match best {
            None => out.unmatched.push((req.node, UnmatchedReason::NoContent)),
            Some((u, c)) => claims.entry(c.transmitter).or_default().push((u, req.node, *c)),
        }
    }
    for (_tx, mut contenders) in claims {
        contenders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let (_, winner, cand) = contenders[0];
        let req = active.iter().find(|r| r.node == winner).unwrap();
        out.pairs.push(record(req, &cand, &ctx.utility));
        for &(_, loser, _) in &contenders[1..] {
            out.unmatched.push((loser, UnmatchedReason::AckTimeout));
        }
    }
    out.sort()
}

/// Deferred acceptance (requesters propose), with both sides ranking pairs by
/// the association utility. Counts proposal rounds; the caller deducts
/// `overhead` from each matched link's transmission window.
pub fn daa_match(ctx: &AssocContext, active: &[RequestView]) -> Matching {
    let mut out = Matching::default();
    // Preference lists over content-holding candidates, best first.
    let mut prefs: Vec<Vec<(Real, Candidate)>> = Vec::with_capacity(active.len());
    for req in active {
        let candidates = feasible_transmitters(ctx, req);
        if candidates.is_empty() {
            out.unmatched.push((req.node, UnmatchedReason::NoFeasibleTransmitter));
            prefs.push(Vec::new());
            continue;
        }
        let mut list: Vec<(Real, Candidate)> = candidates
            .into_iter()
            .filter(|c| c.availability > 0)
            .map(|c| (c.utility(&ctx.utility), c))
            .collect();
        if list.is_empty() {
            out.unmatched.push((req.node, UnmatchedReason::NoContent));
        }
        list.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.transmitter.cmp(&b.1.transmitter)));
        prefs.push(list);
    }

    // Synchronous Gale-Shapley: each round, every free requester proposes to
    // its next untried transmitter; transmitters hold their best proposal.
    let mut next: Vec<usize> = vec![0; active.len()];
    let mut held: BTreeMap<usize, (Real, usize, usize)> = BTreeMap::new(); // tx -> (utility, req node, active idx)
    let mut free: Vec<usize> = (0..active.len()).filter(|&i| !prefs[i].is_empty()).collect();
    let mut rounds = 0u32;
    while !free.is_empty() {
        let mut proposed = false;
        let mut still_free = Vec::new();
        for &i in &free {
            if next[i] >= prefs[i].len() {
                out.unmatched.push((active[i].node, UnmatchedReason::AckTimeout));
                continue;
            }
            let (u, cand) = prefs[i][next[i]];
            next[i] += 1;
            proposed = true;
            let req_node = active[i].node;
            match held.get(&cand.transmitter) {
                Some(&(hu, hnode, hidx)) if hu > u || (hu == u && hnode < req_node) => {
                    let _ = hidx;
                    still_free.push(i); // rejected; retry next round
                }
                previous => {
                    if let Some(&(_, _, oi)) = previous {
                        still_free.push(oi); // displaced holder becomes free
                    }
                    held.insert(cand.transmitter, (u, req_node, i));
                }
            }
        }
        if proposed {
            rounds += 1;
        } else {
            break;
        }
        still_free.sort_unstable();
        free = still_free;
    }
    for (_tx, (_u, _node, idx)) in held {
        let req = &active[idx];
        let cand = prefs[idx][next[idx] - 1].1;
        out.pairs.push(record(req, &cand, &ctx.utility));
    }
    out.rounds = rounds;
    out.overhead = rounds as Real * ctx.timing.handshake_time();
    out.sort()
}

/// Minimum-distance baseline: feasible pairs claimed greedily in ascending
/// distance order, blind to content (a content-free match later delivers
/// nothing).
pub fn mda_match(ctx: &AssocContext, active: &[RequestView]) -> Matching {
    let mut out = Matching::default();
    let mut pairs: Vec<(Real, usize, Candidate)> = Vec::new(); // (distance, active idx, candidate)
    let mut had_any = vec![false; active.len()];
    for (i, req) in active.iter().enumerate() {
        for c in feasible_transmitters(ctx, req) {
            had_any[i] = true;
            pairs.push((c.distance, i, c));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(active[a.1].node.cmp(&active[b.1].node))
            .then(a.2.transmitter.cmp(&b.2.transmitter))
    });
    let mut req_taken = vec![false; active.len()];
    let mut tx_taken: BTreeMap<usize, bool> = BTreeMap::new();
    for (_d, i, c) in pairs {
        if req_taken[i] || tx_taken.get(&c.transmitter).copied().unwrap_or(false) {
            continue;
        }
        req_taken[i] = true;
        tx_taken.insert(c.transmitter, true);
        out.pairs.push(record(&active[i], &c, &ctx.utility));
    }
    for (i, req) in active.iter().enumerate() {
        if !req_taken[i] {
            let reason = if had_any[i] {
                UnmatchedReason::AckTimeout
            } else {
                UnmatchedReason::NoFeasibleTransmitter
            };
            out.unmatched.push((req.node, reason));
        }
    }
    out.sort()
}

/// Random baseline: requesters in random order pick uniformly among unclaimed
/// feasible transmitters, blind to content.
pub fn rpa_match<R: Rng>(ctx: &AssocContext, active: &[RequestView], rng: &mut R) -> Matching {
    let mut out = Matching::default();
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.shuffle(rng);
    let mut tx_taken: BTreeMap<usize, bool> = BTreeMap::new();
    for &i in &order {
        let req = &active[i];
        let candidates = feasible_transmitters(ctx, req);
        if candidates.is_empty() {
            out.unmatched.push((req.node, UnmatchedReason::NoFeasibleTransmitter));
            continue;
        }
        let open: Vec<&Candidate> = candidates
            .iter()
            .filter(|c| !tx_taken.get(&c.transmitter).copied().unwrap_or(false))
            .collect();
        match open.as_slice() {
            [] => out.unmatched.push((req.node, UnmatchedReason::AckTimeout)),
            open => {
                let c = open[rng.gen_range(0..open.len())];
                tx_taken.insert(c.transmitter, true);
                out.pairs.push(record(req, c, &ctx.utility));
            }
        }
    }
    out.sort()
}
