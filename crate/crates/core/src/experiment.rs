//! Seeded end-to-end trials and the Monte Carlo, sweep, and comparison
//! drivers.
//!
//! A trial is a pure function of (configuration, trial index). Each concern —
//! topology, content placement, blockage, association, learning, fading —
//! draws from its own named RNG stream, so trials reproduce bit-for-bit
//! regardless of execution order or worker count.
//!
//! One trial runs up to `run.max_frames` association frames. Every frame:
//! requesters still fetching pick transmitters, matched pairs choose
//! beamwidths in the selection game, and delivery is evaluated with sampled
//! fading and cross-link interference from every concurrently active link.
//! Requesters that fail `run.retry_limit` consecutive frames fall back to
//! cellular; the demand ledger conserves bits exactly.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::association::{daa_match, hpa_round, mda_match, rpa_match, AssocContext, RequestView};
use crate::channel::{
    classify_interference_gain, data_rate, sample_fading, sinr, ChannelParams,
    DirectionalAntenna, LosField,
};
use crate::config::{AssocAlgorithm, BeamStrategy, ExperimentConfig, ScenarioKind};
use crate::content::{
    draw_requests, populate_caches, update_request, Cache, ContentCatalog, Request, RequestStatus,
};
use crate::game::{
    cbws, lll_run, rbws, BeamwidthGame, GameContext, GameLink, LllOptions, StrategyProfile,
};
use crate::geometry::{
    bearing, distance, place_uniform, random_trajectory, relative_motion, Node, Position, Role,
};
use crate::linkdyn::{
    alignment_efficiency, alignment_time, common_action_feasible, stability_for, TimingBudget,
};
use crate::metrics::{aggregate, delivered_bits, normalized_throughput, LinkOutcome, TrialMetrics};
use crate::report::{LinkRow, RunOutput};
use crate::rng::{derive_key, stream, StreamPurpose};
use crate::{Error, Real, Result};

/// One trial's metrics plus its per-link rows.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub metrics: TrialMetrics,
    pub links: Vec<LinkRow>,
}

/// Everything a trial owns: world state and the per-concern RNG streams.
struct TrialState {
    nodes: Vec<Node>,
    caches: Vec<Cache>,
    requests: Vec<Request>,
    /// Node id -> index into `requests`.
    request_of: BTreeMap<usize, usize>,
    catalog: ContentCatalog,
    los: LosField,
    assoc_rng: ChaCha8Rng,
    game_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,
}

/// One frame's matched pairs, aligned index-for-index with the game links.
struct FrameSetup {
    /// Request indices active when the frame began.
    active: Vec<usize>,
    /// Requesters that had a transmitter this frame.
    matched: u64,
    /// Signaling time charged against each link's window, seconds.
    overhead: Real,
    links: Vec<GameLink>,
    pairs: Vec<PairInfo>,
}

struct PairInfo {
    requester: usize,
    transmitter: usize,
    /// Requested segments the transmitter can actually serve.
    availability: u32,
    /// Outstanding bits when the frame began.
    requested_bits: u64,
}

/// Config-derived constants shared by every trial of one run.
struct TrialRunner {
    channel: ChannelParams,
    timing: TimingBudget,
    actions: Vec<Real>,
    /// Sector width both endpoints pre-align within, radians.
    psi: Real,
    seg_bits: u64,
    algorithm: AssocAlgorithm,
    strategy: BeamStrategy,
    lll_opts: LllOptions,
}

impl TrialRunner {
    fn new(cfg: &ExperimentConfig) -> Result<TrialRunner> {
        Ok(TrialRunner {
            channel: cfg.channel(),
            timing: cfg.timing(),
            actions: cfg.actions(),
            psi: cfg.sector(),
            seg_bits: cfg.segment_bits(),
            algorithm: cfg.association.algorithm,
            strategy: cfg.beam_strategy()?,
            lll_opts: cfg.lll_options()?,
        })
    }

    fn build_state(&self, cfg: &ExperimentConfig, trial: u64) -> TrialState {
        let seed = cfg.run.base_seed;
        let mut topo_rng = stream(seed, trial, StreamPurpose::Topology);
        let mut content_rng = stream(seed, trial, StreamPurpose::Content);
        let los = LosField::new(
            derive_key(&[seed, trial, StreamPurpose::Blockage as u64]),
            cfg.channel.blockage_beta_per_m,
        );
        let arena = cfg.arena();
        let speeds = cfg.speeds();

        let (nodes, caches, requests, catalog) = match cfg.scenario.kind {
            ScenarioKind::Uniform => {
                let tx_d = cfg.scenario.transmitter_density_per_km2;
                let rx_d = cfg.scenario.requester_density_per_km2;
                let total = tx_d + rx_d;
                let fraction = if total > 0.0 { tx_d / total } else { 0.0 };
                let nodes = place_uniform(arena, total, fraction, speeds, &mut topo_rng);
                let catalog = ContentCatalog::uniform(
                    cfg.content.catalog_size,
                    cfg.content.segments,
                    self.seg_bits,
                );
                let caches = populate_caches(
                    &nodes,
                    &catalog,
                    cfg.content.cache_probability,
                    &mut content_rng,
                );
                let requests = draw_requests(&nodes, &catalog, &mut content_rng);
                (nodes, caches, requests, catalog)
            }
            ScenarioKind::TestRequester => {
                let placed = place_uniform(
                    arena,
                    cfg.scenario.transmitter_density_per_km2,
                    1.0,
                    speeds,
                    &mut topo_rng,
                );
                let mut nodes = vec![Node {
                    id: 0,
                    role: Role::Requester,
                    position: Position::ORIGIN,
                    trajectory: random_trajectory(speeds, &mut topo_rng),
                }];
                nodes.extend(placed.into_iter().map(|mut n| {
                    n.id += 1;
                    n
                }));
                let catalog = ContentCatalog::uniform(
                    cfg.content.catalog_size,
                    cfg.content.segments,
                    self.seg_bits,
                );
                let caches = populate_caches(
                    &nodes,
                    &catalog,
                    cfg.content.cache_probability,
                    &mut content_rng,
                );
                let requests = draw_requests(&nodes, &catalog, &mut content_rng);
                (nodes, caches, requests, catalog)
            }
            ScenarioKind::Links => {
                let [d_lo, d_hi] = cfg.scenario.link_distance_m;
                let [s_lo, s_hi] = cfg.scenario.demand_segments;
                let half = arena.side / 2.0;
                let congested =
                    (cfg.scenario.hotspot_fraction * cfg.scenario.link_count as Real).round()
                        as u64;
                let mut nodes = Vec::new();
                let mut requests = Vec::new();
                for l in 0..cfg.scenario.link_count {
                    let tx_pos = if l < congested {
                        // Transmitters packed into a central disc; area-uniform.
                        let r = cfg.scenario.hotspot_radius_m
                            * topo_rng.gen_range(0.0..=1.0f64).sqrt();
                        let ang = topo_rng.gen_range(0.0..std::f64::consts::TAU);
                        Position::new(r * ang.cos(), r * ang.sin())
                    } else {
                        Position::new(
                            topo_rng.gen_range(-half..=half),
                            topo_rng.gen_range(-half..=half),
                        )
                    };
                    let dir = topo_rng.gen_range(0.0..std::f64::consts::TAU);
                    let d = if d_hi > d_lo { topo_rng.gen_range(d_lo..=d_hi) } else { d_lo };
                    let rx_pos =
                        Position::new(tx_pos.x + d * dir.cos(), tx_pos.y + d * dir.sin());
                    let tx_id = (2 * l) as usize;
                    let rx_id = tx_id + 1;
                    nodes.push(Node {
                        id: tx_id,
                        role: Role::Transmitter,
                        position: tx_pos,
                        trajectory: random_trajectory(speeds, &mut topo_rng),
                    });
                    nodes.push(Node {
                        id: rx_id,
                        role: Role::Requester,
                        position: rx_pos,
                        trajectory: random_trajectory(speeds, &mut topo_rng),
                    });
                    let segs =
                        if s_hi > s_lo { content_rng.gen_range(s_lo..=s_hi) } else { s_lo } as u32;
                    requests.push(Request {
                        node: rx_id,
                        content: 0,
                        delivered: 0,
                        total: segs,
                        failures: 0,
                        status: RequestStatus::Active,
                    });
                }
                // Every transmitter holds its peer's (single) content item.
                let caches = nodes
                    .iter()
                    .map(|n| {
                        let mut c = Cache::default();
                        if n.role == Role::Transmitter {
                            c.contents.insert(0);
                        }
                        c
                    })
                    .collect();
                let catalog =
                    ContentCatalog::uniform(1, s_hi.max(1) as u32, self.seg_bits);
                (nodes, caches, requests, catalog)
            }
        };

        let request_of =
            requests.iter().enumerate().map(|(i, r)| (r.node, i)).collect();
        TrialState {
            nodes,
            caches,
            requests,
            request_of,
            catalog,
            los,
            assoc_rng: stream(seed, trial, StreamPurpose::Association),
            game_rng: stream(seed, trial, StreamPurpose::Game),
            fading_rng: stream(seed, trial, StreamPurpose::Fading),
        }
    }

    /// Candidate beamwidths this pair can align and hold: narrow enough to fit
    /// the sector sweep inside the stability window, wide enough to finish it.
    fn feasible_actions(&self, d: Real, motion: crate::geometry::RelativeMotion) -> Vec<Real> {
        self.actions
            .iter()
            .copied()
            .filter(|&a| {
                stability_for(d, a, motion, self.timing.misalignment_threshold)
                    .map_or(false, |ts| {
                        common_action_feasible(a, self.psi, self.timing.t_pilot, ts)
                    })
            })
            .collect()
    }

    fn pair_entry(
        &self,
        state: &TrialState,
        requester: usize,
        transmitter: usize,
        availability: u32,
        los: bool,
    ) -> (Option<GameLink>, PairInfo) {
        let rx = &state.nodes[requester];
        let tx = &state.nodes[transmitter];
        let motion = relative_motion(rx, tx);
        let d = distance(rx.position, tx.position);
        let req = &state.requests[state.request_of[&requester]];
        let requested_bits = req.remaining_bits(&state.catalog);
        let actions = self.feasible_actions(d, motion);
        let link = if actions.is_empty() {
            None
        } else {
            Some(GameLink {
                tx_node: transmitter,
                rx_node: requester,
                tx_pos: tx.position,
                rx_pos: rx.position,
                motion,
                psi_tx: self.psi,
                psi_rx: self.psi,
                actions,
                demand_bits: requested_bits as Real,
                los,
            })
        };
        (link, PairInfo { requester, transmitter, availability, requested_bits })
    }

    /// Run association (or take the fixed pairing) and assemble the frame's
    /// game links. Matched pairs that cannot finish a beam sweep inside their
    /// stability window get no link and deliver nothing this frame.
    fn frame_setup(&self, cfg: &ExperimentConfig, state: &mut TrialState) -> FrameSetup {
        let active: Vec<usize> = state
            .requests
            .iter()
            .enumerate()
            .filter(|(_, r)| r.status == RequestStatus::Active && r.remaining_segments() > 0)
            .map(|(i, _)| i)
            .collect();
        let mut setup = FrameSetup {
            active,
            matched: 0,
            overhead: 0.0,
            links: Vec::new(),
            pairs: Vec::new(),
        };
        if setup.active.is_empty() {
            return setup;
        }

        match cfg.scenario.kind {
            ScenarioKind::Links => {
                for &i in &setup.active {
                    let req = &state.requests[i];
                    let rx_id = req.node;
                    let tx_id = rx_id - 1;
                    let d = distance(state.nodes[rx_id].position, state.nodes[tx_id].position);
                    let los = state.los.is_los(tx_id, rx_id, d);
                    let availability = req.remaining_segments();
                    let (link, pair) = self.pair_entry(state, rx_id, tx_id, availability, los);
                    if let Some(link) = link {
                        setup.links.push(link);
                        setup.pairs.push(pair);
                    }
                }
                setup.matched = setup.active.len() as u64;
            }
            ScenarioKind::Uniform | ScenarioKind::TestRequester => {
                let views: Vec<RequestView> = setup
                    .active
                    .iter()
                    .map(|&i| {
                        let r = &state.requests[i];
                        RequestView {
                            node: r.node,
                            content: r.content,
                            remaining: r.remaining_segments(),
                        }
                    })
                    .collect();
                let ctx = AssocContext {
                    nodes: &state.nodes,
                    caches: &state.caches,
                    los: &state.los,
                    coverage: cfg.association.coverage_m,
                    narrow_beamwidth: self.actions[0],
                    timing: &self.timing,
                    utility: cfg.pa_params(),
                };
                let matching = match self.algorithm {
                    AssocAlgorithm::Hpa => hpa_round(&ctx, &views, &mut state.assoc_rng),
                    AssocAlgorithm::Daa => daa_match(&ctx, &views),
                    AssocAlgorithm::Mda => mda_match(&ctx, &views),
                    AssocAlgorithm::Rpa => rpa_match(&ctx, &views, &mut state.assoc_rng),
                };
                setup.matched = matching.pairs.len() as u64;
                setup.overhead = matching.overhead;
                for rec in &matching.pairs {
                    // Matching feasibility already required line of sight.
                    let (link, pair) = self.pair_entry(
                        state,
                        rec.requester,
                        rec.transmitter,
                        rec.availability,
                        true,
                    );
                    if let Some(link) = link {
                        setup.links.push(link);
                        setup.pairs.push(pair);
                    }
                }
            }
        }
        setup
    }

    /// Pick the frame's beamwidth profile with the configured strategy.
    fn choose_profile(
        &self,
        cfg: &ExperimentConfig,
        game: &BeamwidthGame,
        game_rng: &mut ChaCha8Rng,
        lll_iters: &mut Vec<Real>,
        lll_converged: &mut Vec<Real>,
    ) -> Result<StrategyProfile> {
        Ok(match self.strategy {
            BeamStrategy::Lll => {
                let out = lll_run(game, &self.lll_opts, game_rng)?;
                lll_iters.push(out.iterations as Real);
                lll_converged.push(if out.converged { 1.0 } else { 0.0 });
                out.profile
            }
            BeamStrategy::Cbws(fixed) => cbws(game, fixed),
            BeamStrategy::Rbws => rbws(game, game_rng),
            BeamStrategy::Exhaustive => {
                game.exhaustive_optimum(cfg.beamwidth.exhaustive_budget)?.0
            }
        })
    }

    /// Evaluate delivery for every link in the frame under sampled fading and
    /// the interference of all concurrent links, then book the segments.
    #[allow(clippy::too_many_arguments)]
    fn deliver(
        &self,
        state: &mut TrialState,
        setup: &FrameSetup,
        game: &BeamwidthGame,
        profile: &StrategyProfile,
        trial: u64,
        frame: u32,
        rows: &mut Vec<LinkRow>,
        delivered_now: &mut BTreeMap<usize, u64>,
    ) -> Result<()> {
        let n = setup.links.len();
        let widths = game.profile_beamwidths(profile);
        let tx_ants: Vec<DirectionalAntenna> = setup
            .links
            .iter()
            .zip(&widths)
            .map(|(l, &w)| DirectionalAntenna::new(w, bearing(l.tx_pos, l.rx_pos)))
            .collect::<Result<_>>()?;
        let rx_ants: Vec<DirectionalAntenna> = setup
            .links
            .iter()
            .zip(&widths)
            .map(|(l, &w)| DirectionalAntenna::new(w, bearing(l.rx_pos, l.tx_pos)))
            .collect::<Result<_>>()?;
        // Fading draws in a fixed order: each link's own coefficient, then one
        // per interfering transmitter, ascending.
        let shape = self.channel.nakagami_shape;
        let mut own = Vec::with_capacity(n);
        let mut cross = vec![vec![0.0; n]; n];
        for l in 0..n {
            own.push(sample_fading(shape, &mut state.fading_rng)?);
            for i in 0..n {
                if i != l {
                    cross[l][i] = sample_fading(shape, &mut state.fading_rng)?;
                }
            }
        }
        let noise = self.channel.noise_power();
        for l in 0..n {
            let link = &setup.links[l];
            let pair = &setup.pairs[l];
            let a = widths[l];
            let d = distance(link.tx_pos, link.rx_pos);
            let stab =
                stability_for(d, a, link.motion, self.timing.misalignment_threshold)?;
            let t_align = alignment_time(link.psi_tx, link.psi_rx, a, a, self.timing.t_pilot)?;
            let gamma = alignment_efficiency(t_align, stab);
            let signal = if link.los {
                self.channel.tx_power
                    * own[l]
                    * tx_ants[l].peak_gain()
                    * rx_ants[l].peak_gain()
                    * self.channel.path_loss(d)?
            } else {
                0.0
            };
            let mut interference = 0.0;
            for i in 0..n {
                if i == l {
                    continue;
                }
                let other = &setup.links[i];
                let d_i = distance(other.tx_pos, link.rx_pos);
                if d_i <= 0.0 || !state.los.is_los(other.tx_node, link.rx_node, d_i) {
                    continue;
                }
                let (_, gain) = classify_interference_gain(
                    other.tx_pos,
                    &tx_ants[i],
                    link.rx_pos,
                    &rx_ants[l],
                );
                interference +=
                    self.channel.tx_power * cross[l][i] * gain * self.channel.path_loss(d_i)?;
            }
            let s = sinr(signal, interference, noise);
            let rate = data_rate(gamma, self.channel.bandwidth, s)?;
            let requested = pair.requested_bits as Real;
            let capacity = delivered_bits(rate, stab, t_align + setup.overhead, requested);
            let req_idx = state.request_of[&pair.requester];
            let remaining = state.requests[req_idx].remaining_segments() as u64;
            let segments = ((capacity / self.seg_bits as Real).floor() as u64)
                .min(pair.availability as u64)
                .min(remaining);
            update_request(&mut state.requests[req_idx], segments as u32);
            if segments > 0 {
                *delivered_now.entry(req_idx).or_insert(0) += segments;
            }
            rows.push(LinkRow {
                trial,
                frame,
                requester: pair.requester,
                transmitter: pair.transmitter,
                distance: d,
                beamwidth: a,
                availability: pair.availability,
                requested_bits: pair.requested_bits,
                outcome: LinkOutcome {
                    rate,
                    normalized_throughput: normalized_throughput(rate, stab, requested),
                    delivered_bits: segments * self.seg_bits,
                    stability_time: stab,
                    alignment_time: t_align,
                    penalty_active: game.penalty_active(l, profile),
                },
            });
        }
        Ok(())
    }

    fn run(&self, cfg: &ExperimentConfig, trial: u64) -> Result<TrialOutput> {
        let mut state = self.build_state(cfg, trial);
        let mut rows = Vec::new();
        let mut active_request_frames = 0u64;
        let mut matched_frames = 0u64;
        let mut lll_iters = Vec::new();
        let mut lll_converged = Vec::new();

        for frame in 0..cfg.run.max_frames {
            let setup = self.frame_setup(cfg, &mut state);
            if setup.active.is_empty() {
                break;
            }
            active_request_frames += setup.active.len() as u64;
            matched_frames += setup.matched;

            let mut delivered_now: BTreeMap<usize, u64> = BTreeMap::new();
            if !setup.links.is_empty() {
                // The game owns its tables, so the context borrow of the LOS
                // field ends here and delivery below sees the same blockage.
                let game = {
                    let gctx = GameContext {
                        channel: &self.channel,
                        timing: &self.timing,
                        los: &state.los,
                        coverage: cfg.association.coverage_m,
                        params: cfg.utility_params(),
                    };
                    BeamwidthGame::new(&setup.links, &gctx)?
                };
                let profile = self.choose_profile(
                    cfg,
                    &game,
                    &mut state.game_rng,
                    &mut lll_iters,
                    &mut lll_converged,
                )?;
                self.deliver(
                    &mut state,
                    &setup,
                    &game,
                    &profile,
                    trial,
                    frame,
                    &mut rows,
                    &mut delivered_now,
                )?;
            }

            for &req_idx in &setup.active {
                let request = &mut state.requests[req_idx];
                if request.status != RequestStatus::Active {
                    continue;
                }
                if delivered_now.contains_key(&req_idx) {
                    request.failures = 0;
                } else {
                    request.failures += 1;
                    if request.failures >= cfg.run.retry_limit {
                        request.status = RequestStatus::Cellular;
                    }
                }
            }
        }

        let demanded_bits: u64 =
            state.requests.iter().map(|r| r.total as u64 * self.seg_bits).sum();
        let d2d_bits: u64 =
            state.requests.iter().map(|r| r.delivered as u64 * self.seg_bits).sum();
        let delivered_segments: u64 =
            state.requests.iter().map(|r| r.delivered as u64).sum();
        let ratios: Vec<Real> =
            rows.iter().filter_map(|r| r.outcome.normalized_throughput).collect();
        let sum_throughput: Real = ratios.iter().sum();
        let mean_throughput =
            if ratios.is_empty() { 0.0 } else { sum_throughput / ratios.len() as Real };
        let mean = |v: &[Real]| -> Real {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<Real>() / v.len() as Real
            }
        };
        let metrics = TrialMetrics {
            trial,
            links: rows.len() as u64,
            active_requests: active_request_frames,
            sum_throughput,
            mean_throughput,
            delivered_segments,
            d2d_bits,
            cellular_bits: demanded_bits - d2d_bits,
            demanded_bits,
            matched_fraction: if active_request_frames == 0 {
                1.0
            } else {
                matched_frames as Real / active_request_frames as Real
            },
            lll_iterations: mean(&lll_iters),
            lll_converged_fraction: if lll_converged.is_empty() {
                1.0
            } else {
                mean(&lll_converged)
            },
        };
        debug_assert!(metrics.conserves_bits());
        Ok(TrialOutput { metrics, links: rows })
    }
}

/// Run a single seeded trial.
pub fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<TrialOutput> {
    TrialRunner::new(cfg)?.run(cfg, trial)
}

/// Build the first frame's beamwidth game for a trial without playing it.
/// `None` when the frame has no matched, alignable pair.
pub fn game_for_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Option<BeamwidthGame>> {
    let runner = TrialRunner::new(cfg)?;
    let mut state = runner.build_state(cfg, trial);
    let setup = runner.frame_setup(cfg, &mut state);
    if setup.links.is_empty() {
        return Ok(None);
    }
    let gctx = GameContext {
        channel: &runner.channel,
        timing: &runner.timing,
        los: &state.los,
        coverage: cfg.association.coverage_m,
        params: cfg.utility_params(),
    };
    BeamwidthGame::new(&setup.links, &gctx).map(Some)
}

fn run_many<T: Send, F: Fn(u64) -> Result<T> + Sync + Send>(
    trials: u64,
    workers: usize,
    f: F,
) -> Result<Vec<T>> {
    let idx: Vec<u64> = (0..trials).collect();
    match workers {
        1 => idx.into_iter().map(f).collect(),
        0 => idx.into_par_iter().map(f).collect(),
        w => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(|| idx.into_par_iter().map(f).collect()),
    }
}

/// Run all configured trials (in parallel unless `run.workers` is 1) and fold
/// them into one named experiment output.
pub fn monte_carlo(cfg: &ExperimentConfig, name: &str) -> Result<RunOutput> {
    let runner = TrialRunner::new(cfg)?;
    let outputs = run_many(cfg.run.trials, cfg.run.workers, |t| runner.run(cfg, t))?;
    let metrics: Vec<TrialMetrics> = outputs.iter().map(|o| o.metrics.clone()).collect();
    let links: Vec<LinkRow> = outputs.into_iter().flat_map(|o| o.links).collect();
    Ok(RunOutput {
        experiment: name.to_string(),
        aggregate: aggregate(&metrics),
        trials: metrics,
        links,
    })
}

/// Re-run the experiment once per value of one dotted config key.
pub fn sweep(base: &toml::Value, param: &str, raw_values: &[String]) -> Result<Vec<RunOutput>> {
    raw_values
        .iter()
        .map(|raw| {
            let cfg =
                crate::config::with_override(base, param, crate::config::parse_scalar(raw))?;
            monte_carlo(&cfg, &format!("{param}={raw}"))
        })
        .collect()
}

/// Cross-product comparison of association algorithms and beamwidth
/// strategies on one scenario. Empty selections fall back to the configured
/// choice; pre-paired link scenarios compare beam strategies only.
pub fn compare(
    cfg: &ExperimentConfig,
    assoc: &[AssocAlgorithm],
    beams: &[BeamStrategy],
) -> Result<Vec<RunOutput>> {
    let links_kind = cfg.scenario.kind == ScenarioKind::Links;
    let assoc_list: Vec<AssocAlgorithm> = if links_kind || assoc.is_empty() {
        vec![cfg.association.algorithm]
    } else {
        assoc.to_vec()
    };
    let beam_list: Vec<BeamStrategy> =
        if beams.is_empty() { vec![cfg.beam_strategy()?] } else { beams.to_vec() };
    let mut outputs = Vec::new();
    for &algorithm in &assoc_list {
        for &beam in &beam_list {
            let mut c = cfg.clone();
            c.association.algorithm = algorithm;
            c.beamwidth.strategy = beam.to_string();
            c.validate()?;
            let name =
                if links_kind { beam.to_string() } else { format!("{algorithm}+{beam}") };
            outputs.push(monte_carlo(&c, &name)?);
        }
    }
    Ok(outputs)
}

/// One trial's learning-vs-exhaustive comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleRow {
    pub trial: u64,
    /// Potential reached by learning.
    pub theta: Real,
    /// Exhaustive optimum of the same game.
    pub theta_star: Real,
    pub iterations: u64,
    pub converged: bool,
    /// Learning reached the optimum (relative tolerance 1e-6).
    pub optimal: bool,
}

/// Learning checked against brute force across all trials.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub optimal_fraction: Real,
    pub converged_fraction: Real,
}

/// For every trial, solve the first frame's game exhaustively and by
/// learning, and report whether learning found the optimum. Trials whose
/// first frame has no game are skipped.
pub fn oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let opts = cfg.lll_options()?;
    let budget = cfg.beamwidth.exhaustive_budget;
    let rows = run_many(cfg.run.trials, cfg.run.workers, |trial| {
        let Some(game) = game_for_trial(cfg, trial)? else {
            return Ok(None);
        };
        let (_, theta_star) = game.exhaustive_optimum(budget)?;
        let mut rng = stream(cfg.run.base_seed, trial, StreamPurpose::Game);
        let out = lll_run(&game, &opts, &mut rng)?;
        let tol = 1e-6 * theta_star.abs().max(1.0);
        Ok(Some(OracleRow {
            trial,
            theta: out.theta,
            theta_star,
            iterations: out.iterations,
            converged: out.converged,
            optimal: (out.theta - theta_star).abs() <= tol,
        }))
    })?;
    let rows: Vec<OracleRow> = rows.into_iter().flatten().collect();
    let n = rows.len().max(1) as Real;
    let optimal_fraction = rows.iter().filter(|r| r.optimal).count() as Real / n;
    let converged_fraction = rows.iter().filter(|r| r.converged).count() as Real / n;
    Ok(OracleReport { rows, optimal_fraction, converged_fraction })
}
