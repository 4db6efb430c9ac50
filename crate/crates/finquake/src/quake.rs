//! The herding-avalanche engine.
//!
//! Traders sit on a network, each holding an information level below a
//! common threshold. A slow external drive raises everyone's level; when an
//! agent reaches the threshold it invests, resets to zero, and passes a
//! fraction `alpha` of its information to its neighbors, OFC-style — split
//! evenly across them — possibly pushing them over in turn. The resulting
//! cascade of identical investments is one financial quake: its signed size
//! is the number of distinct agents involved, positive when their shared
//! prediction matches the day's realized move and negative otherwise.
//!
//! Random traders opt out of the exchange entirely (as if `alpha = 0` for
//! them): they never receive herding shares — those are dissipated — never
//! send any, and bet alone on their own coin flip whenever the drive pushes
//! them over the threshold.
//!
//! Separation of timescales: the drive pauses while an avalanche relaxes,
//! and the financial day index advances once per quake, not per simulation
//! step.

use crate::error::{Error, Result};
use crate::netgen::Network;
use crate::rng::{self, derive_seed, rng_from_seed, SimRng};
use crate::series::IndexSeries;
use crate::strategy::{predict_rnd, predict_rsi, Direction, RsiSpec};
use crate::wealth::{BetOutcome, CapitalLedger};

/// What an agent does when activated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraderKind {
    /// Herding technical trader following the RSI-divergence strategy.
    Rsi,
    /// Random trader: coin-flip bets, no information exchange.
    Rnd,
}

impl TraderKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TraderKind::Rsi => "rsi",
            TraderKind::Rnd => "rnd",
        }
    }
}

/// One agent's dynamic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraderState {
    pub node: u32,
    pub kind: TraderKind,
    /// Information level, in [0, threshold] between quakes.
    pub info: f64,
}

/// Where the random traders sit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Everyone herds.
    None,
    /// A fraction of nodes, chosen uniformly at random, trade randomly.
    UniformFraction(f64),
    /// Nodes with degree above the threshold (the hubs) trade randomly.
    HubsAboveDegree(i64),
}

/// What to do when the financial series runs out of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndPolicy {
    Stop,
    Wrap,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    QuakeTarget,
    StepLimit,
    SeriesEnd,
}

/// Simulation parameters.
#[derive(Debug, Clone)]
pub struct QuakeConfig {
    /// Fraction of a toppling agent's information passed to its neighbors;
    /// the conservative case 1.0 is rejected (termination would be unbounded).
    pub alpha: f64,
    /// Activation threshold I_th.
    pub info_threshold: f64,
    pub placement: Placement,
    /// Strategy of the herding traders.
    pub rsi: RsiSpec,
    /// Stop after this many quakes.
    pub max_quakes: Option<usize>,
    /// Safety valve: stop after this many drive steps.
    pub max_steps: Option<u64>,
    pub end_policy: EndPolicy,
    pub seed: u64,
    /// Record per-bet stakes in the capital ledger.
    pub record_stakes: bool,
    /// Quake ordinals whose post-relaxation information field to capture.
    pub snapshot_quakes: Vec<usize>,
}

impl Default for QuakeConfig {
    fn default() -> Self {
        QuakeConfig {
            alpha: 0.84,
            info_threshold: 1.0,
            placement: Placement::None,
            rsi: RsiSpec::default(),
            max_quakes: Some(3000),
            max_steps: None,
            end_policy: EndPolicy::Wrap,
            seed: 42,
            record_stakes: false,
            snapshot_quakes: Vec::new(),
        }
    }
}

impl QuakeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "alpha must lie in [0, 1); got {} (the conservative regime is not supported)",
                self.alpha
            )));
        }
        if !(self.info_threshold.is_finite() && self.info_threshold > 0.0) {
            return Err(Error::invalid(format!(
                "information threshold must be positive, got {}",
                self.info_threshold
            )));
        }
        if let Placement::UniformFraction(p) = self.placement {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "random-trader fraction must lie in [0,1], got {p}"
                )));
            }
        }
        if self.max_quakes.is_none() && self.max_steps.is_none() {
            return Err(Error::invalid("no stopping bound: set max_quakes or max_steps"));
        }
        self.rsi.validate()?;
        Ok(())
    }
}

impl RsiSpec {
    fn validate(&self) -> Result<()> {
        RsiSpec::new(self.period, self.trend_window).map(|_| ())
    }
}

/// One relaxed avalanche, before it is scored against the market.
#[derive(Debug, Clone, PartialEq)]
pub struct Avalanche {
    /// Distinct herding agents that toppled, in first-topple order.
    pub members: Vec<u32>,
    /// Total topple events (an agent may topple more than once).
    pub topples: u64,
    /// Information removed from topplers.
    pub info_removed: f64,
    /// Information delivered to herding neighbors.
    pub info_delivered: f64,
    /// Information lost: the (1 - alpha) share plus everything addressed to
    /// random traders.
    pub info_dissipated: f64,
    /// Total system information when the avalanche started.
    pub info_at_start: f64,
}

/// One scored financial quake.
#[derive(Debug, Clone, PartialEq)]
pub struct QuakeRecord {
    pub ordinal: usize,
    /// Financial day the shared bet was placed on.
    pub day: usize,
    pub prediction: Direction,
    pub members: Vec<u32>,
    /// +members on a correct collective prediction, -members otherwise.
    pub signed_size: i64,
    pub topples: u64,
    pub info_removed: f64,
    pub info_delivered: f64,
    pub info_dissipated: f64,
    pub info_at_start: f64,
}

impl QuakeRecord {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn won(&self) -> bool {
        self.signed_size > 0
    }
}

/// Give every agent an independent uniform information level in
/// (0, threshold).
pub fn init_information(traders: &mut [TraderState], threshold: f64, rng: &mut SimRng) {
    for trader in traders.iter_mut() {
        trader.info = threshold * rng::uniform_open_01(rng);
    }
}

/// One external-drive step: every agent gains an independent uniform amount
/// in [0, threshold - max_i I_i], so nobody can leap past the threshold. The
/// ceiling shrinks as the leader approaches the threshold; activation happens
/// when the leader finally reaches it.
pub fn drive(traders: &mut [TraderState], threshold: f64, rng: &mut SimRng) {
    let info_max = traders.iter().map(|t| t.info).fold(f64::NEG_INFINITY, f64::max);
    let width = (threshold - info_max).max(0.0);
    for trader in traders.iter_mut() {
        trader.info += rng::uniform_to(rng, width);
    }
}

/// Relax one avalanche seeded by `initiators` (herding agents at or above the
/// threshold). FIFO order; every topple zeroes the agent and hands
/// `alpha / degree` of its information to each neighbor, with random traders'
/// shares dissipated. Returns the member set and the information ledger.
pub fn propagate_avalanche(
    traders: &mut [TraderState],
    net: &Network,
    alpha: f64,
    threshold: f64,
    initiators: &[u32],
) -> Result<Avalanche> {
    if initiators.is_empty() {
        return Err(Error::invalid("avalanche needs at least one active agent"));
    }
    for &id in initiators {
        let trader = &traders[id as usize];
        if trader.kind != TraderKind::Rsi {
            return Err(Error::invalid(format!("initiator {id} is not a herding trader")));
        }
        if trader.info < threshold {
            return Err(Error::invalid(format!(
                "initiator {id} is below the threshold ({} < {threshold})",
                trader.info
            )));
        }
    }

    let info_at_start: f64 = traders.iter().map(|t| t.info).sum();
    let mut queue = std::collections::VecDeque::new();
    let mut in_queue = vec![false; traders.len()];
    let mut is_member = vec![false; traders.len()];
    let mut members = Vec::new();
    let mut topples = 0u64;
    let mut removed = 0.0;
    let mut delivered = 0.0;
    let mut dissipated = 0.0;

    for &id in initiators {
        if !in_queue[id as usize] {
            in_queue[id as usize] = true;
            queue.push_back(id);
        }
    }

    while let Some(k) = queue.pop_front() {
        in_queue[k as usize] = false;
        let info_k = traders[k as usize].info;
        debug_assert!(info_k >= threshold);
        traders[k as usize].info = 0.0;
        removed += info_k;
        topples += 1;
        if !is_member[k as usize] {
            is_member[k as usize] = true;
            members.push(k);
        }

        let degree = net.degree(k);
        if degree == 0 {
            dissipated += info_k;
            continue;
        }
        dissipated += (1.0 - alpha) * info_k;
        let share = alpha * info_k / degree as f64;
        for &nn in net.neighbors(k) {
            let neighbor = &mut traders[nn as usize];
            match neighbor.kind {
                TraderKind::Rnd => dissipated += share,
                TraderKind::Rsi => {
                    neighbor.info += share;
                    delivered += share;
                    if neighbor.info >= threshold && !in_queue[nn as usize] {
                        in_queue[nn as usize] = true;
                        queue.push_back(nn);
                    }
                }
            }
        }
    }

    Ok(Avalanche {
        members,
        topples,
        info_removed: removed,
        info_delivered: delivered,
        info_dissipated: dissipated,
        info_at_start,
    })
}

/// Score a relaxed avalanche against the market: the quake is a bubble
/// (positive size) when the shared prediction matches the sign of
/// `F[day] - F[day-1]`, a crash otherwise; a flat day counts as a loss.
pub fn resolve_quake(
    avalanche: Avalanche,
    prediction: Direction,
    series: &IndexSeries,
    day: usize,
    ordinal: usize,
) -> Result<QuakeRecord> {
    if day == 0 || day >= series.len() {
        return Err(Error::invalid(format!(
            "quake day {day} outside the scoreable range [1, {})",
            series.len()
        )));
    }
    if avalanche.members.is_empty() {
        return Err(Error::invalid("quake with no members"));
    }
    let f = series.values();
    let diff = f[day] - f[day - 1];
    let won = match prediction {
        Direction::Up => diff > 0.0,
        Direction::Down => diff < 0.0,
    };
    let size = avalanche.members.len() as i64;
    Ok(QuakeRecord {
        ordinal,
        day,
        prediction,
        members: avalanche.members,
        signed_size: if won { size } else { -size },
        topples: avalanche.topples,
        info_removed: avalanche.info_removed,
        info_delivered: avalanche.info_delivered,
        info_dissipated: avalanche.info_dissipated,
        info_at_start: avalanche.info_at_start,
    })
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub quakes: Vec<QuakeRecord>,
    pub traders: Vec<TraderState>,
    pub ledger: CapitalLedger,
    /// Drive steps consumed.
    pub steps: u64,
    /// Individual bets settled by random traders.
    pub rnd_bets: u64,
    /// Post-relaxation information fields for the requested quake ordinals.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub stopped: StopReason,
}

impl SimulationOutput {
    /// Per-agent mask of random traders, for wealth summaries.
    pub fn random_mask(&self) -> Vec<bool> {
        self.traders.iter().map(|t| t.kind == TraderKind::Rnd).collect()
    }

    /// Absolute quake sizes as floats, for distribution fitting.
    pub fn abs_sizes(&self) -> Vec<f64> {
        self.quakes.iter().map(|q| q.size() as f64).collect()
    }
}

/// Assign trader kinds per the placement rule.
fn assign_kinds(net: &Network, placement: Placement, seed: u64) -> Result<Vec<TraderKind>> {
    let n = net.node_count();
    let mut kinds = vec![TraderKind::Rsi; n];
    match placement {
        Placement::None => {}
        Placement::UniformFraction(p) => {
            let count = (p * n as f64).round() as usize;
            let mut ids: Vec<u32> = (0..n as u32).collect();
            let mut rng = rng_from_seed(derive_seed(seed, rng::stream::PLACEMENT));
            // partial Fisher-Yates: the first `count` entries become random traders
            for i in 0..count.min(n) {
                let j = i + (rng.next_u64() as usize) % (n - i);
                ids.swap(i, j);
                kinds[ids[i] as usize] = TraderKind::Rnd;
            }
        }
        Placement::HubsAboveDegree(k_min) => {
            for hub in crate::netgen::hubs(net, k_min) {
                kinds[hub as usize] = TraderKind::Rnd;
            }
        }
    }
    Ok(kinds)
}

use rand::RngCore;

/// Run the full drive/avalanche/settlement loop.
pub fn run_simulation(net: &Network, series: &IndexSeries, cfg: &QuakeConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let warmup = cfg.rsi.warmup();
    if series.len() < warmup + 2 {
        return Err(Error::insufficient(format!(
            "series of {} days cannot cover the {warmup}-day strategy warm-up plus a scored day",
            series.len()
        )));
    }
    let n = net.node_count();
    if n == 0 {
        return Err(Error::invalid("empty network"));
    }

    let kinds = assign_kinds(net, cfg.placement, cfg.seed)?;
    let herding_exists = kinds.iter().any(|&k| k == TraderKind::Rsi);
    if !herding_exists && cfg.max_quakes.is_some() && cfg.max_steps.is_none() {
        return Err(Error::invalid(
            "no herding traders: a quake target alone can never be reached; set max_steps",
        ));
    }

    let mut traders: Vec<TraderState> = kinds
        .iter()
        .enumerate()
        .map(|(id, &kind)| TraderState {
            node: id as u32,
            kind,
            info: 0.0,
        })
        .collect();

    let mut rng = rng_from_seed(derive_seed(cfg.seed, rng::stream::DYNAMICS));
    init_information(&mut traders, cfg.info_threshold, &mut rng);

    let mut ledger = if cfg.record_stakes {
        CapitalLedger::with_stake_history(n)
    } else {
        CapitalLedger::new(n)
    };

    let mut quakes: Vec<QuakeRecord> = Vec::new();
    let mut snapshots = Vec::new();
    let mut steps = 0u64;
    let mut rnd_bets = 0u64;
    let mut day = warmup; // advanced at the start of every quake
    let f = series.values();

    let stopped = 'sim: loop {
        if let Some(max_quakes) = cfg.max_quakes {
            if quakes.len() >= max_quakes {
                break StopReason::QuakeTarget;
            }
        }
        if let Some(max_steps) = cfg.max_steps {
            if steps >= max_steps {
                break StopReason::StepLimit;
            }
        }

        drive(&mut traders, cfg.info_threshold, &mut rng);
        steps += 1;

        let active: Vec<u32> = traders
            .iter()
            .filter(|t| t.info >= cfg.info_threshold)
            .map(|t| t.node)
            .collect();
        if active.is_empty() {
            continue;
        }
        let (herding_active, rnd_active): (Vec<u32>, Vec<u32>) = active
            .into_iter()
            .partition(|&id| traders[id as usize].kind == TraderKind::Rsi);

        if !herding_active.is_empty() {
            day += 1;
            if day >= series.len() {
                match cfg.end_policy {
                    EndPolicy::Stop => break 'sim StopReason::SeriesEnd,
                    EndPolicy::Wrap => day = warmup + 1,
                }
            }
            // all initiators share the single RSI prediction, anchored on the
            // previous day so only known history enters it
            let prediction = predict_rsi(series, day - 1, &cfg.rsi)?;
            let avalanche = propagate_avalanche(
                &mut traders,
                net,
                cfg.alpha,
                cfg.info_threshold,
                &herding_active,
            )?;
            let ordinal = quakes.len();
            let record = resolve_quake(avalanche, prediction, series, day, ordinal)?;
            let outcome = if record.won() { BetOutcome::Won } else { BetOutcome::Lost };
            for &member in &record.members {
                ledger.settle(member, outcome);
            }
            if cfg.snapshot_quakes.contains(&ordinal) {
                snapshots.push((ordinal, traders.iter().map(|t| t.info).collect()));
            }
            quakes.push(record);
        }

        // random traders bet alone on the current day and reset, mirroring
        // the toppling reset so the drive can reach them again
        for id in rnd_active {
            let prediction = predict_rnd(&mut rng);
            let diff = f[day] - f[day - 1];
            let won = match prediction {
                Direction::Up => diff > 0.0,
                Direction::Down => diff < 0.0,
            };
            ledger.settle(id, if won { BetOutcome::Won } else { BetOutcome::Lost });
            traders[id as usize].info = 0.0;
            rnd_bets += 1;
        }
    };

    Ok(SimulationOutput {
        quakes,
        traders,
        ledger,
        steps,
        rnd_bets,
        snapshots,
        stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{build_small_world, Network, Topology};
    use crate::series::{synth_series, SynthModel};

    fn star_network() -> Network {
        Network::from_edges(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)], Topology::Custom, 0).unwrap()
    }

    fn traders_with_info(kinds: &[TraderKind], info: &[f64]) -> Vec<TraderState> {
        kinds
            .iter()
            .zip(info)
            .enumerate()
            .map(|(id, (&kind, &info))| TraderState {
                node: id as u32,
                kind,
                info,
            })
            .collect()
    }

    fn test_series(days: usize, seed: u64) -> crate::series::IndexSeries {
        synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, days, 1000.0, seed, "gbm").unwrap()
    }

    #[test]
    fn init_information_range_and_mean() {
        let mut traders = traders_with_info(&[TraderKind::Rsi; 1600], &[0.0; 1600]);
        let mut rng = rng_from_seed(5);
        init_information(&mut traders, 1.0, &mut rng);
        let mut sum = 0.0;
        for t in &traders {
            assert!(t.info > 0.0 && t.info < 1.0);
            sum += t.info;
        }
        let mean = sum / 1600.0;
        assert!((mean - 0.5).abs() < 0.03, "mean initial info {mean}");
    }

    #[test]
    fn init_information_is_deterministic() {
        let run = |seed| {
            let mut traders = traders_with_info(&[TraderKind::Rsi; 100], &[0.0; 100]);
            let mut rng = rng_from_seed(seed);
            init_information(&mut traders, 1.0, &mut rng);
            traders.iter().map(|t| t.info).collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn drive_at_ceiling_changes_nothing() {
        let mut traders = traders_with_info(&[TraderKind::Rsi; 4], &[1.0, 0.3, 0.6, 0.9]);
        let before: Vec<f64> = traders.iter().map(|t| t.info).collect();
        let mut rng = rng_from_seed(1);
        drive(&mut traders, 1.0, &mut rng);
        let after: Vec<f64> = traders.iter().map(|t| t.info).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn drive_bounds_new_maximum() {
        let mut rng = rng_from_seed(2);
        let mut traders = traders_with_info(&[TraderKind::Rsi; 50], &[0.0; 50]);
        init_information(&mut traders, 1.0, &mut rng);
        for _ in 0..200 {
            let old_max = traders.iter().map(|t| t.info).fold(f64::NEG_INFINITY, f64::max);
            drive(&mut traders, 1.0, &mut rng);
            let new_max = traders.iter().map(|t| t.info).fold(f64::NEG_INFINITY, f64::max);
            assert!(new_max <= 2.0 * 1.0 - old_max + 1e-15);
            assert!(new_max >= old_max);
        }
    }

    #[test]
    fn repeated_driving_activates_within_bounded_steps() {
        for seed in 0..20u64 {
            let mut traders = traders_with_info(&[TraderKind::Rsi; 1600], &[0.0; 1600]);
            let mut rng = rng_from_seed(seed);
            init_information(&mut traders, 1.0, &mut rng);
            let mut steps = 0u64;
            while traders.iter().all(|t| t.info < 1.0) {
                drive(&mut traders, 1.0, &mut rng);
                steps += 1;
                assert!(steps < 100_000, "seed {seed}: no activation after {steps} steps");
            }
        }
    }

    #[test]
    fn avalanche_hand_trace_on_star() {
        // hub topples at 1.0 with alpha 0.84 over 4 neighbors: each gains
        // 0.21; the one at 0.90 reaches 1.11 and topples too
        let net = star_network();
        let mut traders = traders_with_info(
            &[TraderKind::Rsi; 5],
            &[1.0, 0.90, 0.10, 0.10, 0.10],
        );
        let avalanche = propagate_avalanche(&mut traders, &net, 0.84, 1.0, &[0]).unwrap();
        assert_eq!(avalanche.members, vec![0, 1]);
        assert_eq!(avalanche.topples, 2);
        assert!((traders[2].info - 0.31).abs() < 1e-12);
        // the second toppler hands 0.84 * 1.11 back to the quiet hub
        assert!((traders[0].info - 0.84 * 1.11).abs() < 1e-12);
        assert_eq!(traders[1].info, 0.0);
        // ledger: removed = delivered + dissipated
        let gap = avalanche.info_removed - avalanche.info_delivered - avalanche.info_dissipated;
        assert!(gap.abs() < 1e-12, "ledger gap {gap}");
        assert!((avalanche.info_removed - 2.11).abs() < 1e-12);
    }

    #[test]
    fn avalanche_with_alpha_zero_is_isolated() {
        let net = star_network();
        let mut traders = traders_with_info(&[TraderKind::Rsi; 5], &[1.0, 0.99, 0.99, 0.99, 0.99]);
        let avalanche = propagate_avalanche(&mut traders, &net, 0.0, 1.0, &[0]).unwrap();
        assert_eq!(avalanche.members, vec![0]);
        assert_eq!(avalanche.info_delivered, 0.0);
        assert!((avalanche.info_dissipated - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_neighbors_never_join_or_receive() {
        let net = star_network();
        let kinds = [
            TraderKind::Rsi,
            TraderKind::Rnd,
            TraderKind::Rnd,
            TraderKind::Rnd,
            TraderKind::Rnd,
        ];
        let mut traders = traders_with_info(&kinds, &[1.0, 0.999, 0.999, 0.999, 0.999]);
        let avalanche = propagate_avalanche(&mut traders, &net, 0.84, 1.0, &[0]).unwrap();
        assert_eq!(avalanche.members, vec![0]);
        assert_eq!(avalanche.info_delivered, 0.0);
        // everything the hub removed was dissipated
        assert!((avalanche.info_dissipated - 1.0).abs() < 1e-12);
        for t in &traders[1..] {
            assert_eq!(t.info, 0.999);
        }
    }

    #[test]
    fn avalanche_rejects_bad_initiators() {
        let net = star_network();
        let mut traders = traders_with_info(&[TraderKind::Rsi; 5], &[0.5; 5]);
        assert!(propagate_avalanche(&mut traders, &net, 0.84, 1.0, &[]).is_err());
        assert!(propagate_avalanche(&mut traders, &net, 0.84, 1.0, &[0]).is_err());
        let mut traders = traders_with_info(
            &[TraderKind::Rnd, TraderKind::Rsi, TraderKind::Rsi, TraderKind::Rsi, TraderKind::Rsi],
            &[1.0, 0.5, 0.5, 0.5, 0.5],
        );
        assert!(propagate_avalanche(&mut traders, &net, 0.84, 1.0, &[0]).is_err());
    }

    #[test]
    fn resolve_signs_and_flat_day() {
        let series = crate::series::IndexSeries::new(vec![100.0, 101.0, 101.0, 99.0], None, "x").unwrap();
        let avalanche = || Avalanche {
            members: (0..12).collect(),
            topples: 12,
            info_removed: 12.0,
            info_delivered: 10.0,
            info_dissipated: 2.0,
            info_at_start: 800.0,
        };
        // day 1: rise; up prediction wins
        let up = resolve_quake(avalanche(), Direction::Up, &series, 1, 0).unwrap();
        assert_eq!(up.signed_size, 12);
        // mirror: up prediction against a fall
        let down_day = resolve_quake(avalanche(), Direction::Up, &series, 3, 1).unwrap();
        assert_eq!(down_day.signed_size, -12);
        // flat day defeats both directions
        let flat_up = resolve_quake(avalanche(), Direction::Up, &series, 2, 2).unwrap();
        let flat_down = resolve_quake(avalanche(), Direction::Down, &series, 2, 3).unwrap();
        assert_eq!(flat_up.signed_size, -12);
        assert_eq!(flat_down.signed_size, -12);
        // out-of-range days
        assert!(resolve_quake(avalanche(), Direction::Up, &series, 0, 4).is_err());
        assert!(resolve_quake(avalanche(), Direction::Up, &series, 4, 5).is_err());
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let net = build_small_world(10, 0.02, 7).unwrap();
        let series = test_series(400, 3);
        let cfg = QuakeConfig {
            max_quakes: Some(150),
            max_steps: Some(2_000_000),
            seed: 11,
            ..QuakeConfig::default()
        };
        let a = run_simulation(&net, &series, &cfg).unwrap();
        let b = run_simulation(&net, &series, &cfg).unwrap();
        assert_eq!(a.quakes, b.quakes);
        assert_eq!(a.steps, b.steps);
        let cfg2 = QuakeConfig { seed: 12, ..cfg };
        let c = run_simulation(&net, &series, &cfg2).unwrap();
        assert_ne!(a.quakes, c.quakes);
    }

    #[test]
    fn simulation_reaches_quake_target_and_keeps_invariants() {
        let net = build_small_world(10, 0.02, 1).unwrap();
        let series = test_series(600, 5);
        let cfg = QuakeConfig {
            max_quakes: Some(500),
            max_steps: Some(5_000_000),
            seed: 3,
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        assert_eq!(out.stopped, StopReason::QuakeTarget);
        assert_eq!(out.quakes.len(), 500);
        // between quakes every agent sits below the threshold
        assert!(out.traders.iter().all(|t| t.info < 1.0));
        for q in &out.quakes {
            assert_eq!(q.size() as i64, q.signed_size.abs());
            assert!(q.size() >= 1);
            // conservation, relative to the information moved
            let gap = q.info_removed - q.info_delivered - q.info_dissipated;
            assert!(
                gap.abs() <= 1e-12 * q.info_removed.max(1.0),
                "ordinal {}: ledger gap {gap}",
                q.ordinal
            );
            // dissipation bound on topple count
            let bound = q.info_at_start / ((1.0 - 0.84) * 1.0);
            assert!((q.topples as f64) <= bound, "ordinal {}", q.ordinal);
            // day advances once per quake and stays scoreable
            assert!(q.day >= 29 && q.day < series.len());
        }
        // consecutive days advance by one (no wrap in this short run)
        for w in out.quakes.windows(2) {
            assert_eq!(w[1].day, w[0].day + 1);
        }
    }

    #[test]
    fn random_traders_bet_alone_and_stay_out_of_quakes() {
        let net = build_small_world(10, 0.02, 2).unwrap();
        let series = test_series(600, 6);
        let cfg = QuakeConfig {
            placement: Placement::UniformFraction(0.3),
            max_quakes: Some(400),
            max_steps: Some(5_000_000),
            seed: 8,
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        let mask = out.random_mask();
        assert_eq!(mask.iter().filter(|&&r| r).count(), 30);
        for q in &out.quakes {
            for &m in &q.members {
                assert!(!mask[m as usize], "random trader {m} inside quake {}", q.ordinal);
            }
        }
        assert!(out.rnd_bets > 0, "random traders never bet");
        // their capital moved, so they really settled bets
        let moved = out
            .ledger
            .accounts()
            .iter()
            .zip(&mask)
            .filter(|(a, &r)| r && a.bets > 0)
            .count();
        assert!(moved > 0);
    }

    #[test]
    fn hub_placement_marks_the_hubs() {
        let net = crate::netgen::build_scale_free(400, 2, 5).unwrap();
        let series = test_series(200, 7);
        let cfg = QuakeConfig {
            alpha: 0.95,
            placement: Placement::HubsAboveDegree(20),
            max_quakes: Some(50),
            max_steps: Some(2_000_000),
            seed: 2,
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        let hubs = crate::netgen::hubs(&net, 20);
        let mask = out.random_mask();
        for hub in &hubs {
            assert!(mask[*hub as usize]);
        }
        assert_eq!(mask.iter().filter(|&&r| r).count(), hubs.len());
    }

    #[test]
    fn wrap_policy_reuses_series_days() {
        let net = build_small_world(8, 0.02, 3).unwrap();
        let series = test_series(40, 9); // warmup 28: only days 29..39 scored
        let cfg = QuakeConfig {
            max_quakes: Some(60),
            max_steps: Some(10_000_000),
            end_policy: EndPolicy::Wrap,
            seed: 5,
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        assert_eq!(out.quakes.len(), 60);
        assert!(out.quakes.iter().all(|q| q.day >= 29 && q.day <= 39));

        let cfg_stop = QuakeConfig {
            end_policy: EndPolicy::Stop,
            ..cfg
        };
        let out = run_simulation(&net, &series, &cfg_stop).unwrap();
        assert_eq!(out.stopped, StopReason::SeriesEnd);
        assert!(out.quakes.len() <= 11);
    }

    #[test]
    fn snapshots_capture_requested_ordinals() {
        let net = build_small_world(6, 0.02, 4).unwrap();
        let series = test_series(300, 10);
        let cfg = QuakeConfig {
            max_quakes: Some(20),
            max_steps: Some(1_000_000),
            snapshot_quakes: vec![0, 5],
            seed: 1,
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        assert_eq!(out.snapshots[0].0, 0);
        assert_eq!(out.snapshots[1].0, 5);
        assert_eq!(out.snapshots[0].1.len(), 36);
        // members of the snapshotted quake were zeroed unless refilled later
        // in the same avalanche; the field is always below threshold
        assert!(out.snapshots[0].1.iter().all(|&i| i < 1.0));
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let ok = QuakeConfig::default();
        assert!(ok.validate().is_ok());
        assert!(QuakeConfig { alpha: 1.0, ..ok.clone() }.validate().is_err());
        assert!(QuakeConfig { alpha: -0.1, ..ok.clone() }.validate().is_err());
        assert!(QuakeConfig { info_threshold: 0.0, ..ok.clone() }.validate().is_err());
        assert!(QuakeConfig {
            placement: Placement::UniformFraction(1.5),
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(QuakeConfig {
            max_quakes: None,
            max_steps: None,
            ..ok.clone()
        }
        .validate()
        .is_err());
        // all-random network with a quake target alone can never finish
        let net = build_small_world(4, 0.0, 0).unwrap();
        let series = test_series(100, 0);
        let cfg = QuakeConfig {
            placement: Placement::UniformFraction(1.0),
            max_quakes: Some(10),
            max_steps: None,
            ..ok
        };
        assert!(run_simulation(&net, &series, &cfg).is_err());
    }

    #[test]
    fn short_series_is_rejected() {
        let net = build_small_world(4, 0.0, 0).unwrap();
        let series = test_series(29, 0); // warmup 28 + 1 < 28 + 2
        let cfg = QuakeConfig::default();
        assert!(run_simulation(&net, &series, &cfg).is_err());
    }
}
