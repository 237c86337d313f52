//! Sequential Chinese restaurant process generator and trajectory trackers.
//!
//! Element `n` either opens a new block with probability `theta / (theta + n - 1)`
//! or joins the block of a uniformly chosen earlier element. The trackers
//! extract, from a single pass:
//!
//! * block atoms `(k_1, ..., k_N, m)` — the first `N` elements of a block and
//!   the step `m` at which it reached size `N + 1` — for every `N <= n_max`;
//! * snapshots of the small-block counts `C_1, ..., C_{n_max}`;
//! * the first-singleton value `M_step = min{l <= step : {l} is a block}`.
//!
//! Two engines are provided. [`PartitionState`] keeps the full partition and
//! is the reference implementation; [`run`] uses a compact state that retains
//! only blocks of size `<= n_max + 1` (larger blocks can never produce another
//! atom) and runs in O(1) expected time and O(log n) expected memory per
//! trajectory. Both consume the RNG stream identically, so they are
//! cross-checked for exact equality in the tests.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intensity::ConeWindow;
use crate::special::ln_gamma;

/// Hard cap on the tracked block size; the limiting intensity decays like
/// `N! / y^{N+1}`, so larger `N` produce essentially no atoms at desk scale.
pub const MAX_TRACKED_N: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum CrpError {
    #[error("theta must be strictly positive, got {0}")]
    NonPositiveTheta(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("n_max must lie in 1..={MAX_TRACKED_N}, got {0}")]
    BadNMax(u32),
    #[error("snapshot step {0} exceeds horizon {1}")]
    SnapshotBeyondHorizon(u64, u64),
    #[error("draw step {draw} does not match state step {expected} (trajectory desync)")]
    StepMismatch { draw: u64, expected: u64 },
    #[error("join target {target} out of range at step {step}")]
    BadJoinTarget { target: u64, step: u64 },
    #[error("horizon {0} too large to store a full permutation")]
    HorizonTooLarge(u64),
}

/// Parameters of a single CRP trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrpParams {
    pub theta: f64,
    pub seed: u64,
    pub horizon: u64,
}

impl CrpParams {
    pub fn new(theta: f64, seed: u64, horizon: u64) -> Result<Self, CrpError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(CrpError::NonPositiveTheta(theta));
        }
        if horizon == 0 {
            return Err(CrpError::ZeroHorizon);
        }
        Ok(Self { theta, seed, horizon })
    }
}

/// Target of one insertion draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertTarget {
    NewBlock,
    JoinElement(u64),
}

/// One step of the insertion sequence: element `step` and where it goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertionDraw {
    pub step: u64,
    pub target: InsertTarget,
}

impl InsertionDraw {
    /// Sample the insertion target for element `step`: a new block with
    /// probability `theta / (theta + step - 1)`, otherwise a uniform earlier
    /// element. Consumes exactly one `f64` from the stream.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, theta: f64, step: u64) -> Self {
        let total = theta + (step - 1) as f64;
        let u = rng.random::<f64>() * total;
        let target = if u < theta || step == 1 {
            InsertTarget::NewBlock
        } else {
            let k = ((u - theta) as u64 + 1).min(step - 1);
            InsertTarget::JoinElement(k)
        };
        InsertionDraw { step, target }
    }
}

/// A block's first `N` elements and the step at which it reached size `N + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAtom {
    pub k: Vec<u64>,
    pub m: u64,
}

impl BlockAtom {
    pub fn n(&self) -> usize {
        self.k.len()
    }

    fn assert_ordered(&self) {
        debug_assert!(
            self.k.windows(2).all(|w| w[0] < w[1]) && self.k.last().is_some_and(|&l| l < self.m),
            "atom must satisfy k_1 < ... < k_N < m: {self:?}"
        );
    }
}

/// Full-fidelity partition state; the reference engine.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionState {
    pub n: u64,
    /// Block id of each element, indexed by element - 1.
    pub element_block: Vec<u32>,
    /// Cardinality of each block, indexed by block id.
    pub block_sizes: Vec<u64>,
    /// Ascending member lists, retained only while the size is <= n_max + 1.
    pub small_block_members: HashMap<u32, Vec<u64>>,
    /// size_counts[k] = number of blocks of size k, for k in 1..=n_max;
    /// size_counts[n_max + 1] is the overflow bucket (blocks larger than n_max).
    pub size_counts: Vec<u64>,
    pub n_max: u32,
}

impl PartitionState {
    pub fn new(n_max: u32) -> Result<Self, CrpError> {
        if n_max == 0 || n_max > MAX_TRACKED_N {
            return Err(CrpError::BadNMax(n_max));
        }
        Ok(Self {
            n: 0,
            element_block: Vec::new(),
            block_sizes: Vec::new(),
            small_block_members: HashMap::new(),
            size_counts: vec![0; n_max as usize + 2],
            n_max,
        })
    }

    /// Apply one insertion. Deterministic given `(state, draw)`.
    pub fn step(&mut self, draw: InsertionDraw) -> Result<(), CrpError> {
        if draw.step != self.n + 1 {
            return Err(CrpError::StepMismatch { draw: draw.step, expected: self.n + 1 });
        }
        let m = draw.step;
        match draw.target {
            InsertTarget::NewBlock => {
                let id = self.block_sizes.len() as u32;
                self.block_sizes.push(1);
                self.element_block.push(id);
                self.small_block_members.insert(id, vec![m]);
                self.size_counts[1] += 1;
            }
            InsertTarget::JoinElement(k) => {
                if k == 0 || k > self.n {
                    return Err(CrpError::BadJoinTarget { target: k, step: m });
                }
                let id = self.element_block[(k - 1) as usize];
                let s = self.block_sizes[id as usize];
                self.block_sizes[id as usize] = s + 1;
                self.element_block.push(id);
                self.dec_count(s);
                self.inc_count(s + 1);
                if s + 1 <= self.n_max as u64 + 1 {
                    self.small_block_members
                        .get_mut(&id)
                        .expect("small block must have a member list")
                        .push(m);
                } else {
                    self.small_block_members.remove(&id);
                }
            }
        }
        self.n = m;
        Ok(())
    }

    fn dec_count(&mut self, size: u64) {
        let idx = (size as usize).min(self.n_max as usize + 1);
        self.size_counts[idx] -= 1;
    }

    fn inc_count(&mut self, size: u64) {
        let idx = (size as usize).min(self.n_max as usize + 1);
        self.size_counts[idx] += 1;
    }

    /// Blocks as sorted element lists, sorted by least element.
    pub fn blocks(&self) -> Vec<Vec<u64>> {
        let mut by_id: HashMap<u32, Vec<u64>> = HashMap::new();
        for (i, &id) in self.element_block.iter().enumerate() {
            by_id.entry(id).or_default().push(i as u64 + 1);
        }
        let mut blocks: Vec<Vec<u64>> = by_id.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        blocks
    }

    /// Recompute size counts from scratch; used by the audit tests.
    pub fn recount_sizes(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_max as usize + 2];
        for b in self.blocks() {
            let idx = b.len().min(self.n_max as usize + 1);
            counts[idx] += 1;
        }
        counts
    }
}

/// Which observables [`run`] should record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Track blocks up to size n_max + 1; atoms recorded for N = 1..=n_max.
    pub n_max: u32,
    /// Steps (ascending) at which to snapshot block counts and M.
    pub snapshot_steps: Vec<u64>,
    pub track_atoms: bool,
    pub track_first_singleton: bool,
}

impl TrackerConfig {
    pub fn atoms_only(n_max: u32) -> Self {
        Self { n_max, snapshot_steps: Vec::new(), track_atoms: true, track_first_singleton: false }
    }

    fn validate(&self, horizon: u64) -> Result<(), CrpError> {
        if self.n_max == 0 || self.n_max > MAX_TRACKED_N {
            return Err(CrpError::BadNMax(self.n_max));
        }
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > horizon) {
            return Err(CrpError::SnapshotBeyondHorizon(s, horizon));
        }
        Ok(())
    }
}

/// One block-count snapshot: counts[i] = C_{i+1} at `step`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSnapshot {
    pub step: u64,
    pub counts: Vec<u64>,
}

/// Everything a single trajectory produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryObservables {
    /// atoms_by_n[N - 1] holds the atoms for tracked size N.
    pub atoms_by_n: Vec<Vec<BlockAtom>>,
    pub count_snapshots: Vec<CountSnapshot>,
    /// (step, M_step); M_step = step + 1 encodes "no singleton".
    pub first_singleton_path: Vec<(u64, u64)>,
}

impl TrajectoryObservables {
    pub fn atoms(&self, n: u32) -> &[BlockAtom] {
        &self.atoms_by_n[n as usize - 1]
    }
}

// Compact engine: only blocks of size <= n_max + 1 are materialized. The
// expected number of tracked elements is about theta * (n_max + 1), so the
// join-target lookup is a short linear scan.
struct CompactBlock {
    members: Vec<u64>,
}

struct CompactState {
    theta: f64,
    n_max: u64,
    track_atoms: bool,
    tracked: Vec<(u64, u32)>, // (element, block slot)
    blocks: Vec<CompactBlock>,
    free: Vec<u32>,
    size_counts: Vec<u64>, // index k = C_k for k in 1..=n_max+1
    retired_mass: u64,     // total elements sitting in blocks larger than n_max+1
    obs: TrajectoryObservables,
}

impl CompactState {
    fn new(theta: f64, trackers: &TrackerConfig) -> Self {
        let n_max = trackers.n_max as u64;
        Self {
            theta,
            n_max,
            track_atoms: trackers.track_atoms,
            tracked: Vec::new(),
            blocks: Vec::new(),
            free: Vec::new(),
            size_counts: vec![0; n_max as usize + 2],
            retired_mass: 0,
            obs: TrajectoryObservables {
                atoms_by_n: vec![Vec::new(); n_max as usize],
                count_snapshots: Vec::new(),
                first_singleton_path: Vec::new(),
            },
        }
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, m: u64) {
        let total = self.theta + (m - 1) as f64;
        let u = rng.random::<f64>() * total;
        if u < self.theta || m == 1 {
            let slot = match self.free.pop() {
                Some(s) => {
                    self.blocks[s as usize].members.clear();
                    self.blocks[s as usize].members.push(m);
                    s
                }
                None => {
                    self.blocks.push(CompactBlock { members: vec![m] });
                    (self.blocks.len() - 1) as u32
                }
            };
            self.tracked.push((m, slot));
            self.size_counts[1] += 1;
        } else {
            let k = ((u - self.theta) as u64 + 1).min(m - 1);
            match self.tracked.iter().find(|&&(e, _)| e == k) {
                None => self.retired_mass += 1,
                Some(&(_, slot)) => self.grow(slot, m),
            }
        }
    }

    fn grow(&mut self, slot: u32, m: u64) {
        let s = self.blocks[slot as usize].members.len() as u64;
        if self.track_atoms && s <= self.n_max {
            let atom = BlockAtom { k: self.blocks[slot as usize].members.clone(), m };
            atom.assert_ordered();
            self.obs.atoms_by_n[s as usize - 1].push(atom);
        }
        if s < self.n_max + 1 {
            self.blocks[slot as usize].members.push(m);
            self.tracked.push((m, slot));
            self.size_counts[s as usize] -= 1;
            self.size_counts[s as usize + 1] += 1;
        } else {
            // grows past n_max + 1: retire the block entirely
            self.tracked.retain(|&(_, sl)| sl != slot);
            self.size_counts[s as usize] -= 1;
            self.retired_mass += s + 1;
            self.free.push(slot);
        }
    }

    fn snapshot(&mut self, step: u64, first_singleton: bool) {
        self.obs.count_snapshots.push(CountSnapshot {
            step,
            counts: self.size_counts[1..=self.n_max as usize].to_vec(),
        });
        if first_singleton {
            let min_singleton = self
                .tracked
                .iter()
                .filter(|&&(_, slot)| self.blocks[slot as usize].members.len() == 1)
                .map(|&(e, _)| e)
                .min()
                .unwrap_or(step + 1);
            self.obs.first_singleton_path.push((step, min_singleton));
        }
    }
}

/// Generate one trajectory and record the requested observables.
///
/// Identical `(params, trackers)` yields identical output.
pub fn run(params: &CrpParams, trackers: &TrackerConfig) -> Result<TrajectoryObservables, CrpError> {
    let mut rng = crate::rng::derive_rng(params.seed, &[]);
    run_with_rng(params, trackers, &mut rng)
}

/// Same as [`run`] but drawing from a caller-supplied stream; used by the
/// replicate fan-out in the verification suites.
pub fn run_with_rng<R: Rng + ?Sized>(
    params: &CrpParams,
    trackers: &TrackerConfig,
    rng: &mut R,
) -> Result<TrajectoryObservables, CrpError> {
    CrpParams::new(params.theta, params.seed, params.horizon)?;
    trackers.validate(params.horizon)?;
    let mut snaps = trackers.snapshot_steps.clone();
    snaps.sort_unstable();
    let mut state = CompactState::new(params.theta, trackers);
    let mut next_snap = 0usize;
    for m in 1..=params.horizon {
        state.step(rng, m);
        while next_snap < snaps.len() && snaps[next_snap] == m {
            state.snapshot(m, trackers.track_first_singleton);
            next_snap += 1;
        }
    }
    Ok(state.obs)
}

/// Reference trajectory via the full [`PartitionState`]; consumes the RNG
/// stream identically to [`run_with_rng`]. Intended for cross-validation and
/// small horizons.
pub fn run_reference<R: Rng + ?Sized>(
    params: &CrpParams,
    trackers: &TrackerConfig,
    rng: &mut R,
) -> Result<TrajectoryObservables, CrpError> {
    trackers.validate(params.horizon)?;
    let n_max = trackers.n_max as u64;
    let mut snaps = trackers.snapshot_steps.clone();
    snaps.sort_unstable();
    let mut state = PartitionState::new(trackers.n_max)?;
    let mut obs = TrajectoryObservables {
        atoms_by_n: vec![Vec::new(); n_max as usize],
        count_snapshots: Vec::new(),
        first_singleton_path: Vec::new(),
    };
    let mut next_snap = 0usize;
    for m in 1..=params.horizon {
        let draw = InsertionDraw::sample(rng, params.theta, m);
        if trackers.track_atoms {
            if let InsertTarget::JoinElement(k) = draw.target {
                let id = state.element_block[(k - 1) as usize];
                let s = state.block_sizes[id as usize];
                if s <= n_max {
                    let members = state.small_block_members[&id].clone();
                    obs.atoms_by_n[s as usize - 1].push(BlockAtom { k: members, m });
                }
            }
        }
        state.step(draw)?;
        while next_snap < snaps.len() && snaps[next_snap] == m {
            obs.count_snapshots.push(CountSnapshot {
                step: m,
                counts: state.size_counts[1..=trackers.n_max as usize].to_vec(),
            });
            if trackers.track_first_singleton {
                let min_singleton = state
                    .small_block_members
                    .values()
                    .filter(|v| v.len() == 1)
                    .map(|v| v[0])
                    .min()
                    .unwrap_or(m + 1);
                obs.first_singleton_path.push((m, min_singleton));
            }
            next_snap += 1;
        }
    }
    Ok(obs)
}

/// Generate the CRP permutation and return its cycles, each rotated to start
/// at its least element and sorted by least element.
pub fn permutation_run(params: &CrpParams) -> Result<Vec<Vec<u64>>, CrpError> {
    let mut rng = crate::rng::derive_rng(params.seed, &[]);
    permutation_run_with_rng(params, &mut rng)
}

pub fn permutation_run_with_rng<R: Rng + ?Sized>(
    params: &CrpParams,
    rng: &mut R,
) -> Result<Vec<Vec<u64>>, CrpError> {
    CrpParams::new(params.theta, params.seed, params.horizon)?;
    if params.horizon > 10_000_000 {
        return Err(CrpError::HorizonTooLarge(params.horizon));
    }
    let n = params.horizon as usize;
    // successor map of the permutation in cycle notation, 1-indexed
    let mut next = vec![0u64; n + 1];
    for m in 1..=params.horizon {
        let draw = InsertionDraw::sample(rng, params.theta, m);
        match draw.target {
            InsertTarget::NewBlock => next[m as usize] = m,
            InsertTarget::JoinElement(k) => {
                next[m as usize] = next[k as usize];
                next[k as usize] = m;
            }
        }
    }
    let mut seen = vec![false; n + 1];
    let mut cycles = Vec::new();
    for start in 1..=n as u64 {
        if seen[start as usize] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start as usize] = true;
        let mut cur = next[start as usize];
        while cur != start {
            seen[cur as usize] = true;
            cycle.push(cur);
            cur = next[cur as usize];
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// A finite multiset of scaled atoms on the cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeasure {
    pub n: u32,
    /// Each point is (x_1, ..., x_N, y).
    pub points: Vec<Vec<f64>>,
}

impl PointMeasure {
    pub fn count_in(&self, window: &ConeWindow) -> u64 {
        self.points.iter().filter(|p| window.contains(p)).count() as u64
    }
}

/// Scale the tracked atoms for size `n` into the cone: atom
/// `(k_1, ..., k_N, m)` maps to `(k_1/scale, ..., k_N/scale, m/scale)`.
///
/// Blocks that never reached size `N + 1` by the horizon contribute no atom;
/// window-based checks must keep their upper `y`-bound below `horizon/scale`.
pub fn extract_point_measure(obs: &TrajectoryObservables, n: u32, scale: u64) -> PointMeasure {
    assert!(n >= 1 && (n as usize) <= obs.atoms_by_n.len(), "N not tracked in this run");
    assert!(scale >= 1);
    let s = scale as f64;
    let points = obs
        .atoms(n)
        .iter()
        .map(|a| {
            let mut p: Vec<f64> = a.k.iter().map(|&k| k as f64 / s).collect();
            p.push(a.m as f64 / s);
            p
        })
        .collect();
    PointMeasure { n, points }
}

/// The first-singleton path rescaled for limit comparison, using the
/// convention that "no singleton" maps to the time coordinate itself
/// (value `step / scale`). The raw path keeps `step + 1` instead.
pub fn observe_first_singleton(obs: &TrajectoryObservables, scale: u64) -> Vec<(f64, f64)> {
    let s = scale as f64;
    obs.first_singleton_path
        .iter()
        .map(|&(step, m)| {
            let value = if m == step + 1 { step as f64 } else { m as f64 };
            (step as f64 / s, value / s)
        })
        .collect()
}

/// Unscaled short-lived-singleton record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortLivedRecord {
    pub birth: u64,
    pub lifetime: u64,
}

/// The singleton born at or after `delta_step` that became a doubleton in the
/// shortest time; ties broken by earlier birth. `None` means censored: no
/// qualifying singleton completed its lifetime by the horizon.
pub fn observe_shortlived(atoms_n1: &[BlockAtom], delta_step: u64) -> Option<ShortLivedRecord> {
    atoms_n1
        .iter()
        .filter(|a| a.k[0] >= delta_step)
        .map(|a| ShortLivedRecord { birth: a.k[0], lifetime: a.m - a.k[0] })
        .min_by_key(|r| (r.lifetime, r.birth))
}

/// Counting path of short-lived singletons: entry `i` is the number of
/// singletons born at or after `delta_step` whose lifetime was at most
/// `lifetime_bounds[i]`.
pub fn observe_q_path(atoms_n1: &[BlockAtom], delta_step: u64, lifetime_bounds: &[u64]) -> Vec<u64> {
    lifetime_bounds
        .iter()
        .map(|&bound| {
            atoms_n1
                .iter()
                .filter(|a| a.k[0] >= delta_step && a.m - a.k[0] <= bound)
                .count() as u64
        })
        .collect()
}

/// Singleton-only observables from the event-skip engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletonObservables {
    /// (birth element, death step) of every singleton that became a doubleton.
    pub atoms: Vec<BlockAtom>,
    /// (step, C_1, M_step) at each requested snapshot; M = step + 1 if none.
    pub snapshots: Vec<(u64, u64, u64)>,
    /// Births of singletons still alive at the horizon, ascending.
    pub survivors: Vec<u64>,
}

/// Event-skip sampler for singleton observables over long horizons.
///
/// Only two kinds of draws change the singleton picture: opening a new block
/// (weight `theta`) and hitting a current singleton (weight 1 each). With `K`
/// singletons alive, a step at index `i` is relevant with probability
/// `(theta + K) / (theta + i - 1)`, so the index of the next relevant step can
/// be sampled directly by inverting the survival product
/// `prod (i - 1 - K) / (theta + i - 1)` — a ratio of gamma functions. The
/// cost is O(events) instead of O(horizon), with the event chain distributed
/// exactly as under the step-by-step engine.
pub fn run_singleton_events<R: Rng + ?Sized>(
    params: &CrpParams,
    snapshot_steps: &[u64],
    rng: &mut R,
) -> Result<SingletonObservables, CrpError> {
    CrpParams::new(params.theta, params.seed, params.horizon)?;
    let theta = params.theta;
    let horizon = params.horizon;
    let mut snaps: Vec<u64> = snapshot_steps.to_vec();
    snaps.sort_unstable();
    if let Some(&s) = snaps.last() {
        if s > horizon {
            return Err(CrpError::SnapshotBeyondHorizon(s, horizon));
        }
    }

    let mut singletons: Vec<u64> = Vec::new();
    let mut obs = SingletonObservables { atoms: Vec::new(), snapshots: Vec::new(), survivors: Vec::new() };
    let mut next_snap = 0usize;
    let mut m: u64 = 0; // elements inserted so far

    let record_snaps_through = |upto: u64, singletons: &Vec<u64>, next_snap: &mut usize,
                                    obs: &mut SingletonObservables| {
        while *next_snap < snaps.len() && snaps[*next_snap] <= upto {
            let step = snaps[*next_snap];
            let min_s = singletons.iter().copied().min().unwrap_or(step + 1);
            obs.snapshots.push((step, singletons.len() as u64, min_s));
            *next_snap += 1;
        }
    };

    while m < horizon {
        let k = singletons.len() as u64;
        let event_step = if k == m {
            // every element is a singleton: the next step is relevant surely
            m + 1
        } else {
            match next_event_step(theta, k, m, horizon, rng) {
                Some(j) => j,
                None => break, // no further event before the horizon
            }
        };
        // state is unchanged on steps m..event_step-1
        record_snaps_through(event_step - 1, &singletons, &mut next_snap, &mut obs);
        // resolve the event at event_step: weights theta (new block) : 1 per singleton
        let c = theta + k as f64;
        let v = rng.random::<f64>() * c;
        if v < theta || k == 0 {
            singletons.push(event_step);
        } else {
            let idx = (((v - theta) as usize).min(singletons.len() - 1)) as usize;
            let birth = singletons.swap_remove(idx);
            obs.atoms.push(BlockAtom { k: vec![birth], m: event_step });
        }
        m = event_step;
        record_snaps_through(m, &singletons, &mut next_snap, &mut obs);
    }
    record_snaps_through(horizon, &singletons, &mut next_snap, &mut obs);
    obs.atoms.sort_by_key(|a| (a.m, a.k[0]));
    singletons.sort_unstable();
    obs.survivors = singletons;
    Ok(obs)
}

/// Smallest j in (m, horizon] such that the no-event survival probability
/// through step j drops below a uniform draw; `None` if no event occurs by
/// the horizon. Survival through step j is
/// `Gamma(j - k) / Gamma(m - k) * Gamma(theta + m) / Gamma(theta + j)`.
fn next_event_step<R: Rng + ?Sized>(
    theta: f64,
    k: u64,
    m: u64,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let base = ln_gamma((m - k) as f64) - ln_gamma(theta + m as f64);
    let ln_survival = |j: u64| -> f64 {
        // ln P{no event in steps m+1 ..= j}
        ln_gamma((j - k) as f64) - ln_gamma(theta + j as f64) - base
    };
    let u: f64 = rng.random::<f64>();
    let target = u.ln();
    if ln_survival(horizon) >= target {
        return None;
    }
    // exponential search for an upper bracket, then binary search
    let mut lo = m; // survival(lo) >= target (survival(m) = 1)
    let mut width = 1u64;
    let mut hi = loop {
        let cand = (m + width).min(horizon);
        if ln_survival(cand) < target {
            break cand;
        }
        lo = cand;
        width *= 2;
    };
    while hi - lo > 64 {
        let mid = lo + (hi - lo) / 2;
        if ln_survival(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // exact per-step refinement inside the bracket
    let mut acc = ln_survival(lo);
    let mut j = lo;
    while j < hi {
        j += 1;
        acc += (((j - 1 - k) as f64) / (theta + (j - 1) as f64)).ln();
        if acc < target {
            return Some(j);
        }
    }
    Some(hi)
}
