//! Baseline query allocation inside one block.
//!
//! A block of `b * 2^n` rounds hosts UCB1 instances at scales `m = 0..=n`.
//! An instance at scale `m` and offset `tau` is initiated with probability
//! `2^((m - n) / 2)` and nominally spans rounds `[tau + 1, tau + b * 2^m]`.
//! Finer instances mask coarser ones, so every round of the block is active in
//! exactly one instance. Each instance spends the first
//! `max(1, floor(|active| / b))` of its active rounds querying and replays the
//! empirical arm frequencies of that batch afterwards.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{PolicyIndex, Ucb1State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceId {
    /// Block scale `n`.
    pub block_scale: u32,
    /// Instance scale `m <= n`.
    pub scale: u32,
    /// Offset within the block, a multiple of `b * 2^m`.
    pub offset: u64,
}

impl InstanceId {
    pub fn nominal_len(&self, ratio: u64) -> u64 {
        ratio << self.scale
    }
}

/// Result of one query round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub arm: usize,
    pub index: PolicyIndex,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    /// Closed span relative to the block start, clipped to the block length.
    pub span: (u64, u64),
    active: Vec<u64>,
    query_len: usize,
    policy: Ucb1State,
    replay_freq: Vec<u64>,
}

impl Instance {
    fn new(id: InstanceId, ratio: u64, arms: usize) -> Self {
        Self {
            id,
            span: (id.offset + 1, id.offset + id.nominal_len(ratio)),
            active: Vec::new(),
            query_len: 0,
            policy: Ucb1State::new(arms),
            replay_freq: vec![0; arms],
        }
    }

    /// Active rounds (relative to the block start) in time order.
    pub fn active_rounds(&self) -> &[u64] {
        &self.active
    }

    pub fn query_rounds(&self) -> &[u64] {
        &self.active[..self.query_len]
    }

    pub fn nonquery_rounds(&self) -> &[u64] {
        &self.active[self.query_len..]
    }

    pub fn policy(&self) -> &Ucb1State {
        &self.policy
    }

    pub fn replay_freq(&self) -> &[u64] {
        &self.replay_freq
    }

    /// Assigns the query batch: the first `max(1, floor(|active| / b))`
    /// active rounds, or nothing for a fully masked instance.
    pub fn split_batches(&mut self, ratio: u64) {
        self.query_len = if self.active.is_empty() {
            0
        } else {
            ((self.active.len() as u64 / ratio).max(1)) as usize
        };
    }

    /// Plays the UCB1 choice, feeds the observed reward back, and counts the
    /// arm for later replay.
    pub fn query_step<F>(&mut self, observe: F) -> Result<QueryOutcome>
    where
        F: FnOnce(usize) -> f64,
    {
        let (arm, index) = self.policy.select_arm();
        let reward = observe(arm);
        self.policy.record(arm, reward)?;
        self.replay_freq[arm] += 1;
        Ok(QueryOutcome { arm, index, reward })
    }

    /// Samples an arm in proportion to the query batch's selection counts.
    pub fn nonquery_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total: u64 = self.replay_freq.iter().sum();
        if total == 0 {
            return Err(Error::EmptyReplay);
        }
        let mut pick = rng.random_range(0..total);
        for (arm, &count) in self.replay_freq.iter().enumerate() {
            if pick < count {
                return Ok(arm);
            }
            pick -= count;
        }
        unreachable!("pick < total")
    }

    pub fn replay_probabilities(&self) -> Vec<f64> {
        let total: u64 = self.replay_freq.iter().sum();
        self.replay_freq
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

/// Where one round of a block sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundSlot {
    /// Index into [`BlockSchedule::instances`].
    pub instance: usize,
    /// True on the owner's baseline query rounds.
    pub baseline_query: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSchedule {
    pub block_scale: u32,
    pub ratio: u64,
    length: u64,
    instances: Vec<Instance>,
    slots: Vec<RoundSlot>,
}

const UNOWNED: usize = usize::MAX;

/// Draws the initiation decisions for a block at scale `n`.
///
/// Offsets run over `0, b, 2b, ..., (2^n - 1) b`; at each offset every scale
/// `m` with `tau` divisible by `b * 2^m` is tried from `m = n` down to 0. The
/// full-span instance at `tau = 0, m = n` has probability 1 and consumes no
/// draw.
pub fn schedule_block<R: Rng + ?Sized>(
    n: u32,
    ratio: u64,
    arms: usize,
    rng: &mut R,
) -> BlockSchedule {
    assert!(ratio >= 2, "budget ratio must be at least 2");
    let mut instances = Vec::new();
    for slot in 0..(1u64 << n) {
        let offset = slot * ratio;
        let top = if slot == 0 {
            n
        } else {
            slot.trailing_zeros().min(n)
        };
        for m in (0..=top).rev() {
            let initiated = if m == n {
                true
            } else {
                let p = 2f64.powf((m as f64 - n as f64) / 2.0);
                rng.random::<f64>() < p
            };
            if initiated {
                let id = InstanceId {
                    block_scale: n,
                    scale: m,
                    offset,
                };
                instances.push(Instance::new(id, ratio, arms));
            }
        }
    }
    BlockSchedule {
        block_scale: n,
        ratio,
        length: ratio << n,
        instances,
        slots: Vec::new(),
    }
}

/// Hierarchical masking: a round belongs to the finest initiated instance
/// whose span covers it. Also assigns every instance's query batch.
pub fn resolve_active_sets(mut schedule: BlockSchedule) -> BlockSchedule {
    let len = schedule.length as usize;
    let mut owner = vec![UNOWNED; len];
    let mut order: Vec<usize> = (0..schedule.instances.len()).collect();
    order.sort_by_key(|&i| {
        let id = schedule.instances[i].id;
        (id.scale, id.offset)
    });
    for i in order {
        let (start, end) = schedule.instances[i].span;
        for r in start..=end {
            let cell = &mut owner[(r - 1) as usize];
            if *cell == UNOWNED {
                *cell = i;
            }
        }
    }
    for inst in &mut schedule.instances {
        inst.active.clear();
    }
    for (r, &i) in owner.iter().enumerate() {
        assert_ne!(i, UNOWNED, "round {} uncovered", r + 1);
        schedule.instances[i].active.push(r as u64 + 1);
    }
    let ratio = schedule.ratio;
    for inst in &mut schedule.instances {
        inst.split_batches(ratio);
    }
    let mut seen = vec![0usize; schedule.instances.len()];
    schedule.slots = owner
        .iter()
        .map(|&i| {
            let pos = seen[i];
            seen[i] += 1;
            RoundSlot {
                instance: i,
                baseline_query: pos < schedule.instances[i].query_len,
            }
        })
        .collect();
    schedule
}

impl BlockSchedule {
    /// Schedules, clips to `limit` rounds, and resolves a block.
    pub fn build<R: Rng + ?Sized>(
        n: u32,
        ratio: u64,
        arms: usize,
        limit: u64,
        rng: &mut R,
    ) -> Self {
        resolve_active_sets(schedule_block(n, ratio, arms, rng).clip(limit))
    }

    /// Truncates the block to its first `limit` rounds, clipping spans and
    /// dropping instances that start after the cut.
    pub fn clip(mut self, limit: u64) -> Self {
        if limit >= self.length {
            return self;
        }
        self.length = limit;
        self.instances.retain(|inst| inst.span.0 <= limit);
        for inst in &mut self.instances {
            inst.span.1 = inst.span.1.min(limit);
        }
        self.slots.clear();
        self
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance_mut(&mut self, index: usize) -> &mut Instance {
        &mut self.instances[index]
    }

    /// Slot of relative round `r` (1-indexed). Requires a resolved schedule.
    pub fn slot(&self, r: u64) -> RoundSlot {
        self.slots[(r - 1) as usize]
    }

    pub fn is_resolved(&self) -> bool {
        self.slots.len() as u64 == self.length
    }

    pub fn baseline_queries(&self) -> u64 {
        self.instances.iter().map(|i| i.query_len as u64).sum()
    }

    /// Baseline query pattern, one flag per round.
    pub fn query_pattern(&self) -> Vec<bool> {
        self.slots.iter().map(|s| s.baseline_query).collect()
    }

    /// One line per instance: `n m tau active=[..] query=[..]`.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let mut order: Vec<&Instance> = self.instances.iter().collect();
        order.sort_by_key(|i| (std::cmp::Reverse(i.id.scale), i.id.offset));
        for inst in order {
            let _ = writeln!(
                out,
                "n={} m={} tau={} span=[{}-{}] active={} query={}",
                inst.id.block_scale,
                inst.id.scale,
                inst.id.offset,
                inst.span.0,
                inst.span.1,
                format_ranges(inst.active_rounds()),
                format_ranges(inst.query_rounds()),
            );
        }
        out
    }

    /// Text picture of the block, one row per scale from `n` down to 0:
    /// `Q` query, `=` non-query, `.` masked, blank outside any span.
    pub fn diagram(&self) -> String {
        let len = self.length as usize;
        let mut out = String::new();
        for m in (0..=self.block_scale).rev() {
            let mut row = vec![' '; len];
            for (i, inst) in self.instances.iter().enumerate() {
                if inst.id.scale != m {
                    continue;
                }
                for r in inst.span.0..=inst.span.1 {
                    let slot = self.slots[(r - 1) as usize];
                    row[(r - 1) as usize] = match (slot.instance == i, slot.baseline_query) {
                        (true, true) => 'Q',
                        (true, false) => '=',
                        (false, _) => '.',
                    };
                }
            }
            let _ = writeln!(out, "m={m:<2} |{}|", row.into_iter().collect::<String>());
        }
        out
    }
}

fn format_ranges(rounds: &[u64]) -> String {
    let mut parts = Vec::new();
    let mut iter = rounds.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap();
        }
        parts.push(format!("{start}-{end}"));
    }
    format!("[{}]", parts.join(","))
}
