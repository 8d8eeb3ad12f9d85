//! Per-round run records and their CSV form
//! `t,phase,n,m,tau,arm,query,on_demand,reward`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::sig17;

pub const LOG_HEADER: [&str; 9] = [
    "t",
    "phase",
    "n",
    "m",
    "tau",
    "arm",
    "query",
    "on_demand",
    "reward",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    /// Round, 1-indexed.
    pub t: u64,
    /// Phase (HyQue) or batch (Rexp3B), 1-indexed.
    pub phase: u64,
    /// Block scale.
    pub n: u32,
    /// Scale of the owning instance.
    pub m: u32,
    /// Offset of the owning instance within its block.
    pub tau: u64,
    /// Played arm, 0-indexed (written 1-indexed).
    pub arm: usize,
    pub query: bool,
    pub on_demand: bool,
    /// Observed reward on query rounds.
    pub reward: Option<f64>,
    /// Reward the environment produced whether or not it was observed. Not
    /// serialized; `NaN` for logs read back from CSV on non-query rounds.
    pub realized: f64,
}

impl RoundRecord {
    /// Identifies the block the round belongs to.
    pub fn block_key(&self) -> (u64, u32) {
        (self.phase, self.n)
    }

    /// Identifies the instance (or batch) whose feedback drove the round.
    pub fn owner_key(&self) -> (u64, u32, u32, u64) {
        (self.phase, self.n, self.m, self.tau)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionLog {
    records: Vec<RoundRecord>,
}

impl ActionLog {
    pub fn with_capacity(rounds: usize) -> Self {
        Self {
            records: Vec::with_capacity(rounds),
        }
    }

    pub fn from_records(records: Vec<RoundRecord>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, record: RoundRecord) {
        debug_assert_eq!(record.t, self.records.len() as u64 + 1);
        self.records.push(record);
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn queries(&self) -> u64 {
        self.records.iter().filter(|r| r.query).count() as u64
    }

    pub fn on_demand_queries(&self) -> u64 {
        self.records.iter().filter(|r| r.on_demand).count() as u64
    }

    /// Number of distinct phases.
    pub fn phase_count(&self) -> u64 {
        self.records.last().map_or(0, |r| r.phase)
    }

    /// Cumulative query count after each round.
    pub fn budget_trace(&self) -> Vec<u64> {
        self.records
            .iter()
            .scan(0u64, |used, r| {
                *used += r.query as u64;
                Some(*used)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LOG_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                r.phase.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.tau.to_string(),
                (r.arm + 1).to_string(),
                (r.query as u8).to_string(),
                (r.on_demand as u8).to_string(),
                r.reward.map(sig17).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().ne(LOG_HEADER.iter().copied()) {
            return Err(Error::ShapeMismatch(format!(
                "action log header must be {}",
                LOG_HEADER.join(",")
            )));
        }
        let mut records = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec[i].trim();
            let int = |i: usize| -> Result<u64> {
                field(i)
                    .parse()
                    .map_err(|e| Error::Parse(format!("{} = {:?}: {e}", LOG_HEADER[i], field(i))))
            };
            let flag = |i: usize| -> Result<bool> {
                match field(i) {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse(format!("{} = {other:?}", LOG_HEADER[i]))),
                }
            };
            let arm = int(5)?;
            if arm == 0 {
                return Err(Error::Parse("arm ids start at 1".into()));
            }
            let reward = match field(8) {
                "" => None,
                s => Some(
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("reward {s:?}: {e}")))?,
                ),
            };
            records.push(RoundRecord {
                t: int(0)?,
                phase: int(1)?,
                n: int(2)? as u32,
                m: int(3)? as u32,
                tau: int(4)?,
                arm: arm as usize - 1,
                query: flag(6)?,
                on_demand: flag(7)?,
                reward,
                realized: reward.unwrap_or(f64::NAN),
            });
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
