use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone counter of consumed queries with a hard cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    used: u64,
    cap: u64,
}

impl BudgetLedger {
    pub fn new(cap: u64) -> Self {
        Self { used: 0, cap }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn remaining(&self) -> u64 {
        self.cap - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.cap
    }

    /// Consumes one query. Fails once the cap is reached.
    pub fn record_query(&mut self) -> Result<()> {
        if self.used >= self.cap {
            return Err(Error::BudgetExhausted {
                used: self.used,
                cap: self.cap,
            });
        }
        self.used += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_up_to_cap() {
        let mut ledger = BudgetLedger::new(5);
        ledger.record_query().unwrap();
        assert_eq!(ledger.used(), 1);
        for _ in 0..3 {
            ledger.record_query().unwrap();
        }
        assert_eq!(ledger.used(), 4);
        ledger.record_query().unwrap();
        assert_eq!(ledger.used(), 5);
        assert!(ledger.is_exhausted());
        let err = ledger.record_query().unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { used: 5, cap: 5 }));
        assert_eq!(ledger.used(), 5);
    }
}
