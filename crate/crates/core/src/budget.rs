use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of history-tree leaves an exact enumeration may
/// touch. Exceeding it is an error, never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget(pub u64);

pub const DEFAULT_BUDGET: u64 = 10_000_000;

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn new(leaves: u64) -> Self {
        Budget(leaves)
    }

    /// Errors unless `needed` leaves fit under the cap.
    pub fn check(&self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::BudgetExceeded {
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}
