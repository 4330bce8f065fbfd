//! Per-pattern gas-delta heuristic, reported alongside patches.
//!
//! The bands: a lock costs a storage-slot write per transaction (~25000
//! units); reordering with temporaries costs stack traffic only (5 units);
//! inserted require checks and the withdraw function are small constants,
//! reported but never asserted.

use serde::Serialize;

use super::{EditKind, EditScript, FixPattern};

pub const LOCK_GAS: u64 = 25000;
pub const REORDER_GAS: u64 = 5;
pub const REQUIRE_GAS_PER_CHECK: u64 = 20;
pub const WITHDRAW_GAS: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GasEstimate {
    pub pattern: FixPattern,
    pub delta_gas_units: u64,
}

pub fn estimate_cost(script: &EditScript) -> GasEstimate {
    let delta = if script.is_empty() {
        0
    } else {
        match script.pattern {
            FixPattern::Lock => LOCK_GAS,
            FixPattern::Reorder => REORDER_GAS,
            FixPattern::Require => {
                let checks = script
                    .edits
                    .iter()
                    .filter(|e| {
                        matches!(
                            e.kind,
                            EditKind::WrapInRequire { .. } | EditKind::InsertStatement { .. }
                        )
                    })
                    .count() as u64;
                REQUIRE_GAS_PER_CHECK * checks.max(1)
            }
            FixPattern::Withdraw => WITHDRAW_GAS,
        }
    };
    GasEstimate { pattern: script.pattern, delta_gas_units: delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::NodeId;

    #[test]
    fn bands_match_the_reported_costs() {
        let mut lock = EditScript::new(FixPattern::Lock, "f".into());
        lock.push(EditKind::AddModifierGuard { function: NodeId(1), lock_var: "locked".into() });
        assert_eq!(estimate_cost(&lock).delta_gas_units, 25000);

        let mut reorder = EditScript::new(FixPattern::Reorder, "f".into());
        reorder.push(EditKind::MoveStatement {
            stmt: NodeId(1),
            new_position: super::super::Position::Before { statement: NodeId(2) },
        });
        assert_eq!(estimate_cost(&reorder).delta_gas_units, 5);

        let empty = EditScript::new(FixPattern::Reorder, "f".into());
        assert_eq!(estimate_cost(&empty).delta_gas_units, 0);
    }
}
