//! Shared fixtures for the criterion benchmarks.

use slotgame_core::{builtin, BuiltinName, StrategyMachine};

/// The built-in machines, in a fixed order.
pub fn all_builtins() -> Vec<StrategyMachine> {
    BuiltinName::ALL.iter().map(|&n| builtin(n)).collect()
}
