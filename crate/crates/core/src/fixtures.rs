//! Models shipped with the repository under `fixtures/`.

use crate::format::parse_model;
use crate::model::CounterpartModel;

pub const RUNNING_SRC: &str = include_str!("../../../fixtures/running.cm");
pub const TWO_STATE_SRC: &str = include_str!("../../../fixtures/twostate.cm");
pub const LTL_CHAIN_SRC: &str = include_str!("../../../fixtures/ltl_chain.cm");
pub const LTL_CHAIN_EXPECTED: &str = include_str!("../../../fixtures/ltl_chain.expected");

/// Three graphs `w0 -f0-> w1 =f1,f2=> w2 -f3-> w2`.
pub fn running_example() -> CounterpartModel {
    parse_model(RUNNING_SRC).expect("running.cm is valid")
}

/// `s0` holds one item with no counterpart; `s1` is empty.
pub fn two_state() -> CounterpartModel {
    parse_model(TWO_STATE_SRC).expect("twostate.cm is valid")
}

/// Five-world linear chain with a final idle step.
pub fn ltl_chain() -> CounterpartModel {
    parse_model(LTL_CHAIN_SRC).expect("ltl_chain.cm is valid")
}

/// Rows of `ltl_chain.expected`: per-world truth values and the formula text.
pub fn ltl_chain_expected() -> Vec<(Vec<bool>, String)> {
    LTL_CHAIN_EXPECTED
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (bits, formula) = l.split_once('|').expect("row is `bits | formula`");
            let bits = bits.trim().chars().map(|c| c == '1').collect();
            (bits, formula.trim().to_string())
        })
        .collect()
}
