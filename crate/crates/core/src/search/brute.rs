use crate::error::{Error, Result};
use crate::hwmodel::HardwareConfig;
use crate::par::Exec;
use crate::splitspace::SearchSpace;

use super::{evaluate, AccuracyOracle, Evaluated, Objective};

/// Exact optimum over every one-hot descriptor of a small space.
pub fn brute_force_best(
    space: &SearchSpace,
    hw: &HardwareConfig,
    oracle: &dyn AccuracyOracle,
    objective: Objective,
    cap: u128,
    exec: Exec,
) -> Result<Evaluated> {
    space.validate()?;
    let size = space.cardinality();
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let all: Vec<_> = space.enumerate(size as usize).collect();
    let scored = exec.map(&all, |d| evaluate(space, hw, oracle, d));
    let mut best: Option<Evaluated> = None;
    for e in scored {
        let e = e?;
        if e.feasible() && best.as_ref().is_none_or(|b| e.key(objective) < b.key(objective)) {
            best = Some(e);
        }
    }
    best.ok_or(Error::NoFeasible)
}
