//! The optimal fixed-priority greedy for DPA on paths.

use crate::engine::{run, FixedGreedy, PriorityOrder};
use crate::error::{DpaError, Result};
use crate::model::{Instance, Request, Solution};

/// Smaller right endpoint first.
pub fn right_end_order() -> PriorityOrder {
    PriorityOrder::by_key("right-end", |r: &Request| r.y())
}

pub fn right_end_greedy() -> FixedGreedy {
    FixedGreedy::new("greedy-path", |_| Ok(right_end_order()))
}

/// Runs the right-endpoint greedy, which is optimal on paths.
pub fn greedy_paths(instance: &Instance) -> Result<Solution> {
    if instance.graph().as_path().is_none() {
        return Err(DpaError::InvalidArgument(format!(
            "greedy-path needs a path, got {}",
            instance.graph().descriptor()
        )));
    }
    Ok(run(&mut right_end_greedy(), instance, None)?.solution)
}
