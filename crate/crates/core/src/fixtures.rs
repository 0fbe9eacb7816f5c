//! Built-in documents describing the kitchen domain.

pub const KITCHEN_SCENARIO: &str = include_str!("../fixtures/kitchen.scn");
pub const KITCHEN_ACTIONS: &str = include_str!("../fixtures/kitchen.actions");
pub const KITCHEN_PLANS: &str = include_str!("../fixtures/kitchen.plan");
pub const TWO_GOAL_PLANS: &str = include_str!("../fixtures/two_goals.plan");
pub const KITCHEN_KB: &str = include_str!("../fixtures/kitchen.kb");
