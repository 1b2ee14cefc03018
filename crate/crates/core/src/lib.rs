//! Numerical toolkit for selling positional (status) goods: type
//! distributions and virtual values, feasibility of status allocations,
//! ironing, revenue / consumer-surplus / welfare-optimal mechanisms,
//! posted-price benchmarks, model extensions, and an independent discrete
//! verifier.

pub mod alloc;
pub mod dist;
pub mod error;
pub mod extensions;
pub mod feasibility;
pub mod ironing;
pub mod mechanisms;
pub mod no_exclusion;
pub mod num;
pub mod oracle;
pub mod phi;
pub mod value;

pub use alloc::{PartitionMenu, Segment, StatusAllocation, StatusMode};
pub use dist::{Classification, TypeDistribution};
pub use error::{Error, Result};
pub use extensions::{
    intrinsic_quality_optimum, negative_status_optimum, phi_condition_check,
    phi_transformed_optimum, suffering_optimum, CostFunction, CsMaxMode, IntrinsicOptimum,
    NegStatusOptimum, PhiConditionReport, PhiOptimum, SufferingOptimum,
};
pub use feasibility::{check_mps, check_weak_majorization, MajorizationReport};
pub use ironing::{iron, ironed_allocation, IroningResult};
pub use mechanisms::{
    consumer_surplus, cs_max_budget_balanced, cs_max_nonneg_price, evaluate, optimal_exclusion,
    revenue, single_good_optimum, social_optimum, social_welfare, EvalReport, ExclusionOptimum,
    Mechanism, MechanismRow, SingleGoodOptimum,
};
pub use no_exclusion::{
    pooling_cs_condition, revmax_no_exclusion, two_level_optimum, PoolingCsCondition,
    TwoLevelOptimum,
};
pub use oracle::{
    all_pay_simulation, best_menu_exhaustive, best_menu_search, ic_check,
    status_from_assignment, DiscreteEconomy, DiscreteMechanism, IcReport, MenuSearchResult,
    Objective,
};
pub use phi::{PhiShape, PhiTransform};
pub use value::{ValueFunction, ValueMode};
