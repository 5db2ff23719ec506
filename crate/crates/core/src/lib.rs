//! Numerical laboratory for second-price auctions in which bids are
//! securities: equilibrium bid functions, seller revenue per security
//! family, dependence-order and steepness checkers, and the single-crossing
//! lemmas behind the revenue rankings.

pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod information;
pub mod plot;
pub mod preferences;
pub mod quadrature;
pub mod revenue;
pub mod securities;
pub mod theory;

pub use equilibrium::{
    best_response_gain, bid_curve, bid_curve_with, expected_utility, max_bid, AuctionInstance, BestResponse, BidCurve,
    MaxBid, Tolerances,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use information::{
    check_dependence, conditional_expectation, make_model, sample_value, DependenceProperty, DependenceReport,
    Example1, GridModel, InformationModel, LinearTilt, ModelSpec,
};
pub use preferences::UtilityFunction;
pub use revenue::{
    conditional_payment, conditional_revenue, example1_gap, expected_revenue, expost_dominance, monte_carlo_revenue,
    rank_families, DominanceReport, McEstimate, RankOptions, RevenueReport,
};
pub use securities::{
    check_admissible, check_steepness, FamilySpec, SecurityFamily, SecurityKind, SteepnessMode, SteepnessReport,
};
pub use theory::{
    check_mlr_single_crossing_preservation, check_ohlin, ConcaveFn, MlrPreservationReport, OhlinPart, OhlinReport,
    PiecewiseLinear, SingleCrossingPair, ValueDistribution,
};
