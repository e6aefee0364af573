//! The moment curve, polynomial curves over Z_p, derivative frames and ultrametric calculus.

mod curve;
mod newton;
mod poly;

pub use curve::{
    a_theta, convexity_check, derivative_frame, gamma_derivative, moment_curve_eval, moment_frame,
    rescaled_curve, vandermonde_valuation, ConvexityReport, DerivativeFrame, PolyCurve,
    VandermondeRecord,
};

pub use newton::{
    chain_scaling_check, ck_norm, ck_seminorm, ck_seminorm_on_ball, coincident_quotient,
    divided_difference, indicator_c1_separation, newton_quotient, newton_quotient_difference,
    BlackBox, ChainScalingRecord, NewtonQuotientTable, QuotientDifferenceRecord,
    UltrametricFunction,
};
pub use poly::Polynomial;
