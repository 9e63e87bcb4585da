//! Computable existence and non-existence certificates and the bracket for
//! the critical coupling `λ*` of `P u = 1/u^p + λ u^q`.

mod existence;
mod lambda_star;
mod nonexistence;
mod tangency;

pub use existence::{b_norm_exponent, check_existence_cond, check_existence_ineq, cond_constant, ineq_phi_exponent};
pub use lambda_star::{
    lambda_star_bisect, lambda_star_bisect_with, lambda_star_bracket, lambda_star_bracket_with,
    lower_from_constant, BisectConfig, Evaluation, LambdaStarResult,
};
pub use nonexistence::{check_nonexistence, nonexistence_minimizer, printed_nonexistence_value};
pub use tangency::{tangency_constant, tangent_slope_root, Tangency};

use std::collections::BTreeMap;

use serde::Serialize;

/// Both sides of a certificate. `margin = rhs − lhs`, oriented so that a
/// positive margin means the certificate holds.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub ingredients: BTreeMap<String, f64>,
    /// Value of the formula as printed, when it differs from the one used.
    pub printed: Option<f64>,
    pub discrepancy: Option<f64>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub(crate) fn new(
        name: &str,
        satisfied: bool,
        lhs: f64,
        rhs: f64,
        ingredients: BTreeMap<String, f64>,
        notes: Vec<String>,
    ) -> Self {
        Self {
            name: name.to_string(),
            satisfied,
            lhs,
            rhs,
            margin: rhs - lhs,
            ingredients,
            printed: None,
            discrepancy: None,
            notes,
        }
    }
}
