use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;

use super::problem::{Mode, ProblemSpec};

const MAX_STEPS: usize = 200;

/// Sub/supersolution pair `s1·e ≤ s2·e`.
#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub s1: f64,
    pub s2: f64,
    #[serde(skip)]
    pub e: ScalarField,
    pub halvings: usize,
    pub doublings: usize,
}

impl Bracket {
    pub fn lower(&self) -> ScalarField {
        self.e.scale(self.s1)
    }

    pub fn upper(&self) -> ScalarField {
        self.e.scale(self.s2)
    }

    /// Re-checks both defining inequalities pointwise.
    pub fn verify(&self, op: &PaneitzOperator, prob: &ProblemSpec) -> Result<bool> {
        let pe = op.apply(&self.e)?;
        Ok(self.s1 <= self.s2
            && holds(prob, &pe, &self.e, self.s1, Side::Sub)
            && holds(prob, &pe, &self.e, self.s2, Side::Super))
    }
}

#[derive(Clone, Copy)]
enum Side {
    Sub,
    Super,
}

fn holds(prob: &ProblemSpec, pe: &ScalarField, e: &ScalarField, s: f64, side: Side) -> bool {
    pe.values()
        .iter()
        .zip(e.values())
        .enumerate()
        .all(|(i, (&pei, &ei))| {
            let lhs = s * pei;
            let rhs = prob.f_at(i, s * ei);
            let slack = 1e-12 * (lhs.abs() + rhs.abs());
            match side {
                Side::Sub => lhs <= rhs + slack,
                Side::Super => lhs + slack >= rhs,
            }
        })
}

/// Constant sub/supersolutions (`e ≡ 1`).
pub fn find_sub_super(op: &PaneitzOperator, prob: &ProblemSpec) -> Result<Bracket> {
    find_sub_super_along(op, prob, &ScalarField::constant(op.grid(), 1.0))
}

/// Sub/supersolutions of the form `s·e`: `s1` by halving from 1, `s2` by
/// doubling from 1. In source mode the supersolution range is bounded above,
/// so a finer geometric ladder is scanned when doubling misses it.
pub fn find_sub_super_along(op: &PaneitzOperator, prob: &ProblemSpec, e: &ScalarField) -> Result<Bracket> {
    e.same_grid(prob.a())?;
    if e.min() <= 0.0 {
        return Err(Error::InvalidProblem("bracket direction must be positive".into()));
    }
    let pe = op.apply(e)?;

    let mut s1 = 1.0;
    let mut halvings = 0;
    while !holds(prob, &pe, e, s1, Side::Sub) {
        halvings += 1;
        if halvings > MAX_STEPS {
            return Err(Error::NoBracket(format!(
                "no subsolution above 2^-{MAX_STEPS}"
            )));
        }
        s1 *= 0.5;
    }

    let mut s2 = 1.0;
    let mut doublings = 0;
    let mut found = holds(prob, &pe, e, s2, Side::Super);
    while !found && doublings < MAX_STEPS {
        doublings += 1;
        s2 *= 2.0;
        found = holds(prob, &pe, e, s2, Side::Super);
    }
    if !found && prob.mode() == Mode::Source {
        let ratio = 2f64.powf(1.0 / 16.0);
        s2 = s1;
        for _ in 0..16 * 64 {
            if holds(prob, &pe, e, s2, Side::Super) {
                found = true;
                break;
            }
            s2 *= ratio;
        }
    }
    if !found {
        let hint = if prob.b_is_zero() && op.weight().min() <= 0.0 {
            "; with B = 0 a supersolution needs a positive potential"
        } else {
            ""
        };
        return Err(Error::NoBracket(format!(
            "no supersolution below 2^{MAX_STEPS}{hint}"
        )));
    }
    Ok(Bracket {
        s1,
        s2: s2.max(s1),
        e: e.clone(),
        halvings,
        doublings,
    })
}
