use crate::scalar::Scalar;

/// Two evaluated sides of an identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<S> {
    pub lhs: S,
    pub rhs: S,
    pub holds: bool,
}

impl<S: Scalar> Comparison<S> {
    pub fn new(lhs: S, rhs: S, tol: f64) -> Self {
        let holds = lhs.close_to(&rhs, tol);
        Comparison { lhs, rhs, holds }
    }
}
