use crate::arith::Place;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("valuation of zero undefined")]
    ZeroValuation,
    #[error("use mod-8 test")]
    EvenPrimeLegendre,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime exceeds the 64-bit bound")]
    PrimeTooLarge,
    #[error("hilbert symbol arguments must be nonzero")]
    ZeroHilbertArgument,
    #[error("square class of zero undefined")]
    ZeroSquareClass,
    #[error("local power test requires t != 0 and m > 0")]
    BadPowerTest,
    #[error("cannot certify a complete factorization of {0}")]
    FactorTooLarge(String),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("polynomial must be nonconstant")]
    ConstantPolynomial,
    #[error("degree {0} unsupported: factorization is limited to degree <= 8")]
    DegreeTooLarge(usize),
    #[error("polynomial is inseparable")]
    Inseparable,
    #[error("a must be nonzero")]
    ZeroTwist,
    #[error("undecided at precision {precision} at place {place}: {detail}")]
    Undecided {
        place: Place,
        precision: u32,
        detail: String,
    },
    #[error("surjectivity precondition violated: {0}")]
    SurjectivityPrecondition(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
