pub mod accountant;
pub mod corpus;
pub mod env;
pub mod eval;
pub mod mechanisms;
pub mod real;
pub mod syntax;
pub mod typeck;
pub mod verify;

/// Exact rational numbers used for literals, singleton types and ε-costs.
pub type Rational = num_rational::BigRational;
