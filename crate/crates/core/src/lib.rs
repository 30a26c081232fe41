//! Super-replication prices in finite-state markets and numerical
//! verification of their convex-duality representation.

pub mod cli;
pub mod cones;
pub mod extended;
pub mod linalg;
pub mod lp;
pub mod market;
pub mod measures;
pub mod pricing;
pub mod scalar;
pub mod utility;

pub use scalar::{Rational, Real, Scalar};

pub type Market = market::MarketModel<f64>;
pub type ExactMarket = market::MarketModel<Rational>;
pub type Utility = utility::UtilityFunction<f64>;
pub type Conjugate = utility::ConjugatePair<f64>;
pub type Polytope = measures::MeasurePolytope<f64>;
pub type ExactPolytope = measures::MeasurePolytope<Rational>;
pub type Density = measures::MeasureDensity<f64>;
pub type Cone = cones::PolyCone<f64>;
pub type ExactCone = cones::PolyCone<Rational>;
