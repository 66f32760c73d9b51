//! Concrete combinatorial problems whose full quality distributions are
//! enumerated exhaustively.

pub mod cvrp;
pub mod portfolio;

pub use cvrp::{cvrp_cardinality, cvrp_enumerate, CvrpInstance, CvrpSolution};
pub use portfolio::{
    ingest_prices, portfolio_cardinality, portfolio_enumerate, synthetic_prices,
    PortfolioInstance, PortfolioTable,
};

/// Binomial coefficient, `0` when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}
