pub mod allocation;
pub mod auction;
pub mod coins;
pub mod demand;
pub mod error;
pub mod harness;
pub mod instance;
pub mod items;
pub mod mechanism;
pub mod oracle;
pub mod price;
pub mod price_tree;
pub mod rational;
mod scaled;
pub mod trace;
pub mod valuation;

pub use error::{Error, Result};
pub use items::ItemSet;
pub use price::PriceVector;
pub use rational::Rational;
pub use valuation::{AdditiveClause, BudgetAdditiveValuation, Valuation, XosValuation};
