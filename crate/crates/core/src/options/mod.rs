//! Synthetic call-option chains standing in for exchange data.

mod data;
mod pricing;

pub use data::{
    generate_dataset, load_csv, save_csv, split_and_normalize, Dataset, GeneratorConfig, NormStats, OptionQuote,
    CSV_HEADER, FEATURE_NAMES,
};
pub use pricing::{
    binomial_american_call, black_scholes_call, black_scholes_call_with_yield, normal_cdf, DAYS_PER_YEAR,
};
