//! ANOVA, Levene, Tukey HSD and the numerics behind them.

mod anova;
mod descriptive;
mod special;
mod tukey;

pub use anova::{anova_two_way, levene_test, AnovaTable, BalancedTable, LeveneResult, SourceRow};
pub use descriptive::Welford;
pub use special::{f_upper_tail, incomplete_beta, ln_gamma, normal_cdf, t_two_sided};
pub use tukey::{studentized_range_critical, studentized_range_upper_tail, tukey_hsd, TukeyPair};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("non-finite input")]
    NonFinite,
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("unbalanced design: {0}")]
    Unbalanced(String),
    #[error("continued fraction did not converge at x={x}, a={a}, b={b}")]
    NoConvergence { x: f64, a: f64, b: f64 },
}
