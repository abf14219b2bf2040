//! Probability metrics, strongly mixing linear processes and plug-in
//! estimators, with Monte Carlo checks of uniform Glivenko-Cantelli and
//! qualitative robustness properties.

pub mod distributions;
pub mod error;
pub mod functionals;
pub mod lab;
pub mod metrics;
pub mod numeric;
pub mod processes;
pub mod prohorov;
pub mod theory;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/prohorov.md")]
    mod prohorov {}
    #[doc = include_str!("../../../book/src/processes.md")]
    mod processes {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    mod functionals {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/lab.md")]
    mod lab {}
}
