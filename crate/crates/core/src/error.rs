use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("discs {i} and {j} overlap: center distance {distance} < 1")]
    Overlap { i: usize, j: usize, distance: f64 },
    #[error("empty input: at least one disc center is required")]
    EmptyInput,
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} out of domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

impl ParamError {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        ParamError::Domain {
            name,
            value,
            expected,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("fit window is empty: fewer than {needed} grid points have t >= {t_min} and >= {min_survivors} survivors")]
    WindowEmpty {
        needed: usize,
        t_min: f64,
        min_survivors: usize,
    },
    #[error("insufficient tail: {n_tail} sizes >= s_min (need {needed}) or no spread in tail values")]
    InsufficientTail { n_tail: usize, needed: usize },
    #[error("insufficient survivors: {got} paths survived (need {needed})")]
    InsufficientSurvivors { got: usize, needed: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance {tolerance:e} within {max_intervals} subintervals (error estimate {estimate:e})")]
    Failure {
        tolerance: f64,
        estimate: f64,
        max_intervals: usize,
    },
}
