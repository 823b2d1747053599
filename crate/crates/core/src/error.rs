//! Crate-wide error type.
//!
//! Every validation and solver failure is a typed variant; no operation
//! panics on bad input.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("abscissas must be strictly increasing: x[{index}] = {value} does not exceed its predecessor")]
    NonIncreasingAbscissas { index: usize, value: f64 },

    #[error("dataset has {nodes} nodes; at least 4 are required")]
    TooFewNodes { nodes: usize },

    #[error("non-finite coordinate in node {index}")]
    NonFiniteValue { index: usize },

    #[error("domain {domain} spans {span} region(s); every domain must span at least 2")]
    DomainTooSmall { domain: usize, span: usize },

    #[error(
        "region {region} (length {region_len}) is not shorter than its domain (length {domain_len})"
    )]
    RegionNotSmallerThanDomain {
        region: usize,
        region_len: f64,
        domain_len: f64,
    },

    #[error("index out of range: {what}")]
    IndexOutOfRange { what: String },

    #[error("factor {which} on region {region} has sup |value| = {sup}, which is not < 1")]
    FactorNotContractive {
        region: usize,
        which: &'static str,
        sup: f64,
    },

    #[error("invalid factor function: {reason}")]
    InvalidFactor { reason: String },

    #[error("map is not a contraction: |slope| = {ratio} >= 1")]
    NotContractive { ratio: f64 },

    #[error("contractivity norm S_bar = {s_bar} is not < 1; the vertical maps do not contract")]
    ContractionBoundExceeded { s_bar: f64 },

    #[error("endpoint condition violated on region {region}: residual {residual}")]
    EndpointConditionViolated { region: usize, residual: f64 },

    #[error("region {region} is contained in no assigned domain; its transition row is empty")]
    UnreachableRegion { region: usize },

    #[error("x = {x} lies outside the domain interval of region {region}")]
    OutOfDomain { region: usize, x: f64 },

    #[error("no convergence after {iterations} iterations; last residual {residual}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("resolution {resolution} is invalid; need a power of two plus one, at least 257")]
    InvalidResolution { resolution: usize },

    #[error("alpha = {alpha} is outside (0, 1)")]
    InvalidAlpha { alpha: f64 },

    #[error("hypothesis violated{}: omega + omega_tilde = {value} must be < {limit}",
        region.map(|r| format!(" on region {r}")).unwrap_or_default())]
    HypothesisViolated {
        region: Option<usize>,
        value: f64,
        limit: f64,
    },

    #[error("computed Holder exponent {tau} is not positive")]
    NonPositiveExponent { tau: f64 },

    #[error("oscillation scales are insufficient: {reason}")]
    InsufficientScales { reason: String },

    #[error("argument outside domain: {reason}")]
    DomainError { reason: String },

    #[error("perturbation moved an endpoint abscissa")]
    EndpointMoved,

    #[error("perturbed abscissas are not strictly increasing")]
    OrderViolated,

    #[error("no valid perturbation found after {attempts} attempts: {reason}")]
    PerturbationRejected { attempts: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
