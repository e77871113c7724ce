use thiserror::Error;

use crate::spaces::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A point was handed to a space it does not belong to.
    #[error("point {point} is not a member of {space}")]
    Domain { point: Point, space: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A Cayley table failed one of the group axioms.
    #[error("not a group: {0}")]
    Group(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    /// A law the construction relies on does not hold for the supplied map.
    #[error("violated hypothesis ({law}): {detail}")]
    ViolatedHypothesis { law: String, detail: String },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("eps {requested:e} needs level {level} (max 40); best achievable error is {achievable:e}")]
    EpsTooSmall {
        requested: f64,
        level: u32,
        achievable: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn hypothesis(law: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::ViolatedHypothesis {
            law: law.into(),
            detail: detail.into(),
        }
    }
}
