use thiserror::Error;

/// Errors produced by the planning engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: {reason}")]
    ShapeMismatch { layer: usize, reason: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("split index {index} out of range for a network of {len} layers")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid choice for {field} in phase {phase}")]
    InvalidChoice { phase: usize, field: &'static str },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid hardware config: {0}")]
    InvalidHardware(String),

    #[error("views disagree: {0}")]
    ViewMismatch(String),

    #[error("{channels} fused channels are not divisible by {views} views")]
    NotDivisible { channels: usize, views: usize },

    #[error("no hard-feasible candidate in the population")]
    EmptyPopulation,

    #[error("search space has {size} descriptors, above the enumeration cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },

    #[error("no feasible descriptor in the search space")]
    NoFeasible,

    #[error("network has no view fusion layer")]
    NoFusionLayer,

    #[error("accuracy oracle has no record for descriptor {0}")]
    OracleMiss(String),

    #[error("invalid search config: {0}")]
    InvalidConfig(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::InvalidNetwork(_) => "invalid_network",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidChoice { .. } => "invalid_choice",
            Error::InvalidDescriptor(_) => "invalid_descriptor",
            Error::InvalidSpace(_) => "invalid_space",
            Error::InvalidHardware(_) => "invalid_hardware",
            Error::ViewMismatch(_) => "view_mismatch",
            Error::NotDivisible { .. } => "not_divisible",
            Error::EmptyPopulation => "empty_population",
            Error::SpaceTooLarge { .. } => "space_too_large",
            Error::NoFeasible => "no_feasible",
            Error::NoFusionLayer => "no_fusion_layer",
            Error::OracleMiss(_) => "oracle_miss",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse { .. } => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Deserialize JSON, reporting the path of the offending field on failure.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
