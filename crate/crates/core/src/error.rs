use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("duplicate object id `{id}` at {path}")]
    DuplicateId { id: String, path: String },

    #[error("object `{id}`: invalid size at {path}: {detail}")]
    InvalidSize { id: String, path: String, detail: String },

    #[error("object `{id}`: rotation at {path} is not a proper orthonormal matrix ({detail})")]
    InvalidRotation { id: String, path: String, detail: String },

    #[error("invalid field {path}: {detail}")]
    InvalidField { path: String, detail: String },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("scene `{scene_id}` has no camera trajectory")]
    MissingTrajectory { scene_id: String },

    #[error("optical axis is within tolerance of vertical; ground-plane projection is degenerate")]
    DegenerateProjection,

    #[error("object `{id}`: local x-axis is vertical in the unified frame, yaw is undefined")]
    GimbalDegenerate { id: String },

    #[error("anchors coincide in the ground plane (separation {separation:e} m)")]
    CoincidentAnchors { separation: f64 },

    #[error("triplet ids must be pairwise distinct, got ({0}, {1}, {2})")]
    RepeatedIds(String, String, String),

    #[error("scene has {0} objects; fewer than 3 objects cannot form a triplet")]
    TooFewObjects(usize),

    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),

    #[error("scene has {n} objects; exhaustive enumeration is limited to {limit}")]
    InstanceTooLarge { n: usize, limit: usize },

    #[error("every candidate triplet collapses to a single ground-plane point")]
    DegenerateLayout,

    #[error("unknown object id `{0}`")]
    UnknownObject(String),

    #[error("graph is not rigid; placement stalls at LCM {stalled_at}")]
    NonRigid { stalled_at: usize },

    #[error("LCM {index}: anchor `{id}` has not been placed")]
    MissingAnchor { index: usize, id: String },

    #[error("layouts cover different object ids")]
    MismatchedIds,

    #[error("layout has zero spatial variance")]
    DegenerateAlignment,

    #[error("referral target and anchors must be distinct objects")]
    InvalidReferralIds,

    #[error("object `{id}` has no first_frame")]
    MissingFirstFrame { id: String },

    #[error("could not parse answer: {0}")]
    NoParse(String),

    #[error("grid cell [{u}, {v}] is outside the 10x10 map")]
    OutOfRange { u: i64, v: i64 },

    #[error("length mismatch: {preds} predictions vs {gts} ground truths")]
    LengthMismatch { preds: usize, gts: usize },

    #[error("no samples to evaluate")]
    Empty,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}
