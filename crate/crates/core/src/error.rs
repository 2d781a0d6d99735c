use alloc::string::String;

/// Failures while validating obstacles or building a decomposition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecompError {
    #[error("workspace bounds are empty or not finite")]
    InvalidBounds,
    #[error("obstacles {first} and {second} overlap")]
    OverlappingObstacles { first: usize, second: usize },
    #[error("obstacle {index} is degenerate: {reason}")]
    DegenerateObstacle { index: usize, reason: &'static str },
    #[error("obstacle {index} leaves the workspace bounds")]
    ObstacleOutOfBounds { index: usize },
    #[error("no free space remains after removing obstacles")]
    EmptyFreeSpace,
    #[error("point lies inside an obstacle")]
    PointInObstacle,
    #[error("point lies outside the workspace")]
    PointOutOfBounds,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("start configuration is not in free space")]
    StartInObstacle,
    #[error("goal configuration is not in free space")]
    GoalInObstacle,
    #[error("query dimension does not match the decomposition")]
    DimensionMismatch,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightsError {
    #[error("weight file schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: alloc::vec::Vec<usize>,
        found: alloc::vec::Vec<usize>,
    },
    #[error("weights were trained for feature packing `{found}`, planner uses `{expected}`")]
    FeatureVersionMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GnnError {
    #[error("graph features do not match the weight header ({0})")]
    FeatureShape(&'static str),
    #[error("non-finite activation in {0}")]
    NonFiniteActivation(&'static str),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("malformed corridor: {0}")]
    MalformedCorridor(&'static str),
    #[error("invalid sampling parameters: {0}")]
    InvalidSampling(&'static str),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("corridor budget must be at least 1")]
    InvalidBudget,
    #[error("goal cell is unreachable from the start cell")]
    NoCorridor,
    #[error("no solution found")]
    NoSolution,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CbfError {
    #[error("barrier is already violated at the initial pose (h = {0})")]
    InfeasibleStart(f64),
    #[error("invalid barrier configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("guarded execution needs a planar corridor")]
    NotPlanar,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

/// Umbrella error for the end-to-end pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Cbf(#[from] CbfError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
