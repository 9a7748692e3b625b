use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid space: {0}")]
    Space(String),

    #[error("dyadic construction violates {axiom}: {detail}")]
    Construction { axiom: &'static str, detail: String },

    #[error("ball at center {center} with radius {radius} is not covered by any of {systems} systems")]
    Uncovered { center: usize, radius: f64, systems: usize },

    #[error("no cube of the adjacent systems sandwiches the ball at {center} with radius {radius}")]
    NoContainingCube { center: usize, radius: f64 },

    #[error("witness carving reached only {achieved} of the target {target} along cube chain {chain:?}")]
    Sparsify { target: f64, achieved: f64, chain: Vec<usize> },

    #[error("recursion exceeded depth {depth} at {context}")]
    Recursion { depth: usize, context: String },

    #[error("p-norm iteration stopped after {iterations} steps with bounds [{lower}, {upper}]")]
    NoConvergence { lower: f64, upper: f64, iterations: usize },

    #[error("eps = {eps} is below the finite-scale floor {floor}")]
    Infeasible { eps: f64, floor: f64 },

    #[error("profile is VMO-flat at this resolution: modulus {modulus} vs BMO norm {bmo} (longest chain {chain_len})")]
    VmoFlat { modulus: f64, bmo: f64, chain_len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
