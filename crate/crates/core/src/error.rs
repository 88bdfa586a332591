use thiserror::Error;

/// Errors raised by mesh construction, problem setup, the time-steppers and
/// the analysis drivers built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VideError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    /// A vector-valued callable returned the wrong number of components.
    #[error("dimension mismatch: expected {expected} components, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("non-finite value {value} produced at node {node}")]
    Overflow { node: usize, value: f64 },

    /// The divergence guard tripped; the solution is blowing up.
    #[error("solution diverged at node {node}: |y| = {magnitude:e} exceeds {limit:e}")]
    Divergence { node: usize, magnitude: f64, limit: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NewtonConvergence { iterations: usize, residual: f64 },

    #[error("Newton derivative vanished at iterate {iterate} (|F'| = {derivative:e})")]
    SingularDerivative { iterate: f64, derivative: f64 },

    #[error("singular Newton Jacobian")]
    SingularJacobian,

    /// A step-level failure, annotated with the node being computed.
    #[error("step to node {node} failed: {source}")]
    Step {
        node: usize,
        #[source]
        source: Box<VideError>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("tolerance {eps:e} not reached below the cap of {cap} nodes (last estimate {estimate:e})")]
    ToleranceUnreachable { eps: f64, cap: usize, estimate: f64 },

    #[error("no stable node count found below the cap of {cap} nodes")]
    StabilityUnreachable { cap: usize },
}

impl VideError {
    pub(crate) fn at_node(self, node: usize) -> Self {
        match self {
            // already carries its node
            e @ (VideError::Overflow { .. }
            | VideError::Divergence { .. }
            | VideError::Step { .. }) => e,
            e => VideError::Step {
                node,
                source: Box::new(e),
            },
        }
    }

    /// Node index carried by the error, if any.
    pub fn node(&self) -> Option<usize> {
        match self {
            VideError::Overflow { node, .. }
            | VideError::Divergence { node, .. }
            | VideError::Step { node, .. } => Some(*node),
            _ => None,
        }
    }

    /// True for failures that mean the numerical solution is unstable.
    pub fn is_instability(&self) -> bool {
        match self {
            VideError::Overflow { .. } | VideError::Divergence { .. } => true,
            VideError::Step { source, .. } => source.is_instability(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, VideError>;
