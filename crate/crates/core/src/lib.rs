//! Numerical solution of Volterra integro-differential equations
//!
//! ```text
//! y'(x) = f(x, y) + ∫_{x0}^{x} K(x, y(t), t) dt
//! ```
//!
//! with an implicit and an explicit Euler–trapezium scheme, stability
//! analysis of both schemes on a two-parameter test equation, and Richardson
//! extrapolation for higher-order solutions and error control.
//!
//! ```
//! use vide_core::{build_mesh, registry_lookup, solve, Method, NewtonConfig, Problem};
//!
//! let entry = registry_lookup("example2", None).unwrap();
//! let mesh = build_mesh(0.0, 10.0, 207).unwrap();
//! let problem = Problem::from(entry.problem);
//! let traj = solve(&problem, &mesh, Method::Implicit, &NewtonConfig::default()).unwrap();
//! assert_eq!(traj.n_nodes(), 207);
//! assert!(traj.value(206).abs() < 2.0);
//! ```

pub mod error;
pub mod mesh;
pub mod newton;
pub mod problem;
pub mod quadrature;
pub mod registry;
pub mod richardson;
pub mod solver;
pub mod stability;

pub use error::{Result, VideError};
pub use mesh::{build_mesh, Mesh};
pub use nalgebra::{Complex, DMatrix};
pub use newton::{
    newton_solve, newton_system, newton_third_order, NewtonConfig, NewtonOutcome,
    NewtonSystemOutcome, NewtonVariant,
};
pub use problem::{reduce_order, KernelDependence, Problem, ScalarVide, SystemVide};
pub use quadrature::{trapezoid_window, window_prefix, CompensatedSum, HistoryView};
pub use registry::{linear_test_problem, registry_lookup, ProblemRegistryEntry, EXAMPLES};
pub use richardson::{
    build_tableau, min_nodes_for_stability, nodes_for_tolerance, RichardsonTableau,
    StabilityBracket, StabilityOptions, ToleranceOptions, ToleranceSearch,
};
pub use solver::{
    explicit_step, explicit_step_system, implicit_step, implicit_step_system, solve, solve_scalar,
    Method, Stepper, Trajectory, DIVERGENCE_LIMIT,
};
pub use stability::{
    analytic_test_solution, explicit_p, explicit_sequence, h_path, implicit_p, implicit_sequence,
    pair_eigenvalues, sweep_region, EigenPairing, GridSpec, HPath, StabilityGrid,
    TestEquationParams, Verdict,
};
