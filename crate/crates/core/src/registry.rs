//! Named example problems from the linear test family
//! `y' = λ(y - 1) + γ ∫_0^x y(t) dt`, `y(0) = 2`.

use crate::error::{Result, VideError};
use crate::problem::ScalarVide;

/// Names accepted by [`registry_lookup`].
pub const REGISTRY_NAMES: [&str; 4] = ["example1", "example2", "example3", "test"];

/// The three worked examples, as `(name, λ, γ)`, all on `[0, 10]`.
pub const EXAMPLES: [(&str, f64, f64); 3] = [
    ("example1", -100.0, -0.1),
    ("example2", -14.0, -15.0),
    ("example3", -0.1, -650.0),
];

const EXAMPLE_INTERVAL: (f64, f64) = (0.0, 10.0);

/// A registered problem together with the `(λ, γ)` it was built from, so that
/// stability questions can be answered without differentiating anything.
#[derive(Debug, Clone)]
pub struct ProblemRegistryEntry {
    pub name: String,
    pub problem: ScalarVide,
    pub lambda: f64,
    pub gamma: f64,
}

impl ProblemRegistryEntry {
    pub fn interval(&self) -> (f64, f64) {
        (self.problem.x0(), self.problem.x_end())
    }

    /// Same entry on `[x0, x_end]`.
    pub fn with_interval(mut self, x0: f64, x_end: f64) -> Result<Self> {
        self.problem = self.problem.with_interval(x0, x_end)?;
        Ok(self)
    }
}

/// The linear test equation with `y(0) = 2` on `[x0, x_end]`, with exact
/// first and second derivatives attached.
pub fn linear_test_problem(lambda: f64, gamma: f64, x0: f64, x_end: f64) -> Result<ScalarVide> {
    if !lambda.is_finite() || !gamma.is_finite() {
        return Err(VideError::Domain(format!(
            "test parameters ({lambda}, {gamma}) must be finite"
        )));
    }
    Ok(ScalarVide::new(
        move |_, y| lambda * (y - 1.0),
        move |_, y, _| gamma * y,
        x0,
        x_end,
        2.0,
    )?
    .with_df_dy(move |_, _| lambda)
    .with_dk_dy(move |_, _, _| gamma)
    .with_d2f_dy2(|_, _| 0.0)
    .with_d2k_dy2(|_, _, _| 0.0))
}

/// Look up a named problem. `"test"` requires `(λ, γ)` and is built on
/// `[0, 10]`; use [`ProblemRegistryEntry::with_interval`] for another range.
pub fn registry_lookup(name: &str, params: Option<(f64, f64)>) -> Result<ProblemRegistryEntry> {
    let (x0, x_end) = EXAMPLE_INTERVAL;
    let (lambda, gamma) = if name == "test" {
        params.ok_or_else(|| {
            VideError::Domain("problem `test` needs (lambda, gamma) parameters".into())
        })?
    } else {
        let &(_, l, g) = EXAMPLES
            .iter()
            .find(|(n, _, _)| *n == name)
            .ok_or_else(|| VideError::UnknownProblem(name.to_string()))?;
        (l, g)
    };
    Ok(ProblemRegistryEntry {
        name: name.to_string(),
        problem: linear_test_problem(lambda, gamma, x0, x_end)?,
        lambda,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_two_parameters() {
        let e = registry_lookup("example2", None).unwrap();
        assert_eq!((e.lambda, e.gamma), (-14.0, -15.0));
        assert_eq!(e.interval(), (0.0, 10.0));
    }

    #[test]
    fn example_three_parameters() {
        let e = registry_lookup("example3", None).unwrap();
        assert_eq!((e.lambda, e.gamma), (-0.1, -650.0));
    }

    #[test]
    fn zero_test_problem_has_constant_solution() {
        let e = registry_lookup("test", Some((0.0, 0.0))).unwrap();
        // y = 2 makes both terms vanish
        assert_eq!(e.problem.f(3.0, 2.0), 0.0);
        assert_eq!(e.problem.kernel(3.0, 2.0, 1.0), 0.0);
        assert_eq!(e.problem.y0(), 2.0);
    }

    #[test]
    fn linear_family_at_the_initial_point() {
        for name in ["example1", "example2", "example3"] {
            let e = registry_lookup(name, None).unwrap();
            assert_eq!(e.problem.f(0.0, 2.0), e.lambda);
            assert_eq!(e.problem.kernel(0.0, 2.0, 0.0), 2.0 * e.gamma);
        }
    }

    #[test]
    fn lookup_errors() {
        assert_eq!(
            registry_lookup("example4", None).unwrap_err(),
            VideError::UnknownProblem("example4".into())
        );
        assert!(matches!(registry_lookup("test", None), Err(VideError::Domain(_))));
    }

    #[test]
    fn test_problem_on_caller_interval() {
        let e = registry_lookup("test", Some((-2.0, -1.0)))
            .unwrap()
            .with_interval(0.0, 1.0)
            .unwrap();
        assert_eq!(e.interval(), (0.0, 1.0));
    }
}
