//! Numerical substrate: expression DSL, jets, fields, quadrature, the 2-D
//! Poisson solver and the ODE integrator.

pub mod expr;
pub mod field;
pub mod grid;
pub mod jet;
pub mod ode;
pub mod poisson;
pub mod quadrature;

pub use expr::{evaluate_jet, parse_expression, EvalError, Expr, ParseError, Point, Var};
pub use field::{Field, FieldError, Interp2};
pub use grid::{cumulative_time_integral, sample, Axis, Grid3, GridError, GridField};
pub use jet::Jet;
pub use ode::{integrate_ivp, IvpError, OdeControl, OdeErrorKind, Trajectory};
pub use poisson::{solve_poisson_2d, PoissonError, PoissonMethod, PoissonOptions, PoissonSolution};

/// Variables allowed in fields over (x1, x2, t).
pub const XT_VARS: [Var; 3] = [Var::X1, Var::X2, Var::T];
