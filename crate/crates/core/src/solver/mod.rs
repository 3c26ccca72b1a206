//! Solvers for the torus equations and the Dirichlet problem on a ball.

pub mod ball;
pub mod manufactured;
pub mod smoothing;
pub mod torus;

pub use ball::{ball_on_torus, sample_on_ball, solve_dirichlet_ma_ball, solve_dirichlet_ma_ball_with, DirichletOptions, DirichletReport};
pub use manufactured::manufacture_rhs;
pub use smoothing::SmoothingSequence;
pub use torus::{solve_cma_torus, solve_n1ma_torus, solve_torus, Equation, SolveReport, TorusSolveOptions};
