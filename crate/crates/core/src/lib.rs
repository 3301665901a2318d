//! Nodal radial solutions of the Lane-Emden problem on the unit ball,
//! the spectrum of the linearized operator, and the limit objects that
//! govern both near the critical Sobolev exponent.

pub mod angular;
pub mod asymptotics;
pub mod estimates;
pub mod limit;
pub mod morse;
pub mod ode;
pub mod problem;
pub mod quad;
pub mod radial;
pub mod root;
pub mod schrodinger;
pub mod spectral;
pub mod tridiag;

pub use problem::{critical_exponent, sphere_area, LaneEmden, ProblemSpec, SpecError};
pub use radial::{integrate_ivp, locate_nodes, solve_m_nodal, NodalData, RadialProfile};
