//! Simulation of holomorphic and antiholomorphic plane flows driven by entire
//! functions: finite-time escape detection and timing, level curves of
//! `Im G` with transit-time quadrature, and the escape experiments built on
//! them.

pub mod demos;
pub mod escape;
pub mod flow;
pub mod funcs;
pub mod json;
pub mod level;
pub mod ode;
pub mod quad;

pub use flow::{FlowKind, FlowSpec, IntegratorConfig, Termination, TimeDirection, Trajectory};
pub use funcs::{parse_expr, FuncExpr, Jet};
pub use num_complex::Complex64;
