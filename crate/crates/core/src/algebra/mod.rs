//! Exact scalars, polynomials in the expansion parameter, and double
//! Fourier polynomials `sum c_{jk} cos(j tau) sin(k x)`.

mod lattice;
mod poly;
mod rational;
mod trig;

pub use lattice::{Lattice, Spatial};
pub use poly::{poly_eval, EpsPolynomial};
pub use rational::{format_rational, parse_rational, rat, to_f64, Rational};
pub use trig::{resonant_split, trig_add, trig_triple_product, TrigPoly};
