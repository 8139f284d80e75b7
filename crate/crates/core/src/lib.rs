//! Nonlinear thermodynamic formalism for one-sided shifts over a finite alphabet.
//!
//! The central object is the nonlinear pressure
//!
//! ```text
//! sup_μ { h(μ) − g₋(τ₋(μ)) + g₊(τ₊(μ)) }
//! ```
//!
//! where `h` is the entropy relative to an a priori product measure, `τ±`
//! collect expectations of finitely many locally constant potentials and
//! `g±` are convex. The solver replaces `g±` by their affine minorants
//! (Legendre–Fenchel duality), which turns the problem into a two-person
//! zero-sum game whose payoff only involves *linear* pressures, i.e. Perron
//! roots of finite transfer matrices:
//!
//! ```text
//! P_NL(y₊, y₋) = P_L(y₊·φ₊ − y₋·φ₋) + g₋*(y₋) − g₊*(y₊)
//! P♭ = sup_{y₊} inf_{y₋} P_NL        P♯ = inf_{y₋} sup_{y₊} P_NL
//! ```
//!
//! `P♭` equals the nonlinear pressure, and the Gibbs measures of the
//! optimal approximating potentials are exactly the nonlinear equilibrium
//! measures. Every result can be checked against brute-force references in
//! [`oracle`].
//!
//! Module map:
//!
//! * [`convex`]: conjugates, subdifferentials, grid transforms, growth radii.
//! * [`measures`]: alphabets, cylinder potentials, Markov and mixture measures.
//! * [`ruelle`]: transfer matrices, Perron data, linear pressure, Gibbs chains.
//! * [`linearizer`]: the thermodynamic game and its solvers.
//! * [`transport`]: Δ-functionals, order parameters, Kantorovich problems.
//! * [`oracle`]: direct maximization and the entropy-function route.
//! * [`model_file`]: the versioned JSON model schema.

pub mod convex;
pub mod error;
pub mod ext;
pub mod linearizer;
pub mod measures;
pub mod model_file;
pub mod optim;
pub mod oracle;
pub mod ruelle;
pub mod tolerances;
pub mod transport;

pub use convex::{ConvexKind, ConvexSpec, DualPoint, GridFunction, GrowthCertificate, SubdiffSet};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use linearizer::{Equilibrium, GameSolution, ModelSpec, SolverConfig};
pub use measures::{AprioriAlphabet, CylinderPotential, MarkovMeasure, MixtureMeasure};
pub use ruelle::{RpfData, TransferMatrix};
pub use transport::{Coupling, DiscreteDualMeasure};
