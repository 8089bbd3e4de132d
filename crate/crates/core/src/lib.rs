//! Counterpart models and a positive quantified temporal logic over them.
//!
//! Worlds carry many-sorted algebras; transitions carry per-sort partial
//! homomorphisms that say which elements survive a step and what they become.
//! Formulas are evaluated to sets of assignments, one set per world.

pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod format;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod sigterm;

pub use format::{parse_model, print_model, FormatError};
pub use logic::{Formula, FormulaInContext};
pub use model::{validate_model, CounterpartModel, ModelDecl, ModelError, TransitionId, WorldId};
pub use sigterm::{validate_signature, FoContext, Signature, SignatureDecl, SoContext, SortId, Term};
