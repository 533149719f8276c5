//! Minimal computer-algebra kernel: parse, differentiate, normalize, test
//! for zero, and numerically evaluate scalar expressions over a chart's
//! coordinates and parameters.

mod context;
mod deriv;
mod eval;
mod normal;
mod parser;
mod tree;
mod zero;

pub use context::{Context, SymbolId};
pub use parser::parse;
pub use tree::{Expr, Function};
pub use zero::{
    is_zero, is_zero_guarded, Sampler, SamplingConfig, Witness, ZeroVerdict, DEFAULT_SEED,
};
