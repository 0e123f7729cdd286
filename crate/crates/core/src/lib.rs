//! Bounded model checking of HyperLTL formulas by reduction to QBF.

pub mod hyperltl;
pub mod kripke;
pub mod oracle;
pub mod circuit;
pub mod sat;
pub mod qbf;
pub mod encoder;
pub mod driver;
pub mod models;

pub use hyperltl::{
    classify_fragment, negate, parse_formula, to_nnf, Atom, Body, FormulaError, Fragment,
    HyperFormula, Quantifier,
};
pub use kripke::{parse_kripke, KripkeBuilder, KripkeError, KripkeStructure, ModelMap, TracePrefix};
pub use oracle::{check_bounded, OracleError, Semantics, Unrolling};
pub use qbf::{emit_qcir, parse_qcir, solve, PrenexQBF, QbfError, SolveResult};
pub use encoder::{assemble_qbf, EncodeError, Encoding, VarLayout};
pub use driver::{
    check, verify_witness, CheckConfig, DriverError, Interpretation, Mode, Report, SolverChoice,
    Verdict,
};
pub use models::{
    builtin_spec, gen_bakery, gen_grid, gen_nonrepudiation, parse_grid_map, GridMap, ModelError,
    NonrepVariant, SpecEntry,
};
