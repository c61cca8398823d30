use thiserror::Error;

/// Errors raised while building or manipulating groups, representations,
/// fields and kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Cayley table is not square: row {row} has {len} entries, expected {order}")]
    NotSquare { row: usize, len: usize, order: usize },
    #[error("Cayley table is empty")]
    EmptyTable,
    #[error("{labels} labels supplied for a group of order {order}")]
    LabelCountMismatch { labels: usize, order: usize },
    #[error("table entry ({row}, {col}) = {value} is out of range for order {order}")]
    EntryOutOfRange { row: usize, col: usize, value: usize, order: usize },
    #[error("index 0 is not a two-sided identity: ({row}, {col}) holds {value}")]
    NoIdentity { row: usize, col: usize, value: usize },
    #[error("not a Latin square: {axis} {index} repeats element {value}")]
    NotLatinSquare { axis: &'static str, index: usize, value: usize },
    #[error("element {element} has no two-sided inverse")]
    NoInverse { element: usize },
    #[error("product is not associative for ({a}, {b}, {c})")]
    NotAssociative { a: usize, b: usize, c: usize },
    #[error("element index {index} out of range for group of order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("elements {elements:?} do not form a subgroup")]
    NotASubgroup { elements: Vec<usize> },
    #[error("subgroup belongs to a different group")]
    GroupMismatch,
    #[error("explicit section invalid: {reason}")]
    ExplicitSectionInvalid { reason: String },
    #[error("explicit double coset representatives invalid: {reason}")]
    ExplicitGammaInvalid { reason: String },
    #[error("action of complement element {element} is not an automorphism of the normal factor")]
    NotAutomorphism { element: usize },
    #[error("action is not a homomorphism at ({a}, {b})")]
    ActionNotHomomorphism { a: usize, b: usize },
    #[error("representation matrix for element {element} has shape {rows}x{cols}, expected {dim}x{dim}")]
    BadMatrixShape { element: usize, rows: usize, cols: usize, dim: usize },
    #[error("representation is not a homomorphism at ({a}, {b}): residual {residual:e}")]
    NotHomomorphism { a: usize, b: usize, residual: f64 },
    #[error("representation does not send the identity to I (residual {residual:e})")]
    IdentityNotMapped { residual: f64 },
    #[error("subgroup of order {order} is neither cyclic nor dihedral")]
    NotCyclicOrDihedral { order: usize },
    #[error("rotation frequency 0 gives a reducible representation; use the trivial representation")]
    FrequencyZero,
    #[error("element {element} is not in the stabilizer of double coset {dcoset}")]
    NotInStabilizer { element: usize, dcoset: usize },
    #[error("field violates the Mackey condition (residual {residual:e})")]
    NotMackey { residual: f64 },
    #[error("kernel violates the {form} constraint (residual {residual:e})")]
    NotInKernel { form: &'static str, residual: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("problem too large: {unknowns} unknowns exceeds the limit of {limit}")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("representation is not a permutation representation")]
    NotPermutationRep,
    #[error("representation is not orthogonal (residual {residual:e})")]
    NotOrthogonalRep { residual: f64 },
    #[error("two-argument kernel is not left-invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("bad catalog parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
