//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Element does not belong to the descriptor it was used with.
    DescriptorMismatch,
    /// Subgroup closure grew past the configured cap.
    ClosureExceedsBound { bound: usize },
    /// Malformed group descriptor or closure set.
    InvalidDescriptor(String),
    /// Graph or graph-of-groups invariant violation, with location.
    InvalidGog(String),
    /// Word is not consistently typed along its edge path.
    IllTypedWord(String),
    /// A pinch required a mono preimage outside the image table. Signals
    /// an internal inconsistency; cannot occur after the membership test.
    InverseNotComputable,
    /// Edge fails the collapse precondition.
    NotCollapsible(String),
    /// The requested certificate needs tree data outside the supplied ball.
    CertificateUnavailable(String),
    /// Folding produced a non-tree quotient; internal bug guard.
    NotATree(String),
    /// Operation requires a single-edge or single-loop shape.
    WrongShape(String),
    /// A bounded witness search ran out of budget; inconclusive, not failed.
    SearchBudgetExhausted(String),
    /// Hypotheses of a criterion fail; carries the failing hypothesis.
    NotApplicable(String),
    /// Pointwise stabilizer enumeration needs a finite edge group on the path.
    NoFiniteEdgeGroup,
    /// WPD enumeration requires a finite stabilizer at the base point.
    InfiniteStabilizerAtBase,
    /// Parameters do not describe a proper-divisor Baumslag-Solitar pair;
    /// carries the isomorphism type of the (finite or virtually cyclic)
    /// outer automorphism group.
    NotProperDivisor { iso_type: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DescriptorMismatch => write!(f, "element does not match the group descriptor"),
            Error::ClosureExceedsBound { bound } => {
                write!(f, "subgroup closure exceeds bound {bound}")
            }
            Error::InvalidDescriptor(msg) => write!(f, "invalid group descriptor: {msg}"),
            Error::InvalidGog(msg) => write!(f, "invalid graph of groups: {msg}"),
            Error::IllTypedWord(msg) => write!(f, "ill-typed word: {msg}"),
            Error::InverseNotComputable => {
                write!(f, "mono preimage missing from image table (internal inconsistency)")
            }
            Error::NotCollapsible(msg) => write!(f, "edge is not collapsible: {msg}"),
            Error::CertificateUnavailable(msg) => write!(f, "certificate unavailable: {msg}"),
            Error::NotATree(msg) => write!(f, "quotient is not a tree: {msg}"),
            Error::WrongShape(msg) => write!(f, "wrong graph shape: {msg}"),
            Error::SearchBudgetExhausted(msg) => write!(f, "search budget exhausted: {msg}"),
            Error::NotApplicable(msg) => write!(f, "criterion not applicable: {msg}"),
            Error::NoFiniteEdgeGroup => write!(f, "path has no finite edge group"),
            Error::InfiniteStabilizerAtBase => write!(f, "base point has infinite stabilizer"),
            Error::NotProperDivisor { iso_type } => {
                write!(f, "p does not properly divide q; the group is {iso_type}")
            }
        }
    }
}

impl core::error::Error for Error {}
