//! Dense operator and superoperator algebra.

pub mod codec;
pub mod dense;
pub mod norms;
pub mod superop;
pub mod tensor;

pub use dense::{CMat, CVec};
pub use norms::{diamond_norm_estimate, induced_1to1_norm_estimate, AscentOptions, NormEstimate};
pub use superop::{from_gkls, ChoiMatrix, Generator, Gkls, Liouvillian, SuperOp, ValidityReport};
pub use tensor::{embed_operator, embed_superop, partial_trace, Layout, Op};
