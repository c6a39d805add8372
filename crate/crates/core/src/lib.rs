pub mod chain;
pub mod codes;
pub mod error;
pub mod formats;
pub mod groupoid;
pub mod oracle;
pub mod sigma;
pub mod suite;
pub mod toeplitz;
pub mod witness;

pub use chain::{Elem, FiniteGroup, GroupWord, ProfinitePoint, QuotientChain};
pub use codes::{BlockCode, BlockPermutation, CodePair, Comparison, ConflictCertificate, LanguageSet};
pub use error::{Error, Result};
pub use groupoid::{Arrow, EpVerdict, FactorPosition, Kernel};
pub use sigma::{LabelAssignment, Side, SigmaDatum, SubshiftHandle};
pub use toeplitz::{Cell, Skeleton, Stage, Window};
