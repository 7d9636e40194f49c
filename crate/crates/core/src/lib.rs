//! Stratified spaces as finite labelled incidence posets.
//!
//! The crate models a stratified space by its [`Skeleton`]: the strata as
//! labelled atoms (dimension, compactness, connectedness) ordered by
//! adherence. On top of that it provides the associated graph, the embedding
//! hierarchy, pushouts along strong embeddings, decomposition into basic
//! pieces, pseudomanifold links and directed towers, plus the `.strat` text
//! format used by the CLI.

pub mod amalgamation;
pub mod decomposition;
pub mod dsl;
pub mod generate;
pub mod graphs;
pub mod limits;
pub mod morphisms;
pub mod pseudomanifold;
pub mod skeleton;

pub use graphs::{hasse_graph, StratGraph};
pub use morphisms::{Classification, Declarations, MorphClass, StrataMorphism};
pub use skeleton::{Dim, RawSkeleton, Skeleton, StrataSubset, StratumId, StratumLabel};
