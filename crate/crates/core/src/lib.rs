//! Expansion and property-A diagnostics for finite graphs: Cheeger
//! constants, coboundary gaps in the l1 norm, kernel variation profiles,
//! operator symmetrisation, and non-amenability witnesses.

pub mod cheeger;
pub mod error;
pub mod family;
pub mod graph;
pub mod kernel;
pub mod l1;
pub mod linalg;
pub mod metric;
pub mod obstruction;
pub mod propa;
pub mod simplex;
pub mod symmetrise;

pub use cheeger::{CutResult, GapResult};
pub use kernel::{Kernel, KernelSpec, VariationProfile};
pub use error::{Error, Result};
pub use family::{FamilyDiagnostic, FamilySpec, GraphFamily, UnionSpace};
pub use graph::{Graph, GraphSpec};
pub use l1::{EdgeFunction, VertexFunction};
pub use metric::{Metric, MetricSpace, INFINITE};
pub use obstruction::{FamilyObstruction, LowerBoundReport, WitnessReport};
pub use propa::{PropaCertificate, PropaOptimum};
pub use symmetrise::{L2Kernel, PropagationOperator, SymmetrisationReport};
