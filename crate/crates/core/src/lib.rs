//! Multi-sender index coding over GF(2): side-information hypergraphs,
//! exact hyper-minrank search, code construction and verification, clique
//! bounds and an independent brute-force oracle.

pub mod bounds;
pub mod codec;
pub mod gf2;
pub mod hypergraph;
pub mod instance;
pub mod oracle;
pub mod solver;

pub use bounds::{clique_cover_upper, complement_clique_lower, CliqueCover, CoverMode, ImplementableClique};
pub use codec::{code_from_fitting, code_to_fitting, verify_code, LinearCode, VerifyMode};
pub use gf2::{BitMatrix, BitVector};
pub use hypergraph::{CompositeAdjacency, HyperEdge, SideInfoHypergraph, SubChoice};
pub use instance::{DerivedStats, Instance, InstanceError};
pub use oracle::{optimal_linear_code_bruteforce, OracleReport};
pub use solver::{complexity_exponents, hyperminrank, search_space_size, SolveOptions, SolveReport};
