//! Symplectic hypergeometric groups over Q: construction from pairs of
//! cyclotomic-product polynomials, Zariski-density testing, integer
//! points, and the level and index of the arithmetic closure in Sp(n,Z).
//!
//! The pipeline runs in stages, each exposed as a module:
//!
//! 1. [`poly`] / [`matq`] / [`modmat`] — exact substrate (integer
//!    polynomials, rational matrices, matrices over Z/m).
//! 2. [`construct`] — enumerate admissible polynomial pairs and build the
//!    group generators (companion matrices).
//! 3. [`form`] — invariant symplectic form, base change to the standard
//!    form, integrality-defect minimization.
//! 4. [`density`] — Zariski density via transvection normal-closure
//!    spinning, and the exceptional-prime set.
//! 5. [`zpoints`] — integer points of the conjugated group by coset
//!    orbits on lattices.
//! 6. [`congruence`] — stabilizer chains over Z/m, level exponents, and
//!    the arithmetic-closure index.
//! 7. [`words`] — constructive membership in Sp(n,Z) over a standard
//!    elementary generating set.
//! 8. [`pipeline`] — end-to-end orchestration, reports, caching.
//!
//! All arithmetic is exact; randomized steps are seeded and reproducible.

pub mod congruence;
pub mod construct;
pub mod density;
pub mod error;
pub mod factor;
pub mod form;
pub mod matq;
pub mod modmat;
pub mod pipeline;
pub mod poly;
pub mod words;
pub mod zpoints;

pub use congruence::{closure_level_and_index, sp_order, stabilizer_chain, Budget, ClosureReport};
pub use construct::{build_group, enumerate_pairs, HypergroupData, PolyPair};
pub use density::{exceptional_primes, is_dense, DensityCertificate};
pub use error::{Error, Result};
pub use form::{invariant_form, normalize_group, symplectic_basechange, FormData};
pub use matq::{rational_kernel, span_dimension, RatMatrix, SpanField};
pub use modmat::ModMatrix;
pub use pipeline::{analyze, sweep, PipelineConfig, RowReport};
pub use poly::{cyclotomic, cyclotomic_product, cyclotomic_products_of_degree, IntPoly};
pub use words::{evaluate, express, standard_generators, SymplecticWord};
pub use zpoints::{integer_points, integrality_scale, verify_zpoints, IntegerPointsData};
