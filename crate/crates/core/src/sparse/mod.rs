//! Sparse families and operators, sparsity audits and the constructive
//! sparse domination of product-kernel operators.

mod certificate;
mod cube;
mod cz;
mod exceptional;
mod family;
mod operator;

pub use certificate::{
    build_sparse_domination, covering_roots, pointwise_constant, sparse_bound, CzSummary, DominationCertificate,
    RecursionStats, StoredCertificate,
};
pub use cube::SparseCube;
pub use cz::{audit_cz, cz_decompose, CzAudit};
pub use exceptional::{exceptional_set, ExceptionalProfile, SparseBuildParams};
pub use family::{verify_sparsity, SparseFamily, SparsityAudit};
pub use operator::{comp_sparse_check, cube_lr_average, sparse_apply, tilde_sparse_apply};
