//! The dataset D_t, the explained-set ledger and the hypothesis-class tree.

pub mod archive;
mod classes;
mod store;

pub use classes::{ClassForest, ClassNode, NodeKind, SplitTest};
pub use store::{rho_of_row, EvidenceStore, Ledger, Recorded, Transition};
