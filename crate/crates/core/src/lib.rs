//! Safety verification for feed-forward ReLU networks via the DeepSDP
//! semidefinite formulation, solved by an in-repo primal-dual conic
//! interior-point method, with minimal polytope safety sets, rank-1
//! tightness certification, and an exact activation-pattern oracle.

pub mod acceptance;
pub mod conic;
pub mod formulation;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod problem;
pub mod tightness;
pub mod verify;
