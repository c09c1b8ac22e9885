pub mod alp;
pub mod basis;
pub mod experiment;
pub mod linalg;
pub mod lp;
pub mod mdp;
pub mod par;
pub mod resolver;
pub mod rng;
