pub mod cnf;
pub mod features;
pub mod fol;
pub mod guidance;
pub mod harness;
pub mod learner;
pub mod metaloop;
pub mod models;
pub mod prover;
pub mod random;
