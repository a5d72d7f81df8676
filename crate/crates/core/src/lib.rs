pub mod gate;
pub mod pauli;
pub mod tableau;
pub mod densesim;
pub mod circuit;
pub mod metrics;
pub mod bounds;
pub mod prep;
