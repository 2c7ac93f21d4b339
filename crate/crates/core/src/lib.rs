pub mod geom;
pub mod grid;
pub mod vectorize;
pub mod features;
pub mod ensemble;
pub mod indicative;
pub mod pipeline;
