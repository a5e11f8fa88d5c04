//! Cold-start recommendation: attribute encoders with attention fusion, graph
//! propagation over the user-item graph, and joint cross-entropy plus InfoNCE
//! training, with the evaluation harness around it.

pub mod autodiff;
pub mod dataset;
pub mod evaluation;
pub mod model;
pub mod training;
