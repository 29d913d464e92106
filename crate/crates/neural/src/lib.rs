//! A small convolutional regressor from single-channel images to eight
//! values, with forward and backward passes written out by hand.

pub mod checkpoint;
pub mod network;
pub mod ops;
pub mod optim;
pub mod real;
pub mod tensor;
pub mod train;

pub use network::{Gradients, Mode, NetworkConfig, NetworkParams, ShapeChain, FLATTEN_200};
pub use real::Real;
pub use tensor::{NeuralError, Tensor};
pub use train::{predict, train, EpochStats, TrainConfig, TrainData};
