//! The non-recursive heterogeneous model: parameters, forward and reverse
//! passes, loss, gradient verification, optimizers and checkpoints.

mod checkpoint;
mod gradcheck;
mod grads;
mod loss;
mod net;
mod optim;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, TensorEntry};
pub use gradcheck::{grad_check, grad_check_synthetic, CoordinateError, GradCheckReport};
pub use grads::{grads, Gradients, Wrt};
pub use loss::{cross_entropy, loss};
pub use net::{
    mixture_weights, softmax_backward, ArchInput, DropoutMask, ForwardConfig, ForwardPass, Mixing, Model, Pass,
};
pub use optim::{Optimizer, OptimizerState};
pub use params::{init_params, ArchParams, Architecture, Linear, ModelParams};
