//! The parameter-to-parameter convolutional network.
//!
//! A step maps normalized depth-`p` parameters (`1 x 2 x p`) to depth `p + 1`:
//!
//! 1. two up-sampling convolutions, 2x2 with padding 1 (16 then 64 filters),
//!    each followed by ReLU, giving `64 x 4 x (p + 2)`;
//! 2. `D` residual blocks, `x + conv3x3(relu(conv3x3(x)))`, shape preserving;
//! 3. a single 3x2 convolution without padding down to `1 x 2 x (p + 1)`.

mod conv;
mod io;
mod model;
mod tensor;
mod train;

pub use conv::{conv2d, ConvGrad, ConvLayer, FeatureMap};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, write_model, FORMAT_VERSION};
pub use model::{architecture, ppn_compose, ppn_forward, PpnModel, CLAMP_MAX, DEFAULT_BLOCKS, FEATURES, UP1_FILTERS};
pub use tensor::{denormalize, normalize, prediction_error, ParamTensor};
pub use train::{composed_loss, loss_and_gradient, train, train_with_progress, TrainConfig, TrainingSample};
