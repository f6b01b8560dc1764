//! Weighted belief propagation on the unrolled CRC-polar graph.
//!
//! One forward pass is shared by inference, loss evaluation and gradient
//! recording; see [`tape::Backend`].

mod forward;
mod io;
mod loss;
mod pe;
mod rmsprop;
pub mod tape;
mod train;
mod weights;

pub use forward::{forward_unrolled, ForwardOutput, Mode, Network, NeuralDecoder, Targets, Trace};
pub use io::{load_weights, load_weights_for, save_weights, weights_from_json, weights_to_json, WEIGHT_FORMAT_VERSION};
pub use loss::multiloss;
pub use pe::{weighted_pe_left, weighted_pe_right, PeWeights};
pub use rmsprop::{rmsprop_step, RmsPropConfig, RmsPropState};
pub use tape::Tape;
pub use train::{heldout_loss, train, train_with_progress, zero_codeword_llr, TrainConfig, TrainReport};
pub use weights::{count_weights, Granularity, Provenance, Scheme, WeightCount, WeightLayout, WeightMeta, WeightSet};
