//! The domain-adaptation network: a shared rating-pattern extractor, one
//! predictor head per domain and a domain classifier behind an optional
//! gradient reversal layer.

mod grl;
mod interleave;
mod network;
mod train;

pub use grl::{grl, GradientReversal};
pub use interleave::{interleave, interleave_order};
pub use network::{
    bce, bce_grad, classifier_accuracy, darec_loss, loss_from_outputs, ClassifierPath, DARecOutputs, DARecParams,
    DARecShape, LossParts, LossWeights, Sample, Variant, PROB_CLAMP,
};
pub use train::{train_darec, train_idarec, train_udarec, DARecConfig, DARecEpoch, TrainedDARec};
