//! The full programmable weight state of the accelerator.

use crate::conv::KernelSet;
use crate::drtp::BMatrix;
use crate::fc::{WeightsHidden, WeightsOut};

/// Convolution kernels, both fully-connected layers and the binary
/// sign-selection matrix: everything the weight archive carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkWeights {
    pub kernels: KernelSet,
    pub w_hid: WeightsHidden,
    pub w_out: WeightsOut,
    pub b: BMatrix,
}

impl NetworkWeights {
    /// Random fixed kernels, zeroed plastic weights, seeded sign matrix:
    /// the reset state for online learning.
    pub fn online_init(kernel_seed: u64, b_seed: u64) -> Self {
        NetworkWeights {
            kernels: crate::conv::init_kernels_random(kernel_seed),
            w_hid: WeightsHidden::zeroed(),
            w_out: WeightsOut::zeroed(),
            b: crate::drtp::init_b_matrix(b_seed),
        }
    }
}
