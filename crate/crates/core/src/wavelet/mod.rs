//! Filters, scaling functions, periodic transforms and wavelet packets.

pub mod cascade;
pub mod dwt;
pub mod filter;
pub mod packet;

pub use cascade::{cascade_eval, CascadeSamples};
pub use dwt::{dwt_flat, dwt_periodic, dyadic_exponent, idwt_flat, idwt_periodic, MraDecomposition};
pub use filter::{make_filter, Family, WaveletFilter};
pub use packet::{dwt_tiling, packet_best_basis, NodeId, PacketTree};
