//! Node, edge and inflow-waveform input features.

pub mod geometry;
pub mod waveform;

pub use geometry::{
    case_eigs, encode_geometry, CaseEigs, CoordStats, EncodingBundle, EDGE_WIDTH, I_TRUNC, J_TRUNC, OTHER_WIDTH,
    PE_WIDTH, SE_WIDTH,
};
pub use waveform::{
    encode_waveform, mask_temporal, slice_time, waveform_derivatives, Waveform, WaveformEncoder, WaveformFeatures,
};
