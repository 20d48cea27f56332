//! Synthetic vessel shapes, inflow waveforms and an analytic WSS oracle.

pub mod dataset;
pub mod oracle;
pub mod shapes;

pub use dataset::{
    build_basis, case_name, gen_dataset, generate_all, generate_case, load_manifest, CaseEntry, CaseKind,
    DatasetManifest, GenConfig, SynthCase,
};
pub use oracle::{
    curvature_proxy, oracle_steady, oracle_tau, oracle_wss, spectral_derivative, tangent_frame, OracleParams,
    WaveTemplate,
};
pub use shapes::{canonical_tokens, make_canonical, passes_shape_audit, sample_shape, AmplitudeSchedule, Resolution};
