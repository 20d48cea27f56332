//! Error metrics, image similarity, derived hemodynamic indices and
//! modal low-pass smoothing.

mod errors;
mod hemo;
mod render;
mod report;
mod smooth;
mod ssim;

pub use errors::{max_frame_norm, mse, rl2, rl2_star, rl2_star_curve, Rl2};
pub use hemo::{derive_hemo, HemoFields, RRT_MAX};
pub use render::{default_views, min_max, ssim_rendered, Renderer, View, DEFAULT_SIZE, DEFAULT_VIEWS};
pub(crate) use report::csv_err;
pub use report::{evaluate, EvalOptions, MetricsReport, SUMMARY_COLUMNS};
pub use smooth::{highfreq_energy, highfreq_energy_series, lowpass_series, lowpass_smooth};
pub use ssim::{field_range, square_image, ssim, ssim_padded, Image};
