//! Correlation estimation, CHSH, Bell-locality verification and the
//! mutual-information computations.

pub mod correlations;
pub mod locality;
pub mod mutual_info;
pub mod quadrature;

pub use correlations::{
    chsh, estimate_correlations, pr_box_table, singlet_correlation, singlet_table, Cell, ChshValue,
    CorrelationTable, DetectionTally, EstimateOptions,
};
pub use locality::{verify_bell_local, LocalityCheck, LocalityReport};
pub use mutual_info::{
    gg_closed_form, mi_exact_finite, mi_finite_settings_tb, mi_gg_quadrature, mi_gg_uniform,
    mi_tb_quadrature, MIEstimate, MIMethod, DEFAULT_PANELS,
};
