//! Entropy production, Young measures, div-curl and the 2-D compensated
//! quadratic.

pub mod compensated;
pub mod divcurl;
pub mod production;
pub mod windows;
pub mod young;

pub use compensated::{
    choose_c, compensated_d, weak_limit_f11, CompensatedQuad, CompensatedSummary,
};
pub use divcurl::{div_curl_test, tartar_pairs};
pub use production::{
    decompose_production, entropy_production_total, time_derivative_l1, EntropyProductionSplit,
};
pub use windows::WindowLattice;
pub use young::{dirac_concentration, young_flux_defect, young_histograms, YoungHistogramSet};
