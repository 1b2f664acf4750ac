//! Second step: conditional correlation models on de-garched residuals.

mod estimate;
mod params;
mod path;
mod simulate;
mod spec;

pub use estimate::{estimate, estimate_all, estimate_with_warm_starts, CorrFitResult, EstimateOptions, FitDocument, NamedParam};
pub use params::{
    angles_to_correlation, angles_to_triangular, correlation_from_lower, correlation_to_angles, embed_unconstrained,
    logistic_transition, lower_pairs, triangular_to_correlation, CorrParams, DccParams, TransitionParams, DCC_SCALE,
    PSI_OFF, SLOPE_MAX,
};
pub use path::{
    build_path, correlation_loglik, correlation_targeting, dcc_recursion, CorrInputs, CorrelationPath, Targeting,
    TargetingOptions,
};
pub use simulate::{simulate, synthetic_exogenous, synthetic_regimes, Simulation, SimulationSetup};
pub use spec::{ModelKind, ModelSpec};
