//! Estimators over simulated ensembles: survival curves, tail exponents,
//! recurrence/transience verdicts, drift reports and phase sweeps.

mod drift;
mod survival;
mod sweep;
mod tail;
mod verdict;

pub use drift::{drift_report, log_spaced, DriftFlag, DriftRow, RATIO_BAND, SE_BAND};
pub use survival::{survival, time_grid, SurvivalCurve, SurvivalPoint, GRID_PER_DECADE};
pub use sweep::{phase_sweep, SweepRow, SweepSettings};
pub use tail::{
    default_window, hill_exponent, tail_exponent, tail_exponent_auto, TailEstimate, TailMethod,
    DEFAULT_WINDOW_DECADES, MIN_SURVIVORS, MIN_WINDOW_POINTS,
};
pub use verdict::{classify, Evidence, Verdict, VerdictKind};
