//! Online convex optimization on `[0,1]` with switching costs under frugal
//! information: one value/gradient pair per step, possibly one step stale
//! and with sign-preserving gradient noise.
//!
//! The crate provides, in layers:
//!
//! * [`functions`] — validated piecewise-quadratic convex cost functions and
//!   the assumption checks (convex, nonnegative, zero minimum on `[0,1]`,
//!   claimed smoothness/Lipschitz bounds);
//! * [`algorithm`] — the A-OBD update, the closed-form balance parameters δ
//!   for each information setting, noise models, and the run loop;
//! * `offline` — a dynamic-programming solver for the offline optimum, with
//!   a certified grid-resolution error bound;
//! * `analysis` — cost ledgers, competitive ratios, printed worst-case
//!   bounds, and per-step certificate checkers for each setting's guarantee;
//! * `adversary` — hard-instance games that force the lower bounds, and the
//!   stale-setting unbounded-ratio game;
//! * `experiments` — the simulation suite, parameter sweeps, CSV/SVG
//!   emitters, config files and the CLI.

pub mod adversary;
pub mod algorithm;
pub mod analysis;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod offline;
