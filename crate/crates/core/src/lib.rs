//! Passive 3D localization of an airborne target in an RIS-assisted
//! bi-static mmWave MIMO link.
//!
//! The library covers the full simulation and analysis chain:
//!
//! * [`geometry`] — node positions, path loss, direction angles under one
//!   fixed convention, and the position-to-angle Jacobian.
//! * [`array`] — uniform planar array response vectors and their Kronecker
//!   compositions for the base station, the RIS, and the receiving UE.
//! * [`channel`] — the five ground-truth line-of-sight channels and the two
//!   cascaded rank-one channels with their complex gains.
//! * [`sounding`] — dual-beam pilot design at the BS, RIS phase profiles,
//!   and the effective training matrices seen by the receiver.
//! * [`rxsignal`] — synthesis of the received multi-slot pilot block with
//!   complex Gaussian noise and known-interference bookkeeping.
//! * [`fisher`] — analytic mean-signal derivatives, the Fisher information
//!   matrix over the 10 channel parameters, and the position error bound.
//! * [`estimator`] — the three-stage localizer: coordinate gradient descent
//!   channel factorization, 2D angle extraction, LS triangulation.
//! * [`sweep`] / [`config`] — Monte Carlo sweep harness, scenario JSON
//!   ingestion, and CSV emission.
//!
//! All core computations are pure functions over immutable inputs and are
//! deterministic given explicit seeds, so sweeps parallelize trivially and
//! reproduce byte-identically regardless of thread count.

pub mod array;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod geometry;
pub mod rxsignal;
pub mod seeds;
pub mod sounding;
pub mod sweep;

pub use array::{ArraySet, Plane, SteeringVector, UpaConfig};
pub use channel::{CascadePair, ChannelSet};
pub use error::{Error, Result};
pub use estimator::{
    AngleEstimates, CgdConfig, ChannelEstimates, InitPolicy, LocalizationResult, SearchGrid,
    StepPolicy,
};
pub use fisher::{FimModel, FimResult, ParamVector, PebMethod};
pub use geometry::{DirectionAngles, JacobianT, Point3, Scenario};
pub use rxsignal::ReceivedBlock;
pub use sounding::{RisPolicy, SkySector, SoundingFrames};
pub use sweep::{SweepConfig, SweepRow};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex<f64>;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex>;

/// Dense complex row vector.
pub type CRowVector = nalgebra::RowDVector<Complex>;
