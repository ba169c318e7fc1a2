//! Frequency-modulated type-based multiple access (TBMA) for over-the-air
//! federated edge learning.
//!
//! Every device quantizes each model parameter to one of `N` levels and
//! transmits the tone assigned to that level. All devices transmit at once,
//! the channel adds the tones together with white Gaussian noise, and the
//! server runs a correlator bank to recover how many devices sent each level
//! (the *type* of the parameter). Any statistic of the type, the mean in
//! particular, can then be computed at the server.
//!
//! Module map:
//!
//! * [`quantizer`]: uniform `N`-level quantizer and midpoint reconstruction.
//! * [`modem`]: MFSK tone family, the DSB baseline modulator and PAPR.
//! * [`channel`]: superposition plus calibrated AWGN.
//! * [`receiver`]: correlator bank, type estimation, statistics from a type.
//! * [`feel`]: federated training harness with ideal, TBMA and DSB aggregation.
//! * [`dataio`]: IDX reader/writer, synthetic datasets and sharding.
//! * [`experiment`]: JSON-configured sweeps, CSV metrics, SVG chart, PAPR report.

pub mod channel;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod feel;
pub mod modem;
pub mod quantizer;
pub mod receiver;
pub mod rng;

pub use error::{Error, Result};
