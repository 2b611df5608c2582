//! Finite-population causal experiments.
//!
//! A fixed population of individuals carries binary attributes and a pair of
//! potential-outcome probabilities per individual: `tau` (response if treated)
//! and `nu` (response if untreated). On top of it this crate provides
//!
//! - observational sampling with replacement and randomized controlled trials
//!   (sampling without replacement followed by a uniform treated subset),
//! - closed-form population quantities and the trial estimators,
//! - an exact layer that enumerates the space of (sample, treated-set) pairs and
//!   checks the closed forms with rational arithmetic, plus the hypergeometric
//!   overlap distribution and its tail bounds,
//! - 2x2 contingency tables with stratification and reversal/masking detection,
//! - binary DAG generative models with exact joints, conditioning and
//!   intervention by graph mutilation.

pub mod dagmodel;
pub mod error;
pub mod exact;
pub mod population;
pub mod rng;
pub mod tables;
pub mod trial;

pub use dagmodel::{BinaryDag, JointDist, PartialAssignment};
pub use error::{Error, Result};
pub use exact::{ExactDist, Hypergeometric};
pub use num_rational::BigRational;
pub use population::{AttributeView, Population, PopulationSummary};
pub use rng::SeededRng;
pub use tables::{StratifiedTables, Table2x2};
pub use trial::{ObservationalSample, TrialOutcome};
