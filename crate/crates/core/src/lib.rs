//! Smart-home activity engine.
//!
//! Recognizes weighted-threshold complex activities from appliance traces and
//! annotation logs, infers a binary emotion and user-experience label for each
//! occurrence, and recommends the next activity of daily living with a
//! confidence vector over all known activities.
//!
//! Modules follow the processing order:
//! [`model`] definitions, [`ingest`], [`recognition`], [`affect`],
//! [`temporal`] patterns, [`recommender`], and [`evaluation`].

pub mod affect;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod recognition;
pub mod recommender;
pub mod temporal;
pub mod time;

pub use error::{Error, Result};
pub use model::{load_definitions, ComplexActivityDefinition, DefinitionSet};
