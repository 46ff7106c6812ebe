//! Binary gradient boosting classifier.
//!
//! Trees are grown on the residuals `y - p` by greedy squared-error
//! splitting; each leaf then takes the Newton value
//! `sum(y - p) / sum(p (1 - p))` of its instances, and scores move by
//! `learning_rate * gamma`.
//!
//! ```
//! use gbc::booster::{train, TrainConfig};
//! use gbc::data::Dataset;
//!
//! let rows: Vec<Vec<f64>> = [1.3, 1.5, 3.0, 4.0, 6.5, 8.4].iter().map(|&v| vec![v]).collect();
//! let data = Dataset::from_rows(&rows, Some(vec![1, 0, 1, 0, 1, 0])).unwrap();
//! let (model, trace) = train(&data, &TrainConfig::default()).unwrap();
//! assert_eq!(trace.len(), 3);
//! let p = model.predict_proba(&[7.0]).unwrap();
//! assert!(p > 0.0 && p < 1.0);
//! ```

pub mod booster;
pub mod cli;
pub mod data;
pub mod error;
pub mod model_file;
pub mod node_math;
pub mod tree;

pub use booster::{train, Model, TrainConfig, TrainingTrace};
pub use data::Dataset;
pub use error::{DataError, Error, Result};
