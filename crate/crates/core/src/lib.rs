//! Occupancy priors for pedestrians on semantic grid maps.
//!
//! A cost over semantic classes is learned from demonstrated trajectories on
//! several maps with maximum-entropy inverse optimal control. On an unseen
//! map, trajectories are simulated between sampled endpoints under the learned
//! cost and their visits are accumulated into an occupancy distribution.
//!
//! ```
//! use occprior::{generate_dataset, initial_model, train_iocmm, iocmm_infer};
//! use occprior::{EndpointStrategy, Exec, GeneratorSpec, IocmmHyper};
//!
//! let spec = GeneratorSpec { width: 16, height: 16, trajectories_per_map: 5, ..Default::default() };
//! let data = generate_dataset(3, &spec, Exec::default()).unwrap();
//! let hyper = IocmmHyper { max_iters: 5, ..IocmmHyper::u4() };
//! let model = train_iocmm(&data[..2], &hyper, initial_model(&data[..2], &hyper).unwrap()).unwrap().model;
//! let pred = iocmm_infer(&data[2].map, &model, &hyper, EndpointStrategy::Learned, 1.0, 20).unwrap();
//! assert!((pred.occ.mass() - 1.0).abs() < 1e-9);
//! ```

pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod grid;
pub mod infer;
pub mod io;
pub mod irl;
pub mod render;
pub mod synth;

pub use dataset::{load_dataset, MapSample};
pub use error::{Error, Result};
pub use eval::{kl_divergence, leave_one_out, EvalConfig, LooReport, Method};
pub use exec::{mix_seed, stream_rng, Exec};
pub use grid::{Cell, ClassTable, Dims, OccupancyGrid, SemanticMap, Trajectory};
pub use infer::{baseline_class_prior, baseline_uniform, baseline_uniform_walkable, iocmm_infer, Inference};
pub use io::{Manifest, ManifestEntry};
pub use irl::{
    backward_pass, forward_pass, initial_model, train_iocmm, EndpointStrategy, IocmmHyper, Planner, Policy, ThetaModel,
};
pub use synth::{build_dataset, generate_dataset, generate_map, oracle_trajectories, GeneratorSpec};
