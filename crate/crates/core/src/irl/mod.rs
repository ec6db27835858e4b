//! Maximum-entropy inverse optimal control over multiple maps.
//!
//! Step costs are `c(s) = r0 + theta . f(s)` with one-hot class features and
//! `theta` on the probability simplex. The planner maximizes the reward
//! `R(s) = -cost_scale * c(s)`; see [`IocmmHyper::cost_scale`].

mod endpoints;
mod features;
mod model;
mod plan;
mod rollout;
mod train;

pub use endpoints::{center_distance_scale, learn_endpoint_prior, sample_endpoints, EndpointSampler, EndpointStrategy};
pub use features::{empirical_feature_count, expected_feature_count};
pub use model::{exponentiated_step, IocmmHyper, ThetaModel};
pub use plan::{backward_pass, class_mapping, state_cost, Planner, Policy};
pub use rollout::{forward_pass, sample_path, Visitation};
pub use train::{initial_model, train_iocmm, IterationRecord, TrainLog, Trained};
