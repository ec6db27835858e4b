//! Start/goal placement for simulated trajectories.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::dataset::MapSample;
use crate::error::{Error, Result};
use crate::grid::{Cell, Dims};
use crate::irl::plan::{class_mapping, Planner};
use crate::irl::ThetaModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointStrategy {
    /// Per-class endpoint frequencies learned from demonstrations.
    Learned,
    /// `exp(-c(s) / tau)` over the state cost.
    SoftmaxCost,
}

impl FromStr for EndpointStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "learned" => Ok(EndpointStrategy::Learned),
            "softmax" | "softmax_cost" => Ok(EndpointStrategy::SoftmaxCost),
            other => Err(format!("unknown endpoint strategy {other:?} (learned|softmax)")),
        }
    }
}

impl fmt::Display for EndpointStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndpointStrategy::Learned => "learned",
            EndpointStrategy::SoftmaxCost => "softmax",
        })
    }
}

/// Add-one smoothed class frequencies of trajectory first and last states,
/// in the order of `classes`.
pub fn learn_endpoint_prior(data: &[MapSample], classes: &[String]) -> Result<Vec<f64>> {
    let mut counts = vec![1.0; classes.len()];
    let mut seen = 0usize;
    for sample in data {
        let mapping = class_mapping(&sample.map, classes)?;
        for t in &sample.trajs {
            for s in [t.start(), t.goal()] {
                counts[mapping[sample.map.class_at(s)]] += 1.0;
                seen += 1;
            }
        }
    }
    if seen == 0 {
        return Err(Error::EmptyDataset);
    }
    let total: f64 = counts.iter().sum();
    Ok(counts.into_iter().map(|c| c / total).collect())
}

/// Multiplier `1 + d(s, center) / d_max` favouring states far from the centre.
pub fn center_distance_scale(dims: Dims, s: Cell) -> f64 {
    let cx = (dims.width as f64 - 1.0) / 2.0;
    let cy = (dims.height as f64 - 1.0) / 2.0;
    let d_max = cx.hypot(cy);
    if d_max == 0.0 {
        return 1.0;
    }
    let d = (s.x as f64 - cx).hypot(s.y as f64 - cy);
    1.0 + d / d_max
}

/// Draws distinct `(start, goal)` pairs, independently, from per-state weights.
#[derive(Debug, Clone)]
pub struct EndpointSampler {
    dims: Dims,
    weights: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl EndpointSampler {
    pub fn new(planner: &Planner<'_>, model: &ThetaModel, strategy: EndpointStrategy, tau: f64) -> Result<Self> {
        let dims = planner.dims();
        let blocked = planner.blocked();
        let base: Vec<f64> = match strategy {
            EndpointStrategy::Learned => (0..dims.len())
                .map(|i| model.endpoint_prior()[planner.model_class(i)])
                .collect(),
            EndpointStrategy::SoftmaxCost => {
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Hyper(format!("tau = {tau} must be positive")));
                }
                let costs = planner.costs(model);
                let min = costs
                    .iter()
                    .zip(blocked)
                    .filter(|(_, &b)| !b)
                    .map(|(&c, _)| c)
                    .fold(f64::INFINITY, f64::min);
                costs.iter().map(|c| (-(c - min) / tau).exp()).collect()
            }
        };
        let weights: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if blocked[i] {
                    0.0
                } else {
                    b * center_distance_scale(dims, dims.cell(i))
                }
            })
            .collect();
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::ZeroEndpointMass);
        }
        if weights.iter().filter(|&&w| w > 0.0).count() < 2 {
            return Err(Error::TooFewEndpoints);
        }
        let dist = WeightedIndex::new(&weights).map_err(|_| Error::ZeroEndpointMass)?;
        Ok(EndpointSampler { dims, weights, dist })
    }

    /// Unnormalized per-state weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Cell, Cell) {
        loop {
            let s0 = self.dist.sample(rng);
            let sg = self.dist.sample(rng);
            if s0 != sg {
                return (self.dims.cell(s0), self.dims.cell(sg));
            }
        }
    }
}

pub fn sample_endpoints<R: Rng + ?Sized>(
    planner: &Planner<'_>,
    model: &ThetaModel,
    strategy: EndpointStrategy,
    tau: f64,
    rng: &mut R,
) -> Result<(Cell, Cell)> {
    Ok(EndpointSampler::new(planner, model, strategy, tau)?.sample(rng))
}
