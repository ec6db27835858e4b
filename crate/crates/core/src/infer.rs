//! Occupancy prediction on unseen maps: the learned model and three baselines.

use crate::dataset::MapSample;
use crate::error::{Error, Result};
use crate::exec::{add_counts, stream_rng};
use crate::grid::{walkable_mask, OccupancyGrid, SemanticMap};
use crate::irl::{forward_pass, EndpointSampler, EndpointStrategy, IocmmHyper, Planner, ThetaModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub occ: OccupancyGrid,
    /// Simulated trajectories cut off by the rollout cap.
    pub truncated: usize,
}

/// Predicts occupancy by simulating `n_traj` trajectories, each between
/// freshly sampled endpoints and following the soft-optimal policy to its goal.
pub fn iocmm_infer(
    map: &SemanticMap,
    model: &ThetaModel,
    hyper: &IocmmHyper,
    strategy: EndpointStrategy,
    tau: f64,
    n_traj: usize,
) -> Result<Inference> {
    hyper.validate()?;
    if n_traj == 0 {
        return Err(Error::Hyper("n_traj must be ≥ 1".into()));
    }
    let planner = Planner::new(map, model.classes(), hyper)?;
    let sampler = EndpointSampler::new(&planner, model, strategy, tau)?;
    let rewards = planner.rewards(model, hyper);
    let n = map.dims().len();

    let (counts, truncated) = hyper.exec.map_reduce(
        n_traj,
        || Ok((vec![0u64; n], 0usize)),
        |t| -> Result<(Vec<u64>, usize)> {
            let mut rng = stream_rng(hyper.seed, t as u64);
            let (start, goal) = sampler.sample(&mut rng);
            let policy = planner.backward_pass_with_rewards(&rewards, goal, hyper)?;
            let vis = forward_pass(&policy, start, 1, hyper, &mut rng)?;
            Ok((vis.counts, vis.truncated))
        },
        |a, b| {
            let (a, b) = (a?, b?);
            Ok((add_counts(a.0, b.0), a.1 + b.1))
        },
    )?;
    if truncated > 0 {
        log::warn!("{truncated} of {n_traj} simulated trajectories hit the rollout cap");
    }
    let occ = OccupancyGrid::from_counts(map.width(), map.height(), &counts)?;
    Ok(Inference { occ, truncated })
}

pub fn baseline_uniform(map: &SemanticMap) -> OccupancyGrid {
    OccupancyGrid::uniform(map.width(), map.height())
}

/// Uniform over cells whose class is flagged walkable.
pub fn baseline_uniform_walkable(map: &SemanticMap) -> Result<OccupancyGrid> {
    let weights: Vec<f64> = walkable_mask(map)
        .into_iter()
        .map(|w| if w { 1.0 } else { 0.0 })
        .collect();
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::NoWalkable);
    }
    OccupancyGrid::from_weights(map.width(), map.height(), &weights)
}

/// Share of ground-truth mass each class name receives across `train`,
/// averaged over maps.
pub fn class_mass_shares(train: &[MapSample]) -> Result<Vec<(String, f64)>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut shares: Vec<(String, f64)> = Vec::new();
    for sample in train {
        let classes = sample.map.classes();
        let mut mass = vec![0.0; classes.len()];
        for (i, &v) in sample.occ.values().iter().enumerate() {
            mass[sample.map.class_at_index(i)] += v;
        }
        for (k, m) in mass.into_iter().enumerate() {
            let name = classes.name(k);
            match shares.iter_mut().find(|(n, _)| n == name) {
                Some(entry) => entry.1 += m,
                None => shares.push((name.to_string(), m)),
            }
        }
    }
    let total: f64 = shares.iter().map(|(_, m)| m).sum();
    for entry in &mut shares {
        entry.1 /= total;
    }
    Ok(shares)
}

/// Spreads each class's training mass share uniformly over the target map's
/// cells of that class. Classes missing from the target are dropped and the
/// rest renormalized.
pub fn baseline_class_prior(train: &[MapSample], map: &SemanticMap) -> Result<OccupancyGrid> {
    let shares = class_mass_shares(train)?;
    let counts = map.class_counts();
    let per_cell: Vec<f64> = (0..map.classes().len())
        .map(|k| {
            let share = shares
                .iter()
                .find(|(n, _)| n == map.classes().name(k))
                .map_or(0.0, |(_, m)| *m);
            if counts[k] == 0 {
                0.0
            } else {
                share / counts[k] as f64
            }
        })
        .collect();
    let weights: Vec<f64> = map.cells().iter().map(|&c| per_cell[c as usize]).collect();
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::Eval("class prior puts no mass on this map's classes".into()));
    }
    OccupancyGrid::from_weights(map.width(), map.height(), &weights)
}
