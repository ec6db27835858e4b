//! Multi-map training loop: batched backward/forward passes and
//! exponentiated-gradient feature matching.

use rand::seq::index;

use crate::dataset::MapSample;
use crate::error::{Error, Result};
use crate::exec::{mix_seed, stream_rng};
use crate::irl::endpoints::learn_endpoint_prior;
use crate::irl::features::normalized;
use crate::irl::plan::Planner;
use crate::irl::rollout::forward_pass;
use crate::irl::{exponentiated_step, IocmmHyper, ThetaModel};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Weights after this iteration's update.
    pub theta: Vec<f64>,
    pub grad_norm: f64,
    pub rollouts: usize,
    pub truncated: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Demonstrations ignored because an endpoint lies on an invalid state.
    pub skipped: usize,
}

impl TrainLog {
    pub fn final_grad_norm(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.grad_norm)
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: ThetaModel,
    pub log: TrainLog,
}

/// Uniform weights over the first map's classes, with the endpoint prior
/// learned from `data`.
pub fn initial_model(data: &[MapSample], hyper: &IocmmHyper) -> Result<ThetaModel> {
    let first = data.first().ok_or(Error::EmptyDataset)?;
    let classes = first.map.classes().names().to_vec();
    let prior = learn_endpoint_prior(data, &classes)?;
    ThetaModel::uniform(classes, hyper.r0)?.with_endpoint_prior(prior)
}

struct MapWork<'a> {
    planner: Planner<'a>,
    sample: &'a MapSample,
    /// Usable demonstrations and their per-class visit counts (model order).
    demos: Vec<(usize, Vec<f64>)>,
}

fn prepare<'a>(data: &'a [MapSample], model: &ThetaModel, hyper: &IocmmHyper) -> Result<(Vec<MapWork<'a>>, usize)> {
    let k = model.classes().len();
    let mut skipped = 0;
    let mut maps = Vec::new();
    for sample in data {
        let planner = Planner::new(&sample.map, model.classes(), hyper)?;
        let dims = sample.map.dims();
        let mut demos = Vec::new();
        for (t, traj) in sample.trajs.iter().enumerate() {
            let ok = [traj.start(), traj.goal()]
                .iter()
                .all(|&s| planner.check_state(s).is_ok())
                && traj.first_out_of_bounds(dims).is_none();
            if !ok {
                log::warn!("{}: skipping trajectory {t} with an invalid endpoint", sample.name);
                skipped += 1;
                continue;
            }
            let mut f = vec![0.0; k];
            for &s in traj.states() {
                f[planner.model_class(dims.index(s))] += 1.0;
            }
            demos.push((t, f));
        }
        if !demos.is_empty() {
            maps.push(MapWork { planner, sample, demos });
        }
    }
    Ok((maps, skipped))
}

/// Learns class weights from demonstrations across maps.
///
/// Each iteration samples `map_batch` maps and `traj_batch` trajectories per
/// map without replacement, plans to every trajectory's goal, simulates
/// `rollouts_per_traj` rollouts from its start, and moves `theta` along the
/// difference between normalized empirical and expected feature counts.
pub fn train_iocmm(data: &[MapSample], hyper: &IocmmHyper, model0: ThetaModel) -> Result<Trained> {
    hyper.validate()?;
    if data.iter().all(|s| s.trajs.is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let (maps, skipped) = prepare(data, &model0, hyper)?;
    if maps.is_empty() {
        return Err(Error::Training("every trajectory was skipped".into()));
    }
    let k = model0.classes().len();
    let mut model = model0;
    let mut theta = model.theta().to_vec();
    let mut log = TrainLog {
        skipped,
        ..TrainLog::default()
    };

    for iter in 0..hyper.max_iters {
        let mut rng = stream_rng(hyper.seed, iter as u64);
        let chosen = index::sample(&mut rng, maps.len(), hyper.map_batch.min(maps.len())).into_vec();
        let batches: Vec<Vec<usize>> = chosen
            .iter()
            .map(|&m| {
                let n = maps[m].demos.len();
                index::sample(&mut rng, n, hyper.traj_batch.min(n)).into_vec()
            })
            .collect();

        let current = model.clone().with_theta(theta.clone())?;
        let rewards: Vec<Vec<f64>> = chosen
            .iter()
            .map(|&m| maps[m].planner.rewards(&current, hyper))
            .collect();
        let items: Vec<(usize, usize)> = batches
            .iter()
            .enumerate()
            .flat_map(|(slot, b)| b.iter().map(move |&d| (slot, d)))
            .collect();

        let item_seed = mix_seed(hyper.seed, iter as u64 + 1);
        let results = hyper.exec.map(items.len(), |w| -> Result<(Vec<f64>, usize)> {
            let (slot, d) = items[w];
            let work = &maps[chosen[slot]];
            let traj = &work.sample.trajs[work.demos[d].0];
            let policy = work
                .planner
                .backward_pass_with_rewards(&rewards[slot], traj.goal(), hyper)?;
            let mut rng = stream_rng(item_seed, w as u64);
            let vis = forward_pass(&policy, traj.start(), hyper.rollouts_per_traj, hyper, &mut rng)?;
            let mut f = vec![0.0; k];
            for (i, &c) in vis.counts.iter().enumerate() {
                if c > 0 {
                    f[work.planner.model_class(i)] += c as f64;
                }
            }
            Ok((f, vis.truncated))
        });

        let mut f_emp = vec![0.0; k];
        let mut f_exp = vec![0.0; k];
        let mut truncated = 0;
        let mut results = results.into_iter();
        for (slot, batch) in batches.iter().enumerate() {
            let work = &maps[chosen[slot]];
            let denom = batch.len() as f64;
            let sims = denom * hyper.rollouts_per_traj as f64;
            for &d in batch {
                let (f, trunc) = results.next().expect("one result per item")?;
                truncated += trunc;
                for c in 0..k {
                    f_emp[c] += work.demos[d].1[c] / denom;
                    f_exp[c] += f[c] / sims;
                }
            }
        }
        let f_emp = normalized(&f_emp);
        let f_exp = normalized(&f_exp);
        let grad: Vec<f64> = f_emp.iter().zip(&f_exp).map(|(a, b)| a - b).collect();
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();

        exponentiated_step(&mut theta, &grad, hyper.lambda);
        log.iterations.push(IterationRecord {
            theta: theta.clone(),
            grad_norm,
            rollouts: items.len() * hyper.rollouts_per_traj,
            truncated,
        });
        log::debug!("iter {iter}: |grad| = {grad_norm:.5}, theta = {theta:?}");
        if grad_norm < hyper.epsilon {
            log.converged = true;
            break;
        }
    }

    model = model.with_theta(theta)?;
    Ok(Trained { model, log })
}
