use crate::error::{Error, Result};
use crate::grid::{SemanticMap, Trajectory};

/// Mean per-class visit count over trajectories, in the map's class order.
pub fn empirical_feature_count(map: &SemanticMap, trajs: &[Trajectory]) -> Result<Vec<f64>> {
    if trajs.is_empty() {
        return Err(Error::NoTrajectories);
    }
    let dims = map.dims();
    let mut f = vec![0.0; map.classes().len()];
    for (t, traj) in trajs.iter().enumerate() {
        if let Some(step) = traj.first_out_of_bounds(dims) {
            return Err(Error::TrajectoryOutOfBounds { traj: t, step });
        }
        for &s in traj.states() {
            f[map.class_at(s)] += 1.0;
        }
    }
    let n = trajs.len() as f64;
    f.iter_mut().for_each(|x| *x /= n);
    Ok(f)
}

/// Per-class sum of a visitation field, in the map's class order.
pub fn expected_feature_count(map: &SemanticMap, visits: &[f64]) -> Vec<f64> {
    assert_eq!(visits.len(), map.dims().len(), "visitation grid size");
    let mut f = vec![0.0; map.classes().len()];
    for (i, &d) in visits.iter().enumerate() {
        f[map.class_at_index(i)] += d;
    }
    f
}

/// Scales a non-negative vector to sum one; all-zero input stays zero.
pub(crate) fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        v.to_vec()
    }
}
