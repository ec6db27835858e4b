use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Dims;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Learned per-class cost weights, base cost and endpoint prior.
///
/// The step cost of a state of class `k` is `r0 + theta[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaModel {
    classes: Vec<String>,
    theta: Vec<f64>,
    r0: f64,
    endpoint_prior: Vec<f64>,
}

fn check_simplex(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Model(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::Model(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl ThetaModel {
    pub fn new(classes: Vec<String>, theta: Vec<f64>, r0: f64, endpoint_prior: Vec<f64>) -> Result<Self> {
        let k = classes.len();
        if k == 0 {
            return Err(Error::Model("no classes".into()));
        }
        if theta.len() != k || endpoint_prior.len() != k {
            return Err(Error::Model(format!(
                "{k} classes, {} weights, {} prior values",
                theta.len(),
                endpoint_prior.len()
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Model(format!("base cost {r0} must be positive")));
        }
        check_simplex("theta", &theta)?;
        check_simplex("endpoint prior", &endpoint_prior)?;
        Ok(ThetaModel {
            classes,
            theta,
            r0,
            endpoint_prior,
        })
    }

    /// `theta = 1/K`, uniform endpoint prior.
    pub fn uniform(classes: Vec<String>, r0: f64) -> Result<Self> {
        let k = classes.len().max(1);
        let u = vec![1.0 / k as f64; classes.len()];
        ThetaModel::new(classes, u.clone(), r0, u)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn endpoint_prior(&self) -> &[f64] {
        &self.endpoint_prior
    }

    /// Step cost of a state of model class `k`.
    pub fn class_cost(&self, k: usize) -> f64 {
        self.r0 + self.theta[k]
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        check_simplex("theta", &theta)?;
        if theta.len() != self.classes.len() {
            return Err(Error::Model("weight count changed".into()));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn with_endpoint_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        check_simplex("endpoint prior", &prior)?;
        if prior.len() != self.classes.len() {
            return Err(Error::Model("prior length changed".into()));
        }
        self.endpoint_prior = prior;
        Ok(self)
    }
}

/// Exponentiated-gradient update on the class costs, renormalized to the
/// simplex: `theta <- theta * exp(-lambda * grad)` with
/// `grad = f_empirical - f_expected`. A class visited more often by the
/// demonstrators than by the model becomes cheaper.
pub fn exponentiated_step(theta: &mut [f64], grad: &[f64], lambda: f64) {
    assert_eq!(theta.len(), grad.len());
    for (t, g) in theta.iter_mut().zip(grad) {
        *t *= (-lambda * g).exp();
    }
    let sum: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= sum);
}

/// Training and simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct IocmmHyper {
    /// Trajectories sampled per map in one iteration.
    pub traj_batch: usize,
    /// Maps sampled per iteration.
    pub map_batch: usize,
    /// Inverse temperature of the stochastic policy.
    pub alpha: f64,
    /// Learning rate of the exponentiated update.
    pub lambda: f64,
    /// Base cost of a transition.
    pub r0: f64,
    /// Stop once the gradient norm falls below this.
    pub epsilon: f64,
    pub max_iters: usize,
    pub vi_tolerance: f64,
    /// Value-iteration sweep cap; `None` means `4 * (width + height)`.
    pub vi_max_sweeps: Option<usize>,
    /// Rollout length cap; `None` means `8 * (width + height)`.
    pub rollout_cap: Option<usize>,
    /// Rollouts simulated from the start of each batch trajectory.
    pub rollouts_per_traj: usize,
    /// Multiplier turning step costs into MDP rewards, `R(s) = -cost_scale * c(s)`.
    pub cost_scale: f64,
    /// Unwalkable classes that are never entered by the planner.
    pub impassable: Vec<String>,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for IocmmHyper {
    fn default() -> Self {
        IocmmHyper::u4()
    }
}

impl IocmmHyper {
    /// Settings for small 4-class urban maps.
    pub fn u4() -> Self {
        IocmmHyper {
            traj_batch: 10,
            map_batch: 7,
            alpha: 0.1,
            lambda: 1.0,
            r0: 0.01,
            epsilon: 1e-3,
            max_iters: 300,
            vi_tolerance: 1e-6,
            vi_max_sweeps: None,
            rollout_cap: None,
            rollouts_per_traj: 8,
            cost_scale: 300.0,
            impassable: vec!["obstacle".to_owned()],
            seed: 0,
            exec: Exec::default(),
        }
    }

    /// Settings for large real-world maps.
    pub fn sdd() -> Self {
        IocmmHyper {
            traj_batch: 50,
            map_batch: 5,
            ..IocmmHyper::u4()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("r0", self.r0),
            ("epsilon", self.epsilon),
            ("vi_tolerance", self.vi_tolerance),
            ("cost_scale", self.cost_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Hyper(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Hyper(format!("lambda = {} must be non-negative", self.lambda)));
        }
        let counts = [
            ("traj_batch", self.traj_batch),
            ("map_batch", self.map_batch),
            ("max_iters", self.max_iters),
            ("rollouts_per_traj", self.rollouts_per_traj),
            ("vi_max_sweeps", self.vi_max_sweeps.unwrap_or(1)),
            ("rollout_cap", self.rollout_cap.unwrap_or(1)),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Hyper(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn sweeps_for(&self, dims: Dims) -> usize {
        self.vi_max_sweeps.unwrap_or(4 * (dims.width + dims.height))
    }

    pub fn cap_for(&self, dims: Dims) -> usize {
        self.rollout_cap.unwrap_or(8 * (dims.width + dims.height))
    }
}
