//! Leave-one-out evaluation by KL divergence from ground-truth occupancy.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::dataset::MapSample;
use crate::error::{Error, Result};
use crate::exec::{mix_seed, Exec};
use crate::grid::OccupancyGrid;
use crate::infer::{baseline_class_prior, baseline_uniform, baseline_uniform_walkable, iocmm_infer};
use crate::irl::{initial_model, train_iocmm, EndpointStrategy, IocmmHyper};

pub const DEFAULT_SMOOTHING: f64 = 1e-3;

/// `KL(gt || pred)` after mixing `pred` with the uniform distribution:
/// `pred' = (pred + eps * U) / (1 + eps)`. Cells with zero ground truth
/// contribute nothing.
pub fn kl_divergence(gt: &OccupancyGrid, pred: &OccupancyGrid, eps: f64) -> Result<f64> {
    if gt.dims() != pred.dims() {
        return Err(Error::Eval(format!(
            "ground truth is {}x{}, prediction is {}x{}",
            gt.width(),
            gt.height(),
            pred.width(),
            pred.height()
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Eval(format!("smoothing {eps} must be non-negative")));
    }
    let u = 1.0 / gt.values().len() as f64;
    let mut kl = 0.0;
    for (&p, &q) in gt.values().iter().zip(pred.values()) {
        if p > 0.0 {
            let q = (q + eps * u) / (1.0 + eps);
            kl += p * (p / q).ln();
        }
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniform,
    UniformWalkable,
    ClassPrior,
    Iocmm(EndpointStrategy),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Uniform,
        Method::UniformWalkable,
        Method::ClassPrior,
        Method::Iocmm(EndpointStrategy::Learned),
        Method::Iocmm(EndpointStrategy::SoftmaxCost),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::UniformWalkable => "walkable",
            Method::ClassPrior => "classprior",
            Method::Iocmm(EndpointStrategy::Learned) => "iocmm-learned",
            Method::Iocmm(EndpointStrategy::SoftmaxCost) => "iocmm-softmax",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub hyper: IocmmHyper,
    pub methods: Vec<Method>,
    /// Simulated trajectories per prediction.
    pub n_traj: usize,
    pub tau: f64,
    pub smoothing: f64,
    /// How folds are scheduled; work inside a fold follows `hyper.exec`.
    pub exec: Exec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            hyper: IocmmHyper::u4(),
            methods: Method::ALL.to_vec(),
            n_traj: 500,
            tau: 0.05,
            smoothing: DEFAULT_SMOOTHING,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub map: String,
    pub method: Method,
    /// NaN when the method failed on this fold.
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub folds: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LooReport {
    pub rows: Vec<EvalRow>,
}

impl LooReport {
    pub fn kls(&self, method: Method) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == method).map(|r| r.kl).collect()
    }

    pub fn summary(&self) -> Vec<MethodSummary> {
        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        methods
            .into_iter()
            .map(|method| {
                let all = self.kls(method);
                let ok: Vec<f64> = all.iter().copied().filter(|v| v.is_finite()).collect();
                let n = ok.len() as f64;
                let mean = ok.iter().sum::<f64>() / n;
                let var = ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                MethodSummary {
                    method,
                    mean,
                    std: var.sqrt(),
                    folds: all.len(),
                    failed: all.len() - ok.len(),
                }
            })
            .collect()
    }

    pub fn mean(&self, method: Method) -> Option<f64> {
        self.summary().into_iter().find(|s| s.method == method).map(|s| s.mean)
    }

    /// One `method: mean ± std` line per method.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for s in self.summary() {
            out.push_str(&format!("{}: {:.4} ± {:.4}", s.method, s.mean, s.std));
            if s.failed > 0 {
                out.push_str(&format!(" ({} of {} folds failed)", s.failed, s.folds));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "map,method,kl_div")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.map, r.method, r.kl)?;
        }
        Ok(())
    }
}

fn predict(
    train: &[MapSample],
    test: &MapSample,
    method: Method,
    model: Option<&crate::irl::ThetaModel>,
    cfg: &EvalConfig,
    fold_seed: u64,
) -> Result<OccupancyGrid> {
    match method {
        Method::Uniform => Ok(baseline_uniform(&test.map)),
        Method::UniformWalkable => baseline_uniform_walkable(&test.map),
        Method::ClassPrior => baseline_class_prior(train, &test.map),
        Method::Iocmm(strategy) => {
            let model = model.ok_or_else(|| Error::Training("no trained model".into()))?;
            let hyper = IocmmHyper {
                seed: mix_seed(fold_seed, 2),
                ..cfg.hyper.clone()
            };
            Ok(iocmm_infer(&test.map, model, &hyper, strategy, cfg.tau, cfg.n_traj)?.occ)
        }
    }
}

/// Evaluates one held-out map after training on `train`.
pub fn evaluate_fold(train: &[MapSample], test: &MapSample, cfg: &EvalConfig, fold_seed: u64) -> Vec<EvalRow> {
    let needs_model = cfg.methods.iter().any(|m| matches!(m, Method::Iocmm(_)));
    let model = if needs_model {
        let hyper = IocmmHyper {
            seed: mix_seed(fold_seed, 1),
            ..cfg.hyper.clone()
        };
        let trained = initial_model(train, &hyper).and_then(|m0| train_iocmm(train, &hyper, m0));
        match trained {
            Ok(t) => Some(t.model),
            Err(e) => {
                log::warn!("{}: training failed: {e}", test.name);
                None
            }
        }
    } else {
        None
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let kl = predict(train, test, method, model.as_ref(), cfg, fold_seed)
                .and_then(|pred| kl_divergence(&test.occ, &pred, cfg.smoothing));
            let kl = kl.unwrap_or_else(|e| {
                log::warn!("{}: {method} failed: {e}", test.name);
                f64::NAN
            });
            EvalRow {
                map: test.name.clone(),
                method,
                kl,
            }
        })
        .collect()
}

/// Holds out each map in turn, trains on the rest and scores every method.
pub fn leave_one_out(data: &[MapSample], cfg: &EvalConfig) -> Result<LooReport> {
    if data.len() < 2 {
        return Err(Error::Eval(format!("leave-one-out needs ≥ 2 maps, got {}", data.len())));
    }
    cfg.hyper.validate()?;
    let folds = cfg.exec.map(data.len(), |i| {
        let train: Vec<MapSample> = data
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, s)| s.clone())
            .collect();
        evaluate_fold(&train, &data[i], cfg, mix_seed(cfg.hyper.seed, i as u64))
    });
    Ok(LooReport {
        rows: folds.into_iter().flatten().collect(),
    })
}
