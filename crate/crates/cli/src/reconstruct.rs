use crate::error::{usage, CliResult};
use crate::io::{emit, json_bytes, read_json, read_records, read_state};
use crate::observable::parse_observable;
use clap::Args;
use qtomo::estimators::{
    homodyne_estimate, kerr_estimate, nonunitary_reconstruct, parity_estimate, pauli_estimate, spin_estimate,
    squeezed_homodyne_estimate, EstimatorConfig, SqueezeParams,
};
use qtomo::oscore::{DensityMatrix, Operator, TwiceSpin};
use qtomo::recon::{nonunitary_matrix, reconstruct_matrix, EstimationResult, Method};
use qtomo::sampler::MeasurementRecord;
use qtomo::{C64, FORMAT_VERSION};
use serde_json::json;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct ReconstructCmd {
    /// homodyne, squeezed_homodyne, parity, spin, pauli, kerr or nonunitary.
    #[arg(long)]
    method: String,
    /// Records CSV written by `sample`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// State JSON; the input of the nonunitary method.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Reconstruction dimension; pauli is 2, spin is 2s + 1.
    #[arg(long)]
    dim: Option<usize>,
    /// Spin quantum number for the spin method.
    #[arg(long)]
    s: Option<f64>,
    /// Estimator configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reg_eps: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
    #[arg(long)]
    phi_points: Option<usize>,
    #[arg(long)]
    psi_points: Option<usize>,
    #[arg(long)]
    shift_cutoff: Option<usize>,
    /// Estimate one named observable instead of the whole matrix.
    #[arg(long, conflicts_with = "observable_file")]
    observable: Option<String>,
    /// Estimate an observable given as operator JSON.
    #[arg(long)]
    observable_file: Option<PathBuf>,
    /// Known state to compare against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Add the nearest density matrix to the diagnostics.
    #[arg(long)]
    nearest_physical: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ReconstructCmd {
    fn config(&self) -> CliResult<EstimatorConfig> {
        let mut cfg: EstimatorConfig = match &self.config {
            Some(p) => serde_json::from_value(read_json(p)?)?,
            None => EstimatorConfig::default(),
        };
        if let Some(x) = self.reg_eps {
            cfg.reg_eps = x;
        }
        if let Some(x) = self.k_max {
            cfg.k_max = x;
        }
        if let Some(x) = self.phi_points {
            cfg.phi_points = x;
        }
        if let Some(x) = self.psi_points {
            cfg.psi_points = x;
        }
        if self.shift_cutoff.is_some() {
            cfg.shift_cutoff = self.shift_cutoff;
        }
        Ok(cfg)
    }

    /// Dimension of the reconstruction: fixed by the method where it can be,
    /// else `--dim`, else the configuration.
    fn dim(&self, method: Method, cfg: &EstimatorConfig, state: Option<&DensityMatrix>) -> CliResult<usize> {
        let fixed = match method {
            Method::Pauli => Some(2),
            Method::Spin => self.s.map(|s| TwiceSpin::from_spin(s).map(TwiceSpin::dim)).transpose()?,
            Method::Nonunitary => state.map(DensityMatrix::dim),
            _ => None,
        };
        match (fixed, self.dim) {
            (Some(f), Some(d)) if f != d => {
                Err(usage(format!("--dim {d} conflicts with dimension {f} implied by the method or input")))
            }
            (Some(f), _) => Ok(f),
            (None, Some(d)) => Ok(d),
            (None, None) if method == Method::Spin => Err(usage("the spin method needs --s or --dim")),
            (None, None) => Ok(if self.config.is_some() { cfg.dim } else { EstimatorConfig::default().dim }),
        }
    }

    fn observable(&self, dim: usize) -> CliResult<Option<(String, Operator)>> {
        if let Some(name) = &self.observable {
            return Ok(Some((name.clone(), parse_observable(name, dim)?)));
        }
        if let Some(path) = &self.observable_file {
            let op: Operator = serde_json::from_value(read_json(path)?)?;
            if op.dim() != dim {
                return Err(usage(format!("observable has dim {}, reconstruction dim is {dim}", op.dim())));
            }
            return Ok(Some((path.display().to_string(), op)));
        }
        Ok(None)
    }

    pub fn run(self) -> CliResult<()> {
        let method: Method = self.method.parse()?;
        let mut cfg = self.config()?;
        let (records, state) = if method == Method::Nonunitary {
            if self.records.is_some() {
                return Err(usage("the nonunitary method reads --state, not --records"));
            }
            let path = self.state.as_ref().ok_or_else(|| usage("the nonunitary method needs --state"))?;
            (Vec::new(), Some(read_state(path)?))
        } else {
            if self.state.is_some() {
                return Err(usage("--state is only read by the nonunitary method; use --reference to compare"));
            }
            let path = self.records.as_ref().ok_or_else(|| usage("give --records"))?;
            (read_records(path)?, None)
        };
        cfg.dim = self.dim(method, &cfg, state.as_ref())?;
        cfg.validate()?;
        let reference = self.reference.as_ref().map(|p| read_state(p)).transpose()?;

        if let Some((name, a)) = self.observable(cfg.dim)? {
            let r = estimate_observable(method, &a, &records, state.as_ref(), &cfg)?;
            let mut doc = json!({
                "version": FORMAT_VERSION,
                "method": method.as_str(),
                "observable": name,
                "dim": cfg.dim,
                "mean": [r.mean.re, r.mean.im],
                "std_error": r.std_error,
                "n_samples": r.n_samples,
            });
            if let Some(rho) = &reference {
                let truth = rho.expectation(&a)?;
                doc["reference"] = json!([truth.re, truth.im]);
            }
            let summary = json!({"version": FORMAT_VERSION, "command": "reconstruct", "out": self.out});
            return emit(self.out.as_ref(), &json_bytes(&doc)?, &summary);
        }

        let mut m = match &state {
            Some(rho) => nonunitary_matrix(rho, &cfg)?,
            None => reconstruct_matrix(&records, method, &cfg)?,
        };
        if let Some(rho) = &reference {
            m.compare_to(rho)?;
        }
        if self.nearest_physical {
            m.add_nearest_physical()?;
        }
        let summary = json!({
            "version": FORMAT_VERSION,
            "command": "reconstruct",
            "method": method.as_str(),
            "dim": m.dim,
            "records": records.len(),
            "trace": m.diagnostics.trace,
            "not_estimated": m.diagnostics.not_estimated,
            "out": self.out,
        });
        emit(self.out.as_ref(), &json_bytes(&m)?, &summary)
    }
}

fn estimate_observable(
    method: Method,
    a: &Operator,
    records: &[MeasurementRecord],
    state: Option<&DensityMatrix>,
    cfg: &EstimatorConfig,
) -> CliResult<EstimationResult> {
    Ok(match method {
        Method::Homodyne => homodyne_estimate(a, records, cfg)?,
        Method::SqueezedHomodyne => {
            let first = records.first().ok_or_else(|| usage("the records file is empty"))?;
            let zeta = C64::new(first.settings[1], first.settings[2]);
            squeezed_homodyne_estimate(a, records, &SqueezeParams::new(zeta), cfg)?
        }
        Method::Parity => parity_estimate(a, records, cfg)?,
        Method::Spin => spin_estimate(a, records)?,
        Method::Pauli => pauli_estimate(a, records)?,
        Method::Kerr => kerr_estimate(a, records)?,
        Method::Nonunitary => {
            let rho = state.expect("nonunitary reads a state");
            EstimationResult::exact(nonunitary_reconstruct(a, rho, cfg)?, 0)
        }
    })
}
