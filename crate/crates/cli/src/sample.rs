use crate::error::{usage, CliResult};
use crate::io::emit;
use crate::state::{parse_vector, StateArgs};
use clap::Args;
use qtomo::recon::Method;
use qtomo::sampler::{
    sample_displaced_parity, sample_homodyne, sample_kerr_phase, sample_pauli, sample_spin, sample_squeezed_homodyne,
    write_csv, SamplerConfig,
};
use qtomo::{C64, FORMAT_VERSION};
use serde_json::json;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct SampleCmd {
    /// homodyne, squeezed_homodyne, parity, spin, pauli or kerr.
    #[arg(long)]
    method: String,
    /// State JSON file; alternatively build the state with the state flags.
    #[arg(long)]
    state: Option<PathBuf>,
    #[command(flatten)]
    state_args: StateArgs,
    /// Number of shots; for pauli, shots per axis.
    #[arg(long)]
    shots: usize,
    #[arg(long)]
    seed: u64,
    /// Squeezing parameter of squeezed_homodyne.
    #[arg(long, allow_negative_numbers = true)]
    zeta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    zeta_im: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    fixed_phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    fixed_psi: Option<f64>,
    /// Fixed displacement `re,im` for parity.
    #[arg(long, allow_negative_numbers = true)]
    fixed_beta: Option<String>,
    #[arg(long, value_parser = parse_vector, allow_negative_numbers = true)]
    fixed_direction: Option<[f64; 3]>,
    #[arg(long)]
    disk_radius: Option<f64>,
    #[arg(long)]
    leakage_tol: Option<f64>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_complex(s: &str) -> CliResult<C64> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| usage(format!("expected re,im, got {s:?}")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("expected re,im, got {s:?}"))),
    }
}

impl SampleCmd {
    pub fn run(self) -> CliResult<()> {
        let method: Method = self.method.parse()?;
        if method == Method::Nonunitary {
            return Err(usage("the nonunitary method has no sampler; reconstruct it with --state"));
        }
        let rho = self.state_args.resolve(self.state.as_ref())?;
        let mut cfg = SamplerConfig::with_seed(self.seed);
        if let Some(t) = self.leakage_tol {
            cfg.leakage_tol = t;
        }
        cfg.disk_radius = self.disk_radius;
        cfg.fixed_phi = self.fixed_phi;
        cfg.fixed_psi = self.fixed_psi;
        cfg.fixed_direction = self.fixed_direction;
        cfg.fixed_beta = self.fixed_beta.as_deref().map(parse_complex).transpose()?;
        let zeta = C64::new(self.zeta.unwrap_or(0.0), self.zeta_im.unwrap_or(0.0));
        if method != Method::SqueezedHomodyne && (self.zeta.is_some() || self.zeta_im.is_some()) {
            return Err(usage("--zeta applies to squeezed_homodyne only"));
        }
        let records = match method {
            Method::Homodyne => sample_homodyne(&rho, self.shots, &cfg)?,
            Method::SqueezedHomodyne => sample_squeezed_homodyne(&rho, zeta, self.shots, &cfg)?,
            Method::Parity => sample_displaced_parity(&rho, self.shots, &cfg)?,
            Method::Spin => sample_spin(&rho, self.shots, &cfg)?,
            Method::Pauli => sample_pauli(&rho, self.shots, &cfg)?,
            Method::Kerr => sample_kerr_phase(&rho, self.shots, &cfg)?,
            Method::Nonunitary => unreachable!("rejected above"),
        };
        let mut csv = Vec::new();
        write_csv(&mut csv, &records)?;
        let summary = json!({
            "version": FORMAT_VERSION,
            "command": "sample",
            "method": method.as_str(),
            "shots": self.shots,
            "records": records.len(),
            "seed": self.seed,
            "out": self.out,
        });
        emit(self.out.as_ref(), &csv, &summary)
    }
}
