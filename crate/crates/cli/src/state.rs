use crate::error::{usage, CliResult};
use crate::io::{emit, json_bytes, read_state};
use clap::{Args, ValueEnum};
use qtomo::oscore::{make_state, DensityMatrix, StateKind, StateSpec, TwiceSpin};
use qtomo::{C64, FORMAT_VERSION};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Number state |n>, n = --param.
    Fock,
    /// Coherent state, amplitude --param + i --param-im.
    Coherent,
    /// Squeezed vacuum, zeta = --param + i --param-im.
    Squeezed,
    /// Thermal state with mean photon number --param.
    Thermal,
    /// Random full-rank state seeded by --state-seed.
    Random,
    /// Spin-coherent state of spin --s along --direction.
    Spin,
}

/// Flags describing a state built in place.
#[derive(Args, Debug, Default)]
pub struct StateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long, allow_negative_numbers = true)]
    pub param: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub param_im: Option<f64>,
    /// Hilbert-space dimension (Fock truncation n_max + 1).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub state_seed: Option<u64>,
    /// Spin quantum number, a multiple of 1/2.
    #[arg(long)]
    pub s: Option<f64>,
    /// Unit vector `x,y,z` of a spin-coherent state; defaults to +z.
    #[arg(long, value_parser = parse_vector, allow_negative_numbers = true)]
    pub direction: Option<[f64; 3]>,
}

pub fn parse_vector(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("expected x,y,z, got {s:?}"))?;
    v.try_into().map_err(|_| format!("expected three components, got {s:?}"))
}

impl StateArgs {
    pub fn given(&self) -> bool {
        self.kind.is_some() || self.s.is_some()
    }

    pub fn spec(&self) -> CliResult<StateSpec> {
        let kind = match (self.kind, self.s) {
            (Some(k), _) => k,
            (None, Some(_)) => Kind::Spin,
            (None, None) => return Err(usage("give --kind (or --s for a spin state)")),
        };
        if kind == Kind::Spin {
            let s = self.s.ok_or_else(|| usage("spin states need --s"))?;
            let twice_s = TwiceSpin::from_spin(s)?;
            if let Some(d) = self.dim {
                if d != twice_s.dim() {
                    return Err(usage(format!("--dim {d} does not match spin {s} (dim {})", twice_s.dim())));
                }
            }
            let n = self.direction.unwrap_or([0.0, 0.0, 1.0]);
            return Ok(StateSpec::new(StateKind::SpinPure { twice_s, n }, twice_s.dim()));
        }
        let dim = self.dim.ok_or_else(|| usage("oscillator states need --dim"))?;
        let param = |name: &str| self.param.ok_or_else(|| usage(format!("{name} states need --param")));
        let complex = |name: &str| -> CliResult<C64> { Ok(C64::new(param(name)?, self.param_im.unwrap_or(0.0))) };
        let kind = match kind {
            Kind::Fock => {
                let n = param("fock")?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(usage(format!("fock --param must be a non-negative integer, got {n}")));
                }
                StateKind::Fock { n: n as usize }
            }
            Kind::Coherent => StateKind::Coherent { beta: complex("coherent")? },
            Kind::Squeezed => StateKind::SqueezedVacuum { zeta: complex("squeezed")? },
            Kind::Thermal => StateKind::Thermal { mean_n: param("thermal")? },
            Kind::Random => StateKind::RandomMixed {
                seed: self.state_seed.ok_or_else(|| usage("random states need --state-seed"))?,
            },
            Kind::Spin => unreachable!("handled above"),
        };
        Ok(StateSpec::new(kind, dim))
    }

    /// The state from `--state FILE` or, failing that, from these flags.
    pub fn resolve(&self, file: Option<&PathBuf>) -> CliResult<DensityMatrix> {
        match (file, self.given()) {
            (Some(_), true) => Err(usage("give either --state or state flags, not both")),
            (Some(path), false) => read_state(path),
            (None, _) => Ok(make_state(&self.spec()?)?),
        }
    }
}

#[derive(Args, Debug)]
pub struct StateCmd {
    #[command(flatten)]
    state: StateArgs,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl StateCmd {
    pub fn run(self) -> CliResult<()> {
        let spec = self.state.spec()?;
        let rho = make_state(&spec)?;
        let tr = rho.op().trace().re;
        let mut doc = serde_json::to_value(&rho)?;
        let obj = doc.as_object_mut().expect("state JSON is an object");
        obj.insert("version".into(), json!(FORMAT_VERSION));
        obj.insert("spec".into(), serde_json::to_value(&spec)?);
        obj.insert("trace".into(), json!(tr));
        obj.insert("purity".into(), json!(rho.purity()));
        let summary: Value = json!({
            "version": FORMAT_VERSION,
            "command": "state",
            "out": self.out,
            "dim": rho.dim(),
            "trace": tr,
            "purity": rho.purity(),
            "rho_00": rho.get(0, 0).re,
        });
        emit(self.out.as_ref(), &json_bytes(&doc)?, &summary)
    }
}
