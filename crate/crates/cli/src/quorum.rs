use crate::error::{usage, CliResult};
use crate::io::{emit, json_bytes, read_json};
use clap::{Args, Subcommand, ValueEnum};
use qtomo::dualbasis::{gram_schmidt_dual, pseudoinverse_dual, span_dual, spiral_directions};
use qtomo::frames::{
    check_biorthogonality, check_trace_condition, irreducibility_rank, DualSet, ReproducingKernelMatrix, SpanningSet,
    TraceVerdict,
};
use qtomo::oscore::TwiceSpin;
use qtomo::quorum::QuorumDescriptor;
use qtomo::FORMAT_VERSION;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Subcommand, Debug)]
pub enum QuorumCmd {
    /// Expand a built-in family into a quorum spec.
    Build(BuildCmd),
    /// Report rank, bi-orthogonality and the trace condition of a spec.
    Verify(VerifyCmd),
    /// Construct the dual set of a spec.
    Dual(DualCmd),
}

impl QuorumCmd {
    pub fn run(self) -> CliResult<()> {
        match self {
            QuorumCmd::Build(c) => c.run(),
            QuorumCmd::Verify(c) => c.run(),
            QuorumCmd::Dual(c) => c.run(),
        }
    }
}

/// A quorum spec file holds either an explicit spanning set or a built-in
/// descriptor (`{"family": ...}`).
pub fn read_spanning_set(path: &Path) -> CliResult<SpanningSet> {
    let v = read_json(path)?;
    if v.get("family").is_some() {
        let d: QuorumDescriptor = serde_json::from_value(v)?;
        return Ok(d.build()?);
    }
    Ok(serde_json::from_value(v)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FamilyName {
    Pauli,
    WeylClockShift,
    ObservableProjectors,
    Weigert,
    DisplacementGrid,
    FockUnits,
}

#[derive(Args, Debug)]
pub struct BuildCmd {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    dim: Option<usize>,
    /// Spin quantum number of a Weigert set.
    #[arg(long)]
    s: Option<f64>,
    /// Number of spiral directions of a Weigert set; defaults to (2s + 1)^2.
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl BuildCmd {
    fn descriptor(&self) -> CliResult<QuorumDescriptor> {
        let dim = || self.dim.ok_or_else(|| usage("this family needs --dim"));
        Ok(match self.family {
            FamilyName::Pauli => QuorumDescriptor::Pauli,
            FamilyName::WeylClockShift => QuorumDescriptor::WeylClockShift { dim: dim()? },
            FamilyName::ObservableProjectors => QuorumDescriptor::ObservableProjectors { dim: dim()? },
            FamilyName::FockUnits => QuorumDescriptor::FockUnits { dim: dim()? },
            FamilyName::Weigert => {
                let twice_s = TwiceSpin::from_spin(self.s.ok_or_else(|| usage("weigert needs --s"))?)?;
                let count = self.directions.unwrap_or(twice_s.dim() * twice_s.dim());
                QuorumDescriptor::Weigert { twice_s, directions: Some(spiral_directions(count)) }
            }
            FamilyName::DisplacementGrid => QuorumDescriptor::DisplacementGrid {
                dim: dim()?,
                radius: self.radius.ok_or_else(|| usage("displacement_grid needs --radius"))?,
                points: self.points.ok_or_else(|| usage("displacement_grid needs --points"))?,
            },
        })
    }

    fn run(self) -> CliResult<()> {
        let s = self.descriptor()?.build()?;
        let summary = json!({
            "version": FORMAT_VERSION,
            "command": "quorum build",
            "dim": s.dim(),
            "elements": s.len(),
            "out": self.out,
        });
        emit(self.out.as_ref(), &json_bytes(&s)?, &summary)
    }
}

#[derive(Args, Debug)]
pub struct VerifyCmd {
    /// Quorum spec JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Dual set JSON; computed when omitted.
    #[arg(long)]
    dual: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl VerifyCmd {
    fn run(self) -> CliResult<()> {
        let s = read_spanning_set(&self.spec)?;
        let rank = irreducibility_rank(s.family());
        let (b, dual_source) = match &self.dual {
            Some(p) => (serde_json::from_value::<DualSet>(read_json(p)?)?, "file"),
            None if rank.irreducible => (pseudoinverse_dual(&s)?, "pseudoinverse"),
            None => (span_dual(&s)?, "span_pseudoinverse"),
        };
        let bio = check_biorthogonality(&s, &b, self.tol)?;
        let trace = check_trace_condition(&s, &b, &ReproducingKernelMatrix::diagonal(s.family()), self.tol)?;
        let verdict = match trace.verdict {
            TraceVerdict::Holds if bio.pass => "quorum",
            TraceVerdict::Holds | TraceVerdict::Fails => "fails",
            TraceVerdict::HoldsButReducible => "reducible",
        };
        let report: Value = json!({
            "version": FORMAT_VERSION,
            "command": "quorum verify",
            "dim": s.dim(),
            "elements": s.len(),
            "rank": rank.rank,
            "required_rank": rank.required,
            "irreducible": rank.irreducible,
            "dual": dual_source,
            "biorthogonality": bio,
            "trace_condition": {
                "max_kernel_violation": trace.max_kernel_violation,
                "max_reproducing_violation": trace.max_reproducing_violation,
                "verdict": trace.verdict,
            },
            "tol": self.tol,
            "verdict": verdict,
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DualMethod {
    /// Gram-Schmidt for bases, pseudoinverse otherwise.
    Auto,
    #[value(name = "gram-schmidt", alias = "gram_schmidt")]
    GramSchmidt,
    Pseudoinverse,
}

#[derive(Args, Debug)]
pub struct DualCmd {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value_t = DualMethod::Auto)]
    method: DualMethod,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl DualCmd {
    fn run(self) -> CliResult<()> {
        let s = read_spanning_set(&self.spec)?;
        let d2 = s.dim() * s.dim();
        let method = match self.method {
            DualMethod::Auto if s.len() == d2 => DualMethod::GramSchmidt,
            DualMethod::Auto => DualMethod::Pseudoinverse,
            m => m,
        };
        let mut summary = json!({
            "version": FORMAT_VERSION,
            "command": "quorum dual",
            "dim": s.dim(),
            "elements": s.len(),
            "out": self.out,
        });
        let b = match method {
            DualMethod::GramSchmidt => {
                let (b, trace) = gram_schmidt_dual(&s)?;
                summary["method"] = json!("gram-schmidt");
                summary["min_normalizer"] = json!(trace.normalizers.iter().copied().fold(f64::INFINITY, f64::min));
                summary["reorthogonalized"] = json!(trace.reorthogonalized);
                b
            }
            _ => {
                summary["method"] = json!("pseudoinverse");
                pseudoinverse_dual(&s)?
            }
        };
        let bio = check_biorthogonality(&s, &b, 1e-8)?;
        summary["biorthogonality"] = serde_json::to_value(&bio)?;
        let mut doc = serde_json::to_value(&b)?;
        doc["version"] = json!(FORMAT_VERSION);
        emit(self.out.as_ref(), &json_bytes(&doc)?, &summary)
    }
}
