use crate::error::{usage, CliResult};
use crate::io::emit;
use crate::observable::parse_observable;
use clap::{Args, Subcommand, ValueEnum};
use qtomo::estimators::{
    kerr_operator_kernel, parity_operator_kernel, spin_kernel, squeezed_homodyne_kernel, EstimatorConfig,
    HomodyneKernel, SqueezeParams,
};
use qtomo::oscore::Operator;
use qtomo::{FORMAT_VERSION, C64};
use std::path::PathBuf;

#[derive(Subcommand, Debug)]
pub enum KernelsCmd {
    /// Tabulate a kernel on a grid as CSV `x,y,re,im`.
    Eval(EvalCmd),
}

impl KernelsCmd {
    pub fn run(self) -> CliResult<()> {
        match self {
            KernelsCmd::Eval(c) => c.run(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KernelFamily {
    /// x = q, y = phi.
    Homodyne,
    /// x = q, y = phi; squeezing from --zeta.
    SqueezedHomodyne,
    /// x + i y = beta.
    Parity,
    /// x = polar angle, y = azimuth of the direction; outcome --m.
    Spin,
    /// x = phi, y = psi.
    Kerr,
}

/// Inclusive grid `a:b:n`, or a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?} in grid {s:?}"));
    match parts.as_slice() {
        [v] => Ok(Grid(vec![num(v)?])),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| format!("bad point count in grid {s:?}"))?;
            match n {
                0 => Err("a grid needs at least one point".into()),
                1 => Ok(Grid(vec![a])),
                _ => Ok(Grid((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())),
            }
        }
        _ => Err(format!("expected a:b:n or a single value, got {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct EvalCmd {
    #[arg(long, value_enum)]
    family: KernelFamily,
    /// Named observable whose kernel is tabulated.
    #[arg(long)]
    observable: String,
    #[arg(long)]
    dim: usize,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    x: Grid,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "0")]
    y: Grid,
    /// Spin outcome m.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    zeta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    zeta_im: Option<f64>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl EvalCmd {
    fn evaluator(&self, a: &Operator) -> CliResult<Box<dyn Fn(f64, f64) -> qtomo::Result<C64> + '_>> {
        let cfg = EstimatorConfig::with_dim(self.dim);
        Ok(match self.family {
            KernelFamily::Homodyne => {
                let k = HomodyneKernel::new(a, &cfg)?;
                Box::new(move |x, y| Ok(k.eval(x, y)))
            }
            KernelFamily::SqueezedHomodyne => {
                let zeta = C64::new(self.zeta.unwrap_or(0.0), self.zeta_im.unwrap_or(0.0));
                let k = squeezed_homodyne_kernel(a, &SqueezeParams::new(zeta), &cfg)?;
                Box::new(move |x, y| Ok(k.eval(x, y)))
            }
            KernelFamily::Parity => {
                let a = a.clone();
                Box::new(move |x, y| Ok(parity_operator_kernel(&a, C64::new(x, y))))
            }
            KernelFamily::Spin => {
                let m = self.m.ok_or_else(|| usage("the spin kernel needs --m"))?;
                let a = a.clone();
                Box::new(move |x, y| spin_kernel(&a, m, [x.sin() * y.cos(), x.sin() * y.sin(), x.cos()]))
            }
            KernelFamily::Kerr => {
                let a = a.clone();
                Box::new(move |x, y| Ok(kerr_operator_kernel(&a, x, y)))
            }
        })
    }

    fn run(self) -> CliResult<()> {
        let a = parse_observable(&self.observable, self.dim)?;
        let f = self.evaluator(&a)?;
        let mut csv = String::from("x,y,re,im\n");
        for &x in &self.x.0 {
            for &y in &self.y.0 {
                let z = f(x, y)?;
                csv.push_str(&format!("{},{},{},{}\n", fmt(x), fmt(y), fmt(z.re), fmt(z.im)));
            }
        }
        let summary = serde_json::json!({
            "version": FORMAT_VERSION,
            "command": "kernels eval",
            "family": self.family.to_possible_value().map(|v| v.get_name().to_string()),
            "points": self.x.0.len() * self.y.0.len(),
            "out": self.out,
        });
        emit(self.out.as_ref(), csv.as_bytes(), &summary)
    }
}
