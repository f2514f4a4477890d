//! Named built-in observables: `identity`, `number`, `annihilation`, `parity`,
//! `quadrature(phi)`, `matrix_unit(k,n)`, `sigma_x|y|z` and `spin(nx,ny,nz)`.

use crate::error::{usage, CliResult};
use qtomo::oscore::{
    annihilation, build_operator, number, parity, quadrature, spin_along, Axis, Operator, OperatorKind, OperatorSpec,
    TwiceSpin,
};

fn args_of<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    name.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')
}

fn numbers(list: &str, count: usize, what: &str) -> CliResult<Vec<f64>> {
    let values = list
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("{what}: expected {count} numbers, got {list:?}")))?;
    if values.len() != count {
        return Err(usage(format!("{what}: expected {count} numbers, got {}", values.len())));
    }
    Ok(values)
}

fn index(x: f64, dim: usize, what: &str) -> CliResult<usize> {
    if x.fract() != 0.0 || x < 0.0 || x >= dim as f64 {
        return Err(usage(format!("{what}: index {x} outside 0..{dim}")));
    }
    Ok(x as usize)
}

/// Builds the named observable in dimension `dim`.
///
/// `matrix_unit(k,n)` is the operator `|k><n|`; its expectation is `<n|rho|k>`.
pub fn parse_observable(name: &str, dim: usize) -> CliResult<Operator> {
    let name = name.trim();
    let pauli = |axis| Ok(build_operator(&OperatorSpec::new(OperatorKind::Pauli { axis }, dim))?);
    match name {
        "identity" => return Ok(Operator::identity(dim)),
        "number" => return Ok(number(dim)),
        "annihilation" => return Ok(annihilation(dim)),
        "parity" => return Ok(parity(dim)),
        "sigma_x" => return pauli(Axis::X),
        "sigma_y" => return pauli(Axis::Y),
        "sigma_z" => return pauli(Axis::Z),
        _ => {}
    }
    if let Some(a) = args_of(name, "quadrature") {
        let phi = numbers(a, 1, "quadrature")?[0];
        return Ok(quadrature(dim, phi));
    }
    if let Some(a) = args_of(name, "matrix_unit") {
        let v = numbers(a, 2, "matrix_unit")?;
        return Ok(Operator::matrix_unit(dim, index(v[0], dim, "matrix_unit")?, index(v[1], dim, "matrix_unit")?));
    }
    if let Some(a) = args_of(name, "spin") {
        let v = numbers(a, 3, "spin")?;
        if dim < 2 {
            return Err(usage("spin observables need dim >= 2"));
        }
        let n = [v[0], v[1], v[2]];
        qtomo::oscore::check_unit(n)?;
        return Ok(spin_along(TwiceSpin((dim - 1) as u32), n));
    }
    Err(usage(format!(
        "unknown observable {name:?}; expected identity, number, annihilation, parity, quadrature(phi), \
         matrix_unit(k,n), sigma_x, sigma_y, sigma_z or spin(nx,ny,nz)"
    )))
}
