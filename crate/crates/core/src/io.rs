//! Field and solve-report containers: a text header followed by raw
//! little-endian `f64` node values. See `docs/FORMAT.md`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BallGrid, Grid, ScalarField, TorusGrid};
use crate::scalar::{lit, to_f64, Real};
use crate::solver::{Equation, SolveReport};

const FIELD_MAGIC: &str = "HCMA-FIELD 1";
const REPORT_MAGIC: &str = "HCMA-SOLVE 1";

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Writes the header and the values of `field`.
pub fn write_field<T: Real, W: Write>(w: &mut W, field: &ScalarField<T>) -> Result<()> {
    writeln!(w, "{FIELD_MAGIC}")?;
    match field.grid().as_ref() {
        Grid::Torus(t) => {
            writeln!(w, "kind torus")?;
            writeln!(w, "m {}", t.m())?;
            writeln!(w, "res {}", t.res())?;
            writeln!(w, "period {}", to_f64(t.period()))?;
        }
        Grid::Ball(b) => {
            writeln!(w, "kind ball")?;
            writeln!(w, "n {}", b.n())?;
            writeln!(w, "half {}", b.half())?;
            writeln!(w, "spacing {}", to_f64(b.spacing()))?;
            let c: Vec<String> = b.center().iter().map(|&v| to_f64(v).to_string()).collect();
            writeln!(w, "center {}", c.join(" "))?;
        }
    }
    writeln!(w, "order row-major")?;
    writeln!(w, "values {} f64le", field.len())?;
    writeln!(w, "end")?;
    let mut buf = Vec::with_capacity(8 * field.len());
    for &v in field.values() {
        buf.extend_from_slice(&to_f64(v).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn header_lines<R: BufRead>(r: &mut R, magic: &str) -> Result<Vec<(String, String)>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != magic {
        return Err(fmt_err(format!("expected '{magic}', found '{}'", line.trim_end())));
    }
    let mut out = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(fmt_err("header is not terminated by 'end'"));
        }
        let l = line.trim_end();
        if l == "end" {
            return Ok(out);
        }
        let (k, v) = l.split_once(' ').unwrap_or((l, ""));
        out.push((k.to_string(), v.to_string()));
    }
}

fn get<'a>(h: &'a [(String, String)], key: &str) -> Result<&'a str> {
    h.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| fmt_err(format!("missing header key '{key}'")))
}

fn parse<V: std::str::FromStr>(h: &[(String, String)], key: &str) -> Result<V> {
    get(h, key)?.parse().map_err(|_| fmt_err(format!("bad value for '{key}'")))
}

/// Reads a field written by [`write_field`].
pub fn read_field<T: Real, R: BufRead>(r: &mut R) -> Result<ScalarField<T>> {
    let h = header_lines(r, FIELD_MAGIC)?;
    let grid = match get(&h, "kind")? {
        "torus" => Grid::Torus(TorusGrid::new(parse(&h, "m")?, parse(&h, "res")?, lit(parse::<f64>(&h, "period")?))?),
        "ball" => {
            let center = get(&h, "center")?
                .split_whitespace()
                .map(|v| v.parse::<f64>().map(lit).map_err(|_| fmt_err("bad center")))
                .collect::<Result<Vec<T>>>()?;
            Grid::Ball(BallGrid::new(parse(&h, "n")?, center, parse(&h, "half")?, lit(parse::<f64>(&h, "spacing")?))?)
        }
        other => return Err(fmt_err(format!("unknown grid kind '{other}'"))),
    };
    if get(&h, "order")? != "row-major" {
        return Err(fmt_err("unsupported node order"));
    }
    let vals = get(&h, "values")?;
    let (count, enc) = vals.split_once(' ').ok_or_else(|| fmt_err("bad values line"))?;
    if enc != "f64le" {
        return Err(fmt_err(format!("unsupported encoding '{enc}'")));
    }
    let count: usize = count.parse().map_err(|_| fmt_err("bad value count"))?;
    if count != grid.len() {
        return Err(fmt_err(format!("{count} values for a grid of {} nodes", grid.len())));
    }
    let mut bytes = vec![0u8; 8 * count];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    ScalarField::new(Arc::new(grid), values)
}

/// Writes the scalars of a solve followed by the potential.
pub fn write_solve_report<T: Real, W: Write>(w: &mut W, eq: Equation, rep: &SolveReport<T>) -> Result<()> {
    writeln!(w, "{REPORT_MAGIC}")?;
    writeln!(w, "equation {}", eq.name())?;
    writeln!(w, "b {}", to_f64(rep.b))?;
    writeln!(w, "cone_margin {}", to_f64(rep.cone_margin))?;
    writeln!(w, "iterations {}", rep.iterations)?;
    writeln!(w, "continuation_steps {}", rep.continuation_steps)?;
    writeln!(w, "linear_iterations {}", rep.linear_iterations)?;
    let hist: Vec<String> = rep.residual_history.iter().map(|&v| to_f64(v).to_string()).collect();
    writeln!(w, "residual_history {}", hist.join(" "))?;
    writeln!(w, "end")?;
    write_field(w, &rep.potential)
}

pub fn read_solve_report<T: Real, R: BufRead>(r: &mut R) -> Result<(Equation, SolveReport<T>)> {
    let h = header_lines(r, REPORT_MAGIC)?;
    let eq = match get(&h, "equation")? {
        "cma" => Equation::Cma,
        "n1ma" => Equation::N1ma,
        other => return Err(fmt_err(format!("unknown equation '{other}'"))),
    };
    let residual_history = get(&h, "residual_history")?
        .split_whitespace()
        .map(|v| v.parse::<f64>().map(lit).map_err(|_| fmt_err("bad residual history")))
        .collect::<Result<Vec<T>>>()?;
    let potential = read_field(r)?;
    Ok((
        eq,
        SolveReport {
            potential,
            b: lit(parse::<f64>(&h, "b")?),
            residual_history,
            cone_margin: lit(parse::<f64>(&h, "cone_margin")?),
            iterations: parse(&h, "iterations")?,
            continuation_steps: parse(&h, "continuation_steps")?,
            linear_iterations: parse(&h, "linear_iterations")?,
        },
    ))
}
