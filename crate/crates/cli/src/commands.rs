use serde::Serialize;

use steklov::concentration::{concentration_sequence, ConcentrationRun};
use steklov::exact::{spectrum_exact, EigenvalueRecord};
use steklov::extremal::{
    invert_rectangle, isoperimetric_check, random_cuboids, sigma1, Constraint, IsoperimetricReport,
};
use steklov::quasi::quasi_records;
use steklov::weyl::{remainder_table, weyl_constants, Quadrature};
use steklov::{Bipartition, Cuboid, SteklovError};

use crate::args::*;
use crate::output::{csv_text, emit, fmt_f64, json_text};
use crate::CliError;

fn cuboid(dims: &Dims) -> Result<Cuboid, CliError> {
    Ok(Cuboid::new(dims.0.clone())?)
}

fn quadrature(q: &QuadArgs) -> Quadrature {
    Quadrature { nodes: q.nodes, qmc_points: q.qmc_points, qmc_shifts: q.qmc_shifts, seed: q.seed }
}

#[derive(Serialize)]
struct SpectrumRow<'a> {
    sigma: f64,
    method: &'a str,
    p: usize,
    tau_mask: u64,
    #[serde(rename = "box")]
    box_index: String,
    ell_tau2_mask: u64,
    multiplicity: u64,
}

impl<'a> From<&'a EigenvalueRecord> for SpectrumRow<'a> {
    fn from(r: &'a EigenvalueRecord) -> Self {
        SpectrumRow {
            sigma: r.sigma,
            method: r.method.as_str(),
            p: r.p,
            tau_mask: r.tau_mask,
            box_index: r.box_index.joined(),
            ell_tau2_mask: r.ell_tau2_mask,
            multiplicity: r.multiplicity,
        }
    }
}

pub fn spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    let c = cuboid(&a.dims)?;
    eprintln!("computing {} spectrum below {}", if a.method == MethodArg::Exact { "exact" } else { "quasi" }, a.sigma_max);
    let records = match a.method {
        MethodArg::Exact => spectrum_exact(&c, a.sigma_max)?,
        MethodArg::Quasi => {
            if !(a.sigma_max > 0.0 && a.sigma_max.is_finite()) {
                return Err(CliError::Arg(format!("sigma-max must be positive and finite, got {}", a.sigma_max)));
            }
            quasi_records(&c, a.sigma_max)?
        }
    };
    let rows: Vec<SpectrumRow> = records.iter().map(SpectrumRow::from).collect();
    let text = match a.format {
        Format::Json => json_text(&rows)?,
        Format::Csv => csv_text(
            &["sigma", "method", "p", "tau_mask", "box", "ell_tau2_mask", "multiplicity"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.sigma),
                        r.method.to_string(),
                        r.p.to_string(),
                        r.tau_mask.to_string(),
                        r.box_index.clone(),
                        r.ell_tau2_mask.to_string(),
                        r.multiplicity.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    emit(a.out.output.as_deref(), &text)
}

/// Grid `lo, lo + step, ...` up to `hi`; empty when `lo > hi`.
fn sigma_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Arg(format!("step must be positive, got {step}")));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Arg(format!("sigma-min must be positive and the range finite, got [{lo}, {hi}]")));
    }
    if lo > hi {
        return Ok(Vec::new());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

pub fn weyl(a: &WeylArgs) -> Result<(), CliError> {
    let c = cuboid(&a.dims)?;
    let grid = sigma_grid(a.sigma_min, a.sigma_max, a.step)?;
    eprintln!("counting function on {} grid points", grid.len());
    let rows = remainder_table(&c, &grid, &quadrature(&a.quad))?;
    let max_r = rows.iter().map(|r| r.r.abs()).fold(0.0, f64::max);
    let text = match a.format {
        Format::Json => json_text(&rows)?,
        Format::Csv => {
            let two_terms = c.dim() > 2;
            let header: &[&str] =
                if two_terms { &["sigma", "N", "main", "second", "R"] } else { &["sigma", "N", "main", "R"] };
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![fmt_f64(r.sigma), r.n.to_string(), fmt_f64(r.main)];
                    if two_terms {
                        v.push(fmt_f64(r.second.unwrap_or(0.0)));
                    }
                    v.push(fmt_f64(r.r));
                    v
                })
                .collect();
            csv_text(header, &body)?
        }
    };
    emit(a.out.output.as_deref(), &text)?;
    eprintln!("max |R| = {}", fmt_f64(max_r));
    Ok(())
}

pub fn constants(a: &ConstantsArgs) -> Result<(), CliError> {
    let w = weyl_constants(a.dim, &quadrature(&a.quad))?;
    emit(a.out.output.as_deref(), &json_text(&w)?)
}

pub fn first(a: &Sigma1Args) -> Result<(), CliError> {
    let r = sigma1(&cuboid(&a.dims)?)?;
    emit(a.out.output.as_deref(), &json_text(&r)?)
}

#[derive(Serialize)]
struct Rectangle {
    a1: f64,
    a2: f64,
}

pub fn invert(a: &InvertArgs) -> Result<(), CliError> {
    let (a1, a2) = invert_rectangle(a.perimeter, a.sigma1).map_err(|e| match e {
        // no rectangle has this data: a problem with the input, not the numerics
        SteklovError::Inconsistent(m) => CliError::Arg(m),
        other => other.into(),
    })?;
    emit(a.out.output.as_deref(), &json_text(&Rectangle { a1, a2 })?)
}

#[derive(Serialize)]
struct Sweep {
    constraint: Constraint,
    seed: u64,
    count: usize,
    violations: usize,
    min_margin: f64,
    reports: Vec<IsoperimetricReport>,
}

pub fn isoperimetric(a: &IsoArgs) -> Result<(), CliError> {
    let k = match a.constraint {
        ConstraintArg::Volume => Constraint::Volume,
        ConstraintArg::Area => Constraint::Area,
    };
    let text = match (&a.dims, a.random) {
        (Some(d), None) => json_text(&isoperimetric_check(&cuboid(d)?, k)?)?,
        (None, Some(n)) => {
            let dim = a.dim.ok_or_else(|| CliError::Arg("--random needs --dim".into()))?;
            let range = parse_ranges(&a.range).map_err(|e| CliError::Arg(format!("range: {e}")))?;
            let [(lo, hi)] = range.0[..] else {
                return Err(CliError::Arg("range: expected a single lo:hi".into()));
            };
            let cuboids = random_cuboids(dim, n, lo, hi, a.seed)?;
            eprintln!("checking {n} random cuboids");
            let reports: Vec<IsoperimetricReport> =
                cuboids.iter().map(|c| isoperimetric_check(c, k)).collect::<Result<_, _>>()?;
            let violations = reports.iter().filter(|r| !r.holds).count();
            let min_margin = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
            eprintln!("{violations} violations, min margin {}", fmt_f64(min_margin));
            json_text(&Sweep { constraint: k, seed: a.seed, count: n, violations, min_margin, reports })?
        }
        _ => return Err(CliError::Arg("give either --dims or --random".into())),
    };
    emit(a.out.output.as_deref(), &text)
}

#[derive(Serialize)]
struct ConcentrationOut {
    half_lengths: Vec<f64>,
    trig_axes: Vec<usize>,
    patch: Vec<(f64, f64)>,
    #[serde(flatten)]
    run: ConcentrationRun,
}

pub fn concentration(a: &ConcentrationArgs) -> Result<(), CliError> {
    let c = cuboid(&a.dims)?;
    let b = Bipartition::from_trig(c.dim(), &a.trig.0)?;
    let patch = match &a.patch {
        Some(r) => r.0.clone(),
        None => b.trig().iter().map(|&i| (-c.a(i), c.a(i))).collect(),
    };
    eprintln!("solving k = 1..{}", a.k_max);
    let run = concentration_sequence(&c, &b, &patch, a.eps, a.k_max)?;
    if let Some(why) = &run.stopped {
        eprintln!("sequence stopped early: {why}");
    }
    let out = ConcentrationOut { half_lengths: c.half_lengths().to_vec(), trig_axes: b.trig().to_vec(), patch, run };
    emit(a.out.output.as_deref(), &json_text(&out)?)
}
