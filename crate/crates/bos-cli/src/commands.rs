//! One function per subcommand. Every command resolves its options from
//! flags plus the optional config file, runs the mapped core operation,
//! writes artifacts under the output directory, and returns a [`Report`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bos_core::evolution::{evolve, growth_envelope, Scheme};
use bos_core::factorization::{
    factorization_residual, hs_norm_estimate, l11_solve_composed, l11_solve_direct,
    resolvent_apply, BlockDecomposition,
};
use bos_core::fourier::{analyze, synthesize};
use bos_core::inverse::{
    compute_y0, minv_closed_form, minv_fourier, minv_ode, InverseProfile,
};
use bos_core::linalg::DenseLu;
use bos_core::operators::{assemble, assemble_quadrature, adjoint_check, OperatorKind};
use bos_core::spectrum::{compute_spectrum, SpectrumReport};
use bos_core::{FourierVector, GridFunction, OperatorParams};

use crate::config::ConfigFile;
use crate::report::{Check, Report};
use crate::{Cli, CliError, Command, OutputFormat};

type Result<T> = std::result::Result<T, CliError>;

/// Options shared by every subcommand after merging flags and config file.
struct Context {
    seed: u64,
    out_dir: PathBuf,
    format: OutputFormat,
    file: ConfigFile,
}

pub fn run(cli: Cli, file: ConfigFile) -> Result<Report> {
    let mut seed = cli.seed;
    file.fill(&mut seed, "seed", "integer")?;
    let mut out_dir = cli.out;
    if out_dir.is_none() {
        if let Some(raw) = file.get("out") {
            out_dir = Some(PathBuf::from(raw));
        }
    }
    let format = match cli.format {
        Some(f) => f,
        None => match file.get("format") {
            Some("csv") | None => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "format must be csv or json, got '{other}'"
                )))
            }
        },
    };
    let ctx = Context {
        seed: seed.unwrap_or(0),
        out_dir: out_dir.unwrap_or_else(|| PathBuf::from(".")),
        format,
        file,
    };
    fs::create_dir_all(&ctx.out_dir)?;
    let mut report = match cli.command {
        Command::Assemble(args) => cmd_assemble(&ctx, args)?,
        Command::Minverse(args) => cmd_minverse(&ctx, args)?,
        Command::FactorCheck(args) => cmd_factor_check(&ctx, args)?,
        Command::Resolvent(args) => cmd_resolvent(&ctx, args)?,
        Command::HsNorm(args) => cmd_hs_norm(&ctx, args)?,
        Command::Spectrum(args) => cmd_spectrum(&ctx, args)?,
        Command::Evolve(args) => cmd_evolve(&ctx, args)?,
        Command::Growth(args) => cmd_growth(&ctx, args)?,
        Command::VerifyAll(args) => cmd_verify_all(&ctx, args)?,
    };
    report.seed = ctx.seed;
    let path = ctx.out_dir.join(format!("{}_report.json", report.command));
    report.write_json(BufWriter::new(File::create(path)?))?;
    Ok(report)
}

fn require<T>(opt: Option<T>, flag: &str) -> Result<T> {
    opt.ok_or_else(|| CliError::Config(format!("missing required option --{flag}")))
}

fn params_of(a: f64, b: f64) -> Result<OperatorParams<f64>> {
    Ok(OperatorParams::new(a, b)?)
}

fn echo(entries: &[(&str, String)]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn read_grid(path: &Path) -> Result<GridFunction<f64>> {
    Ok(GridFunction::read_csv(BufReader::new(File::open(path)?))?)
}

fn parse_usize_list(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad integer '{s}' in list")))
        })
        .collect()
}

/// "START:END:STEP" inclusive of both ends (up to roundoff).
fn parse_range(raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "range must be START:END:STEP, got '{raw}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number '{s}' in range")))
        })
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start {
        return Err(CliError::Config(format!("empty or descending range '{raw}'")));
    }
    let count = ((end - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

// ---------------------------------------------------------------- assemble

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Truncation half-width N (modes -N..N).
    #[arg(long)]
    n: Option<usize>,
    /// One of S, M, Mstar, D, C, L.
    #[arg(long)]
    kind: Option<String>,
}

fn cmd_assemble(ctx: &Context, mut args: AssembleArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    ctx.file.fill(&mut args.kind, "kind", "operator kind")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let n = require(args.n, "n")?;
    let kind = OperatorKind::parse(&require(args.kind, "kind")?)?;
    let params = params_of(a, b)?;

    let matrix = assemble(&params, n, kind)?;
    // Independent quadrature assembly as the correctness check.
    let grid_points = (4 * n + 2).max(256);
    let quad = assemble_quadrature(&params, n, kind, grid_points)?;
    let dense = matrix.to_dense();
    let mut defect = 0.0f64;
    for ((i, j), v) in dense.indexed_iter() {
        defect = defect.max((v - quad[[i, j]]).norm());
    }

    let file_name = format!("assemble_{}.csv", kind.name());
    let mut rows = 0usize;
    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join(&file_name))?);
        matrix.write_csv(&mut w)?;
    }
    let mut entries = Vec::new();
    for ((i, j), v) in dense.indexed_iter() {
        if v.norm() > 0.0 {
            rows += 1;
            if ctx.format == OutputFormat::Json {
                entries.push(serde_json::json!({
                    "m": i as i64 - n as i64,
                    "n": j as i64 - n as i64,
                    "re": v.re,
                    "im": v.im,
                }));
            }
        }
    }

    let mut report = Report::new(
        "assemble",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
            ("kind", kind.name().to_string()),
        ]),
    );
    report.results = serde_json::json!({
        "nonzeros": rows,
        "file": if ctx.format == OutputFormat::Csv { Some(&file_name) } else { None },
        "entries": if ctx.format == OutputFormat::Json { Some(entries) } else { None },
    });
    report
        .checks
        .push(Check::at_most("assembly_quadrature_defect", defect, 1e-10));
    Ok(report)
}

// ---------------------------------------------------------------- minverse

#[derive(Debug, Args)]
pub struct MinverseArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Right-hand side sampled on a uniform periodic grid (`x,re,im` CSV).
    #[arg(long)]
    input: Option<PathBuf>,
    /// closed-form | fourier | ode.
    #[arg(long)]
    method: Option<String>,
    /// Closed-form profile override: endpoint blend radius.
    #[arg(long)]
    x_cut: Option<f64>,
    /// Closed-form profile override: Gauss nodes per panel.
    #[arg(long)]
    quad_order: Option<usize>,
    /// Closed-form profile override: graded panel count.
    #[arg(long)]
    panels: Option<usize>,
}

fn cmd_minverse(ctx: &Context, mut args: MinverseArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.input, "input", "path")?;
    ctx.file.fill(&mut args.method, "method", "method name")?;
    ctx.file.fill(&mut args.x_cut, "x_cut", "number")?;
    ctx.file.fill(&mut args.quad_order, "quad_order", "integer")?;
    ctx.file.fill(&mut args.panels, "panels", "integer")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let input = require(args.input, "input")?;
    let method = args.method.unwrap_or_else(|| "closed-form".to_string());
    let params = params_of(a, b)?;

    let mut profile = InverseProfile::default();
    if let Some(v) = args.x_cut {
        profile.x_cut = v;
    }
    if let Some(v) = args.quad_order {
        profile.quad_order = v;
    }
    if let Some(v) = args.panels {
        profile.panels = v;
    }
    profile.validate()?;

    let grid = read_grid(&input)?;
    let half_width = (grid.len() - 1) / 2;
    let uf = analyze(&grid, half_width)?;
    let u = |x: f64| uf.eval(x);
    let nodes = grid.nodes().to_vec();

    let mut checks = Vec::new();
    let y = match method.as_str() {
        "closed-form" | "ode" => {
            let y = if method == "closed-form" {
                minv_closed_form(&params, &u, &nodes, &profile)?
            } else {
                minv_ode(&params, &u, &nodes)?
            };
            // Cross-validate against the other direct oracle on a subsample
            // away from the endpoint limits.
            let sample: Vec<f64> = nodes
                .iter()
                .copied()
                .filter(|x| x.abs() > 0.05 && x.abs() < std::f64::consts::PI - 0.05)
                .step_by((nodes.len() / 9).max(1))
                .collect();
            let other = if method == "closed-form" {
                minv_ode(&params, &u, &sample)?
            } else {
                minv_closed_form(&params, &u, &sample, &profile)?
            };
            let mut worst = 0.0f64;
            for (i, &x) in sample.iter().enumerate() {
                let j = nodes.iter().position(|&v| v == x).unwrap();
                worst = worst.max((y.values()[j] - other.values()[i]).norm());
            }
            checks.push(Check::at_most("oracle_agreement", worst, 1e-6));
            y
        }
        "fourier" => {
            let yf = minv_fourier(&params, &uf)?;
            let m = assemble(&params, half_width, OperatorKind::M)?;
            let residual = m.apply(&yf)?.sub(&uf)?.l2_norm() / uf.l2_norm().max(1.0);
            checks.push(Check::at_most("fourier_solve_residual", residual, 1e-10));
            synthesize(&yf, &nodes)?
        }
        other => {
            return Err(CliError::Config(format!(
                "method must be closed-form, fourier or ode, got '{other}'"
            )))
        }
    };

    let mut report = Report::new(
        "minverse",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("input", input.display().to_string()),
            ("method", method.clone()),
            ("x_cut", profile.x_cut.to_string()),
            ("quad_order", profile.quad_order.to_string()),
            ("panels", profile.panels.to_string()),
        ]),
    );
    report.results = write_grid_artifact(ctx, "y.csv", &y)?;
    report.checks = checks;
    Ok(report)
}

fn write_grid_artifact(
    ctx: &Context,
    name: &str,
    g: &GridFunction<f64>,
) -> Result<serde_json::Value> {
    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join(name))?);
        g.write_csv(&mut w)?;
        Ok(serde_json::json!({ "file": name, "points": g.len() }))
    } else {
        let rows: Vec<serde_json::Value> = g
            .nodes()
            .iter()
            .zip(g.values())
            .map(|(x, v)| serde_json::json!({ "x": x, "re": v.re, "im": v.im }))
            .collect();
        Ok(serde_json::json!({ "points": g.len(), "values": rows }))
    }
}

// ------------------------------------------------------------ factor-check

#[derive(Debug, Args)]
pub struct FactorCheckArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

fn cmd_factor_check(ctx: &Context, mut args: FactorCheckArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let n = require(args.n, "n")?;
    let params = params_of(a, b)?;

    let factorization = factorization_residual(&params, n, (4 * n + 2).max(512))?;
    let adjoint = adjoint_check(&params, n)?;
    let equivalence = composed_equivalence(&params, n, ctx.seed, 5)?;

    let mut report = Report::new(
        "factor-check",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
        ]),
    );
    report.results = serde_json::json!({
        "params": { "a": a, "b": b },
        "n": n,
        "residuals": {
            "factorization": factorization,
            "adjoint": adjoint,
            "equivalence": equivalence,
        },
    });
    report.checks = vec![
        Check::at_most("factorization_residual", factorization, 1e-10),
        Check::at_most("adjoint_defect", adjoint, 1e-13),
        Check::at_most("inverse_equivalence", equivalence, 1e-7),
    ];
    Ok(report)
}

/// Worst relative disagreement between the composed and the direct L11
/// inverse over seeded random mean-zero vectors.
fn composed_equivalence(
    params: &OperatorParams<f64>,
    n: usize,
    seed: u64,
    trials: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decomp = BlockDecomposition::new(params, n)?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut g = FourierVector::zeros(n);
        for m in -(n as i64)..=(n as i64) {
            if m != 0 {
                *g.coeff_mut(m) =
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        / (1.0 + (m * m) as f64);
            }
        }
        let direct = l11_solve_direct(&decomp, &g)?;
        let composed = l11_solve_composed(params, &g)?;
        worst = worst.max(composed.y.sub(&direct)?.l2_norm() / direct.l2_norm().max(1.0));
    }
    Ok(worst)
}

// --------------------------------------------------------------- resolvent

#[derive(Debug, Args)]
pub struct ResolventArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Shift as RE,IM.
    #[arg(long)]
    lambda: Option<String>,
    /// Function to resolve, sampled on a uniform periodic grid.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn cmd_resolvent(ctx: &Context, mut args: ResolventArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    ctx.file.fill(&mut args.lambda, "lambda", "RE,IM")?;
    ctx.file.fill(&mut args.input, "input", "path")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let n = require(args.n, "n")?;
    let lambda_raw = require(args.lambda, "lambda")?;
    let input = require(args.input, "input")?;
    let lambda = parse_complex(&lambda_raw)?;
    let params = params_of(a, b)?;

    let grid = read_grid(&input)?;
    let f = analyze(&grid, n)?;
    let solve = resolvent_apply(&params, lambda, &f)?;

    // Independent dense solve of (L_N - lambda) y = f.
    let decomp = BlockDecomposition::new(&params, n)?;
    let mut shifted = decomp.full.clone();
    for i in 0..2 * n + 1 {
        shifted[[i, i]] -= lambda;
    }
    let lu = DenseLu::factor(&shifted)?;
    let dense = FourierVector::from_coeffs(n, lu.solve_vec(f.coeffs())?)?;
    let defect = solve.y.sub(&dense)?.l2_norm() / dense.l2_norm().max(1.0);

    let y = synthesize(&solve.y, grid.nodes())?;
    let mut report = Report::new(
        "resolvent",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
            ("lambda", lambda_raw.clone()),
            ("input", input.display().to_string()),
        ]),
    );
    let artifact = write_grid_artifact(ctx, "y.csv", &y)?;
    report.results = serde_json::json!({
        "artifact": artifact,
        "nearest_eigenvalue": { "re": solve.nearest_eigenvalue.re, "im": solve.nearest_eigenvalue.im },
        "distance": solve.distance,
        "refusal_threshold": solve.threshold,
    });
    report
        .checks
        .push(Check::at_most("resolvent_vs_dense", defect, 1e-8));
    Ok(report)
}

fn parse_complex(raw: &str) -> Result<Complex64> {
    let (re, im) = raw
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("lambda must be RE,IM, got '{raw}'")))?;
    let re = re
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("bad real part '{re}'")))?;
    let im = im
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("bad imaginary part '{im}'")))?;
    Ok(Complex64::new(re, im))
}

// ----------------------------------------------------------------- hs-norm

#[derive(Debug, Args)]
pub struct HsNormArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated ascending truncations, e.g. 16,32,64,128.
    #[arg(long = "n-list")]
    n_list: Option<String>,
}

fn cmd_hs_norm(ctx: &Context, mut args: HsNormArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n_list, "n_list", "integer list")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let list = parse_usize_list(&require(args.n_list, "n-list")?)?;
    let params = params_of(a, b)?;

    let hs = hs_norm_estimate(&params, &list)?;
    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join("hs.csv"))?);
        writeln!(w, "n,hs_norm")?;
        for (n, v) in hs.half_widths.iter().zip(&hs.values) {
            writeln!(w, "{n},{v:.17e}")?;
        }
    }

    let mut report = Report::new(
        "hs-norm",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            (
                "n_list",
                list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
            ),
        ]),
    );
    report.results = serde_json::json!({
        "hs_sequence": hs.values,
        "half_widths": hs.half_widths,
        "row_norm_slope": hs.row_norm_slope,
    });
    report.checks = vec![
        Check::holds(
            "hs_increments_strictly_decreasing",
            hs.increments_strictly_decreasing,
        ),
        Check::at_most("hs_row_norm_slope", hs.row_norm_slope, -0.9),
    ];
    Ok(report)
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of smallest-modulus eigenvalues to report.
    #[arg(long)]
    k: Option<usize>,
    /// Parameter sweep, e.g. a=0:0.4:0.05 (one CSV per grid point).
    #[arg(long)]
    sweep: Option<String>,
}

fn cmd_spectrum(ctx: &Context, mut args: SpectrumArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    ctx.file.fill(&mut args.k, "k", "integer")?;
    ctx.file.fill(&mut args.sweep, "sweep", "sweep spec")?;
    let b = require(args.b, "b")?;
    let n = require(args.n, "n")?;
    let k = require(args.k, "k")?;

    if let Some(sweep) = &args.sweep {
        return spectrum_sweep(ctx, sweep, args.a, b, n, k);
    }
    let a = require(args.a, "a")?;
    let params = params_of(a, b)?;
    let rep = compute_spectrum(&params, n, k)?;
    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join("spec.csv"))?);
        write_spectrum_csv(&mut w, &rep)?;
    }
    let mut report = Report::new(
        "spectrum",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
            ("k", k.to_string()),
        ]),
    );
    report.results = spectrum_results(&rep);
    report.checks = spectrum_checks(a, &rep);
    Ok(report)
}

fn write_spectrum_csv<W: Write>(w: &mut W, rep: &SpectrumReport<f64>) -> Result<()> {
    writeln!(w, "re,im,converged,stability")?;
    for p in &rep.pairs {
        writeln!(
            w,
            "{:.17e},{:.17e},{},{:.17e}",
            p.value.re,
            p.value.im,
            if p.stable { 1 } else { 0 },
            p.shift
        )?;
    }
    Ok(())
}

fn spectrum_results(rep: &SpectrumReport<f64>) -> serde_json::Value {
    serde_json::json!({
        "half_width": rep.half_width,
        "eigenvalues": rep.pairs.iter().map(|p| serde_json::json!({
            "re": p.value.re,
            "im": p.value.im,
            "residual": p.residual,
            "shift": p.shift,
            "converged": p.stable,
        })).collect::<Vec<_>>(),
        "max_real_part_ratio": rep.max_real_part_ratio,
        "conjugate_pairing_defect": rep.conjugate_pairing_defect,
    })
}

fn spectrum_checks(a: f64, rep: &SpectrumReport<f64>) -> Vec<Check> {
    let worst_residual = rep.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("eigen_residual_max", worst_residual, 1e-10),
        Check::at_most(
            "conjugate_pairing_defect",
            rep.conjugate_pairing_defect,
            1e-8,
        ),
    ];
    // The imaginary-axis contract exists only in the unperturbed case; for
    // a > 0 the ratio is recorded in the results but not asserted.
    if a == 0.0 {
        checks.push(Check::at_most(
            "max_real_part_ratio",
            rep.max_real_part_ratio,
            1e-8,
        ));
    }
    checks
}

fn spectrum_sweep(
    ctx: &Context,
    sweep: &str,
    a_flag: Option<f64>,
    b: f64,
    n: usize,
    k: usize,
) -> Result<Report> {
    let (axis, values) = {
        let (axis, range) = sweep
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("sweep must be a=LO:HI:STEP or b=LO:HI:STEP, got '{sweep}'")))?;
        (axis.trim().to_string(), parse_range(range)?)
    };
    if axis != "a" && axis != "b" {
        return Err(CliError::Config(format!("sweep axis must be a or b, got '{axis}'")));
    }
    let mut index = Vec::new();
    let mut worst_pairing = 0.0f64;
    let mut worst_residual = 0.0f64;
    for &v in &values {
        let (a, b) = if axis == "a" {
            (v, b)
        } else {
            (require(a_flag, "a")?, v)
        };
        let params = params_of(a, b)?;
        let rep = compute_spectrum(&params, n, k)?;
        let file = format!("spectrum_{axis}_{v:.6}.csv");
        if ctx.format == OutputFormat::Csv {
            let mut w = BufWriter::new(File::create(ctx.out_dir.join(&file))?);
            write_spectrum_csv(&mut w, &rep)?;
        }
        worst_pairing = worst_pairing.max(rep.conjugate_pairing_defect);
        worst_residual = worst_residual.max(
            rep.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
        );
        index.push(serde_json::json!({
            "a": a,
            "b": b,
            "file": file,
            "max_real_part_ratio": rep.max_real_part_ratio,
            "conjugate_pairing_defect": rep.conjugate_pairing_defect,
            "converged": rep.pairs.iter().filter(|p| p.stable).count(),
        }));
    }
    let index_json = serde_json::json!({ "schema_version": 1, "points": index });
    let mut w = BufWriter::new(File::create(ctx.out_dir.join("spectrum_index.json"))?);
    serde_json::to_writer_pretty(&mut w, &index_json).map_err(std::io::Error::from)?;
    writeln!(w)?;

    let mut report = Report::new(
        "spectrum",
        ctx.seed,
        echo(&[
            ("sweep", sweep.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
            ("k", k.to_string()),
        ]),
    );
    report.results = index_json;
    report.checks = vec![
        Check::at_most("eigen_residual_max", worst_residual, 1e-10),
        Check::at_most("conjugate_pairing_defect", worst_pairing, 1e-8),
    ];
    Ok(report)
}

// ------------------------------------------------------------------ evolve

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    /// Initial data: a grid CSV path, or preset:{bump,mode:K,random}.
    #[arg(long)]
    init: Option<String>,
    /// rk4 | expm.
    #[arg(long)]
    scheme: Option<String>,
}

fn cmd_evolve(ctx: &Context, mut args: EvolveArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    ctx.file.fill(&mut args.dt, "dt", "number")?;
    ctx.file.fill(&mut args.tmax, "tmax", "number")?;
    ctx.file.fill(&mut args.init, "init", "init spec")?;
    ctx.file.fill(&mut args.scheme, "scheme", "scheme name")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let n = require(args.n, "n")?;
    let dt = args.dt.unwrap_or(1e-3);
    let tmax = args.tmax.unwrap_or(10.0);
    let init = require(args.init, "init")?;
    let scheme = Scheme::parse(&args.scheme.unwrap_or_else(|| "rk4".into()))?;
    let params = params_of(a, b)?;

    let y0 = initial_data(&init, n, ctx.seed)?;
    let trace = evolve(&params, &y0, tmax, dt, scheme)?;

    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join("trace.csv"))?);
        writeln!(w, "t,l2,h1,blowup_flag")?;
        let last = trace.times.len() - 1;
        for (i, t) in trace.times.iter().enumerate() {
            // The flag marks the final recorded row of a truncated trace.
            let flag = if trace.blew_up && i == last { 1 } else { 0 };
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{flag}",
                t, trace.l2_norms[i], trace.h1_norms[i]
            )?;
        }
    }

    let mut worst_mean = 0.0f64;
    for m in &trace.means {
        worst_mean = worst_mean.max((m - y0.mean()).norm());
    }

    let mut report = Report::new(
        "evolve",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("n", n.to_string()),
            ("dt", dt.to_string()),
            ("tmax", tmax.to_string()),
            ("init", init.clone()),
            ("scheme", format!("{scheme:?}")),
        ]),
    );
    report.results = serde_json::json!({
        "growth_factor": trace.growth_factor,
        "blew_up": trace.blew_up,
        "recorded_steps": trace.times.len(),
        "final_time": trace.times.last(),
    });
    report
        .checks
        .push(Check::at_most("mean_conservation", worst_mean, 1e-10));
    Ok(report)
}

fn initial_data(init: &str, n: usize, seed: u64) -> Result<FourierVector<f64>> {
    if let Some(preset) = init.strip_prefix("preset:") {
        let mut y0 = FourierVector::zeros(n);
        match preset {
            "bump" => {
                // Smooth bump: rapidly decaying even coefficients.
                let width = (n as f64 / 4.0).max(1.0);
                for m in -(n as i64)..=(n as i64) {
                    let g = (-((m as f64 / width).powi(2))).exp();
                    *y0.coeff_mut(m) = Complex64::new(g, 0.0);
                }
            }
            "random" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for m in -(n as i64)..=(n as i64) {
                    *y0.coeff_mut(m) =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                            / (1.0 + (m * m) as f64);
                }
            }
            other => match other.strip_prefix("mode:") {
                Some(num) => {
                    let k: i64 = num.parse().map_err(|_| {
                        CliError::Config(format!("bad mode number '{num}' in --init"))
                    })?;
                    if k.unsigned_abs() as usize > n {
                        return Err(CliError::Config(format!(
                            "mode {k} outside truncation half-width {n}"
                        )));
                    }
                    *y0.coeff_mut(k) = Complex64::new(1.0, 0.0);
                }
                None => {
                    return Err(CliError::Config(format!(
                        "unknown preset '{other}' (expected bump, mode:K or random)"
                    )))
                }
            },
        }
        Ok(y0)
    } else {
        let grid = read_grid(Path::new(init))?;
        Ok(analyze(&grid, n)?)
    }
}

// ------------------------------------------------------------------ growth

#[derive(Debug, Args)]
pub struct GrowthArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated ascending truncations.
    #[arg(long = "n-list")]
    n_list: Option<String>,
    /// Time grid START:END:STEP.
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
}

fn cmd_growth(ctx: &Context, mut args: GrowthArgs) -> Result<Report> {
    ctx.file.fill(&mut args.a, "a", "number")?;
    ctx.file.fill(&mut args.b, "b", "number")?;
    ctx.file.fill(&mut args.n_list, "n_list", "integer list")?;
    ctx.file.fill(&mut args.t_grid, "t_grid", "range")?;
    let a = require(args.a, "a")?;
    let b = require(args.b, "b")?;
    let list = parse_usize_list(&require(args.n_list, "n-list")?)?;
    let times = parse_range(&args.t_grid.unwrap_or_else(|| "0:5:0.25".into()))?;
    let params = params_of(a, b)?;

    let mut rows = Vec::new();
    let mut maxes = Vec::new();
    let mut at_zero = 0.0f64;
    for &n in &list {
        let env = growth_envelope(&params, n, &times)?;
        for (t, v) in times.iter().zip(&env) {
            if *t == 0.0 {
                at_zero = at_zero.max(v.abs());
            }
            rows.push((n, *t, *v));
        }
        maxes.push(env.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    if ctx.format == OutputFormat::Csv {
        let mut w = BufWriter::new(File::create(ctx.out_dir.join("growth.csv"))?);
        writeln!(w, "n,t,log_norm")?;
        for (n, t, v) in &rows {
            writeln!(w, "{n},{t:.17e},{v:.17e}")?;
        }
    }

    let mut report = Report::new(
        "growth",
        ctx.seed,
        echo(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            (
                "n_list",
                list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
            ),
        ]),
    );
    report.results = serde_json::json!({
        "log_envelope_max_per_n": maxes,
        "half_widths": list,
    });
    report
        .checks
        .push(Check::at_most("envelope_log_at_zero", at_zero, 1e-10));
    // The monotone-growth contract is stated for the unperturbed operator.
    if a == 0.0 && b == 1.0 {
        let monotone = maxes.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        report
            .checks
            .push(Check::holds("envelope_max_nondecreasing", monotone));
    }
    Ok(report)
}

// -------------------------------------------------------------- verify-all

#[derive(Debug, Args)]
pub struct VerifyAllArgs {
    /// Semicolon-separated parameter pairs a,b (default covers the
    /// unperturbed case and two generic points).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    n: Option<usize>,
}

fn cmd_verify_all(ctx: &Context, mut args: VerifyAllArgs) -> Result<Report> {
    ctx.file.fill(&mut args.grid, "grid", "parameter grid")?;
    ctx.file.fill(&mut args.n, "n", "integer")?;
    let raw = args
        .grid
        .unwrap_or_else(|| "0,1;0.3,1;0.2,1.2".to_string());
    let n = args.n.unwrap_or(64);
    let mut points = Vec::new();
    for chunk in raw.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (a, b) = chunk
            .split_once(',')
            .ok_or_else(|| CliError::Config(format!("grid point must be a,b, got '{chunk}'")))?;
        let a = a
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad number '{a}' in grid")))?;
        let b = b
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad number '{b}' in grid")))?;
        points.push((a, b));
    }
    if points.is_empty() {
        return Err(CliError::Config("empty parameter grid".into()));
    }

    let mut factorization = 0.0f64;
    let mut adjoint = 0.0f64;
    let mut equivalence = 0.0f64;
    let mut endpoint = 0.0f64;
    let mut evenness = 0.0f64;
    let mut pairing = 0.0f64;
    let mut mean_drift = 0.0f64;
    let mut core_real_ratio: Option<f64> = None;
    let mut per_point = Vec::new();
    for &(a, b) in &points {
        let params = params_of(a, b)?;
        let f = factorization_residual(&params, n, (4 * n + 2).max(512))?;
        let adj = adjoint_check(&params, n)?;
        let eq = composed_equivalence(&params, n, ctx.seed, 5)?;
        let y0 = compute_y0(&params, &InverseProfile::default(), 256)?;
        let ep = (y0.computed_at_zero.re - 1.0 / (1.0 - a))
            .abs()
            .max(y0.computed_at_zero.im.abs())
            .max((y0.computed_at_pi.re - 1.0 / (1.0 + a)).abs())
            .max(y0.computed_at_pi.im.abs());
        let spec = compute_spectrum(&params, n, 4)?;
        let mut y_mode = FourierVector::zeros(16);
        *y_mode.coeff_mut(0) = Complex64::new(0.7, 0.2);
        *y_mode.coeff_mut(1) = Complex64::new(1.0, 0.0);
        let trace = evolve(&params, &y_mode, 1.0, 1e-2, Scheme::Rk4)?;
        let md = trace
            .means
            .iter()
            .map(|m| (m - y_mode.mean()).norm())
            .fold(0.0, f64::max);

        factorization = factorization.max(f);
        adjoint = adjoint.max(adj);
        equivalence = equivalence.max(eq);
        endpoint = endpoint.max(ep);
        evenness = evenness.max(y0.evenness_defect);
        pairing = pairing.max(spec.conjugate_pairing_defect);
        mean_drift = mean_drift.max(md);
        if a == 0.0 {
            let r = core_real_ratio.unwrap_or(0.0);
            core_real_ratio = Some(r.max(spec.max_real_part_ratio));
        }
        per_point.push(serde_json::json!({
            "a": a, "b": b,
            "factorization": f,
            "adjoint": adj,
            "equivalence": eq,
            "endpoint": ep,
            "evenness": y0.evenness_defect,
            "conjugate_pairing": spec.conjugate_pairing_defect,
            "mean_drift": md,
        }));
    }

    let mut report = Report::new(
        "verify-all",
        ctx.seed,
        echo(&[("grid", raw.clone()), ("n", n.to_string())]),
    );
    report.results = serde_json::json!({ "points": per_point });
    report.checks = vec![
        Check::at_most("factorization_residual", factorization, 1e-10),
        Check::at_most("adjoint_defect", adjoint, 1e-13),
        Check::at_most("inverse_equivalence", equivalence, 1e-7),
        Check::at_most("endpoint_limit_error", endpoint, 1e-6),
        Check::at_most("evenness_defect", evenness, 1e-8),
        Check::at_most("conjugate_pairing_defect", pairing, 1e-8),
        Check::at_most("mean_conservation", mean_drift, 1e-10),
    ];
    if let Some(r) = core_real_ratio {
        // Imaginary-axis contract for the resolved core (four smallest
        // eigenvalues) in the unperturbed case.
        report
            .checks
            .push(Check::at_most("core_max_real_part_ratio", r, 1e-8));
    }
    Ok(report)
}
