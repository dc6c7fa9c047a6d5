use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use toric_ricci::bound::{records_to_csv, BoundRecord};
use toric_ricci::error::{InputError, NumericsError};
use toric_ricci::geometry::io::{read_polytope, to_structured, to_text};
use toric_ricci::numerics::{
    build_potential, moment_pushforward_check, run_continuation, QuadratureSpec, SolverConfig,
};
use toric_ricci::{corpus, ricci_lower_bound, verify_certificate, LatticePolytope};

/// Exit codes.
const OK: u8 = 0;
const DOMAIN: u8 = 1;
const PARSE: u8 = 2;
const NUMERIC_SETUP: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "toric-ricci", version, about = "Greatest Ricci lower bounds of toric Fano manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check reflexivity of each input.
    Validate { inputs: Vec<String> },
    /// Print the canonical form and basic invariants of each input.
    Info { inputs: Vec<String> },
    /// Compute and certify the exact bound R for each input.
    Rbound { inputs: Vec<String> },
    /// Compute R for many inputs (files or directories) as one CSV table.
    Batch { inputs: Vec<String> },
    /// Check the moment-map pushforward identities by quadrature.
    MomentCheck { input: String },
    /// Run the Monge–Ampère continuity path and write a run manifest.
    SolveMa { input: String },
}

#[derive(Args, Debug)]
struct Opts {
    /// Output file (for solve-ma: output directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Half-width L of the box [−L, L]ⁿ.
    #[arg(long, global = true)]
    box_halfwidth: Option<f64>,
    /// Quadrature nodes per axis.
    #[arg(long, global = true)]
    quad_points: Option<usize>,
    /// Solver grid spacing (decimal or p/q).
    #[arg(long, global = true, value_parser = parse_real)]
    grid_h: Option<f64>,
    /// Initial continuation step (decimal or p/q).
    #[arg(long, global = true, value_parser = parse_real)]
    dt: Option<f64>,
    #[arg(long, global = true, value_parser = parse_real)]
    t_max: Option<f64>,
    /// Residual tolerance for moment-check (also the truncation tolerance).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Structured,
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| format!("{e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("{e}"))?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|e| format!("{e}")),
    }
}

/// Accumulated output plus exit status.
struct Outcome {
    stdout: String,
    code: u8,
}

impl Outcome {
    fn new() -> Self {
        Self {
            stdout: String::new(),
            code: OK,
        }
    }

    /// Keeps the most severe code (parse > numeric-setup > domain).
    fn fail(&mut self, code: u8) {
        let rank = |c: u8| match c {
            PARSE => 3,
            NUMERIC_SETUP => 2,
            DOMAIN => 1,
            _ => 0,
        };
        if rank(code) > rank(self.code) {
            self.code = code;
        }
    }
}

fn input_code(e: &InputError) -> u8 {
    match e {
        InputError::Io { .. } | InputError::Parse(_) => PARSE,
        InputError::Geometry(_) => DOMAIN,
    }
}

fn numerics_code(e: &NumericsError) -> u8 {
    match e {
        NumericsError::TailBoundViolated { .. }
        | NumericsError::InvalidConfig(_)
        | NumericsError::QuadratureNonFinite(_) => NUMERIC_SETUP,
        _ => DOMAIN,
    }
}

/// Resolves an input: a file path, or `corpus:<name>` for a bundled polygon.
fn load(input: &str) -> Result<LatticePolytope, InputError> {
    if let Some(name) = input.strip_prefix("corpus:") {
        if !Path::new(input).exists() {
            return corpus::by_name(name).ok_or_else(|| InputError::Io {
                path: input.to_owned(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such bundled polygon"),
            });
        }
    }
    read_polytope(Path::new(input))
}

fn display_name(input: &str, p: &LatticePolytope) -> String {
    p.name().map(str::to_owned).unwrap_or_else(|| input.to_owned())
}

fn cmd_validate(inputs: &[String], format: Format) -> Outcome {
    let mut out = Outcome::new();
    let mut rows = Vec::new();
    if format == Format::Csv {
        out.stdout
            .push_str("input,reflexive,is_lattice,origin_interior,normals_integral,failing_facets,error\n");
    }
    for input in inputs {
        match load(input) {
            Ok(p) => {
                let rep = p.is_reflexive();
                if !rep.is_reflexive {
                    out.fail(DOMAIN);
                }
                let failing = rep.failing_facets.iter().map(ToString::to_string).collect::<Vec<_>>();
                match format {
                    Format::Text => {
                        let _ = writeln!(out.stdout, "{input}: reflexive: {}", if rep.is_reflexive { "yes" } else { "no" });
                        if !rep.is_reflexive {
                            let _ = writeln!(
                                out.stdout,
                                "  lattice: {}, origin interior: {}, integral normals: {}",
                                rep.is_lattice, rep.origin_interior, rep.normals_integral
                            );
                            let mut facets = String::new();
                            for &r in &rep.failing_facets {
                                let _ = write!(facets, " {r}:{}", p.facets()[r].normal);
                            }
                            let _ = writeln!(out.stdout, "  failing facets:{facets}");
                        }
                    }
                    Format::Csv => {
                        let _ = writeln!(
                            out.stdout,
                            "{input},{},{},{},{},{},",
                            rep.is_reflexive,
                            rep.is_lattice,
                            rep.origin_interior,
                            rep.normals_integral,
                            failing.join(";")
                        );
                    }
                    Format::Structured => {
                        rows.push(serde_json::json!({ "input": input, "report": rep }));
                    }
                }
            }
            Err(e) => {
                out.fail(input_code(&e));
                match format {
                    Format::Text => {
                        let _ = writeln!(out.stdout, "{input}: error: {e}");
                    }
                    Format::Csv => {
                        let _ = writeln!(out.stdout, "{input},,,,,,\"{}\"", e.to_string().replace('"', "'"));
                    }
                    Format::Structured => rows.push(serde_json::json!({ "input": input, "error": e.to_string() })),
                }
            }
        }
    }
    if format == Format::Structured {
        out.stdout = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
    }
    out
}

fn cmd_info(inputs: &[String], format: Format) -> Outcome {
    let mut out = Outcome::new();
    for input in inputs {
        let p = match load(input) {
            Ok(p) => p,
            Err(e) => {
                out.fail(input_code(&e));
                eprintln!("{input}: error: {e}");
                continue;
            }
        };
        match format {
            Format::Structured => out.stdout.push_str(&to_structured(&p)),
            Format::Csv => out.stdout.push_str(&to_text(&p)),
            Format::Text => {
                let s = &mut out.stdout;
                let _ = writeln!(s, "name: {}", display_name(input, &p));
                let _ = writeln!(s, "dimension: {}", p.dimension());
                let verts: Vec<String> = p.vertices().iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "vertices: {}", verts.join(" "));
                let normals: Vec<String> = p.facets().iter().map(|f| f.normal.to_string()).collect();
                let _ = writeln!(s, "facet normals: {}", normals.join(" "));
                let _ = writeln!(s, "volume: {}", p.volume());
                let _ = writeln!(s, "barycenter: {}", p.barycenter());
                let _ = writeln!(s, "lattice points: {}", p.lattice_points().len());
                let _ = writeln!(s, "interior lattice points: {}", p.interior_lattice_points().len());
                let _ = writeln!(s, "reflexive: {}", if p.is_reflexive().is_reflexive { "yes" } else { "no" });
                let _ = writeln!(s, "smooth: {}", if p.is_smooth() { "yes" } else { "no" });
            }
        }
    }
    out
}

fn bound_record(input: &str) -> (BoundRecord, u8, Vec<String>) {
    let p = match load(input) {
        Ok(p) => p,
        Err(e) => return (BoundRecord::failure(input, &e), input_code(&e), Vec::new()),
    };
    let name = display_name(input, &p);
    match ricci_lower_bound(&p) {
        Ok(res) => {
            let ok = verify_certificate(&p, &res);
            let rec = BoundRecord::from_result(&name, &p, &res, ok);
            (rec, if ok { OK } else { DOMAIN }, res.warnings())
        }
        Err(e) => (BoundRecord::failure(&name, &e), DOMAIN, Vec::new()),
    }
}

fn cmd_rbound(inputs: &[String], format: Format) -> Outcome {
    let mut out = Outcome::new();
    let mut records = Vec::new();
    for input in inputs {
        let (rec, code, warnings) = bound_record(input);
        out.fail(code);
        for w in &warnings {
            eprintln!("warning: {}: {w}", rec.name);
        }
        if format == Format::Text {
            let s = &mut out.stdout;
            if !rec.error.is_empty() {
                let _ = writeln!(s, "{}: error: {}", rec.name, rec.error);
                continue;
            }
            let _ = writeln!(s, "name: {}", rec.name);
            let _ = writeln!(s, "P_c = {}", rec.barycenter);
            let _ = writeln!(s, "R = {}", rec.r);
            if !rec.q.is_empty() {
                let _ = writeln!(s, "m* = {}", rec.m_star);
                let _ = writeln!(s, "Q = {}", rec.q);
                let _ = writeln!(s, "equality facets: {}", rec.equality_facets);
            }
            let _ = writeln!(s, "ke_candidate: {}", rec.ke_candidate == Some(true));
            let _ = writeln!(s, "certificate: {}", if rec.certificate == Some(true) { "OK" } else { "FAIL" });
        }
        records.push(rec);
    }
    match format {
        Format::Text => {}
        Format::Csv => out.stdout = records_to_csv(&records),
        Format::Structured => out.stdout = serde_json::to_string_pretty(&records).expect("serializable") + "\n",
    }
    out
}

/// Expands directories into their files, sorted by name.
fn expand_inputs(inputs: &[String]) -> Result<Vec<String>, String> {
    let mut files = Vec::new();
    for input in inputs {
        let path = Path::new(input);
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| format!("{input}: {e}"))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            files.extend(entries.into_iter().map(|p| p.display().to_string()));
        } else if input == "corpus:all" {
            files.extend(corpus::all().iter().filter_map(|p| p.name().map(|n| format!("corpus:{n}"))));
        } else if input == "corpus:smooth" {
            files.extend(corpus::SMOOTH.iter().map(|name| format!("corpus:{name}")));
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn cmd_batch(inputs: &[String], format: Format, summary_to_stderr: bool) -> Outcome {
    let mut out = Outcome::new();
    let files = match expand_inputs(inputs) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            out.code = PARSE;
            return out;
        }
    };
    if files.is_empty() {
        eprintln!("no inputs");
        out.code = DOMAIN;
        return out;
    }
    let results: Vec<(BoundRecord, u8, Vec<String>)> = files.par_iter().map(|f| bound_record(f)).collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (rec, code, _) in results {
        if code != OK {
            failed += 1;
            out.fail(DOMAIN);
        }
        records.push(rec);
    }
    out.stdout = match format {
        Format::Structured => serde_json::to_string_pretty(&records).expect("serializable") + "\n",
        _ => records_to_csv(&records),
    };
    let rs: Vec<toric_ricci::Rational> = records
        .iter()
        .filter(|r| r.error.is_empty())
        .filter_map(|r| toric_ricci::rational::parse_rational(&r.r))
        .collect();
    let mut summary = format!("{} polytopes, {} ok, {} failed", records.len(), records.len() - failed, failed);
    if let (Some(min), Some(max)) = (rs.iter().min(), rs.iter().max()) {
        let _ = write!(summary, ", min R = {min}, max R = {max}");
    }
    if summary_to_stderr {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    out
}

fn cmd_moment_check(input: &str, opts: &Opts, format: Format) -> Outcome {
    let mut out = Outcome::new();
    let p = match load(input) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{input}: error: {e}");
            out.code = input_code(&e);
            return out;
        }
    };
    let tol = opts.tolerance.unwrap_or(1e-6);
    let defaults = QuadratureSpec::default();
    let quad = QuadratureSpec {
        box_halfwidth: opts.box_halfwidth.unwrap_or(defaults.box_halfwidth),
        points_per_axis: opts.quad_points.unwrap_or(defaults.points_per_axis),
        ..defaults
    }
    .with_tail_tolerance(tol);
    let res = build_potential(&p, &quad).and_then(|pot| moment_pushforward_check(&pot, &p, &quad));
    let res = match res {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: error: {e}", display_name(input, &p));
            out.code = numerics_code(&e);
            return out;
        }
    };
    let pass = res.relative_vol_residual < tol && res.barycenter_residual < tol;
    if !pass {
        out.code = DOMAIN;
    }
    match format {
        Format::Structured => {
            out.stdout = serde_json::to_string_pretty(&serde_json::json!({
                "name": display_name(input, &p),
                "quadrature": quad,
                "volume": p.volume().to_string(),
                "barycenter": p.barycenter().to_string(),
                "residuals": res,
                "tolerance": tol,
                "pass": pass,
            }))
            .expect("serializable")
                + "\n";
        }
        Format::Csv => {
            out.stdout = format!(
                "name,box_halfwidth,points_per_axis,vol_residual,relative_vol_residual,barycenter_residual,relative_tail,pass\n{},{},{},{:e},{:e},{:e},{:e},{}\n",
                display_name(input, &p),
                quad.box_halfwidth,
                quad.points_per_axis,
                res.vol_residual,
                res.relative_vol_residual,
                res.barycenter_residual,
                res.relative_tail,
                pass
            );
        }
        Format::Text => {
            let s = &mut out.stdout;
            let _ = writeln!(s, "name: {}", display_name(input, &p));
            let _ = writeln!(s, "box: L = {}, {} points per axis", quad.box_halfwidth, quad.points_per_axis);
            let _ = writeln!(s, "Vol = {} (quadrature {:.12})", p.volume(), res.volume_integral);
            let _ = writeln!(s, "vol_residual = {:.3e} (relative {:.3e})", res.vol_residual, res.relative_vol_residual);
            let _ = writeln!(s, "barycenter_residual = {:.3e}", res.barycenter_residual);
            let _ = writeln!(s, "truncation estimate = {:.3e}", res.relative_tail);
            let _ = writeln!(s, "tolerance = {tol:e}: {}", if pass { "PASS" } else { "FAIL" });
        }
    }
    out
}

/// Truncation tolerance for the solver's reference potential. The solver
/// grid, not the tail, limits its accuracy.
const SOLVER_TAIL_TOLERANCE: f64 = 1e-2;

fn cmd_solve_ma(input: &str, opts: &Opts) -> Outcome {
    let mut out = Outcome::new();
    let p = match load(input) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{input}: error: {e}");
            out.code = input_code(&e);
            return out;
        }
    };
    let name = display_name(input, &p);
    let defaults = SolverConfig::default();
    let config = SolverConfig {
        box_halfwidth: opts.box_halfwidth.unwrap_or(defaults.box_halfwidth),
        grid_h: opts.grid_h.unwrap_or(defaults.grid_h),
        dt: opts.dt.unwrap_or(defaults.dt),
        t_max: opts.t_max.unwrap_or(defaults.t_max),
        ..defaults
    };
    let quad = QuadratureSpec {
        box_halfwidth: config.box_halfwidth,
        points_per_axis: opts.quad_points.unwrap_or(QuadratureSpec::default().points_per_axis),
        ..QuadratureSpec::default()
    }
    .with_tail_tolerance(opts.tolerance.unwrap_or(SOLVER_TAIL_TOLERANCE));
    let report = build_potential(&p, &quad)
        .and_then(|pot| run_continuation(&p, &pot, &config, |line| eprintln!("{line}")));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{name}: error: {e}");
            out.code = numerics_code(&e);
            return out;
        }
    };
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let stem = name.replace(['/', ' '], "_");
    let files = [
        (format!("{stem}-manifest.json"), report.to_json()),
        (format!("{stem}-path.csv"), report.to_csv()),
        (format!("{stem}-plot.csv"), report.to_plot_data()),
    ];
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}: {e}", dir.display());
        out.code = PARSE;
        return out;
    }
    for (file, body) in &files {
        let path = dir.join(file);
        if let Err(e) = std::fs::write(&path, body) {
            eprintln!("{}: {e}", path.display());
            out.code = PARSE;
            return out;
        }
    }
    let s = &mut out.stdout;
    let _ = writeln!(s, "name: {name}");
    match report.last_converged_t() {
        Some(t) => {
            let _ = writeln!(s, "last converged t = {t}");
        }
        None => {
            let _ = writeln!(s, "no converged t");
        }
    }
    let _ = writeln!(s, "stop: {:?}", report.stop_reason);
    let _ = writeln!(s, "exact R = {} ({:.6})", report.exact_r_rational, report.exact_r);
    let _ = writeln!(
        s,
        "consistent with exact R: {}",
        if report.consistent_with_exact_r() { "yes" } else { "no" }
    );
    let _ = writeln!(s, "manifest written to {}", dir.join(&files[0].0).display());
    if report.records.is_empty() {
        out.code = DOMAIN;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = &cli.opts;
    let fmt = |default| opts.format.unwrap_or(default);
    let out = match &cli.command {
        Command::Validate { inputs } => cmd_validate(inputs, fmt(Format::Text)),
        Command::Info { inputs } => cmd_info(inputs, fmt(Format::Text)),
        Command::Rbound { inputs } => cmd_rbound(inputs, fmt(Format::Text)),
        Command::Batch { inputs } => cmd_batch(inputs, fmt(Format::Csv), opts.out.is_none()),
        Command::MomentCheck { input } => cmd_moment_check(input, opts, fmt(Format::Text)),
        Command::SolveMa { input } => return ExitCode::from(cmd_solve_ma(input, opts).code_and_print(None)),
    };
    ExitCode::from(out.code_and_print(opts.out.as_deref()))
}

impl Outcome {
    fn code_and_print(self, out: Option<&Path>) -> u8 {
        match out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &self.stdout) {
                    eprintln!("{}: {e}", path.display());
                    return PARSE;
                }
            }
            None => print!("{}", self.stdout),
        }
        self.code
    }
}
