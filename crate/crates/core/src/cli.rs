//! Command-line front end. `run` returns the process exit code so the
//! binary stays a one-liner and tests can drive every command in-process.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::coeffs::{Cell, CoefficientModel};
use crate::dediag::{
    dediagonalize, polynomial_identity_check, regular_asymptotics_check, singular_flat_check, Sign,
};
use crate::error::{Error, Result};
use crate::jost::{asymptotic_constants, default_engine, reconstruction_error, Partner};
use crate::mp::{parse_complex, Cplx};
use crate::recurrence::{forward_polynomials, second_solution_with};
use crate::scaled::{round_sig, PrecisionPolicy, ScaledComplex};
use crate::spectral::{attach_weights, deficiency_probe, scan_with, truncated_eigs_converged, JostScanner};

pub const DEFAULT_TOL: f64 = 1e-20;
pub const DEFAULT_PRECISION: u32 = 256;

#[derive(Parser, Debug)]
#[command(name = "jacobi-jost", version, about = "Jost solutions and spectra of Jacobi operators with growing coefficients")]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a model into its asymptotic cell
    Classify(Common),
    /// Jost solution f_n(z)
    Jost(Common),
    /// Orthonormal polynomials P_n(z)
    Poly(Common),
    /// Eigenvalues: Jost zeros against finite sections
    Eigs(EigArgs),
    /// Eigenvalues with spectral weights by both formulas
    Weights(EigArgs),
    /// Asymptotic constants (κ±, or κ and ω)
    Asym(Common),
    /// Dediagonalization identities and doubly critical checks
    Dediag(DediagArgs),
    /// Partial ℓ² norms of P(z) and f(z)
    Deficiency(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// model config: a JSON file path or an inline JSON object
    config: String,
    /// spectral parameter, e.g. "1+0.5i"
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    z: String,
    #[arg(long = "n-max", default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// override the config precision (bits)
    #[arg(long)]
    precision: Option<u32>,
    /// output directory for report files and the manifest
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct EigArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["LO", "HI"], default_values_t = [-5.0, 40.0])]
    interval: Vec<f64>,
    /// initial grid for the Jost-zero scan
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// bracket width for eigenvalues
    #[arg(long, default_value_t = 1e-11)]
    width: f64,
    /// starting size for the finite sections
    #[arg(long = "n-trunc", default_value_t = 32)]
    n_trunc: usize,
    /// terms in the weight sum
    #[arg(long = "n-sum", default_value_t = 4000)]
    n_sum: usize,
}

#[derive(Args, Debug, Clone)]
struct DediagArgs {
    #[command(flatten)]
    common: Common,
    /// λ for the oscillation check (regular case)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
    /// upper index for the asymptotic checks
    #[arg(long = "n-asym", default_value_t = 20000)]
    n_asym: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model: Value,
    pub params: BTreeMap<String, Value>,
    pub precision: PrecisionPolicy,
    pub outputs: Vec<OutputFile>,
}

struct Outcome {
    summary: Vec<String>,
    report: Value,
    csv: Option<String>,
}

/// Parse arguments and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a second call in the same process is harmless; keep the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match std::panic::catch_unwind(|| execute(&cli.cmd)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            1
        }
    }
}

fn load_model(c: &Common) -> Result<CoefficientModel> {
    let s = c.config.trim();
    let m = if s.starts_with('{') {
        CoefficientModel::from_json(s, None)?
    } else {
        let path = Path::new(s);
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("config {s}: {e}")))?;
        CoefficientModel::from_json(&text, path.parent())?
    };
    Ok(match c.precision {
        Some(p) => {
            if !(32..=1 << 20).contains(&p) {
                return Err(Error::InvalidParameter("precision must lie in [32, 2^20]".into()));
            }
            m.with_precision(p)
        }
        None => m,
    })
}

fn parse_z(s: &str, p: u32) -> Result<Cplx> {
    let (re, im) = parse_complex(s).ok_or_else(|| Error::InvalidParameter(format!("cannot parse z = {s:?}")))?;
    Ok(Cplx::from_f64(p, re, im))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter("tol must lie in (0, 1)".into()));
    }
    Ok(())
}

fn common_params(c: &Common) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("z".into(), json!(c.z));
    m.insert("n_max".into(), json!(c.n_max));
    m.insert("tol".into(), json!(c.tol));
    m.insert("format".into(), json!(format!("{:?}", c.format).to_lowercase()));
    m
}

fn policy(model: &CoefficientModel, n: usize) -> PrecisionPolicy {
    let delta = model.classify().map(|c| c.delta).unwrap_or(2.0);
    PrecisionPolicy::new(model.precision(), delta, n.max(1 << 12) as u64)
}

fn sc_json(x: &ScaledComplex) -> Value {
    serde_json::to_value(x.to_repr()).unwrap_or(Value::Null)
}

fn r(x: f64) -> f64 {
    round_sig(x, 12)
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Classify(c) | Command::Jost(c) | Command::Poly(c) | Command::Asym(c) | Command::Deficiency(c) => c,
        Command::Eigs(a) | Command::Weights(a) => &a.common,
        Command::Dediag(a) => &a.common,
    }
}

fn execute(cmd: &Command) -> Result<()> {
    check_tol(common_of(cmd).tol)?;
    let (name, common, params, outcome) = match cmd {
        Command::Classify(c) => ("classify", c, common_params(c), cmd_classify(c)?),
        Command::Jost(c) => ("jost", c, common_params(c), cmd_jost(c)?),
        Command::Poly(c) => ("poly", c, common_params(c), cmd_poly(c)?),
        Command::Eigs(a) => ("eigs", &a.common, eig_params(a), cmd_eigs(a, false)?),
        Command::Weights(a) => ("weights", &a.common, eig_params(a), cmd_eigs(a, true)?),
        Command::Asym(c) => ("asym", c, common_params(c), cmd_asym(c)?),
        Command::Dediag(a) => {
            let mut p = common_params(&a.common);
            p.insert("lambda".into(), json!(a.lambda));
            p.insert("sign".into(), json!(format!("{:?}", a.sign).to_lowercase()));
            p.insert("n_asym".into(), json!(a.n_asym));
            ("dediag", &a.common, p, cmd_dediag(a)?)
        }
        Command::Deficiency(c) => ("deficiency", c, common_params(c), cmd_deficiency(c)?),
    };
    let model = load_model(common)?;
    let manifest = RunManifest {
        command: name.into(),
        model: model.descriptor(),
        params,
        precision: policy(&model, common.n_max),
        outputs: Vec::new(),
    };
    let mut report = outcome.report;
    report["manifest"] = serde_json::to_value(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    let json_text = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    for line in &outcome.summary {
        println!("{line}");
    }
    match &common.out {
        None => match (common.format, &outcome.csv) {
            (Format::Csv, Some(c)) => print!("{c}"),
            _ => print!("{json_text}"),
        },
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut outputs = Vec::new();
            let mut write = |file: String, body: &str| -> Result<()> {
                let path = dir.join(&file);
                fs::write(&path, body)?;
                outputs.push(OutputFile { path: file, sha256: hex::encode(Sha256::digest(body.as_bytes())) });
                Ok(())
            };
            write(format!("{name}.json"), &json_text)?;
            if common.format == Format::Csv {
                if let Some(c) = &outcome.csv {
                    write(format!("{name}.csv"), c)?;
                }
            }
            let mut m = manifest;
            m.outputs = outputs;
            let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Parse(e.to_string()))? + "\n";
            fs::write(dir.join("manifest.json"), text)?;
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn eig_params(a: &EigArgs) -> BTreeMap<String, Value> {
    let mut p = common_params(&a.common);
    p.insert("interval".into(), json!(a.interval));
    p.insert("grid".into(), json!(a.grid));
    p.insert("width".into(), json!(a.width));
    p.insert("n_trunc".into(), json!(a.n_trunc));
    p.insert("n_sum".into(), json!(a.n_sum));
    p
}

fn cmd_classify(c: &Common) -> Result<Outcome> {
    let m = load_model(c)?;
    let cls = m.classify()?;
    Ok(Outcome {
        summary: vec![cls.summary()],
        report: json!({ "classification": cls, "summary": cls.summary() }),
        csv: None,
    })
}

fn cmd_jost(c: &Common) -> Result<Outcome> {
    check_tol(c.tol)?;
    let m = load_model(c)?;
    let engine = default_engine(&m, c.tol, c.n_max)?;
    let z = parse_z(&c.z, engine.precision())?;
    let sol = engine.solve(&z, c.tol, c.n_max)?;
    let f0 = sol.f.at(0);
    let summary = vec![
        format!("f_0(z) = {}", f0.report_string()),
        format!("Ω(z) = {}", sol.omega.report_string()),
        format!("horizon M = {}, tail bound {:.3e}", sol.m, sol.tail_bound),
    ];
    let n_hi = c.n_max.min(sol.f.end() as usize);
    let vals: Vec<Value> = (-1..=n_hi as i64).map(|n| json!({"n": n, "f": sc_json(sol.f.at(n))})).collect();
    let report = json!({
        "z": c.z,
        "omega": sc_json(&sol.omega),
        "horizon": sol.m,
        "tail_bound": sol.tail_bound,
        "diagnostics": sol.diagnostics,
        "values": vals,
    });
    let mut trimmed = sol.f.clone();
    trimmed.values.truncate(n_hi + 2);
    Ok(Outcome { summary, report, csv: Some(trimmed.to_csv()) })
}

fn cmd_poly(c: &Common) -> Result<Outcome> {
    let m = load_model(c)?;
    let z = parse_z(&c.z, m.precision())?;
    let p = forward_polynomials(&m, &z, c.n_max)?;
    let mut csv = String::from("n,re,im,abs,log10_abs\n");
    let mut vals = Vec::new();
    for n in 0..=c.n_max as i64 {
        let v = p.at(n);
        let (re, im) = v.to_c64();
        let (a, l) = if v.is_zero() { (0.0, f64::NEG_INFINITY) } else { (v.abs().to_c64().0, v.log10_abs()) };
        csv.push_str(&format!("{n},{:.15e},{:.15e},{:.15e},{:.12}\n", re, im, a, l));
        vals.push(json!({"n": n, "p": sc_json(v)}));
    }
    let last = p.at(c.n_max as i64);
    Ok(Outcome {
        summary: vec![format!("P_{}(z) = {}", c.n_max, last.report_string())],
        report: json!({"z": c.z, "values": vals}),
        csv: Some(csv),
    })
}

fn cmd_eigs(a: &EigArgs, weights: bool) -> Result<Outcome> {
    let c = &a.common;
    let m = load_model(c)?;
    let (lo, hi) = (a.interval[0], a.interval[1]);
    if !(lo < hi) {
        return Err(Error::InvalidParameter("interval must satisfy LO < HI".into()));
    }
    let cls = m.classify().ok();
    let jost_ok = cls.as_ref().map(|c| c.cell == Cell::CriticalSingularSuper).unwrap_or(false);
    if weights && !jost_ok {
        return Err(Error::Domain("spectral weights need the supercritical cell".into()));
    }
    let mut summary = Vec::new();
    let mut report = json!({"interval": [lo, hi]});
    let jost = if jost_ok {
        let sc = JostScanner::new(&m, (lo, hi))?;
        let mut rep = scan_with(&sc, (lo, hi), a.grid, a.width)?;
        if weights {
            attach_weights(&sc, &mut rep, a.n_sum)?;
        }
        Some(rep)
    } else {
        summary.push("Jost-zero scan skipped: model is not in the supercritical cell".to_string());
        None
    };
    let tr = if weights { None } else { Some(truncated_eigs_converged(&m, (lo, hi), a.n_trunc, 1e-9, 1 << 16)?) };
    let mut csv = String::new();
    if let (Some(j), Some(t)) = (&jost, &tr) {
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        csv.push_str("k,lambda_jost,lambda_truncation,delta\n");
        let count_ok = j.eigenvalues.len() == t.eigenvalues.len();
        for (k, (x, y)) in j.lambdas().iter().zip(t.lambdas()).enumerate() {
            let d = (x - y).abs();
            worst = worst.max(d);
            rows.push(json!({"k": k, "jost": x, "truncation": y, "delta": r(d)}));
            csv.push_str(&format!("{k},{x:.15e},{y:.15e},{:.3e}\n", d));
        }
        summary.push(format!(
            "{} Jost zeros, {} section eigenvalues, max |Δλ| = {:.3e}",
            j.eigenvalues.len(),
            t.eigenvalues.len(),
            worst
        ));
        report["agreement"] = json!({"pairs": rows, "max_delta": worst, "counts_match": count_ok});
    } else if let Some(t) = &tr {
        csv.push_str("k,lambda_truncation\n");
        for (k, x) in t.lambdas().iter().enumerate() {
            csv.push_str(&format!("{k},{x:.15e}\n"));
        }
        summary.push(format!("{} section eigenvalues", t.eigenvalues.len()));
    }
    if weights {
        let j = jost.as_ref().expect("weights imply a scan");
        csv.push_str("k,lambda,w_jost,w_sum,rel_diff\n");
        let mut total = 0.0;
        for (k, e) in j.eigenvalues.iter().enumerate() {
            let (wj, ws) = (e.w_jost.unwrap_or(f64::NAN), e.w_sum.unwrap_or(f64::NAN));
            total += ws;
            csv.push_str(&format!("{k},{:.15e},{wj:.15e},{ws:.15e},{:.3e}\n", e.lambda, (wj - ws).abs() / ws));
        }
        summary.push(format!("{} eigenvalues, partial weight sum {:.12}", j.eigenvalues.len(), total));
        report["weight_sum"] = json!(total);
    }
    report["jost"] = serde_json::to_value(&jost).unwrap_or(Value::Null);
    report["truncation"] = serde_json::to_value(&tr).unwrap_or(Value::Null);
    Ok(Outcome { summary, report, csv: Some(csv) })
}

fn cmd_asym(c: &Common) -> Result<Outcome> {
    check_tol(c.tol)?;
    let m = load_model(c)?;
    let cls = m.classify()?;
    let n = c.n_max.max(16);
    let engine = default_engine(&m, c.tol, n)?;
    let p = engine.precision();
    let z = parse_z(&c.z, p)?;
    let f = engine.solve(&z, c.tol, n)?;
    let end = f.f.end() as usize - 1;
    let t = engine.table(end + 2)?;
    let pp = forward_polynomials(engine.model(), &z, end)?;
    let mut summary = Vec::new();
    let report = if cls.tau < 0.0 {
        let ft = engine.conjugate(&z, c.tol, n)?;
        let k = asymptotic_constants(&t, cls.tau, &pp, &f, Partner::Conjugate(&ft))?;
        let (kp, km) = (&k.values[0], &k.values[1]);
        let conj = if z.im.is_zero() { Some((&(km - &kp.conj()).abs() / &kp.abs()).to_c64().0) } else { None };
        // P_n − κ₊ f_n − κ₋ f̃_n over the stored range
        let mut worst: f64 = 0.0;
        let hi = pp.end().min(f.f.end()).min(ft.f.end());
        for i in 0..=hi {
            let rec = &(kp * f.f.at(i)) + &(km * ft.f.at(i));
            let d = (&(&rec - pp.at(i)).abs() / &pp.at(i).abs()).to_c64().0;
            worst = worst.max(d);
        }
        summary.push(format!("κ₊ = {}", kp.report_string()));
        summary.push(format!("κ₋ = {}", km.report_string()));
        if let Some(cr) = conj {
            summary.push(format!("|κ₋ − conj κ₊|/|κ₊| = {cr:.3e}"));
        }
        json!({"constants": k, "conj_symmetry_residual": conj, "reconstruction_error": worst})
    } else {
        let g = second_solution_with(&t, &f.f, None)?;
        let k = asymptotic_constants(&t, cls.tau, &pp, &f, Partner::Second(&g))?;
        let err = reconstruction_error(&pp, &f.f, &g, &f.omega, &k.values[1]);
        summary.push(format!("κ = {}", k.values[0].report_string()));
        summary.push(format!("ω = {}", k.values[1].report_string()));
        json!({"constants": k, "reconstruction_error": err})
    };
    Ok(Outcome { summary, report, csv: None })
}

fn cmd_dediag(a: &DediagArgs) -> Result<Outcome> {
    let c = &a.common;
    let src = load_model(c)?;
    let sign = if a.sign == SignArg::Plus { Sign::Plus } else { Sign::Minus };
    let len = a.n_asym.max(c.n_max + 1) + 1;
    let pair = dediagonalize(&src, len)?;
    let z = parse_z(&c.z, src.precision())?;
    let mut summary = Vec::new();
    let mut ids = Vec::new();
    for s in [Sign::Plus, Sign::Minus] {
        if s == Sign::Minus && z.is_zero() {
            continue;
        }
        let rep = polynomial_identity_check(&pair, s, &z, c.n_max)?;
        summary.push(format!("identity {}: max residual {:.3e}", s.symbol(), rep.max_residual));
        ids.push(rep);
    }
    let mut report = json!({"identities": ids});
    let mut csv = None;
    if let Ok(meta) = pair.model(sign).meta() {
        let sigma = meta.sigma;
        if sigma > 2.0 / 3.0 && sigma <= 2.0 {
            let o = regular_asymptotics_check(&pair, sign, a.lambda, (a.n_asym / 100).max(1), a.n_asym)?;
            summary.push(format!(
                "oscillation: mean spacing {:.6} vs {:.6} ({:.2}%), bounded {}",
                o.mean_spacing,
                o.expected_spacing,
                100.0 * o.spacing_rel_error,
                o.bounded
            ));
            csv = Some(o.crossings_csv());
            report["oscillation"] = serde_json::to_value(&o).unwrap_or(Value::Null);
        } else if sigma > 2.0 {
            let fl = singular_flat_check(&pair, sign, &z, 16, a.n_asym)?;
            let last = fl.increments.last().map(|x| x.1).unwrap_or(f64::NAN);
            summary.push(format!("flatness: last increment {last:.3e}, ℓ² saturates {}", fl.norm.saturates));
            report["flatness"] = serde_json::to_value(&fl).unwrap_or(Value::Null);
        }
    }
    Ok(Outcome { summary, report, csv })
}

fn cmd_deficiency(c: &Common) -> Result<Outcome> {
    let m = load_model(c)?;
    let z = parse_z(&c.z, m.precision())?;
    let rep = deficiency_probe(&m, &z, c.n_max)?;
    Ok(Outcome {
        summary: vec![rep.verdict.clone()],
        report: serde_json::to_value(&rep).unwrap_or(Value::Null),
        csv: None,
    })
}
