use std::fs;
use std::io::Write;
use std::path::Path;

use magrobin::asymptotics::{
    dilation_check, disk_expansion_check, domain_expansion_check, e_term, threshold_scan,
};
use magrobin::coarea::{corollary_regime, transplant_bound, verify_isoperimetric, Verdict};
use magrobin::fem::{assemble_magnetic_robin, lowest_eig, mesh_star, solve_domain_refined, Mesh};
use magrobin::geometry::{curvature_max, hurwitz_gap, subordinacy_check, DomainInput, DomainSpec, SubordinacyReport};
use magrobin::radial::{certify, constant_test_bound, critical_beta_disk, disk_ground};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::grid::{parse_list, parse_range};
use crate::output::{csv_line, fmt_f64, to_json, to_value};
use crate::schema::{self, Schema};
use crate::{
    AsymptoticsArgs, CliError, Command, DiskArgs, DomainArg, FemArgs, SweepArgs, VerifyArgs, EXIT_FAILED,
    EXIT_HYPOTHESES, EXIT_OK,
};

const DISK_BETAS: [f64; 5] = [-5.0, -10.0, -20.0, -40.0, -80.0];
const DOMAIN_BETAS: [f64; 3] = [-4.0, -8.0, -16.0];

pub fn dispatch(command: &Command, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Disk(a) => disk(a, config, stdout),
        Command::Verify(a) => verify(a, config, stdout),
        Command::Sweep(a) => sweep(a, config, stdout),
        Command::Subordinacy(a) => subordinacy(a, config, stdout),
        Command::Asymptotics(a) => asymptotics(a, config, stdout),
        Command::Fem(a) => fem(a, config, stdout),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Read, schema-check and build a domain.
pub fn load_domain_file(path: &Path, config: &RunConfig) -> Result<DomainSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    schema::validate(Schema::Domain, &value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let input: DomainInput =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(DomainSpec::from_input(&input, config.grids.star_samples)?)
}

/// Write the report and its tables to the output directory, or print the
/// report (or the main table with `--format csv`) to stdout.
fn emit(
    config: &RunConfig,
    stdout: &mut dyn Write,
    kind: Schema,
    mut report: Value,
    tables: &[(&str, String)],
) -> Result<(), CliError> {
    report["schema"] = Value::String(kind.id().into());
    schema::validate(kind, &report).map_err(|e| CliError::Internal(format!("report fails its schema: {e}")))?;
    let text = to_json(&report);
    match &config.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(format!("{}.json", kind.stem()));
            fs::write(&path, text).map_err(|e| io_err(&path, e))?;
            for (name, body) in tables {
                let path = dir.join(name);
                fs::write(&path, body).map_err(|e| io_err(&path, e))?;
            }
        }
        None => {
            let body = match (config.format, tables.first()) {
                (Format::Csv, Some((_, csv))) => csv.as_str(),
                _ => text.as_str(),
            };
            stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn disk(a: &DiskArgs, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let radial = config.radial();
    let beta_c = if a.beta_critical {
        Some(critical_beta_disk(a.radius, a.b, config.tolerances.beta_critical, &radial)?)
    } else {
        None
    };
    let beta = a
        .beta
        .or(beta_c)
        .ok_or_else(|| CliError::Input("disk needs --beta or --beta-critical".into()))?;
    let state = disk_ground(a.radius, a.b, beta, &radial)?;
    let cert = certify(&state);

    let modes: Vec<Value> = state.scanned_modes.iter().map(|(m, mu)| json!({"m": m, "mu1": mu})).collect();
    let report = json!({
        "R": a.radius,
        "b": a.b,
        "beta": beta,
        "lambda1": state.lambda1,
        "m_star": state.m_star,
        "radial_n": radial.n,
        "scanned_modes": modes,
        "admissibility": to_value(&cert)?,
        "constant_test_bound": constant_test_bound(a.radius, a.b, beta),
        "beta_critical": beta_c,
        "beta_critical_bound": beta_c.map(|_| -a.radius.powi(3) * a.b * a.b / 16.0),
    });

    let mut modes_csv = String::from("m,mu1\n");
    for (m, mu) in &state.scanned_modes {
        modes_csv += &csv_line(&[m.to_string(), fmt_f64(*mu)]);
    }
    let mut tables = vec![("modes.csv", modes_csv)];
    if let Some(p) = &state.profile {
        let mut csv = String::from("s,psi,psi_prime\n");
        for k in 0..p.s.len() {
            csv += &csv_line(&[fmt_f64(p.s[k]), fmt_f64(p.psi[k]), fmt_f64(p.psi_prime[k])]);
        }
        tables.push(("profile.csv", csv));
    }
    emit(config, stdout, Schema::Disk, report, &tables)?;
    Ok(EXIT_OK)
}

fn margins_csv(s: &SubordinacyReport) -> String {
    let mut csv = String::from("t,margin,tolerance,valid\n");
    for k in 0..s.t.len() {
        csv += &csv_line(&[fmt_f64(s.t[k]), fmt_f64(s.margins[k]), fmt_f64(s.tolerances[k]), s.valid[k].to_string()]);
    }
    csv
}

fn verify(a: &VerifyArgs, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let domain = load_domain_file(&a.domain, config)?;
    let report = verify_isoperimetric(&domain, a.beta, a.b, &config.verify())?;
    let code = match report.verdict {
        Verdict::Pass | Verdict::Equality => EXIT_OK,
        Verdict::HypothesesNotMet => EXIT_HYPOTHESES,
        Verdict::Fail | Verdict::Inconclusive => EXIT_FAILED,
    };
    let tables = [("margins.csv", margins_csv(&report.subordinacy)), ("levels.csv", report.subordinacy.table.to_csv())];
    emit(config, stdout, Schema::Verify, to_value(&report)?, &tables)?;
    Ok(code)
}

fn subordinacy(a: &DomainArg, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let domain = load_domain_file(&a.domain, config)?;
    let report = subordinacy_check(&domain, domain.matched_radius(), &config.subordinacy())?;
    let hurwitz = hurwitz_gap(&domain.boundary)?;
    let mut value = to_value(&report)?;
    value["domain"] = to_value(&domain.metadata())?;
    value["hurwitz"] = to_value(&hurwitz)?;
    let tables = [("margins.csv", margins_csv(&report)), ("levels.csv", report.table.to_csv())];
    emit(config, stdout, Schema::Subordinacy, value, &tables)?;
    Ok(EXIT_OK)
}

fn asymptotics(a: &AsymptoticsArgs, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let betas = match &a.betas {
        Some(s) => parse_list(s)?,
        None if a.domain.is_some() => DOMAIN_BETAS.to_vec(),
        None => DISK_BETAS.to_vec(),
    };
    let (value, csv) = match &a.domain {
        None => {
            let check = disk_expansion_check(a.radius, a.b, &betas, &config.radial())?;
            let dilation = dilation_check(a.radius, a.b, betas[0], &config.radial())?;
            let value = json!({
                "mode": "disk",
                "R": a.radius,
                "b": a.b,
                "e_term": e_term(a.b, a.radius),
                "expansion": to_value(&check)?,
                "last_deviation": check.last_deviation(),
                "dilation": to_value(&dilation)?,
            });
            (value, check.to_csv())
        }
        Some(path) => {
            let domain = load_domain_file(path, config)?;
            let check = domain_expansion_check(&domain, a.b, &betas, config.mesh(), &config.eigen())?;
            let scan = match &a.threshold_scan {
                Some(s) => Some(threshold_scan(
                    &domain,
                    a.b,
                    &parse_list(s)?,
                    config.mesh(),
                    &config.eigen(),
                    &config.radial(),
                )?),
                None => None,
            };
            let value = json!({
                "mode": "domain",
                "b": a.b,
                "curvature": to_value(&curvature_max(&domain)?)?,
                "check": to_value(&check)?,
                "max_abs_residual": check.expansion.max_abs_residual(),
                "threshold_scan": to_value(&scan)?,
            });
            (value, check.expansion.to_csv())
        }
    };
    emit(config, stdout, Schema::Asymptotics, value, &[("expansion.csv", csv)])?;
    Ok(EXIT_OK)
}

fn fem(a: &FemArgs, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (mesh, domain) = match (&a.mesh, &a.domain) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            (Mesh::from_json(&text)?, None)
        }
        (None, Some(path)) => {
            let d = load_domain_file(path, config)?;
            let res = config.mesh();
            (mesh_star(&d, res.n_r, res.n_theta)?, Some(d))
        }
        (None, None) => return Err(CliError::Input("fem needs --domain or --mesh".into())),
    };
    if let Some(path) = &a.export_mesh {
        fs::write(path, mesh.to_json()?).map_err(|e| io_err(path, e))?;
    }
    let pair = assemble_magnetic_robin(&mesh, a.b, a.beta, None);
    let result = lowest_eig(&pair, mesh.h, &config.eigen())?;
    let refined = match (&domain, a.refined) {
        (Some(d), true) => Some(solve_domain_refined(d, a.b, a.beta, config.mesh(), &config.eigen())?),
        _ => None,
    };
    let eigenvector: Option<Vec<[f64; 2]>> =
        a.eigenvector.then(|| result.eigenvector.iter().map(|z| [z.re, z.im]).collect());
    let value = json!({
        "b": a.b,
        "beta": a.beta,
        "lambda1": result.lambda1,
        "h": result.h,
        "residual": result.residual,
        "iterations": result.iterations,
        "shift": result.shift,
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "min_angle": mesh.min_angle,
        "refined": to_value(&refined)?,
        "eigenvector": to_value(&eigenvector)?,
    });
    emit(config, stdout, Schema::Fem, value, &[])?;
    Ok(EXIT_OK)
}

struct SweepRow {
    lambda1: f64,
    m_star: i64,
    admissible: bool,
    rayleigh: Option<f64>,
}

fn sweep(a: &SweepArgs, config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let betas = parse_range(&a.beta)?;
    let bs = parse_range(&a.b)?;
    if betas.is_empty() || bs.is_empty() {
        return Err(CliError::Input("empty parameter grid".into()));
    }
    let domain = a.domain.as_ref().map(|p| load_domain_file(p, config)).transpose()?;
    let radius = domain.as_ref().map_or(a.radius, |d| d.matched_radius());
    // The level table depends on the geometry only.
    let levels = match &domain {
        Some(d) => Some(subordinacy_check(d, radius, &config.subordinacy())?.table),
        None => None,
    };

    let mut header = vec!["beta", "b", "lambda1", "m_star", "admissible"];
    if domain.is_some() {
        header.extend(["rayleigh", "rayleigh_margin"]);
    }
    if a.corollary_overlay {
        header.push("corollary");
    }

    let mut file = None;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("sweep.csv");
        file = Some(fs::File::create(&path).map_err(|e| io_err(&path, e))?);
    }
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => stdout,
    };
    let write = |sink: &mut dyn Write, s: &str| -> Result<(), CliError> {
        sink.write_all(s.as_bytes()).and_then(|_| sink.flush()).map_err(|e| CliError::Io(e.to_string()))
    };
    write(sink, &(header.join(",") + "\n"))?;

    let radial = config.radial();
    // One β row at a time: parallel over b, written in grid order, flushed.
    for &beta in &betas {
        let rows: Vec<Result<SweepRow, CliError>> = bs
            .par_iter()
            .map(|&b| {
                let state = disk_ground(radius, b, beta, &radial)?;
                let rayleigh = match (&levels, &state.profile) {
                    (Some(l), Some(p)) => {
                        Some(transplant_bound(l, p, state.lambda1, beta, b, config.quadrature)?.rayleigh)
                    }
                    _ => None,
                };
                Ok(SweepRow {
                    lambda1: state.lambda1,
                    m_star: state.m_star,
                    admissible: certify(&state).admissible,
                    rayleigh,
                })
            })
            .collect();
        let mut block = String::new();
        for (&b, row) in bs.iter().zip(rows) {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    write(sink, &block)?;
                    return Err(e);
                }
            };
            let mut fields = vec![
                fmt_f64(beta),
                fmt_f64(b),
                fmt_f64(row.lambda1),
                row.m_star.to_string(),
                row.admissible.to_string(),
            ];
            if domain.is_some() {
                let r = row.rayleigh.unwrap_or(f64::NAN);
                fields.push(fmt_f64(r));
                fields.push(fmt_f64(row.lambda1 - r));
            }
            if a.corollary_overlay {
                fields.push(corollary_regime(radius, b, beta).to_string());
            }
            block += &csv_line(&fields);
        }
        write(sink, &block)?;
    }
    Ok(EXIT_OK)
}
