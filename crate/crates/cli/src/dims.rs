use std::io::Write;
use std::path::Path;

use beldim::bellman::ErrorKind;
use beldim::dims::{
    be_dimension, bellman_rank, class_eluder_dimension, de_dimension, effective_dimension, verify_de_certificate,
    DimensionCertificate, EffectiveOptions, Family, SearchOptions,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::cli::{DimsArgs, FamilyArg, MeasureArg};
use crate::output::{load_source, to_json_text, write_atomic};
use crate::{usage, CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TablesFile {
    functions: Vec<Vec<f64>>,
    distributions: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorsFile {
    vectors: Vec<Vec<f64>>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn family_of(arg: FamilyArg) -> Family {
    match arg {
        FamilyArg::Df => Family::Rollin,
        FamilyArg::Ddelta => Family::Dirac,
    }
}

fn step_json(step: usize, cert: &DimensionCertificate, labels: Option<&[usize]>) -> Value {
    let labelled: Option<Vec<usize>> = labels.map(|l| cert.witness.iter().map(|&i| l[i]).collect());
    json!({
        "step": step,
        "value": cert.value,
        "exact": cert.exact,
        "witness": cert.witness,
        "witness_labels": labelled,
        "eps_prime": cert.eps_prime,
        "certifiers": cert.certifiers,
        "nodes": cert.nodes,
    })
}

fn check_eps(eps: Option<f64>, measure: MeasureArg) -> CliResult<f64> {
    match eps {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => usage(format!("--eps must be positive and finite, got {e}")),
        None => usage(format!("--eps is required for {measure:?}").to_lowercase()),
    }
}

/// Builds the dimension report for `args`.
pub fn dims_report(args: &DimsArgs) -> CliResult<Value> {
    let opts = SearchOptions { node_cap: args.node_cap.unwrap_or(SearchOptions::default().node_cap) };
    if opts.node_cap == 0 {
        return usage("--node-cap must be positive");
    }
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return usage(format!("--tol must lie in (0, 1), got {}", args.tol));
    }
    let config = json!({
        "instance": args.source.instance,
        "builtin": args.source.builtin,
        "measure": args.measure,
        "eps": args.eps,
        "family": family_of(args.family).name(),
        "tol": args.tol,
        "node_cap": opts.node_cap,
        "tables": args.tables,
        "vectors": args.vectors,
    });
    let body = match args.measure {
        MeasureArg::De => {
            let eps = check_eps(args.eps, args.measure)?;
            let path = args.tables.as_ref().ok_or_else(|| CliError::Usage("de requires --tables".into()))?;
            let t: TablesFile = read_json(path)?;
            let width = t.functions.first().map_or(0, Vec::len);
            if t.functions.iter().chain(&t.distributions).any(|r| r.len() != width) {
                return usage("every function and distribution must have the same length");
            }
            let cert = de_dimension(&t.functions, &t.distributions, eps, opts);
            json!({
                "eps": eps,
                "value": cert.value,
                "exact": cert.exact,
                "witness": cert.witness,
                "eps_prime": cert.eps_prime,
                "verified": verify_de_certificate(&cert, &t.functions, &t.distributions),
                "per_step": [step_json(0, &cert, None)],
            })
        }
        MeasureArg::Effdim => {
            let eps = check_eps(args.eps, args.measure)?;
            let path = args.vectors.as_ref().ok_or_else(|| CliError::Usage("effdim requires --vectors".into()))?;
            let v: VectorsFile = read_json(path)?;
            let width = v.vectors.first().map_or(0, Vec::len);
            if v.vectors.iter().any(|r| r.len() != width) {
                return usage("every vector must have the same length");
            }
            let out = effective_dimension(&v.vectors, eps, EffectiveOptions::default());
            json!({
                "eps": eps,
                "value": out.value,
                "exact": out.exact,
                "witness": out.counts,
                "eps_prime": Value::Null,
                "lower_bound": out.lower_bound,
                "upper_bound": out.upper_bound,
                "gain": out.gain,
                "per_step": [],
            })
        }
        MeasureArg::Eluder => {
            let eps = check_eps(args.eps, args.measure)?;
            let inst = load_source(&args.source)?;
            let r = class_eluder_dimension(&inst.class, eps, opts);
            let cert = r.certificate();
            json!({
                "instance_name": inst.name,
                "eps": eps,
                "value": r.value,
                "exact": r.exact,
                "witness": cert.witness,
                "eps_prime": cert.eps_prime,
                "argmax_step": r.argmax_step,
                "verified": r.verify(),
                "per_step": r.per_step.iter().enumerate().map(|(h, s)| step_json(h, &s.certificate, None)).collect::<Vec<_>>(),
            })
        }
        MeasureArg::Be | MeasureArg::Vbe => {
            let eps = check_eps(args.eps, args.measure)?;
            let inst = load_source(&args.source)?;
            let kind = if args.measure == MeasureArg::Be { ErrorKind::Q } else { ErrorKind::V };
            let r = be_dimension(&inst.mdp, &inst.class, family_of(args.family), kind, eps, opts)?;
            let top = &r.per_step[r.argmax_step];
            json!({
                "instance_name": inst.name,
                "eps": eps,
                "value": r.value,
                "exact": r.exact,
                "witness": top.certificate.witness,
                "witness_labels": top.certificate.witness.iter().map(|&i| top.labels[i]).collect::<Vec<_>>(),
                "eps_prime": top.certificate.eps_prime,
                "argmax_step": r.argmax_step,
                "family": r.family.name(),
                "verified": r.verify(),
                "per_step": r.per_step.iter().enumerate()
                    .map(|(h, s)| step_json(h, &s.certificate, Some(&s.labels))).collect::<Vec<_>>(),
            })
        }
        MeasureArg::Rank | MeasureArg::Vrank => {
            let inst = load_source(&args.source)?;
            let kind = if args.measure == MeasureArg::Rank { ErrorKind::Q } else { ErrorKind::V };
            let r = bellman_rank(&inst.mdp, &inst.class, kind, args.tol)?;
            json!({
                "instance_name": inst.name,
                "eps": Value::Null,
                "value": r.value,
                "exact": true,
                "witness": [],
                "eps_prime": Value::Null,
                "per_step": r.per_step.iter().enumerate().map(|(h, s)| json!({
                    "step": h,
                    "value": s.rank,
                    "singular_values": s.singular_values,
                    "zeta": s.zeta,
                    "rows": s.rows,
                    "cols": s.cols,
                })).collect::<Vec<_>>(),
            })
        }
    };
    let mut report = json!({ "measure": args.measure, "config": config });
    let map = report.as_object_mut().expect("object literal");
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Ok(report)
}

pub fn cmd_dims(args: &DimsArgs, log: &mut dyn Write) -> CliResult<()> {
    let text = to_json_text(&dims_report(args)?)?;
    if let Some(out) = &args.out {
        write_atomic(out, &text)?;
    }
    log.write_all(text.as_bytes())?;
    Ok(())
}
