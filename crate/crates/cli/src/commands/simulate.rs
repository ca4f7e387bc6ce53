use std::fs;
use std::path::Path;

use serde_json::Value;

use regsel::simulation::{
    run_experiment, DesignKind, SignalName, SignalSpec, SimConfig, SimRun,
};

use crate::files::{read_bytes, sha256_hex, write_text, RunManifest};
use crate::{CliError, DesignArg, SimulateArgs};

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let bytes = read_bytes(&args.config)?;
    let mut config = parse_config(&bytes, &args.config)?;
    apply_overrides(&mut config, args)?;

    let run = run_experiment(&config)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;

    let mut manifest = RunManifest::new("simulate");
    manifest.seed = Some(config.seed);
    let canonical = serde_json::to_string(&config).expect("config serializes");
    manifest
        .inputs
        .insert("config".into(), format!("sha256:{}", sha256_hex(canonical.as_bytes())));
    manifest.config = Some(config.clone());

    write_text(&args.out.join("replications.csv"), &replications_csv(&run))?;
    write_text(
        &args.out.join("summary.json"),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&run.summary).expect("summary serializes")
        ),
    )?;
    write_text(
        &args.out.join("manifest.json"),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&manifest).expect("manifest serializes")
        ),
    )?;
    println!(
        "wrote {} replications x {} criteria tuples to {}",
        run.results.len(),
        config.criteria.len(),
        args.out.display()
    );
    Ok(())
}

/// Accepts either a bare config or a manifest from a previous run (detected
/// by its `config` + `subcommand` fields).
fn parse_config(bytes: &[u8], path: &Path) -> Result<SimConfig, CliError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| CliError::Data(format!("{}: invalid JSON: {e}", path.display())))?;
    let config_value = match &value {
        Value::Object(map) if map.contains_key("config") && map.contains_key("subcommand") => {
            map.get("config").cloned().expect("checked")
        }
        _ => value,
    };
    serde_json::from_value(config_value)
        .map_err(|e| CliError::Data(format!("{}: invalid config: {e}", path.display())))
}

fn apply_overrides(config: &mut SimConfig, args: &SimulateArgs) -> Result<(), CliError> {
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(rho) = args.rho {
        config.rho = rho;
    }
    if let Some(design) = args.x_design {
        config.design = match design {
            DesignArg::Fixed => DesignKind::Fixed,
            DesignArg::Random => DesignKind::Random,
        };
    }
    if let Some(signal) = &args.signal {
        config.signal = match signal.as_str() {
            "low" => SignalSpec::Named(SignalName::Low),
            "high" => SignalSpec::Named(SignalName::High),
            other => SignalSpec::Explicit(other.parse().map_err(|_| {
                CliError::Usage(format!(
                    "--signal must be `low`, `high`, or a number, got `{other}`"
                ))
            })?),
        };
    }
    Ok(())
}

/// Columns: rep, criterion, chosen_label, k, m, rmse, log_kl, log_kl_model,
/// flag. Nonfinite log-KL values become empty cells with a flag entry.
fn replications_csv(run: &SimRun) -> String {
    let mut out = String::from("rep,criterion,chosen_label,k,m,rmse,log_kl,log_kl_model,flag\n");
    for rep in &run.results {
        for e in &rep.entries {
            let mut flags = Vec::new();
            let cell = |v: f64, name: &str, flags: &mut Vec<String>| -> String {
                if v.is_finite() {
                    format!("{v}")
                } else {
                    let sign = if v > 0.0 { "+inf" } else { "-inf" };
                    flags.push(format!("{name}={sign}"));
                    String::new()
                }
            };
            let log_kl = cell(e.log_kl, "log_kl", &mut flags);
            let log_kl_model = cell(e.log_kl_model, "log_kl_model", &mut flags);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                rep.rep,
                e.criterion.name(),
                e.label,
                e.k,
                e.m,
                e.rmse,
                log_kl,
                log_kl_model,
                flags.join(";")
            ));
        }
    }
    out
}
