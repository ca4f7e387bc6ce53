use serde_json::{json, Value};

use regsel::selection::{
    nested_restriction_exclusion, nested_subsets, restriction_powerset, select,
};
use regsel::{Criterion, Dataset};

use crate::files::{
    emit_json, parse_matrix, parse_restrictions, parse_vector, read_bytes, score_to_json,
    write_text, RunManifest,
};
use crate::{CliError, FamilyArg, SelectArgs};

pub fn run(args: &SelectArgs) -> Result<(), CliError> {
    let criteria = Criterion::parse_list(&args.criteria).map_err(|e| match e {
        regsel::Error::UnknownCriterion(_) => CliError::Usage(e.to_string()),
        other => CliError::Core(other),
    })?;
    if criteria.is_empty() {
        return Err(CliError::Usage("--criteria names no criteria".into()));
    }

    let design_bytes = read_bytes(&args.design)?;
    let response_bytes = read_bytes(&args.response)?;
    let x = parse_matrix(&design_bytes, &args.design)?;
    let y = parse_vector(&response_bytes, &args.response)?;
    let p = x.ncols();

    let mut manifest = RunManifest::new("select");
    manifest.seed = Some(args.seed);
    manifest.digest_input("design", &design_bytes);
    manifest.digest_input("response", &response_bytes);

    let base_rows = match &args.restrictions {
        Some(path) => {
            let bytes = read_bytes(path)?;
            manifest.digest_input("restrictions", &bytes);
            Some(parse_restrictions(&bytes, path, p)?)
        }
        None => None,
    };

    let (family, dropped) = match args.family {
        FamilyArg::Nested => (nested_subsets(p)?, Vec::new()),
        FamilyArg::Powerset => {
            let rows = base_rows.ok_or_else(|| {
                CliError::Usage("--family powerset requires --restrictions".into())
            })?;
            restriction_powerset(&rows, p)?
        }
        FamilyArg::NestedExclusion => {
            let rows = base_rows.ok_or_else(|| {
                CliError::Usage("--family nested-exclusion requires --restrictions".into())
            })?;
            (nested_restriction_exclusion(&rows, p)?, Vec::new())
        }
    };

    let data = Dataset::new(x, y)?;
    let result = select(&data, &family, &criteria, args.seed)?;

    let candidates: Vec<Value> = family
        .candidates()
        .iter()
        .map(|c| {
            json!({
                "label": c.label,
                "m": c.restriction.m(),
                "k": p - c.restriction.m(),
            })
        })
        .collect();
    let chosen: Vec<Value> = result
        .chosen
        .iter()
        .map(|c| {
            json!({
                "criterion": c.criterion.name(),
                "index": c.index,
                "label": c.label,
                "m": c.m,
                "k": c.k,
            })
        })
        .collect();
    let scores: Vec<Value> = result
        .criteria
        .iter()
        .zip(&result.scores)
        .map(|(criterion, values)| {
            json!({
                "criterion": criterion.name(),
                "values": values.iter().map(|v| score_to_json(v.value)).collect::<Vec<_>>(),
            })
        })
        .collect();

    if let Some(path) = &args.scores_csv {
        write_text(path, &scores_csv(&result, &family, p))?;
    }

    let report = json!({
        "n": data.n(),
        "p": p,
        "seed": args.seed,
        "candidates": candidates,
        "chosen": chosen,
        "scores": scores,
        "dropped_candidates": dropped,
        "manifest": manifest,
    });
    emit_json(args.out.as_deref(), &report)
}

/// One row per candidate, one column per criterion; sentinel scores become
/// empty cells with an entry in the trailing `flags` column.
fn scores_csv(
    result: &regsel::SelectionResult,
    family: &regsel::CandidateFamily,
    p: usize,
) -> String {
    let mut out = String::from("candidate,m,k");
    for c in &result.criteria {
        out.push(',');
        out.push_str(c.name());
    }
    out.push_str(",flags\n");
    for (j, cand) in family.candidates().iter().enumerate() {
        let m = cand.restriction.m();
        out.push_str(&format!("{},{},{}", cand.label, m, p - m));
        let mut flags = Vec::new();
        for (ci, criterion) in result.criteria.iter().enumerate() {
            let v = result.scores[ci][j].value;
            if v.is_finite() {
                out.push_str(&format!(",{v}"));
            } else {
                out.push(',');
                let sign = if v > 0.0 { "+inf" } else { "-inf" };
                flags.push(format!("{}={sign}", criterion.name()));
            }
        }
        out.push(',');
        out.push_str(&flags.join(";"));
        out.push('\n');
    }
    out
}
