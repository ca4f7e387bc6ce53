use serde_json::json;

use regsel::fit::fit_restricted;
use regsel::{Dataset, RestrictionSet};

use crate::files::{emit_json, parse_matrix, parse_restrictions, parse_vector, read_bytes, RunManifest};
use crate::{CliError, FitArgs};

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let design_bytes = read_bytes(&args.design)?;
    let response_bytes = read_bytes(&args.response)?;
    let x = parse_matrix(&design_bytes, &args.design)?;
    let y = parse_vector(&response_bytes, &args.response)?;
    let p = x.ncols();

    let mut manifest = RunManifest::new("fit");
    manifest.digest_input("design", &design_bytes);
    manifest.digest_input("response", &response_bytes);

    let rest = match &args.restrictions {
        Some(path) => {
            let bytes = read_bytes(path)?;
            manifest.digest_input("restrictions", &bytes);
            let rows = parse_restrictions(&bytes, path, p)?;
            RestrictionSet::from_rows(&rows, p)?
        }
        None => RestrictionSet::unrestricted(p),
    };

    let data = Dataset::new(x, y)?;
    let fit = fit_restricted(&data, &rest)?;

    let report = json!({
        "n": fit.n,
        "p": fit.p,
        "m": fit.m,
        "k": fit.k(),
        "beta_hat": fit.beta_hat.as_slice(),
        "sigma_hat_sq": fit.sigma_hat_sq,
        "rss": fit.rss,
        "manifest": manifest,
    });
    emit_json(args.out.as_deref(), &report)
}
