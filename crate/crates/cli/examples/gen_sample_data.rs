//! Regenerates the bundled sample inputs in `data/`:
//! a 20x6 design drawn from the AR(1) predictor model, a response from the
//! tied-coefficient truth [2,2,2,1,1,1], the matching restriction file, and
//! an experiment config.
//!
//! Run from the workspace root: `cargo run -p regsel-cli --example gen_sample_data`

use std::fmt::Write as _;
use std::fs;

use nalgebra::DVector;
use regsel::simulation::{ar1_covariance, sample_design, sample_response, substream, TrueModel};

fn main() {
    let p = 6;
    let n = 20;
    let beta0 = DVector::from_row_slice(&[2.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
    let sigma0 = ar1_covariance(p, 0.5).unwrap();
    let signal = (&sigma0 * &beta0).dot(&beta0);
    let sigma0_sq = signal * (1.0 - 0.9) / 0.9; // population R^2 = 0.9
    let model = TrueModel::new(beta0, sigma0_sq, sigma0).unwrap();

    let mut rng = substream(42, 1);
    let x = sample_design(n, model.sigma0(), &mut rng).unwrap();
    let y = sample_response(&x, &model, &mut rng);

    let mut design = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..p).map(|j| format!("{}", x[(i, j)])).collect();
        writeln!(design, "{}", row.join(",")).unwrap();
    }
    let mut response = String::new();
    for i in 0..n {
        writeln!(response, "{}", y[i]).unwrap();
    }

    fs::create_dir_all("data").unwrap();
    fs::write("data/design.csv", design).unwrap();
    fs::write("data/response.csv", response).unwrap();
    fs::write(
        "data/restrictions.json",
        "[\"b1=b4\", \"b1=2*b2\", \"b1=b2\", \"b2=b3\", \"b4=b5\", \"b5=b6\"]\n",
    )
    .unwrap();
    fs::write(
        "data/experiment.json",
        r#"{
  "n": 10,
  "p": 6,
  "rho": 0.5,
  "design": "random",
  "beta": [2, 2, 2, 1, 1, 1],
  "signal": "high",
  "family": {"powerset": ["b1=b4", "b1=2*b2", "b1=b2", "b2=b3", "b4=b5", "b5=b6"]},
  "criteria": ["raicc", "aicc", "sp", "bic", "tenfold"],
  "reps": 200,
  "seed": 1
}
"#,
    )
    .unwrap();
    println!("wrote data/design.csv, data/response.csv, data/restrictions.json, data/experiment.json");
}
