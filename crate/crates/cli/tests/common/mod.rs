#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

/// One invocation per command on the bundled inputs.
pub const EXAMPLES: &[&str] = &[
    "ot --mu testdata/half.csv --nu testdata/half.csv --cost testdata/cost_2x2.csv",
    "sinkhorn --mu testdata/cloud_mu.csv --nu testdata/cloud_nu.csv --eps 0.05",
    "uot --mu testdata/cloud_mu.csv --nu testdata/cloud_nu.csv --eps 0.05 --lam-mu 2 --lam-nu 2",
    "w1d --x testdata/sample_x.csv --y testdata/sample_y.csv --p 2",
    "gaussian-w2 --g1 testdata/gauss1.csv --g2 testdata/gauss2.csv",
    "sliced --x testdata/points_x.csv --y testdata/points_y.csv --n-dir 50 --seed 7",
    "semidiscrete --nu testdata/sites.csv --tol 1e-3",
    "ranks --sample testdata/points_x.csv",
    "bounds-te --y0 testdata/y0.csv --y1 testdata/y1.csv --h squared-diff",
    "bounds-subgroup --y0 testdata/y0.csv --y1 testdata/y1.csv --a 0.25 --b 0.75",
    "bounds-winners --y0 testdata/y0.csv --y1 testdata/y1.csv --a 0.0 --b 0.5",
    "binary-ot --mu testdata/binary_mu.csv --nu testdata/half.csv --gamma testdata/gamma.csv",
    "dro --f testdata/dro_f.csv --delta testdata/dro_delta.csv --mu testdata/dro_mu.csv --rho 0.3",
    "match-identify --table testdata/table_1x1.csv",
    "match-equilibrium --phi testdata/surplus.csv --mu testdata/types_x.csv --nu testdata/types_y.csv",
    "match-fit --table testdata/table_2x3.csv --basis testdata/basis_2x3.csv",
    "match-sista --plan testdata/plan_3x3.csv --basis testdata/basis_3x3.csv",
];

/// Runs the binary from the crate root so relative input paths resolve.
pub fn otecon(args: &str, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_otecon"));
    cmd.current_dir(env!("CARGO_MANIFEST_DIR")).args(args.split_whitespace()).env_remove("OTECON_MAX_ITER");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn report(args: &str) -> serde_json::Value {
    let out = otecon(args, &[]);
    assert!(out.status.success(), "{args}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn schema_validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

/// Schema violations of `doc`, one message each.
pub fn schema_errors(validator: &jsonschema::Validator, doc: &serde_json::Value) -> Vec<String> {
    validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}
