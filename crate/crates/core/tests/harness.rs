use std::fs;

use sdcaf_core::env::{ArmSpec, Instance, SpreadPolicy};
use sdcaf_core::harness::{
    run_experiment, summary_path, trace_path, write_outputs, ExperimentConfig, TRACE_HEADER,
};
use sdcaf_core::policies::PolicyId;
use sdcaf_core::Error;

fn config(policies: Vec<PolicyId>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        Instance::bernoulli(&[0.9, 0.5, 0.4], 4, 3000, SpreadPolicy::Dirichlet { alpha: 0.7 }).unwrap(),
        policies,
    );
    c.replications = 2;
    c.seed = 99;
    c
}

fn read_all(dir: &std::path::Path, policies: &[PolicyId]) -> Vec<Vec<u8>> {
    let mut files: Vec<Vec<u8>> = policies.iter().map(|&p| fs::read(trace_path(dir, p)).unwrap()).collect();
    files.push(fs::read(summary_path(dir)).unwrap());
    files
}

#[test]
fn reruns_are_byte_identical() {
    let policies = PolicyId::ALL.to_vec();
    let mut c = config(policies.clone());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    c.workers = Some(1);
    write_outputs(&run_experiment(&c).unwrap(), a.path()).unwrap();
    c.workers = Some(3);
    write_outputs(&run_experiment(&c).unwrap(), b.path()).unwrap();
    assert_eq!(read_all(a.path(), &policies), read_all(b.path(), &policies));

    c.seed += 1;
    let other = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&c).unwrap(), other.path()).unwrap();
    assert_ne!(read_all(a.path(), &policies), read_all(other.path(), &policies));
}

#[test]
fn trace_file_layout() {
    let mut c = config(vec![PolicyId::Alg1]);
    c.stride = 100;
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&c).unwrap(), dir.path()).unwrap();
    let text = fs::read_to_string(trace_path(dir.path(), PolicyId::Alg1)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // t = 0, 100, …, 2900 plus t = 2999, for each of two replications
    assert_eq!(rows.len(), 2 * 31);
    assert_eq!(rows[30][0], "2999");
    assert_eq!(rows[31][..2], ["0", "1"]);
    let mut last = 0.0;
    for row in &rows[..31] {
        assert_eq!(row.len(), 6);
        let regret: f64 = row[5].parse().unwrap();
        assert!(regret >= last);
        last = regret;
    }
}

#[test]
fn summary_matches_traces() {
    let c = config(vec![PolicyId::Alg2, PolicyId::UniformRandom]);
    let out = run_experiment(&c).unwrap();
    for (summary, traces) in out.summary.policies.iter().zip(&out.traces) {
        assert_eq!(summary.policy, traces.policy);
        for (rep, trace) in traces.traces.iter().enumerate() {
            let mut counts = vec![0u64; 3];
            for row in &trace.rows {
                counts[row.arm] += 1;
            }
            assert_eq!(counts, summary.pull_counts.per_replication[rep]);
        }
        let finals: Vec<f64> = traces.traces.iter().map(|t| t.final_pseudo_regret()).collect();
        assert_eq!(summary.final_pseudo_regret.mean, (finals[0] + finals[1]) / 2.0);
    }
    let alg2 = &out.summary.policies[0];
    let v = alg2.verification.as_ref().unwrap();
    assert_eq!(v.violations, 0);
    assert!(v.conservation_ok);
    assert!(out.summary.policies[1].verification.is_none());
    assert!(out.summary.verification_passed());
}

#[test]
fn summary_json_fields() {
    let c = config(vec![PolicyId::Alg1, PolicyId::Alg2]);
    let out = run_experiment(&c).unwrap();
    let json: serde_json::Value = serde_json::to_value(&out.summary).unwrap();
    let alg1 = &json["policies"][0];
    assert_eq!(alg1["policy"], "alg1");
    // ⌈2·√(3000 / log 3000)⌉
    assert_eq!(alg1["parameters"]["k"], 39);
    assert!(alg1["verification"]["phases_checked"].as_u64().unwrap() > 0);
    let alg2 = &json["policies"][1];
    assert_eq!(alg2["parameters"]["delta_tilde_init"], 1.0);
    assert!(alg2["parameters"]["schedule_prefix"].as_array().unwrap().len() >= 2);
    assert_eq!(json["instance"]["optimal_arm"], 0);
    assert!(json["config"].get("out_dir").is_none());
}

#[test]
fn uniform_random_regret_oracle() {
    let mut c = ExperimentConfig::new(
        Instance::bernoulli(&[1.0, 0.0], 1, 10_000, SpreadPolicy::Uniform).unwrap(),
        vec![PolicyId::UniformRandom],
    );
    c.replications = 50;
    c.seed = 3;
    let out = run_experiment(&c).unwrap();
    let mean = out.summary.policies[0].final_pseudo_regret.mean;
    assert!((mean - 5000.0).abs() <= 0.03 * 5000.0, "{mean}");
}

#[test]
fn pull_count_check_runs_with_enough_replications() {
    let mut c = ExperimentConfig::new(
        Instance::bernoulli(&[0.9, 0.4], 2, 2000, SpreadPolicy::Uniform).unwrap(),
        vec![PolicyId::Alg1],
    );
    c.replications = 100;
    let out = run_experiment(&c).unwrap();
    let v = out.summary.policies[0].verification.as_ref().unwrap();
    let report = v.pull_count_bound.as_ref().unwrap();
    assert_eq!(report.replications, 100);
    assert!(report.passed());
}

#[test]
fn rejects_single_arm_instances() {
    let text = r#"{"instance": {"arms": [{"family":"bernoulli","mean":0.5}], "delay": 1, "horizon": 100},
                   "policies": ["alg1"]}"#;
    let c: ExperimentConfig = serde_json::from_str(text).unwrap();
    let err = run_experiment(&c).unwrap_err();
    assert!(matches!(err, Error::Config { ref field, .. } if field == "instance.arms"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn mixed_families() {
    let arms = vec![
        ArmSpec::beta(5.0, 2.0).unwrap(),
        ArmSpec::uniform(0.1, 0.5).unwrap(),
        ArmSpec::deterministic(0.5).unwrap(),
    ];
    let mut c = ExperimentConfig::new(
        Instance::new(arms, 6, 4000, SpreadPolicy::BlockBoundaryAdversary).unwrap(),
        vec![PolicyId::Alg1, PolicyId::Alg2, PolicyId::VanillaUcb],
    );
    c.replications = 4;
    let out = run_experiment(&c).unwrap();
    assert!(out.summary.verification_passed());
}
