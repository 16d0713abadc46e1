//! End-to-end checks of the experiment commands and their files.

use qasal::harness::{
    cmd_baseline, cmd_compare, cmd_evaluate, cmd_trace, cmd_train, load_config, log_header,
    nearest_rank, read_log, EvalReport, ExperimentConfig, Preset, FIXED_COLUMNS,
};
use qasal::learner::PolicyArtifact;
use qasal::medium::{ClassParams, ContenderConfig, PriorityClass, Tech};

fn smoke(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::Smoke);
    cfg.out_dir = dir.to_path_buf();
    cfg
}

#[test]
fn smoke_training_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let out = cmd_train(&cfg).unwrap();
    assert_eq!(out.rows, 500, "5 episodes of 100 steps");

    let text = std::fs::read_to_string(&out.log).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first, log_header(3).join(","));
    assert_eq!(text.lines().count(), 501);
    let records = read_log(&out.log).unwrap();
    assert_eq!(records.len(), 500);
    assert!(records.iter().all(|r| r.action.is_some()));
    assert_eq!(records.last().unwrap().global_step, 500);

    let artifact = PolicyArtifact::load(&out.policy).unwrap();
    assert_eq!(artifact.meta.observation_dim, 9);
    assert_eq!(artifact.meta.action_count, 49);
    assert_eq!(artifact.meta.seed, cfg.seed);

    let manifest = std::fs::read_to_string(&out.manifest).unwrap();
    assert!(manifest.contains("command = \"train\""));
    assert!(manifest.contains("code_version"));
    assert!(manifest.contains("log_rows = 500"));
    let back = load_config(&out.manifest).unwrap();
    assert_eq!(back, cfg, "the manifest carries the whole configuration");
}

#[test]
fn report_matches_a_recomputation_from_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.eval.episodes = 3;
    let trained = cmd_train(&cfg).unwrap();
    let out = cmd_evaluate(&cfg, &trained.policy).unwrap();
    let report = EvalReport::load(&out.report_path).unwrap();
    assert_eq!(report, out.report, "report file round-trips");

    let rows = read_log(&out.log).unwrap();
    assert_eq!(rows.len(), 300);
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&qasal::learner::StepRecord) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let tol = 1e-9;
    assert!((report.mean_jfi - mean(&|r| r.jfi)).abs() < tol);
    assert!((report.mean_delay_ms - mean(&|r| r.delay_smooth_us) / 1000.0).abs() < tol);
    assert!((report.mean_lambda - mean(&|r| r.lambda)).abs() < tol);
    let viol = mean(&|r| (r.delay_smooth_us > 2000.0) as u8 as f64);
    assert!((report.violation_fraction - viol).abs() < tol);
    let delays: Vec<f64> = rows.iter().map(|r| r.delay_smooth_us).collect();
    assert!((report.p95_delay_ms - nearest_rank(&delays, 95.0) / 1000.0).abs() < tol);

    for (k, node) in report.nodes.iter().enumerate() {
        let s: u64 = rows.iter().map(|r| r.nodes[k].successes).sum();
        let c: u64 = rows.iter().map(|r| r.nodes[k].collisions).sum();
        assert_eq!((node.successes, node.collisions), (s, c));
        if s + c > 0 {
            assert!((node.collision_probability - c as f64 / (s + c) as f64).abs() < tol);
        }
        assert!((0.0..=1.0).contains(&node.collision_probability));
        assert!((0.0..=1.0).contains(&node.airtime_efficiency));
    }
    assert!(rows.iter().all(|r| r.epsilon == 0.0), "evaluation is greedy");

    let summary = std::fs::read_to_string(&out.summary_path).unwrap();
    assert_eq!(summary.lines().count(), 2, "header plus one comparison row");
}

#[test]
fn baseline_and_evaluation_share_the_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let trained = cmd_train(&cfg).unwrap();
    let eval = cmd_evaluate(&cfg, &trained.policy).unwrap().report;
    let base = cmd_baseline(&cfg).unwrap().report;
    let keys = |r: &EvalReport| r.metric_rows().into_iter().map(|(k, _)| k).collect::<Vec<_>>();
    assert_eq!(keys(&eval), keys(&base));
    let names: Vec<&str> = base.nodes.iter().map(|n| n.name.as_str()).collect();
    assert_eq!(names, ["gNB PC1", "gNB PC3", "AP PC3"]);
    assert_eq!(base.source, "baseline");
    assert_eq!(eval.source, "policy");

    let again = cmd_baseline(&cfg).unwrap().report;
    assert_eq!(again, base, "same seed, same report");
}

#[test]
fn baseline_saturation_concentrates_collisions_on_pc3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.eval.episodes = 20;
    let base = cmd_baseline(&cfg).unwrap().report;
    let pc1 = base.nodes[0].collision_probability;
    let pc3 = base.nodes[1].collision_probability;
    assert!(pc3 > 0.5, "gNB PC3 collision probability {pc3}");
    assert!(pc3 > 5.0 * pc1, "PC3 {pc3} vs PC1 {pc1}");
}

#[test]
fn single_contender_is_perfectly_fair_and_collision_free() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.env.contenders = vec![ContenderConfig::new(
        Tech::Nru,
        PriorityClass::Pc1,
        ClassParams {
            aifsn: 2,
            cw_min: 3,
            cw_max: 7,
            mcot_us: 2000,
        },
    )];
    let trained = cmd_train(&cfg).unwrap();
    let report = cmd_evaluate(&cfg, &trained.policy).unwrap().report;
    assert_eq!(report.mean_jfi, 1.0);
    assert_eq!(report.nodes.len(), 1);
    assert_eq!(report.nodes[0].collision_probability, 0.0);
}

#[test]
fn cr_lbt_comparison_has_signed_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let mut plain = smoke(&dir.path().join("plain"));
    plain.eval.episodes = 10;
    let mut cr = plain.clone();
    cr.env.cr_lbt = true;
    cr.out_dir = dir.path().join("cr");
    let p = cmd_baseline(&plain).unwrap();
    let c = cmd_baseline(&cr).unwrap();

    let cmp = cmd_compare(
        &[p.report_path.clone(), c.report_path.clone()],
        Some(&dir.path().join("cmp")),
    )
    .unwrap();
    for row in &cmp.rows {
        assert_eq!(row.deltas.len(), 1);
        assert_eq!(row.deltas[0], row.values[1] - row.values[0], "{}", row.metric);
    }
    let pc3 = cmp
        .rows
        .iter()
        .find(|r| r.metric == "gNB PC3 collision_probability")
        .unwrap();
    assert!(pc3.deltas[0] < 0.0, "CR-LBT lowers PC3 collisions");
    assert!(dir.path().join("cmp/comparison.toml").exists());
    let text = std::fs::read_to_string(dir.path().join("cmp/comparison.txt")).unwrap();
    assert!(text.contains("gNB PC3 collision_probability"));

    let same = cmd_compare(&[p.report_path.clone(), p.report_path.clone(), c.report_path], None).unwrap();
    for row in &same.rows {
        assert_eq!(row.deltas.len(), 2);
        assert_eq!(row.deltas[0], 0.0);
    }
}

#[test]
fn comparing_different_node_sets_fails() {
    let dir = tempfile::tempdir().unwrap();
    let a = cmd_baseline(&smoke(&dir.path().join("a"))).unwrap();
    let mut cfg = smoke(&dir.path().join("b"));
    cfg.env.contenders.pop();
    let b = cmd_baseline(&cfg).unwrap();
    assert!(cmd_compare(&[a.report_path, b.report_path], None).is_err());
}

#[test]
fn mismatched_policy_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let trained = cmd_train(&cfg).unwrap();
    let mut other = cfg.clone();
    other.env.action_mode = qasal::env::ActionMode::Mcot;
    let err = cmd_evaluate(&other, &trained.policy).unwrap_err();
    assert!(err.to_string().contains("action"), "{err}");
}

#[test]
fn trace_lines_are_json_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let path = cmd_trace(&cfg, 50_000).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let mut last_end = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let end = v["t_end"].as_u64().unwrap();
        assert!(v["t_start"].as_u64().unwrap() < end);
        assert!(end <= 50_000);
        assert!(end >= last_end, "completion order");
        last_end = end;
        assert!(["SUCCESS", "COLLISION", "RS", "CR_PULSE"].contains(&v["kind"].as_str().unwrap()));
    }
    assert!(text.lines().count() > 10);
}

#[test]
fn fixed_columns_are_stable() {
    assert_eq!(FIXED_COLUMNS[0], "episode");
    assert_eq!(FIXED_COLUMNS.len(), 17);
}
