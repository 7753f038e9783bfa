//! End-to-end CLI checks: generate -> train -> eval -> solve, plus exit
//! codes for malformed inputs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dro-route"))
}

#[test]
fn gen_train_eval_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");

    let out = bin()
        .args(["gen", "--kind", "uniform", "--n", "10", "--count", "6", "--seed", "1"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["gen", "--kind", "grid", "--n", "10", "--count", "4", "--seed", "2"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(data.join("uniform_10_1.txt").exists());
    assert!(data.join("grid_10_2.txt").exists());

    let cfg = dir.path().join("train.cfg");
    std::fs::write(
        &cfg,
        "outer_steps = 6\nbatch_size = 2\nstarts = 3\neta_theta = 0.01\n\
         checkpoint_interval = 3\nmodel_channels = 8\nmodel_heads = 2\n\
         model_kernel_size = 4\nmodel_neighbors = 3\nmodel_layers = 1\nmodel_ff_dim = 16\n",
    )
    .unwrap();
    let out = bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("final.ckpt").exists());
    assert!(run.join("checkpoint_3.ckpt").exists());
    let log = std::fs::read_to_string(run.join("train_log.csv")).unwrap();
    assert!(log.starts_with("t,g,q_0,q_1,batch_loss,grad_norm,wallclock"));
    assert_eq!(log.lines().count(), 7, "header + 6 steps");

    let out = bin()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run.join("final.ckpt"))
        .arg("--data")
        .arg(&data)
        .args(["--starts", "2", "--no-augment"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.starts_with("group,count,mean_obj,mean_gap"));
    assert!(report.contains("overall,10,"));

    // Resume continues from the interval checkpoint without --config.
    let out = bin()
        .arg("train")
        .arg("--resume")
        .arg(run.join("checkpoint_3.ckpt"))
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Solve the first generated record.
    let out = bin()
        .args(["solve", "--algo", "hk"])
        .arg("--in")
        .arg(data.join("uniform_10_1.txt"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("length "));
    assert!(text.contains("tour "));
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsp");
    std::fs::write(&bad, "NAME : x\nTYPE : TSP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : GEO\n").unwrap();
    let out = bin()
        .args(["solve", "--algo", "nn2opt"])
        .arg("--in")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = bin()
        .args(["gen", "--kind", "uniform", "--n", "8", "--count", "2", "--seed", "3"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "not_a_key = 1\n").unwrap();
    let out = bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_env_var_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = bin()
        .args(["gen", "--kind", "uniform", "--n", "8", "--count", "2", "--seed", "3"])
        .arg("--out")
        .arg(&data)
        .env("DROROUTE_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(
        Path::new(&data.join("uniform_8_99.txt")).exists(),
        "env seed wins over --seed"
    );
}

#[test]
fn help_covers_all_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["gen", "train", "eval", "solve", "bench"] {
        assert!(text.contains(sub), "missing subcommand {sub}");
        let sub_out = bin().args([sub, "--help"]).output().unwrap();
        assert!(sub_out.status.success(), "{sub} --help");
    }
}
