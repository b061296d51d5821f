use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn thinpore(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinpore"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn darcy_subcommand_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("low.cfg");
    fs::write(
        &cfg,
        "geometry.shape = square\ngeometry.size = 0.5\nphysics.gamma = -2\ndarcy.grad_p = 1, 0; 2, 0\n",
    )
    .unwrap();
    let out = thinpore(&["darcy"], &cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("low regime, 2 samples"));
    let text = fs::read_to_string(dir.path().join("darcy.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_hash,regime,gamma,grad_p1,grad_p2,v1,v2,v3,permeability"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[1..], ["low", "-2", "1", "0", "-0.375", "0", "0", "none"]);
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(second[5], "-0.75");
}

#[test]
fn seed_flag_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unfold.cfg");
    fs::write(
        &cfg,
        "experiment.kind = unfold-check\ngeometry.shape = square\ngeometry.size = 0.5\ndomain.epsilon = 1/2\nunfold.fields = 1\n",
    )
    .unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = thinpore(&["unfold-check", "--seed", seed, "--workers", "1"], &cfg, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &Path| fs::read(d.join("unfolding.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn bad_configs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "physics.viscosity = 1\n").unwrap();
    let out = thinpore(&["cell"], &cfg, dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `physics.viscosity`"));

    fs::write(&cfg, "experiment.kind = fine\n").unwrap();
    let out = thinpore(&["darcy"], &cfg, dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config is for `fine`"));
}
