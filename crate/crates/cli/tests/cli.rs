use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smoothlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn singularity_prints_exact_rationals() {
    let o = smoothlab(&["singularity", "--n", "2,3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("# smoothlab records v1 experiment=singularity\n"));
    assert!(s.contains("2,8,16,1/2,"));
    assert!(s.contains("3,320,512,5/8,"));
}

#[test]
fn config_sections_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "seed = 5\n\n[cond-tail]\nn = [6]\ntrials = 12\nb_values = [1.0, 2.0]\n\n[tail]\ntrials = 7\n",
    );
    let base = dir.path().join("out/ct");
    let o = smoothlab(&[
        "--config",
        &cfg,
        "--threads",
        "2",
        "--out",
        base.to_str().unwrap(),
        "cond-tail",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(base.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 12);
    let json: String = fs::read_to_string(base.with_extension("json")).unwrap();
    assert!(json.contains("\"schema\": \"smoothlab summary v1\""));
    assert!(json.contains("\"seed\": 5"));

    let again = smoothlab(&["--config", &cfg, "--seed", "5", "--threads", "1", "cond-tail"]);
    assert_eq!(stdout(&again), csv);
}

#[test]
fn exit_codes_follow_error_classes() {
    let o = smoothlab(&["tail", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = smoothlab(&["singularity", "--n", "7"]);
    assert_eq!(o.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[tail]\nbogus = 1\n");
    let o = smoothlab(&["--config", &cfg, "tail"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lo_check_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.txt", "# two equal weights\nnoise = bernoulli\nv = 1 1\n");
    let o = smoothlab(&["lo-check", &q]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("exact,bound,gap,mu,argmax,holds"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "5e-1");
    assert_eq!(row[5], "1");
}

#[test]
fn gap_verify_reads_or_builds_a_result() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "p.txt", "rank 1\n3 20\n");
    let built = smoothlab(&["gap-verify", &g, "--r0", "10", "--s", "2"]);
    assert!(built.status.success());
    let text = stdout(&built);
    assert!(text.ends_with("scale,smallness,sparseness,covering\n1,1,1,1\n"));
    let result = text.split("scale,").next().unwrap();
    let r = write(dir.path(), "r.txt", result);
    let o = smoothlab(&["gap-verify", &g, &r]);
    assert_eq!(stdout(&o), "scale,smallness,sparseness,covering\n1,1,1,1\n");

    let bad = write(
        dir.path(),
        "bad.txt",
        &result.replace("small\nrank 1\n3 1", "small\nrank 1\n3 0"),
    );
    let o = smoothlab(&["gap-verify", &g, &bad]);
    assert!(stdout(&o).ends_with("0\n"), "{}", stdout(&o));
}

#[test]
fn net_is_seeded() {
    let a = smoothlab(&["--seed", "3", "net", "--dim", "2", "--eps", "0.5", "--patience", "2000"]);
    let b = smoothlab(&["--seed", "3", "net", "--dim", "2", "--eps", "0.5", "--patience", "2000"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().all(|l| l.split(',').count() == 2));
}

#[test]
fn classify_reports_class_and_concentration() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(
        dir.path(),
        "w.txt",
        "noise = bernoulli\nb = 4\na = 1\nw = 950000 0 0 0 0 0 0 0 0 0\n",
    );
    let o = smoothlab(&["classify", &w]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\nrich-singular,5e-1,"));
}
