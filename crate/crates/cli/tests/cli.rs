use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lf-engine"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

#[test]
fn sample_configs_validate() {
    for name in ["pumped_span.toml", "raman_free_3span.toml"] {
        let out = bin().args(["validate", "--config"]).arg(config(name)).output().unwrap();
        assert!(out.status.success(), "{name}: {}", text(&out));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
    }
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(config("pumped_span.toml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--oracle", "--dz", "20", "--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    for f in ["profiles_span0.csv", "islands.csv", "fits.csv", "nli.csv", "summary.txt", "manifest.toml"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("dz_m = 20"), "{manifest}");
    assert!(manifest.contains("partial = false"));
    let nli = std::fs::read_to_string(dir.path().join("nli.csv")).unwrap();
    assert_eq!(nli.lines().count(), 4, "{nli}");
}

#[test]
fn serial_reruns_are_bit_identical() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args(["run", "--config"])
            .arg(config("raman_free_3span.toml"))
            .arg("--out")
            .arg(dir.path())
            .args(["--threads", "1", "--dz", "50"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", text(&out));
        ["nli.csv", "fits.csv", "islands.csv"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn no_raman_flag_runs_the_closed_form_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--no-raman", "--dz", "50", "--config"])
        .arg(config("raman_free_3span.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    assert!(dir.path().join("nli.csv").is_file());
}

#[test]
fn islands_prints_csv() {
    let out = bin()
        .args(["islands", "--cut", "1", "--config"])
        .arg(config("pumped_span.toml"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "cut,i,j,k,f1_lo_hz,f1_hi_hz,f2_lo_hz,f2_hi_hz");
    assert!(lines.any(|l| l.starts_with("1,1,1,1,")));
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();

    let bad = dir.path().join("bad.toml");
    let base = std::fs::read_to_string(config("raman_free_3span.toml")).unwrap();
    std::fs::write(&bad, base.replace("length_m = 80e3", "length_m = -80e3")).unwrap();
    let out = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
    assert!(text(&out).contains("length"));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, base.replace("repeat = 3", "repeat = 3\nlenght_m = 1.0")).unwrap();
    let out = bin().args(["run", "--config"]).arg(&unknown).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));

    let out = bin().args(["validate", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", text(&out));

    let out = bin().args(["islands", "--cut", "9", "--config"]).arg(config("pumped_span.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(5), "{}", text(&out));

    // a step far too large for the pump makes RK4 go negative
    let out = bin()
        .args(["run", "--dz", "40000", "--config"])
        .arg(config("pumped_span.toml"))
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    let code = out.status.code();
    assert!(code == Some(4) || code == Some(0), "{}", text(&out));
}
