use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qdsim"));
    c.env_remove("QDSIM_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn ok(args: &[&str], out: &Path) -> Value {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn stochastic_outputs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("source.cfg");
    let cfg = cfg.to_str().unwrap();
    for (cmd, files) in [("g2", ["g2.csv", "g2.json"]), ("hom", ["hom.csv", "hom.json"])] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        ok(&[cmd, "--config", cfg, "--set", "capture.pulses=20000", "--set", "dephasing.pairs=20000"], &a);
        ok(&[cmd, "--config", cfg, "--set", "capture.pulses=20000", "--set", "dephasing.pairs=20000", "--jobs", "1"], &b);
        for f in files {
            assert_eq!(read(&a, f), read(&b, f), "{cmd}: {f}");
        }
    }
    let c = tmp.path().join("g2-c");
    ok(&["g2", "--config", cfg, "--set", "capture.pulses=20000", "--seed", "43"], &c);
    assert_ne!(read(&tmp.path().join("g2-a"), "g2.csv"), read(&c, "g2.csv"));
}

#[test]
fn config_hash_ignores_order_comments_and_spacing() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.cfg");
    let b = tmp.path().join("b.cfg");
    std::fs::write(&a, "[device]\ng = 30 ueV\ngamma_sp = 0.5 ueV\nkappa_top = 20 ueV\nkappa_bottom = 20 ueV\n").unwrap();
    std::fs::write(&b, "# same device\n[device]\nkappa_bottom=20   ueV\nkappa_top = 20 ueV # top\n\ngamma_sp = 0.5 ueV\ng = 30 ueV\n").unwrap();
    let ha = ok(&["figures", "--config", a.to_str().unwrap()], &tmp.path().join("oa"))["config_hash"].clone();
    let hb = ok(&["figures", "--config", b.to_str().unwrap()], &tmp.path().join("ob"))["config_hash"].clone();
    assert_eq!(ha, hb);
    let hc = ok(&["figures", "--config", a.to_str().unwrap(), "--set", "device.g=31 ueV"], &tmp.path().join("oc"))["config_hash"].clone();
    assert_ne!(ha, hc);
}

#[test]
fn distinct_exit_codes_with_json_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["bogus"], 2, "usage"),
        (&["figures", "--set", "device.nope=1"], 3, "config"),
        (&["g2"], 3, "config"),
        (&["figures", "--set", "device.g=1", "--set", "device.gamma_sp=0", "--set", "device.kappa_top=1", "--set", "device.kappa_bottom=1"], 11, "undefined_purcell"),
        (&["gate", "fidelity", "--M", "1.5"], 12, "domain"),
    ];
    for (args, code, kind) in cases {
        let o = run(args, tmp.path());
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"], kind);
        assert_eq!(err["exit_code"], code);
    }
}

#[test]
fn summary_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let s = ok(&["gate", "truth-table", "--M", "0.5"], tmp.path());
    let mut listed: Vec<String> = s["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let mut present: Vec<String> =
        std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
    assert!(s["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(s["outputs"]["average_correct"], 0.75);
    let csv = String::from_utf8(read(tmp.path(), "truth-table.csv")).unwrap();
    assert!(csv.starts_with("input,HH,HV,VH,VV,success_probability\nHH,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn single_point_sweep_matches_direct_run() {
    let tmp = tempfile::tempdir().unwrap();
    let direct = ok(&["gate", "fidelity", "--M", "0.76"], &tmp.path().join("d"));
    ok(&["gate", "fidelity", "--set", "sweep.axis1=gate.m", "--set", "sweep.grid1=0.76"], &tmp.path().join("s"));
    let csv = String::from_utf8(read(&tmp.path().join("s"), "sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    for (key, value) in direct["outputs"].as_object().unwrap() {
        let i = header.iter().position(|h| h == key).unwrap();
        assert_eq!(row[i].parse::<f64>().unwrap(), value.as_f64().unwrap(), "{key}");
    }
    assert_eq!(*row.last().unwrap(), "");
}

#[test]
fn sweep_rows_follow_grid_order() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "gate",
        "fidelity",
        "--set",
        "sweep.axis1=gate.m",
        "--set",
        "sweep.grid1=0.9, 0.1, 0.5",
        "--set",
        "sweep.axis2=run.seed",
    ];
    assert_eq!(run(&args, tmp.path()).status.code(), Some(3));

    let cfg = configs().join("strong.cfg");
    let cfg = cfg.to_str().unwrap();
    let base = ["figures", "--config", cfg, "--set", "sweep.axis1=device.g", "--set", "sweep.grid1=50, 10, 30 ueV"];
    let two = [&base[..], &["--set", "sweep.axis2=device.gamma_sp", "--set", "sweep.grid2=0:1:3 ueV"]].concat();
    let s1 = tmp.path().join("j1");
    let s4 = tmp.path().join("j4");
    ok(&[&two[..], &["--jobs", "1"]].concat(), &s1);
    ok(&[&two[..], &["--jobs", "4"]].concat(), &s4);
    assert_eq!(read(&s1, "sweep.csv"), read(&s4, "sweep.csv"));
    let csv = String::from_utf8(read(&s1, "sweep.csv")).unwrap();
    let keys: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expect: Vec<(String, String)> = ["50", "10", "30"]
        .iter()
        .flat_map(|g| ["0", "0.5", "1"].iter().map(move |s| (g.to_string(), s.to_string())))
        .collect();
    assert_eq!(keys, expect);
    // gamma_sp = 0 rows fail but stay in place.
    assert!(csv.lines().skip(1).step_by(3).all(|l| l.ends_with("gamma_sp is zero")));
}

#[test]
fn eta_top_sweep_lowers_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("eta-sweep.cfg");
    ok(&["pulse-threshold", "--config", cfg.to_str().unwrap(), "--set", "pulse.photons=0.1:1000:13 log"], tmp.path());
    let csv = String::from_utf8(read(tmp.path(), "sweep.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "n_th").unwrap();
    let n: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(n.len(), 3);
    assert!(n[0] > n[1] && n[1] > n[2], "{n:?}");
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let o = bin().args(["gate", "sweep"]).env("QDSIM_OUT", &env_dir).current_dir(tmp.path()).output().unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("gate-sweep.csv").exists());

    let cfg_dir = tmp.path().join("cfg");
    let o = bin()
        .args(["gate", "sweep", "--set", &format!("run.out={}", cfg_dir.display())])
        .env("QDSIM_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(cfg_dir.join("gate-sweep.csv").exists());
}
