use std::path::Path;
use std::process::{Command, Output};

use fermi_rpa_cli::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fermi-rpa"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses headerless CSV into (columns, rows).
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (cols, rows)
}

fn column(cols: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = cols.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn zero_potential_gives_zero_occupation() {
    let o = run(&["scan", "--kf", "8", "--potential", "const:0,2.5", "--no-timestamp"]);
    let (cols, rows) = csv(&stdout(&o));
    assert!(!rows.is_empty());
    for name in ["nq_matrix", "nq_series", "nq_integral", "nq_asymptotic"] {
        assert!(column(&cols, &rows, name).iter().all(|&v| v == 0.0), "{name}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("Z (matrix route) = 1.0000000000000000e0"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", "[potential]\npreset = \"const:0,2.5\"\n[sweep]\nkf = [5.0, 8.0]\n");
    let (cols, rows) = csv(&stdout(&run(&["sweep-n", "--config", &cfg, "--no-timestamp"])));
    assert_eq!(column(&cols, &rows, "Z"), vec![1.0, 1.0]);
}

#[test]
fn sweep_kappa_approaches_continuum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "[routes]\nmatrix = true\nseries = false\nintegral = false\nasymptotic = false\nseries_terms = 25\n",
    );
    let (cols, rows) = csv(&stdout(&run(&["sweep-n", "--config", &cfg, "--no-timestamp"])));
    assert_eq!(cols, ["kf", "N", "kappa", "M", "sup_in", "sup_out", "Z", "max_route_disagreement"]);
    let n = column(&cols, &rows, "N");
    assert_eq!(n.len(), 5);
    assert!(n.windows(2).all(|w| w[1] > w[0]));
    let kappa = column(&cols, &rows, "kappa");
    assert!((kappa[4] - 0.6204).abs() < 0.02, "{kappa:?}");
}

#[test]
fn dv_ratio_approaches_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dv.toml", "[dv]\nkf = [50.0, 100.0]\noffsets = [-0.5, 0.5]\ne = 1.0\nr = 2.5\n");
    let (cols, rows) = csv(&stdout(&run(&["dv-compare", "--config", &cfg, "--no-timestamp"])));
    let ratio = column(&cols, &rows, "ratio");
    for (a, b) in ratio[..2].iter().zip(&ratio[2..]) {
        assert!((b - 0.5).abs() < (a - 0.5).abs(), "{ratio:?}");
    }
    assert!(ratio.iter().all(|r| (0.35..=0.65).contains(r)));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "2")] {
        let o = run(&["scan", "--kf", "8", "--no-timestamp", "--threads", threads, "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(!ta.contains(&b'\r'));

    let with = stdout(&run(&["geometry-audit", "--kf", "8"]));
    let without = stdout(&run(&["geometry-audit", "--kf", "8", "--no-timestamp"]));
    assert!(with.starts_with("# generated geometry-audit"));
    assert_eq!(with.split_once('\n').unwrap().1, without);
}

#[test]
fn json_mirrors_csv() {
    let args = ["occupation", "--kf", "8", "--no-timestamp"];
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.toml", "[q]\nlist = [[0, 0, 9], [1, 2, 8], [0, 0, 3]]\n");
    let c = stdout(&run(&[&args[..], &["--config", &cfg]].concat()));
    let j = stdout(&run(&[&args[..], &["--config", &cfg, "--format", "json"]].concat()));
    let (cols, rows) = csv(&c);
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), rows.len());
    for (obj, row) in arr.iter().zip(&rows) {
        let keys: Vec<&String> = obj.as_object().unwrap().keys().collect();
        assert_eq!(keys, cols.iter().collect::<Vec<_>>());
        let csv_val: f64 = row[7].parse().unwrap();
        assert_eq!(obj["nq_matrix"].as_f64().unwrap(), csv_val);
    }
}

#[test]
fn config_round_trips() {
    let text = r#"
mode = "sweep-n"
[model]
kf = 8.0
delta = 0.07
[potential]
preset = "coulomb-sr:1,2.5"
[sweep]
kf = [5.0, 8.0]
[convergence]
mu_max = 5.0
mu_points = 50
[quadrature]
abs_tol = 1e-13
rel_tol = 1e-11
max_subdivisions = 1000
"#;
    let a = RunConfig::parse(text).unwrap();
    let b = RunConfig::parse(&a.to_toml()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_toml(), b.to_toml());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[model]\nkf = \"eight\"\n");
    assert_eq!(run(&["scan", "--config", &bad]).status.code(), Some(1));
    assert_eq!(run(&["scan", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(1));
    assert_eq!(run(&["scan", "--potential", "yukawa:1,2"]).status.code(), Some(1));
    // the corridor margin at R = 4.5 leaves no room for patches at kF = 5
    assert_eq!(run(&["scan", "--kf", "5", "--potential", "const:1,4.5"]).status.code(), Some(1));
    let wrong_mode = write(dir.path(), "m.toml", "mode = \"scan\"\n");
    assert_eq!(run(&["sweep-n", "--config", &wrong_mode]).status.code(), Some(1));

    // a subdivision budget of one cannot meet these tolerances
    let starved = write(
        dir.path(),
        "q.toml",
        "[quadrature]\nabs_tol = 1e-16\nrel_tol = 0.0\nmax_subdivisions = 1\n[dv]\nkf = [50.0]\noffsets = [0.5]\ne = 1.0\nr = 2.5\n",
    );
    let o = run(&["dv-compare", "--config", &starved]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numeric failure in dv_nq"));

    assert_eq!(run(&["geometry-audit", "--kf", "8", "--no-timestamp"]).status.code(), Some(0));
}

#[test]
fn geometry_audit_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let mem = dir.path().join("members.csv");
    let ker = dir.path().join("kernels.txt");
    let cfg = write(
        dir.path(),
        "g.toml",
        &format!(
            "[model]\nkf = 8.0\n[output]\nformat = \"csv\"\nmembership = {:?}\nkernels = {:?}\n",
            mem.to_str().unwrap(),
            ker.to_str().unwrap()
        ),
    );
    let (cols, rows) = csv(&stdout(&run(&["geometry-audit", "--config", &cfg, "--no-timestamp"])));
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[cols.iter().position(|c| c == "center_inside").unwrap()] == "true"));
    assert!(std::fs::read_to_string(&mem).unwrap().starts_with("kx,ky,kz,alpha\n"));
    assert!(std::fs::read_to_string(&ker).unwrap().starts_with("# k = "));
}
