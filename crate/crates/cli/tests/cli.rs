use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ssnscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssnscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn five(dir: &Path) -> (PathBuf, PathBuf) {
    let n = dir.join("nodes.csv");
    let e = dir.join("edges.csv");
    fs::write(&n, "id,x,y\nA,0,0\nB,300,0\nC,0,400\nD,2000,0\nE,300,300\n").unwrap();
    fs::write(&e, "source,target\nA,B\nA,C\nB,C\nA,D\nD,E\n").unwrap();
    (n, e)
}

#[test]
fn scan_writes_expected_densities() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = five(dir.path());
    let out = dir.path().join("r.csv");
    let o = ssnscan(&[
        "scan",
        "--nodes",
        p(&n),
        "--edges",
        p(&e),
        "--spec",
        "kind=euclidean,r=500",
        "--stat",
        "all",
        "--out",
        p(&out),
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let (rows, prov) = ssn_scan::io::read_results(&out).unwrap();
    let density: Vec<(String, f64)> = rows.iter().map(|r| (r.id.clone(), r.density)).collect();
    assert_eq!(density[0], ("A".to_string(), 0.5));
    assert_eq!(density[3], ("D".to_string(), 0.0));
    assert!(prov.iter().any(|(k, _)| k == "nodes_sha256"));
}

#[test]
fn default_specs_are_the_reference_nine() {
    let dir = tempfile::tempdir().unwrap();
    let n = dir.path().join("nodes.csv");
    let e = dir.path().join("edges.csv");
    let mut nodes = String::from("id,x,y\n");
    let mut edges = String::from("source,target\n");
    for i in 0..25 {
        nodes.push_str(&format!("v{i},{},{}\n", (i % 5) * 400, (i / 5) * 400));
        if i > 0 {
            edges.push_str(&format!("v{},v{i}\n", i - 1));
        }
    }
    fs::write(&n, nodes).unwrap();
    fs::write(&e, edges).unwrap();
    let out = dir.path().join("r.geojson");
    let o = ssnscan(&["scan", "--nodes", p(&n), "--edges", p(&e), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (rows, _) = ssn_scan::io::read_results(&out).unwrap();
    assert_eq!(rows.len(), 9 * 25);
    let specs: std::collections::BTreeSet<_> = rows.iter().map(|r| r.spec.as_str()).collect();
    assert!(specs.contains("kind=knn,k=20"));
    assert!(specs.contains("kind=manhattan,r=2000"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = five(dir.path());
    let out = dir.path().join("x.csv");

    let o = ssnscan(&["scan", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = ssnscan(&[
        "scan",
        "--nodes",
        "missing.csv",
        "--edges",
        p(&e),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "source,target\nA,B\nA,Z\n").unwrap();
    let o = ssnscan(&[
        "scan",
        "--nodes",
        p(&n),
        "--edges",
        p(&bad),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let o = ssnscan(&[
        "scan",
        "--nodes",
        p(&n),
        "--edges",
        p(&e),
        "--out",
        p(&out),
        "--spec",
        "kind=knn,k=9",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = ssnscan(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sweep_sensitivity_gistar_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = five(dir.path());
    let d = |name: &str| dir.path().join(name);
    let o = ssnscan(&[
        "sweep",
        "--nodes",
        p(&n),
        "--edges",
        p(&e),
        "--kind",
        "euclidean",
        "--from",
        "100",
        "--to",
        "1000",
        "--step",
        "100",
        "--stat",
        "edgescan",
        "--out",
        p(&d("sweep.csv")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(d("sweep.csv")).unwrap();
    assert_eq!(
        sweep.lines().filter(|l| l.starts_with("euclidean")).count(),
        10
    );

    let specs = d("specs.cfg");
    fs::write(&specs, "# three windows\nspec = kind=euclidean,r=500\nspec = kind=manhattan,r=500\nspec = kind=knn,k=3\n").unwrap();
    let o = ssnscan(&[
        "sensitivity",
        "--nodes",
        p(&n),
        "--edges",
        p(&e),
        "--specs-file",
        p(&specs),
        "--out-summary",
        p(&d("summary.csv")),
        "--out-variance",
        p(&d("variance.csv")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(d("summary.csv")).unwrap();
    assert!(summary.contains("\"kind=euclidean,r=500\",edge_count,"));
    let variance = fs::read_to_string(d("variance.csv")).unwrap();
    assert_eq!(variance.lines().filter(|l| !l.starts_with('#')).count(), 6);

    for (source, name) in [("grid-counts", "a.geojson"), ("ndscan", "b.geojson")] {
        let o = ssnscan(&[
            "gistar",
            "--nodes",
            p(&n),
            "--edges",
            p(&e),
            "--cell-size",
            "500",
            "--radius",
            "500",
            "--source",
            source,
            "--out",
            p(&d(name)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ssnscan(&[
        "compare",
        "--a",
        p(&d("a.geojson")),
        "--b",
        p(&d("b.geojson")),
        "--out",
        p(&d("c.csv")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let compare = fs::read_to_string(d("c.csv")).unwrap();
    assert!(compare.contains("confidence,a_only,b_only,both,neither,overlap"));
}

#[test]
fn synth_then_significance_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    fs::write(
        d("s.cfg"),
        "background_nodes = 80\nbbox = 0,0,5000,5000\nbackground_p = 0.03\ncluster = 2500,2500,200,6,1\nseed = 3\n",
    )
    .unwrap();
    let o = ssnscan(&[
        "synth",
        "--config",
        p(&d("s.cfg")),
        "--out-nodes",
        p(&d("n.csv")),
        "--out-edges",
        p(&d("e.csv")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = d(&format!("sig{i}.geojson"));
        let o = ssnscan(&[
            "significance",
            "--nodes",
            p(&d("n.csv")),
            "--edges",
            p(&d("e.csv")),
            "--model",
            "configuration",
            "--replicates",
            "49",
            "--seed",
            "8",
            "--spec",
            "kind=euclidean,r=800",
            "--workers",
            workers,
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let (rows, _) = ssn_scan::io::read_results(&d("sig0.geojson")).unwrap();
    assert_eq!(rows.len(), 86);
    assert!(rows
        .iter()
        .all(|r| r.p_value.is_some_and(|p| p > 0.0 && p <= 1.0)));

    fs::write(
        d("bad.cfg"),
        "background_nodes = 5\nbbox = 0,0,1,1\nbackground_p = 2\nseed = 1\n",
    )
    .unwrap();
    let o = ssnscan(&[
        "synth",
        "--config",
        p(&d("bad.cfg")),
        "--out-nodes",
        p(&d("x")),
        "--out-edges",
        p(&d("y")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
