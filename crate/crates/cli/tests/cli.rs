use std::process::{Command, Output};

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let o = steklov(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/out.csv");
    let missing = missing.to_str().unwrap();
    let table: &[(&[&str], i32)] = &[
        (&["spectrum", "--dims", "1,1", "--sigma-max", "2"], 0),
        (&["--help"], 0),
        (&["spectrum", "--dims", "1,-1", "--sigma-max", "5"], 1),
        (&["spectrum", "--dims", "1", "--sigma-max", "5"], 1),
        (&["spectrum", "--dims", "1,x", "--sigma-max", "5"], 1),
        (&["spectrum", "--dims", "1,1"], 1),
        (&["spectrum", "--dims", "1,1", "--sigma-max", "-1"], 1),
        (&["no-such-command"], 1),
        (&["constants", "--dim", "2"], 1),
        (&["invert-rectangle", "--perimeter", "2", "--sigma1", "0.7"], 1),
        (&["invert-rectangle", "--perimeter", "-2", "--sigma1", "0.5"], 1),
        (&["weyl", "--dims", "1,1", "--step", "0"], 1),
        (&["concentration", "--dims", "1,1,1", "--trig", "0", "--eps", "2"], 1),
        (&["sigma1", "--dims", "1e-300,1"], 2),
        (&["spectrum", "--dims", "1,1", "--sigma-max", "2", "-o", missing], 3),
    ];
    for (args, code) in table {
        let o = steklov(args);
        assert_eq!(o.status.code(), Some(*code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_dims_names_the_field() {
    let o = steklov(&["spectrum", "--dims", "1,-1", "--sigma-max", "5"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--dims"));
}

#[test]
fn square_spectrum_rows() {
    let o = steklov(&["spectrum", "--dims", "1,1", "--sigma-max", "5", "--method", "exact"]);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["sigma", "method", "p", "tau_mask", "box", "ell_tau2_mask", "multiplicity"]);
    let sigmas: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    let s1 = 0.688_252_742_336_276_3;
    assert_eq!(sigmas[0], 0.0);
    assert!((sigmas[1] - s1).abs() < 1e-12 && (sigmas[2] - s1).abs() < 1e-12);
    assert_eq!(sigmas[3], 1.0);
    assert!(sigmas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn quasi_rows_match_count() {
    let o = steklov(&["spectrum", "--dims", "1,1,1", "--sigma-max", "100", "--method", "quasi"]);
    let text = stdout(&o);
    let rows = text.lines().count() - 1;
    let c = steklov::Cuboid::cube(3, 1.0).unwrap();
    assert_eq!(rows as u64, steklov::quasi::count_total(&c, 100.0));
}

#[test]
fn spectrum_json_mirrors_csv() {
    let v = json(&["spectrum", "--dims", "1,1", "--sigma-max", "2", "--format", "json"]);
    let rows = v.as_array().unwrap();
    let keys: Vec<&str> = rows[1].as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for k in ["sigma", "method", "p", "tau_mask", "box", "ell_tau2_mask", "multiplicity"] {
        assert!(keys.contains(&k), "{k}");
    }
}

#[test]
fn cube_weyl_table() {
    let o = steklov(&["weyl", "--dims", "1,1,1", "--sigma-min", "50", "--sigma-max", "300", "--step", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["sigma", "N", "main", "second", "R"]);
    let r: Vec<f64> = rdr.records().map(|x| x.unwrap()[4].parse().unwrap()).collect();
    assert_eq!(r.len(), 501);
    assert!(r.iter().all(|v| v.abs() <= 3.0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max |R|"));
}

#[test]
fn square_weyl_table() {
    let o = steklov(&["weyl", "--dims", "1,1", "--sigma-min", "1", "--sigma-max", "50", "--step", "1"]);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["sigma", "N", "main", "R"]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let s: f64 = rec[0].parse().unwrap();
        let main: f64 = rec[2].parse().unwrap();
        assert!((main - 8.0 / std::f64::consts::PI * s).abs() < 1e-12 * s);
    }
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let o = steklov(&[
        "weyl", "--dims", "1,1,1", "--sigma-min", "10", "--sigma-max", "5", "-o", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(path).unwrap(), "sigma,N,main,second,R\n");
}

#[test]
fn constants_dim3() {
    let v = json(&["constants", "--dim", "3"]);
    assert!((v["C1"].as_f64().unwrap() - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!((v["C2"].as_f64().unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
}

#[test]
fn invert_square() {
    let v = json(&["invert-rectangle", "--perimeter", "2", "--sigma1", "0.6882527423362763"]);
    assert!((v["a1"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["a2"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn isoperimetric_single_and_sweep() {
    let v = json(&["isoperimetric", "--dims", "0.5,2", "--constraint", "volume"]);
    assert!(v["margin"].as_f64().unwrap() > 0.0);
    let args = ["isoperimetric", "--random", "10", "--dim", "3", "--seed", "9", "--constraint", "area"];
    let a = steklov(&args);
    let b = steklov(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["violations"].as_u64(), Some(0));
    let other = steklov(&["isoperimetric", "--random", "10", "--dim", "3", "--seed", "10", "--constraint", "area"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn concentration_edge() {
    let v = json(&[
        "concentration", "--dims", "1,1,1", "--trig", "0", "--patch=-0.5:0.5", "--eps", "0.05", "--k-max", "20",
    ]);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 20);
    let last = &reports[19];
    assert_eq!(last["target_ratio"].as_f64(), Some(0.125));
    assert!((last["mass_in_u_eps"].as_f64().unwrap() - 0.125).abs() < 0.02);
}

#[test]
fn output_independent_of_thread_count() {
    let args = ["spectrum", "--dims", "0.7,1,1.3", "--sigma-max", "12", "--method", "exact"];
    let run = |t: &str| {
        Command::new(env!("CARGO_BIN_EXE_steklov"))
            .args(args)
            .env("THREADS", t)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let w = |t: &str| {
        Command::new(env!("CARGO_BIN_EXE_steklov"))
            .args(["weyl", "--dims", "1,1.2,0.8", "--sigma-min", "5", "--sigma-max", "40"])
            .env("THREADS", t)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(w("1"), w("3"));
    let bad = Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .env("THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn file_output_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let args = ["spectrum", "--dims", "1,2", "--sigma-max", "6"];
    let direct = steklov(&args);
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    assert!(steklov(&with_file).status.success());
    assert_eq!(std::fs::read(path).unwrap(), direct.stdout);
}
