use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaingroups")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn reduce_and_order() {
    let o = run(&["reduce", &fixture("z.lrs"), "-w", "a A a"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("normal_form: a\n"));

    let o = run(&["order", &fixture("z2z3.lrs"), "-w", "t b"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("order: infinite\n"));

    let o = run(&["order", &fixture("z2z3.lrs"), "-w", "b"]);
    assert!(stdout(&o).contains("order: 3\n"));

    let o = run(&["wp", &fixture("z2z3.lrs"), "b b", "B"]);
    assert!(stdout(&o).contains("equal: yes\n"));
}

#[test]
fn ball_rank_subgroups() {
    let o = run(&["ball", &fixture("z2z3.lrs"), "-r", "3"]);
    assert!(stdout(&o).contains("size: 14\n"));
    let o = run(&["rank", &fixture("f2.lrs")]);
    assert!(stdout(&o).contains("rank: 2\n"));
    let o = run(&["subgroups", &fixture("z2z3.lrs")]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("classes: 2\n"));
    assert_eq!(out.lines().filter(|l| l.starts_with("class: ")).count(), 2);
}

#[test]
fn check_no_instance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (z6, s3) = (dir.path().join("z6.lrs"), dir.path().join("s3.lrs"));
    assert_eq!(code(&run(&["gen", &fixture("z6.fp"), "-o", z6.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["gen", &fixture("s3.fp"), "-o", s3.to_str().unwrap()])), 0);
    let o = run(&["check", z6.to_str().unwrap(), s3.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("isomorphic: no\n"));
    assert!(out.contains("violated: condition4\n"));

    let o = run(&["check", &fixture("z.lrs"), &fixture("f2.lrs")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violated: condition5\n"));
}

#[test]
fn certificate_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.cert");
    let (g, h) = (fixture("z2z3.lrs"), fixture("z3z2.lrs"));
    let o = run(&["check", &g, &h, "--emit-cert", cert.to_str().unwrap(), "--transcripts", "5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("isomorphic: yes\n"));

    let o = run(&["verify", &g, &h, "--cert", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("verdict: accepted").count(), 5);

    // u = b cannot be conjugated into a factor by t
    let challenge = dir.path().join("y.txt");
    let response = dir.path().join("z.txt");
    fs::write(&challenge, "u: b\nv:\ns:\ns':\n[slp 1]\nrank 1\nG 1\n[slp 2]\nrank 1\nG 1\n").unwrap();
    fs::write(&response, "t: t\nt':\n[slp Z1]\nrank 1\nG 1\n[slp Z2]\nrank 1\nE\n").unwrap();
    let args = |y: &PathBuf, z: &PathBuf| {
        run(&["verify", &g, &h, "--cert", cert.to_str().unwrap(), "--challenge", y.to_str().unwrap(), "--response", z.to_str().unwrap()])
    };
    let o = args(&challenge, &response);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("verdict: rejected at conjugate_into\n"));

    // the honest conjugator is trivial here
    fs::write(&response, "t:\nt':\n[slp Z1]\nrank 1\nG 1\n[slp Z2]\nrank 1\nE\n").unwrap();
    let o = args(&challenge, &response);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    // |s| over the cap 5 r_T + 4 = 9 is a malformed challenge, not a rejection
    let long = dir.path().join("long.txt");
    fs::write(&long, format!("u:\nv:\ns: {}\ns':\n[slp 1]\nrank 1\nE\n[slp 2]\nrank 1\nE\n", ["b t"; 5].join(" "))).unwrap();
    let o = args(&long, &response);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("malformed challenge"));

    // syntax errors in any file
    fs::write(&long, "u: x\n").unwrap();
    assert_eq!(code(&args(&long, &response)), 2);
    let bad_cert = dir.path().join("bad.cert");
    fs::write(&bad_cert, "[exist]\np two\n").unwrap();
    assert_eq!(code(&run(&["verify", &g, &h, "--cert", bad_cert.to_str().unwrap()])), 2);
}

#[test]
fn plainness_violations_exit_three() {
    for f in ["nonconfluent_overlap.lrs", "nonconfluent_cube.lrs", "not_inverse_closed.lrs"] {
        let o = run(&["validate", &fixture(f)]);
        assert_eq!(code(&o), 3, "{f}");
        assert!(stdout(&o).contains("valid: no\n"));
        assert_eq!(code(&run(&["check", &fixture(f), &fixture("z.lrs")])), 3);
    }
    let o = run(&["validate", &fixture("z2z3.lrs")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("valid: yes\n"));
}

#[test]
fn malformed_input_exits_two() {
    assert_eq!(code(&run(&["validate", &fixture("syntax_error.lrs")])), 2);
    assert_eq!(code(&run(&["reduce", &fixture("missing.lrs"), "-w", "a"])), 2);
    assert_eq!(code(&run(&["reduce", &fixture("z.lrs"), "-w", "q"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.lrs");
    assert_eq!(code(&run(&["gen", &fixture("not_a_group.fp"), "-o", out.to_str().unwrap()])), 2);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["reduce", &fixture("z.lrs")])), 64);
    assert_eq!(code(&run(&["ball", &fixture("z.lrs"), "-r", "x"])), 64);
    assert_eq!(code(&run(&["selftest", "--cases", "0"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn json_output() {
    let o = run(&["--json", "check", &fixture("z2z3.lrs"), &fixture("z3z2.lrs")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["isomorphic"], serde_json::Value::Bool(true));
    assert_eq!(v["p"], 2);
    let o = run(&["order", &fixture("z2z3.lrs"), "-w", "b", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["order"], 3);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = run(&["selftest", "--cases", "6", "--seed", "11"]);
    let b = run(&["selftest", "--cases", "6", "--seed", "11"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("seed: 11\n"));

    let dir = tempfile::tempdir().unwrap();
    let (c1, c2) = (dir.path().join("1.cert"), dir.path().join("2.cert"));
    for c in [&c1, &c2] {
        run(&["check", &fixture("z2z3.lrs"), &fixture("z3z2.lrs"), "--emit-cert", c.to_str().unwrap(), "--seed", "4"]);
    }
    assert_eq!(fs::read(&c1).unwrap(), fs::read(&c2).unwrap());
}
