use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn ocm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cos = data("cos.txt");
    let o = ocm(&["solve", "--problem", cos.to_str().unwrap(), "--eps", "0.1", "--side", "lower", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("certificate ok"));
    let sol = std::fs::read_to_string(dir.path().join("solution.txt")).unwrap();
    assert!(sol.contains("side lower"));
    let cert = std::fs::read_to_string(dir.path().join("certificate.txt")).unwrap();
    assert!(cert.contains("status ok"));
}

#[test]
fn verify_flags_a_tampered_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cos = data("cos.txt");
    let o = ocm(&["solve", "--problem", cos.to_str().unwrap(), "--eps", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("solution.txt");
    let good = ocm(&["verify", "--problem", cos.to_str().unwrap(), "--solution", path.to_str().unwrap()]);
    assert_eq!(good.status.code(), Some(0));

    // shift the slope coefficient of the first box by +1
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let i = lines.iter().position(|l| l.starts_with("box ")).unwrap();
    let mut toks: Vec<String> = lines[i].split_whitespace().map(str::to_string).collect();
    // box lo hi delta degree center c0 c1 rmin rmax
    let c1: f64 = toks[7].parse().unwrap();
    toks[7] = format!("{:?}", c1 + 1.0);
    lines[i] = toks.join(" ");
    std::fs::write(&path, lines.join("\n")).unwrap();

    let bad = ocm(&["verify", "--problem", cos.to_str().unwrap(), "--solution", path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    let s = stdout(&bad);
    assert!(s.contains("violation box 0 at"), "{s}");
    assert!(s.contains("certificate violated"));
}

#[test]
fn macneille_antichain_has_four_cuts() {
    let o = ocm(&["macneille", "--poset", data("antichain2.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("elements 2 cuts 4\n"));
    let o = ocm(&["macneille", "--poset", data("chain3.txt").to_str().unwrap()]);
    assert!(stdout(&o).starts_with("elements 3 cuts 3\n"));
}

#[test]
fn check23_exit_codes() {
    let zero = ocm(&["check23", "--problem", data("square_zero.txt").to_str().unwrap()]);
    assert_eq!(zero.status.code(), Some(2));
    assert!(stdout(&zero).contains("points 9 failed 9"));
    let one = ocm(&["check23", "--problem", data("square_one.txt").to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0));
    assert!(stdout(&one).contains("points 9 failed 0"));
}

#[test]
fn baire_reports_the_jump() {
    let dir = tempfile::tempdir().unwrap();
    let o = ocm(&["baire", "--grid", data("heaviside.txt").to_str().unwrap(), "--eps-list", "1,0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("h_continuous true"));
    assert!(s.contains("eps 1.0 nodes 1 nowhere_dense true closed true"));
    let completion = std::fs::read_to_string(dir.path().join("completion.txt")).unwrap();
    assert!(completion.contains("0.0 1.0 0"));
}

#[test]
fn refine_is_deterministic() {
    let cos = data("cos.txt");
    let args = ["refine", "--problem", cos.to_str().unwrap(), "--eps0", "0.4", "--levels", "3"];
    let a = ocm(&args);
    let b = ocm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    assert!(s.starts_with("level,side,eps,boxes,min_residual,max_residual,assimilated_max_width\n"));
    assert_eq!(s.lines().count(), 7);
}

#[test]
fn usage_and_parse_errors_exit_one() {
    assert_eq!(ocm(&["solve", "--problem", "x.txt"]).status.code(), Some(1));
    assert_eq!(ocm(&["transmogrify"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    std::fs::write(&p, "dimension = 1\norder = 1\nlower = 0\nupper = 1\nF = xi_1 +\nf = 0\n").unwrap();
    let o = ocm(&["solve", "--problem", p.to_str().unwrap(), "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5, column"), "{err}");
    assert_eq!(ocm(&["solve", "--problem", data("cos.txt").to_str().unwrap(), "--eps", "1e-12"]).status.code(), Some(1));
    assert_eq!(ocm(&["--help"]).status.code(), Some(0));
}
