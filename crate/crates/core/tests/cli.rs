use std::path::Path;
use std::process::{Command, Output};

fn conic_admm(args: &[&str], records_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conic-admm"));
    cmd.args(args).env_remove("CONIC_ADMM_OUT_DIR");
    if let Some(d) = records_dir {
        cmd.env("CONIC_ADMM_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_generated_instance() {
    let o = conic_admm(&["solve", "--generate", "biq:n=11,seed=7"], None);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let out = stdout(&o);
    assert!(
        out.contains("solver=admm3c") && out.contains("status=converged"),
        "{out}"
    );
}

#[test]
fn loose_tolerance_and_iteration_cap() {
    let o = conic_admm(
        &[
            "solve",
            "--generate",
            "theta:n=12,p=0.3,seed=2",
            "--tol",
            "1e-1",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let o = conic_admm(
        &[
            "solve",
            "--generate",
            "theta:n=12,p=0.3,seed=2",
            "--max-iters",
            "3",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(stdout(&o).contains("status=max_iters"));
}

#[test]
fn input_errors_exit_one() {
    let cases: [&[&str]; 5] = [
        &[
            "solve",
            "--generate",
            "biq:n=11,seed=7",
            "--solver",
            "spadmm4d_1618",
        ],
        &["solve", "--generate", "nosuch:n=3"],
        &["solve", "--problem", "/nonexistent/file.dat-s"],
        &["solve", "--generate", "biq:n=5,seed=1", "--tol", "-1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = conic_admm(args, None);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn parse_errors_name_file_and_line() {
    let fixture = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/unknown_kind.native"
    );
    let o = conic_admm(&["solve", "--problem", fixture], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("unknown_kind.native:11") && err.contains("POSITIVE"),
        "{err}"
    );
}

#[test]
fn generate_solve_profile_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let problem = d.join("rcp.dat-s");
    let o = conic_admm(
        &[
            "generate",
            "rcp:n=10,k=2,seed=3,dim=2",
            "--out",
            problem.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    for solver in ["admm3c", "admm3d_1"] {
        let o = conic_admm(
            &[
                "solve",
                "--problem",
                problem.to_str().unwrap(),
                "--solver",
                solver,
            ],
            Some(d),
        );
        assert_eq!(o.status.code(), Some(0), "{solver}: {o:?}");
    }
    let records = d.join("runs.csv");
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");

    let profile = d.join("profile.csv");
    let o = conic_admm(
        &[
            "profile",
            "--records",
            records.to_str().unwrap(),
            "--out",
            profile.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = std::fs::read_to_string(&profile).unwrap();
    assert_eq!(text.lines().next(), Some("x,y_admm3c,y_admm3d_1"));
}
