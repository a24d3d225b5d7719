use std::io::Cursor;

use clap::Parser;
use infinitary::cli::{run, Cli};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn invoke(args: &[&str], stdin: &str) -> Outcome {
    let cli = Cli::try_parse_from(std::iter::once("infinitary").chain(args.iter().copied())).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(cli, &mut Cursor::new(stdin.as_bytes().to_vec()), &mut out, &mut err);
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn temp_file(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join(format!("infinitary-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_prints_a_cyclic_graph() {
    let o = invoke(&["solve", "v0 := or[v0, v0]"], "");
    assert_eq!(o.code, 0);
    assert_eq!(o.out.trim(), "node n0 = or(0->n0, 1->n0); root n0");
}

#[test]
fn negate_and_subst() {
    assert_eq!(invoke(&["negate", "or[v0, ~v1]"], "").out.trim(), "and[~v0, v1]");
    let o = invoke(&["subst", "or[v0, ~v0]", "and[v1]", "v0"], "");
    assert_eq!(o.code, 0);
    assert_eq!(o.out.trim(), "or[and[v1], or[~v1]]");
    assert_eq!(invoke(&["subst", "v0", "v1", "~v0"], "").code, 2);
}

#[test]
fn interact_closes_on_an_axiom() {
    let o = invoke(&["interact", "node a = ax(v0,0,1); root a", "or[v0, ~v0]"], "");
    assert_eq!(o.code, 0, "{}", o.err);
    assert!(o.out.starts_with("ClosedNoError"), "{}", o.out);
}

#[test]
fn interact_reports_errors_with_exit_one() {
    let o = invoke(&["interact", "node a = ax(v0,1,0); root a", "or[v0, ~v0]"], "");
    assert_eq!(o.code, 1);
    assert!(o.out.starts_with("ErrorAt 0\n"), "{}", o.out);
}

#[test]
fn interact_kv_is_json() {
    let o = invoke(
        &[
            "interact",
            "--format",
            "kv",
            "node a = ax(v0,0,1); root a",
            "or[v0, ~v0]",
        ],
        "",
    );
    let doc: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    assert_eq!(doc["truncated"], false);
    assert!(doc["records"].as_array().is_some_and(|r| !r.is_empty()));
}

#[test]
fn check_flags_a_bad_root() {
    let path = temp_file("bad.deriv", "sequent or[v0, ~v0]\nnode s = ax(v0,1,0); root s\n");
    let o = invoke(&["check", &path], "");
    assert_eq!(o.code, 1);
    assert!(o.out.starts_with("Violation at ε"), "{}", o.out);
    let good = temp_file("good.deriv", "sequent or[v0, ~v0]\nnode s = ax(v0,0,1); root s\n");
    let o = invoke(&["check", &good], "");
    assert_eq!((o.code, o.out.trim()), (0, "ValidClosed"));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let path = temp_file("broken.deriv", "sequent or[v0]\nnode s = frob(0->s);\n");
    let o = invoke(&["check", &path], "");
    assert_eq!(o.code, 2);
    assert!(o.err.contains(":2:"), "{}", o.err);
    assert_eq!(invoke(&["check", "/nonexistent/file.deriv"], "").code, 2);
}

#[test]
fn repl_plays_a_session() {
    let o = invoke(&["repl", "or[v0, ~v0]"], "bogus\nax(v0,0,1)\n");
    assert_eq!(o.code, 0);
    assert!(o.out.contains("try again"), "{}", o.out);
    assert!(o.out.contains("Proponent wins"), "{}", o.out);
    let o = invoke(&["repl", "or[v0, ~v0]"], "");
    assert!(o.out.contains("aborted"), "{}", o.out);
}

#[test]
fn export_formats() {
    let o = invoke(&["export", "or[v0, v0]"], "");
    assert!(o.out.starts_with("digraph"), "{}", o.out);
    let path = temp_file("u.deriv", "sequent or[v0]\nnode s = ax(v0,0,0); root s\n");
    let o = invoke(&["export", "--format", "kv", &path], "");
    let doc: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    assert!(doc["sequent"].is_string());
}
