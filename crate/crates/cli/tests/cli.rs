use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn mlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlc"))
        .args(args)
        .env_remove("M_INCLUDE_PATH")
        .output()
        .expect("mlc runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_the_corpus() {
    let paths: Vec<PathBuf> = ["watertank.m", "talker.m", "coffeemachine.m", "bicycle.m", "trafficlight.m", "ball.m"]
        .iter()
        .map(|n| corpus(n))
        .collect();
    let mut args = vec!["check"];
    args.extend(paths.iter().map(|p| arg(p)));
    let out = mlc(&args);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).matches(": ok").count(), 6);
}

#[test]
fn check_reports_rule_named_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.m");
    std::fs::write(&bad, "main { var x:int = 1 + true; }\n").unwrap();
    let out = mlc(&["check", arg(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("error") && stdout.contains("bad.m:1:") && stdout.contains("binary-arith1"), "{stdout}");
}

#[test]
fn check_without_files_is_a_usage_error() {
    let out = mlc(&["check"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = mlc(&["--help"]);
    assert!(out.status.success());
    assert!(text(&out.stdout).contains("run"));
}

#[test]
fn run_prints_summary() {
    let out = mlc(&["run", arg(&corpus("coffeemachine.m"))]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(
        text(&out.stdout).contains("dispatched 35 events, final time 7900.000000003, stop reason queue-empty"),
        "{}",
        text(&out.stdout)
    );
}

#[test]
fn run_writes_identical_traces_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for p in [&a, &b] {
        let out = mlc(&["run", arg(&corpus("talker.m")), "--seed", "3", "--max-time", "10s", "--trace", arg(p)]);
        assert!(out.status.success(), "{}", text(&out.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let header: serde_json::Value = serde_json::from_str(text(&ta).lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 3);
}

#[test]
fn trace_to_stdout_keeps_summary_off_stdout() {
    let out = mlc(&["run", arg(&corpus("ball.m")), "--max-time", "1s", "--trace", "-"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for line in stdout.lines() {
        serde_json::from_str::<serde_json::Value>(line).expect("each stdout line is JSON");
    }
    assert!(text(&out.stderr).contains("stop reason max-time"));
}

#[test]
fn run_rejects_bad_flags() {
    let model = corpus("ball.m");
    assert_eq!(mlc(&["run", arg(&model), "--max-events", "0"]).status.code(), Some(1));
    assert_eq!(mlc(&["run", arg(&model), "--epsilon", "-1"]).status.code(), Some(1));
    assert_eq!(mlc(&["run", arg(&model), "--max-time", "soon"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("neg.m");
    std::fs::write(&m, "def A class[actor] { do initialize { self!b with(after:0ms - 1ms); } do b { } };\nmain { var a:actor = A(); }\n").unwrap();
    let out = mlc(&["run", arg(&m)]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("runtime-error"));
}

#[test]
fn gen_rebeca_writes_artifact_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ball.rebeca");
    let out = mlc(&["gen", arg(&corpus("ball.m")), "rebeca", "--out", arg(&out_path)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let golden = std::fs::read_to_string(corpus("ball.rebeca")).unwrap();
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), golden);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("ball.report.json")).unwrap()).unwrap();
    assert_eq!(report["generator"], "rebeca");
}

#[test]
fn gen_reports_unsupported_features() {
    let out = mlc(&["gen", arg(&corpus("watertank.m")), "rebeca"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert_eq!(stderr.matches("unsupported-feature do[on]").count(), 2, "{stderr}");
    assert!(out.stdout.is_empty());
}

#[test]
fn gen_unknown_generator_lists_the_registry() {
    let out = mlc(&["gen", arg(&corpus("ball.m")), "nosuch"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("rebeca") && stderr.contains("trace-schema"), "{stderr}");
}

#[test]
fn gen_trace_schema_is_json() {
    let out = mlc(&["gen", arg(&corpus("ball.m")), "trace-schema"]);
    assert!(out.status.success());
    let schema: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["version"], "m-trace/1");
}

#[test]
fn init_creates_a_runnable_project() {
    let dir = tempfile::tempdir().unwrap();
    let proj = dir.path().join("proj");
    let out = mlc(&["init", arg(&proj)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(proj.join("mcore.m").exists());
    let run = mlc(&["run", arg(&proj.join("model.m"))]);
    assert!(run.status.success(), "{}", text(&run.stderr));
    assert!(text(&run.stdout).contains("stop reason terminate-called"));
    assert_eq!(mlc(&["init", arg(&proj)]).status.code(), Some(1), "refuses to overwrite");
}

#[test]
fn include_paths_resolve_from_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib");
    std::fs::create_dir(&lib).unwrap();
    std::fs::write(lib.join("defs.m"), "const LIMIT:int = 3;\n").unwrap();
    let m = dir.path().join("use.m");
    std::fs::write(&m, "include \"defs.m\";\nmain { var x:int = LIMIT; }\n").unwrap();
    assert_eq!(mlc(&["check", arg(&m)]).status.code(), Some(1));
    assert!(mlc(&["check", "-I", arg(&lib), arg(&m)]).status.success());
    let via_env = Command::new(env!("CARGO_BIN_EXE_mlc"))
        .args(["check", arg(&m)])
        .env("M_INCLUDE_PATH", &lib)
        .output()
        .unwrap();
    assert!(via_env.status.success(), "{}", text(&via_env.stdout));
}
