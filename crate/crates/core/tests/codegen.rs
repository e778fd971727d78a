use mlang::codegen::{self, emit_trace_schema, GenError, GenOptions};
use mlang::runtime::trace::TRACE_SCHEMA_VERSION;
use mlang::runtime::{run, RunConfig};
use mlang::semantics::Model;
use mlang::syntax::LoadOptions;
use rust_decimal::Decimal;
use std::path::PathBuf;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn model(name: &str) -> Model {
    let c = mlang::compile_file(&corpus(name), &LoadOptions::default()).unwrap();
    assert!(!c.has_errors(), "{}", c.render_diagnostics());
    c.model.unwrap()
}

fn rebeca(m: &Model) -> String {
    codegen::generate("rebeca", m, &GenOptions::default()).unwrap().text
}

#[test]
fn ball_matches_golden_rebeca() {
    let golden = std::fs::read_to_string(corpus("ball.rebeca")).unwrap();
    assert_eq!(rebeca(&model("ball.m")), golden);
}

#[test]
fn generation_is_idempotent() {
    let m = model("ball.m");
    assert_eq!(rebeca(&m), rebeca(&model("ball.m")));
    assert_eq!(rebeca(&m), rebeca(&m));
}

#[test]
fn ball_rebeca_has_the_expected_pieces() {
    let text = rebeca(&model("ball.m"));
    for needle in [
        "env int SIM_TIME_UNIT = 1000;",
        "reactiveclass Ball(2)",
        "int y_;",
        "int initY_;",
        "initY_ = y_;",
        "msgsrv update()",
        "self.update() after(period);",
        "return (double)(period)/(double)SIM_TIME_UNIT;",
        "Ball b():(initY, 0.0);",
        "reality: G(above||onground);",
    ] {
        assert!(text.contains(needle), "missing `{needle}` in\n{text}");
    }
}

#[test]
fn scale_option_changes_discretization() {
    let m = model("ball.m");
    let text = codegen::generate("rebeca", &m, &GenOptions { scale: 1000 }).unwrap().text;
    assert!(text.contains("1000.0"));
    assert!(!text.contains("100000"));
}

#[test]
fn conditional_responses_are_reported_unsupported() {
    match codegen::generate("rebeca", &model("watertank.m"), &GenOptions::default()) {
        Err(GenError::Unsupported(list)) => {
            let on: Vec<_> = list.iter().filter(|u| u.construct == "do[on]").collect();
            assert_eq!(on.len(), 2, "{list:?}");
            assert!(on.iter().all(|u| u.span.line > 0));
        }
        other => panic!("expected unsupported features, got {other:?}"),
    }
}

#[test]
fn unknown_generator_is_rejected() {
    let e = codegen::generate("nosuch", &model("ball.m"), &GenOptions::default()).unwrap_err();
    assert!(matches!(e, GenError::UnknownGenerator { .. }));
}

#[test]
fn report_lists_mapped_constructs() {
    let a = codegen::generate("rebeca", &model("ball.m"), &GenOptions::default()).unwrap();
    assert_eq!(a.report.generator, "rebeca");
    assert!(!a.report.mapped.is_empty());
    let json: serde_json::Value = serde_json::from_str(&a.report.to_json()).unwrap();
    assert!(json["mapped"].is_array());
}

#[test]
fn trace_schema_accepts_runtime_traces() {
    let schema = emit_trace_schema();
    assert_eq!(schema["version"], TRACE_SCHEMA_VERSION);
    let validator = jsonschema::validator_for(&schema).unwrap();
    for name in ["coffeemachine.m", "watertank.m", "talker.m", "ball.m"] {
        let r = run(
            &model(name),
            RunConfig {
                max_time_ms: Some(Decimal::from(20_000)),
                ..RunConfig::default()
            },
        );
        let text = r.trace_jsonl();
        let mut lines = text.lines();
        let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header["schema"], schema["version"]);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(validator.is_valid(&v), "{name}: {line}");
        }
    }
}

#[test]
fn trace_schema_rejects_malformed_lines() {
    let validator = jsonschema::validator_for(&emit_trace_schema()).unwrap();
    let good = serde_json::json!({"t":"0","actor":0,"ev":"x","kind":"external","action":"dispatch","payload":{},"deltas":[]});
    assert!(validator.is_valid(&good));
    let mut no_t = good.clone();
    no_t.as_object_mut().unwrap().remove("t");
    assert!(!validator.is_valid(&no_t));
    let mut bad_kind = good.clone();
    bad_kind["kind"] = "sometimes".into();
    assert!(!validator.is_valid(&bad_kind));
    let mut float_time = good;
    float_time["t"] = 1.5.into();
    assert!(!validator.is_valid(&float_time));
}
