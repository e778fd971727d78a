use mlang::syntax::LoadOptions;
use std::path::PathBuf;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

#[test]
fn corpus_models_check_cleanly() {
    for name in ["watertank.m", "talker.m", "coffeemachine.m", "bicycle.m", "trafficlight.m", "ball.m"] {
        let c = mlang::compile_file(&corpus(name), &LoadOptions::default()).unwrap();
        assert!(!c.has_errors(), "{name}:\n{}", c.render_diagnostics());
        assert!(c.model.is_some());
    }
}
