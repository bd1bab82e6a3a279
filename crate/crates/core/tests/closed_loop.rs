//! Closed-loop scenario integration tests.

use aeroflight::control::default_gains_text;
use aeroflight::model::default_model_text;
use aeroflight::sim::{load_scenario, run_scenario};
use std::path::Path;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn hover_without_wind_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "robot.model", default_model_text());
    write(dir.path(), "gains.cfg", default_gains_text());
    let scen = write(
        dir.path(),
        "hover.scn",
        "model=robot.model\ngains=gains.cfg\nenvelope=hover\nduration=5\n",
    );
    let loaded = load_scenario(&scen).unwrap();
    let log = run_scenario(&loaded).unwrap();
    eprintln!("hover 5s: {}", log.verdict_line());
    assert!(log.completed(), "{:?}", log.termination);
    assert!(log.max_com_err < 0.05, "max com err {}", log.max_com_err);
}
