use aeroflight::aero::write_coeffs;
use aeroflight::dataset::default_ground_truth;
use aeroflight::model::default_model_text;
use aeroflight::sim::{load_scenario, run_scenario};
use std::path::Path;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn matrix() {
    let slow_wind = "wind=0:0,0,0;5:5,0,0;30:5,0,0;35:0,5,0;60:0,5,0\n";
    for (jw, kia) in [(100.0, 27.0), (100.0, 60.0), (200.0, 27.0), (200.0, 60.0), (400.0, 27.0)] {
        for (label, plant, ctrl) in [
            ("aware  ", "axisym", "axisym"),
            ("baselin", "axisym", "none"),
            ("no-wind", "none", "none"),
        ] {
            let dir = tempfile::tempdir().unwrap();
            write(dir.path(), "robot.model", default_model_text());
            let gains = format!(
                "kp_lin=27\nkd_lin=9\nki_lin=27\nkp_ang=27\nkd_ang=9\nki_ang={kia}\nkps=100\nkds=20\nkp_post=1.0\nw1=1.0\nw2=0.5\nmu=1e-4\njoint_weight={jw}\naero_feedback={ctrl}\n"
            );
            write(dir.path(), "gains.cfg", &gains);
            write(dir.path(), "truth.coeffs", &write_coeffs(&default_ground_truth()));
            let wind = if label == "no-wind" { "wind=0:0,0,0\n" } else { slow_wind };
            let scen = write(
                dir.path(),
                "test.scn",
                &format!("model=robot.model\ngains=gains.cfg\ncoeffs=truth.coeffs\nplant_aero={plant}\nenvelope=standard\n{wind}"),
            );
            let loaded = load_scenario(&scen).unwrap();
            let log = run_scenario(&loaded).unwrap();
            eprintln!("jw={jw:4} kia={kia:3} {label} -> {}", log.verdict_line());
        }
    }
}
