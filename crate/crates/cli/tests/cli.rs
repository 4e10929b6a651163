use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn meyer(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meyer"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MEYER_OUT")
        .output()
        .unwrap()
}

/// The report written by a run; its path is the single stdout line.
fn report(o: &Output) -> Value {
    let path = String::from_utf8(o.stdout.clone()).unwrap();
    serde_json::from_str(&std::fs::read_to_string(path.trim()).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn untied_image_of_fibonacci_is_meyer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-untied.toml");
    let o = meyer(dir.path(), &["thm2-suite", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["result"]["classification"], "untied");
    assert_eq!(r["result"]["image"]["trend"]["verdict"], "meyer-consistent");
    assert_eq!(r["result"]["source"]["trend"]["verdict"], "meyer-consistent");
    assert_eq!(r["result"]["image"]["records"].as_array().unwrap().len(), 3);
    assert_eq!(r["vanhove_radii"], serde_json::json!([1000.0, 10000.0]));
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn substitution_set_fails_certification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("substitution.toml");
    let o = meyer(
        dir.path(),
        &["certify", "-c", cfg.to_str().unwrap(), "--param", "generator.levels=[6, 7, 8, 9, 10]"],
    );
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["passed"], false);
    assert_eq!(r["result"]["trend"]["verdict"], "failed-lagarias-trend");
    let records = r["result"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 5);
    for key in ["scale", "packing_radius", "covering_radius", "flc_census_size", "s_size", "verdict"] {
        assert!(records[0].get(key).is_some(), "{key}");
    }
    let tsv = std::fs::read_to_string(
        Path::new(String::from_utf8(o.stdout).unwrap().trim()).with_file_name("certify.tsv"),
    )
    .unwrap();
    assert_eq!(tsv.lines().count(), 6);
}

#[test]
fn star_map_is_tied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-star.toml");
    let o = meyer(dir.path(), &["fit", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["result"]["tied"], true);
    assert!(r["result"]["det_F"].as_f64().unwrap().abs() < 1e-3);
    assert!(r["result"]["residual_sup"].as_f64().unwrap() <= 1.0 + 1e-6);
    assert!(r["result"]["F"].is_array());
    assert_eq!(r["result"]["injective_on_patch"], true);
    // tied maps are skipped, not failed
    let o = meyer(dir.path(), &["thm2-suite", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(&o)["result"]["status"], "tied map, claim skipped");
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[generator]\nkind = \"fibonacci\"\nscales = [10.0]\nwindow = 3\n").unwrap();
    let o = meyer(dir.path(), &["fit", "-c", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));

    std::fs::write(&bad, "[generator]\nkind = \"file\"\npath = \"missing.pts\"\n").unwrap();
    assert_eq!(code(&meyer(dir.path(), &["certify", "-c", bad.to_str().unwrap()])), 2);

    std::fs::write(&bad, "[generator]\nkind = \"fibonacci\"\nscales = [10.0]\n[hom]\nkind = \"warp\"\n").unwrap();
    assert_eq!(code(&meyer(dir.path(), &["fit", "-c", bad.to_str().unwrap()])), 2);

    // a hom whose rank does not match the set
    let cfg = config("fibonacci-untied.toml");
    let o = meyer(
        dir.path(),
        &["fit", "-c", cfg.to_str().unwrap(), "--param", "hom.images=[[\"1\"]]"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-untied.toml");
    let args = ["diffract", "-c", cfg.to_str().unwrap(), "--vanhove", "100,1000"];
    let oa = meyer(a.path(), &args);
    let ob = meyer(b.path(), &args);
    assert_eq!(code(&oa), 0);
    let pa = String::from_utf8(oa.stdout).unwrap();
    let pb = String::from_utf8(ob.stdout).unwrap();
    assert_ne!(pa, pb);
    for name in ["report.json", "spectrum.tsv", "peaks.tsv", "autocorr.tsv", "config.toml"] {
        let x = std::fs::read(Path::new(pa.trim()).with_file_name(name)).unwrap();
        let y = std::fs::read(Path::new(pb.trim()).with_file_name(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn output_root_precedence() {
    let env_root = tempfile::tempdir().unwrap();
    let flag_root = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-star.toml");
    let run = |extra: &[&Path]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_meyer"));
        c.args(["fit", "-c", cfg.to_str().unwrap()]).env("MEYER_OUT", env_root.path());
        for p in extra {
            c.arg("--out").arg(p);
        }
        c.output().unwrap()
    };
    let o = run(&[]);
    assert_eq!(code(&o), 0);
    let path = PathBuf::from(String::from_utf8(o.stdout).unwrap().trim());
    assert!(path.starts_with(env_root.path().join("fit")));
    assert!(path.ends_with("report.json"));
    let o = run(&[flag_root.path()]);
    let path = PathBuf::from(String::from_utf8(o.stdout).unwrap().trim());
    assert!(path.starts_with(flag_root.path()));
}

#[test]
fn generated_patch_round_trips_through_file_generator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-untied.toml");
    let o = meyer(dir.path(), &["generate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let entries = r["result"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[0]["span_rank"], 2);
    let top = Path::new(String::from_utf8(o.stdout).unwrap().trim())
        .with_file_name(entries[2]["file"].as_str().unwrap());
    let file_cfg = dir.path().join("file.toml");
    std::fs::write(
        &file_cfg,
        format!("[generator]\nkind = \"file\"\npath = {:?}\n", top.to_str().unwrap()),
    )
    .unwrap();
    let o = meyer(dir.path(), &["generate", "-c", file_cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let again = report(&o);
    assert_eq!(again["result"][0]["points"], entries[2]["points"]);
}

#[test]
fn deformed_diffraction_has_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-untied.toml");
    let base = ["diffract", "-c", cfg.to_str().unwrap(), "--vanhove", "100,1000"];
    let plain = meyer(dir.path(), &base);
    let mut args = base.to_vec();
    args.push("--deformed");
    let deformed = meyer(dir.path(), &args);
    assert_eq!(code(&deformed), 0);
    assert_ne!(plain.stdout, deformed.stdout);
    let (p, d) = (report(&plain), report(&deformed));
    let dp = p["result"]["density"]["value"].as_f64().unwrap();
    let dd = d["result"]["density"]["value"].as_f64().unwrap();
    // dens(f(M)) |det F| = dens(M), det F ≈ 1.7958
    assert!((dd * 1.795842 / dp - 1.0).abs() < 0.02, "{dp} {dd}");
}

#[test]
fn set_flag_reads_a_point_set_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("substitution.toml");
    let o = meyer(dir.path(), &["generate", "-c", cfg.to_str().unwrap()]);
    let r = report(&o);
    let pts = Path::new(String::from_utf8(o.stdout).unwrap().trim())
        .with_file_name(r["result"][0]["file"].as_str().unwrap());
    let o = meyer(
        dir.path(),
        &["diffract", "-c", cfg.to_str().unwrap(), "--set", pts.to_str().unwrap(), "--kmax", "1", "--vanhove", "100,200"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["scales"].as_array().unwrap().len(), 1);
    assert!(r["result"]["peaks"].as_array().unwrap().len() >= 2);
}
