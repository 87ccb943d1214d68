use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use synthvol::calibration::report::overall_rmse_pct;
use synthvol::calibration::synthetic::two_sector_spec;
use synthvol::calibration::tiers::BUNDLE_SCHEMA_VERSION;
use synthvol::calibration::{fit_tier, ModelBundle, Tier, TierConfig};
use synthvol::lattice::{fd_greeks, price, ContractSpec, ExerciseStyle, GreekBumps, LatticeSpec, Parity};
use synthvol::surface::{SurfaceFeatures, TrainConfig};
use synthvol_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sv_last_error()) }.to_string_lossy().into_owned()
}

fn bundle() -> ModelBundle {
    let corpus = two_sector_spec(21).generate().unwrap();
    let config = TierConfig { train: TrainConfig { epochs: 200, ..TrainConfig::default() }, ..TierConfig::default() };
    let model = fit_tier(&corpus, Tier::Parametric, &config).unwrap();
    ModelBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        train_rmse_pct: overall_rmse_pct(&model, &corpus).unwrap(),
        config,
        model,
    }
}

const PUT: SvContract = SvContract { strike: 95.0, dte: 31.0, parity: SvParity::Put, american: true, rate: 0.04 };

#[test]
fn price_and_greeks_match_core() {
    let spec = ContractSpec::from_dte(95.0, 31.0, Parity::Put, ExerciseStyle::American, 0.04);
    for (kind, lattice) in
        [(SvLattice::Crr, LatticeSpec::crr(200)), (SvLattice::LeisenReimer, LatticeSpec::leisen_reimer(201))]
    {
        let mut p = 0.0;
        let status = unsafe { sv_price(100.0, &PUT, 0.3, kind, lattice.steps, &mut p) };
        assert_eq!(status, SvStatus::Ok);
        assert_eq!(p, price(100.0, &spec, 0.3, &lattice).unwrap());
        let mut g = SvGreeks::default();
        assert_eq!(unsafe { sv_greeks(100.0, &PUT, 0.3, kind, lattice.steps, &mut g) }, SvStatus::Ok);
        let core = fd_greeks(100.0, &spec, 0.3, &lattice, GreekBumps::default()).unwrap();
        assert_eq!((g.price, g.delta, g.gamma, g.vega), (p, core.delta, core.gamma, core.vega));
        assert_eq!(last_error(), "");
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = 0.0;
    assert_eq!(unsafe { sv_price(100.0, ptr::null(), 0.3, SvLattice::Crr, 200, &mut p) }, SvStatus::NullPointer);
    assert!(last_error().contains("contract"));
    assert_eq!(unsafe { sv_price(100.0, &PUT, 0.3, SvLattice::LeisenReimer, 200, &mut p) }, SvStatus::InvalidInput);
    assert_eq!(unsafe { sv_price(-1.0, &PUT, 0.3, SvLattice::Crr, 200, &mut p) }, SvStatus::InvalidInput);
    let mut g = SvGreeks::default();
    assert_eq!(unsafe { sv_greeks(100.0, &PUT, 0.001, SvLattice::Crr, 200, &mut g) }, SvStatus::InvalidInput);
    assert!(!last_error().is_empty());
    let mut m = ptr::null_mut();
    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { sv_model_from_json(bad.as_ptr(), &mut m) }, SvStatus::Parse);
    assert!(m.is_null());
    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { sv_model_load(missing.as_ptr(), &mut m) }, SvStatus::Io);
    assert_eq!(unsafe { sv_model_load(ptr::null(), &mut m) }, SvStatus::NullPointer);
}

#[test]
fn model_handle_evaluates_iv() {
    let b = bundle();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    b.save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sv_model_load(cpath.as_ptr(), &mut m) }, SvStatus::Ok);
    let ticker = CString::new("AAA").unwrap();
    let mut iv = 0.0;
    let status = unsafe { sv_model_iv(m, ticker.as_ptr(), 20.0, 0.95, 30.0, 30.0, &mut iv) };
    assert_eq!(status, SvStatus::Ok);
    assert_eq!(iv, b.model.iv("AAA", &SurfaceFeatures::new(20.0, 0.95)).unwrap());
    let unknown = CString::new("ZZZ").unwrap();
    assert_ne!(unsafe { sv_model_iv(m, unknown.as_ptr(), 20.0, 0.95, 30.0, 30.0, &mut iv) }, SvStatus::Ok);
    unsafe { sv_model_free(m) };

    let json = CString::new(serde_json::to_string(&b).unwrap()).unwrap();
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { sv_model_from_json(json.as_ptr(), &mut m2) }, SvStatus::Ok);
    unsafe { sv_model_free(m2) };
}

#[test]
fn scenario_returns_stats_json() {
    let dir = tempfile::tempdir().unwrap();
    bundle().save(&dir.path().join("model.json")).unwrap();
    let config = serde_json::json!({
        "schema_version": 1,
        "ticker": "AAA",
        "spot": 150.0,
        "horizon": 10,
        "n_paths": 20,
        "lr_steps": 51,
        "seed": 4,
        "surface": { "model": "model.json" },
        "contracts": [{ "strike": 140.0, "parity": "put", "entry_premium": 1.0 }]
    });
    let cfg = CString::new(config.to_string()).unwrap();
    let base = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut first = ptr::null_mut();
    assert_eq!(unsafe { sv_scenario_run(cfg.as_ptr(), base.as_ptr(), &mut first) }, SvStatus::Ok);
    let mut second = ptr::null_mut();
    assert_eq!(unsafe { sv_scenario_run(cfg.as_ptr(), base.as_ptr(), &mut second) }, SvStatus::Ok);
    let a = unsafe { CStr::from_ptr(first) }.to_str().unwrap().to_owned();
    let b = unsafe { CStr::from_ptr(second) }.to_str().unwrap().to_owned();
    unsafe {
        sv_string_free(first);
        sv_string_free(second);
    }
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["n_paths"], 20);
    assert_eq!(v["contracts"][0]["rows"].as_array().unwrap().len(), 10);

    let bad = CString::new(r#"{"schema_version": 1, "ticker": "AAA"}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sv_scenario_run(bad.as_ptr(), ptr::null(), &mut out) }, SvStatus::Parse);
    assert!(out.is_null());
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("synthvol.h").exists());
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = target_dir().join("libsynthvol_ffi.a");
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let mut cmd = Command::new(&cc);
    cmd.arg("-std=c99").arg("-Wall").arg("-Werror").arg("-I").arg(&header_dir).arg(manifest.join("tests/c/smoke.c"));
    if !lib.exists() {
        let status = cmd.arg("-fsyntax-only").status().unwrap();
        assert!(status.success());
        return;
    }
    let status = cmd.arg(&lib).args(["-lpthread", "-ldl", "-lm", "-o"]).arg(&exe).status().unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
