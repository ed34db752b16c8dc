use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/funcrate.h")
}

#[test]
fn header_declares_the_abi() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct FrConfig FrConfig;",
        "typedef struct FrReport FrReport;",
        "FR_STATUS_INVALID_CONFIG = 2",
        "fr_config_parse(",
        "fr_config_load(",
        "fr_config_free(",
        "fr_run(",
        "fr_report_json(",
        "fr_report_csv(",
        "fr_string_free(",
        "fr_stable_density(",
        "fr_check_integrability(",
        "fr_fit_rate(",
        "fr_last_error(",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "funcrate.h"

int main(void) {
    const char *cfg_text =
        "process = \"stable 1\"\n"
        "h = \"indicator 0 1\"\n"
        "weight_V = \"poly 0.4\"\n"
        "horizon_T = 1\n"
        "moment_p = 2\n"
        "n_ladder = [4, 8, 16]\n"
        "n_fine = 256\n"
        "replicates_M = 100\n"
        "seed = 3\n";
    FrConfig *cfg = NULL;
    if (fr_config_parse(cfg_text, &cfg) != FR_STATUS_OK) {
        fprintf(stderr, "%s\n", fr_last_error());
        return 1;
    }
    FrReport *report = NULL;
    if (fr_run(cfg, 1, &report) != FR_STATUS_OK) return 2;
    char *csv = NULL;
    if (fr_report_csv(report, &csv) != FR_STATUS_OK) return 3;
    int ok = strncmp(csv, "n,weak_err", 10) == 0;
    fr_string_free(csv);
    fr_report_free(report);
    fr_config_free(cfg);
    double d = 0.0;
    if (fr_stable_density(1.0, 1.0, 0.0, &d) != FR_STATUS_OK) return 4;
    printf("%.12f\n", d);
    return ok ? 0 : 5;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libfuncrate_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let density: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((density - 1.0 / std::f64::consts::PI).abs() < 1e-10);
}
