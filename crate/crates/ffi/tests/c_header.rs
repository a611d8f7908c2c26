//! Compiles a C program against the generated header and the static library,
//! then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "pointnetlk.h"

#define CHECK(x) do { PnlkStatus s_ = (x); if (s_ != PNLK_STATUS_OK) { \
    fprintf(stderr, "%s -> %d: %s\n", #x, (int)s_, pnlk_last_error_message()); return 1; } } while (0)

int main(void) {
    double xyz[3 * 64];
    for (int i = 0; i < 64; ++i) {
        xyz[3 * i] = (i % 4) * 0.25;
        xyz[3 * i + 1] = ((i / 4) % 4) * 0.15;
        xyz[3 * i + 2] = (i / 16) * 0.05 + 0.01 * (i % 3);
    }
    PnlkCloud *cloud = NULL;
    PnlkEncoder *enc = NULL;
    CHECK(pnlk_cloud_new(xyz, 64, &cloud));
    CHECK(pnlk_encoder_moment(&enc));
    PnlkSolverConfig cfg = pnlk_solver_config_default();
    PnlkResult res;
    CHECK(pnlk_register(enc, cloud, cloud, &cfg, &res));
    for (int i = 0; i < 16; ++i) {
        double want = (i % 5 == 0) ? 1.0 : 0.0;
        if (fabs(res.estimate[i] - want) > 1e-6) return 2;
    }
    if (!res.converged || res.iterations_used != 1) return 3;
    if (pnlk_cloud_new(NULL, 1, &cloud) != PNLK_STATUS_NULL_POINTER) return 4;
    if (pnlk_last_error_message() == NULL) return 5;
    pnlk_cloud_free(cloud);
    pnlk_encoder_free(enc);
    printf("ok %s\n", pnlk_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_is_valid_c_and_cpp() {
    let header = include_dir().join("pointnetlk.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{compiler}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libpointnetlk_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let build = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
