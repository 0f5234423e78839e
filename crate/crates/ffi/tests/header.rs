use std::path::{Path, PathBuf};
use std::process::Command;

const EXPORTS: [&str; 14] = [
    "flagcs_last_error",
    "flagcs_string_free",
    "flagcs_system_from_json",
    "flagcs_system_free",
    "flagcs_system_shape",
    "flagcs_flow",
    "flagcs_analyze_json",
    "flagcs_report_free",
    "flagcs_report_json",
    "flagcs_report_counts",
    "flagcs_report_passed",
    "flagcs_double_coset_count",
    "flagcs_reduced_word",
    "FLAGCS_STATUS_BUFFER_TOO_SMALL",
];

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("flagcs.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).expect("build script writes the header");
    for name in EXPORTS {
        assert!(text.contains(name), "{name} missing from flagcs.h");
    }
    assert!(text.contains("typedef struct FlagcsSystem FlagcsSystem;"));
    assert!(text.contains("typedef struct FlagcsReport FlagcsReport;"));
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "flagcs.h"

int main(void) {
    size_t left[1] = {2};
    size_t count = 0;
    if (flagcs_double_coset_count(3, NULL, 0, left, 1, &count) != FLAGCS_STATUS_OK || count != 3) return 1;
    FlagcsSystem *sys = NULL;
    const char *json = "{\"n\": 2, \"A\": [[1, 0], [0, -1]], \"B\": [[[0, -1], [1, 0]]], \"range\": {\"lo\": [-0.3], \"hi\": [0.3]}}";
    if (flagcs_system_from_json(json, &sys) != FLAGCS_STATUS_OK) return 2;
    size_t n = 0, m = 0;
    flagcs_system_shape(sys, &n, &m);
    flagcs_system_free(sys);
    if (flagcs_system_from_json("{", &sys) != FLAGCS_STATUS_CONFIG) return 3;
    printf("%zu %zu %s\n", n, m, flagcs_last_error()[0] ? "error-set" : "error-empty");
    return 0;
}
"#;

/// Directory holding the library artifacts next to this test binary.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("libflagcs_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2 1 error-set");
}
