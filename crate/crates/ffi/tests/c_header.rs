//! Compiles `tests/c/smoke.c` against the generated header and the static
//! library, then runs it. Skipped only when no C compiler is on the path.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test-binary> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    // `cargo test` builds only the rlib
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo).args(["build", "-p", "lpmhd-ffi", "--lib"]).status().unwrap();
    assert!(status.success(), "building the static library failed");
    let lib = profile_dir.join("liblpmhd_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("t=0.005000"));
}
