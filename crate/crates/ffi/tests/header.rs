use std::path::Path;
use std::process::Command;

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/strong_algebra.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for name in ["sa_factorize", "sa_run_config", "sa_last_error", "SA_STATUS_NUMERICAL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ SaElement *e = 0; SaStatus s = sa_element_from_json(\"{{}}\", &e); return (int)s; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() else {
        eprintln!("cc not available, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
