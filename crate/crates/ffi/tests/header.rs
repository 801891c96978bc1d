use std::path::Path;
use std::process::Command;

const HEADER_USE: &str = r#"
#include "gal_ffi.h"
int main(void) {
    GalGraph *g = 0;
    GalStatus s = gal_graph_generate_sbm("nodes_per_block = 10\n", 1, &g);
    size_t n = 0;
    if (s == GAL_STATUS_OK) gal_graph_node_count(g, &n);
    char buf[64];
    gal_last_error(buf, sizeof buf);
    gal_graph_free(g);
    return (int)n;
}
"#;

#[test]
fn header_declares_the_exported_symbols() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gal_ffi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    for line in src.lines().filter(|l| l.contains("extern \"C\" fn ")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("use_header.c");
    std::fs::write(&file, HEADER_USE).unwrap();
    let Ok(out) = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(&include)
        .arg(&file)
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
