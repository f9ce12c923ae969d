//! Generates the C header for this crate into `include/palisade.h`.

use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("palisade.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(&header);
        }
        Err(err) => {
            // A header generation failure must fail the build: shipping a
            // stale header would silently break downstream consumers.
            panic!("cbindgen failed: {err}");
        }
    }
}
