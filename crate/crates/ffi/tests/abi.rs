use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pdl_ffi::*;

fn load(name: &str) -> *mut PdlSystem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name);
    let text = CString::new(std::fs::read_to_string(path).unwrap()).unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { pdl_system_from_text(text.as_ptr(), &mut sys) }, PdlStatus::Ok);
    sys
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pdl_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn load_apply_free() {
    let sys = load("r12k3.pdl");
    unsafe {
        assert_eq!(pdl_system_len(sys), 12);
        let mut y = 0;
        assert_eq!(pdl_system_apply(sys, 11, &mut y), PdlStatus::Ok);
        assert_eq!(y, 2);
        assert_eq!(pdl_system_apply(sys, 12, &mut y), PdlStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        pdl_system_free(sys);
        pdl_system_free(ptr::null_mut());
        assert_eq!(pdl_system_len(ptr::null()), 0);
    }
}

#[test]
fn load_errors() {
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(pdl_system_from_text(ptr::null(), &mut sys), PdlStatus::NullPointer);
        let bad = c("explicit \"x\" {\n map = 0 1\n metric 2\n 0 1\n 2 0\n}\n");
        assert_eq!(pdl_system_from_text(bad.as_ptr(), &mut sys), PdlStatus::Parse);
        assert!(!last_error().is_empty());
        let shift = c("shift { alphabet = 2 }\n");
        assert_eq!(pdl_system_from_text(shift.as_ptr(), &mut sys), PdlStatus::Unsupported);
        assert!(sys.is_null());
        let bytes = [0xffu8, 0];
        assert_eq!(pdl_system_from_text(bytes.as_ptr().cast(), &mut sys), PdlStatus::InvalidUtf8);
    }
}

#[test]
fn classify_and_shadow() {
    let sys = load("r12k3.pdl");
    let mut flags = [9u8; 12];
    unsafe {
        let k = c("1/6");
        assert_eq!(pdl_classify(sys, PdlVariant::Minimal, k.as_ptr(), flags.as_mut_ptr(), 12), PdlStatus::Ok);
        assert!(flags.iter().all(|&b| b == 1));
        assert_eq!(pdl_classify(sys, PdlVariant::Uniform, k.as_ptr(), flags.as_mut_ptr(), 12), PdlStatus::Ok);
        assert!(flags.iter().all(|&b| b == 0));
        assert_eq!(pdl_classify(sys, PdlVariant::Uniform, k.as_ptr(), flags.as_mut_ptr(), 3), PdlStatus::InvalidArgument);
        let junk = c("one half");
        assert_eq!(pdl_classify(sys, PdlVariant::Uniform, junk.as_ptr(), flags.as_mut_ptr(), 12), PdlStatus::InvalidArgument);
        pdl_system_free(sys);
    }
    let id = load("id3.pdl");
    let mut holds = false;
    unsafe {
        let half = c("1/2");
        assert_eq!(pdl_shadowable(id, 0, half.as_ptr(), half.as_ptr(), &mut holds), PdlStatus::Ok);
        assert!(holds);
        let two = c("2");
        assert_eq!(pdl_shadowable(id, 0, half.as_ptr(), two.as_ptr(), &mut holds), PdlStatus::Ok);
        assert!(!holds);
        pdl_system_free(id);
    }
}

#[test]
fn conjugacy_and_gh() {
    let f = load("r12k1.pdl");
    let g = load("r12k5.pdl");
    let mut b = PdlGhBounds { lower: ptr::null_mut(), upper: ptr::null_mut(), complete: false };
    unsafe {
        assert_eq!(pdl_gh_distance(f, g, 1_000_000, &mut b), PdlStatus::Ok);
        assert!(b.complete);
        assert_eq!(CStr::from_ptr(b.upper).to_str().unwrap(), "1/4");
        assert_eq!(CStr::from_ptr(b.lower).to_str().unwrap(), "1/4");
        pdl_string_free(b.lower);
        pdl_string_free(b.upper);
        assert_eq!(pdl_gh_distance(f, g, 50, &mut b), PdlStatus::Budget);
        assert!(!b.complete);
        pdl_string_free(b.lower);
        pdl_string_free(b.upper);
    }

    let mut images = [0usize; 12];
    let mut holds = false;
    unsafe {
        let (half, eta) = (c("1/2"), c("1/30"));
        let st = pdl_conjugacy(f, f, 1, half.as_ptr(), half.as_ptr(), eta.as_ptr(), images.as_mut_ptr(), 12, &mut holds);
        assert_eq!(st, PdlStatus::Ok);
        assert!(holds);
        // r12k1 is minimal, so the orbit closure is everything.
        assert_eq!(images.to_vec(), (0..12).collect::<Vec<_>>());
    }
    let id = load("id3.pdl");
    let mut images = [0usize; 3];
    unsafe {
        let half = c("1/2");
        let st = pdl_conjugacy(id, id, 2, half.as_ptr(), half.as_ptr(), ptr::null(), images.as_mut_ptr(), 3, &mut holds);
        assert_eq!(st, PdlStatus::Ok);
        assert!(holds);
        assert_eq!(images[0], PDL_NO_IMAGE);
        assert_eq!(images[1], PDL_NO_IMAGE);
        pdl_system_free(id);
        pdl_system_free(f);
        pdl_system_free(g);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = target_dir();
    let lib = dir.join("libpdl_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let data = manifest.join("../core/data/r12k3.pdl");
    let src = r#"
#include <stdio.h>
#include <stdlib.h>
#include "pdl.h"

int main(int argc, char **argv) {
    FILE *fp = fopen(argv[1], "rb");
    static char buf[1 << 16];
    size_t n = fread(buf, 1, sizeof buf - 1, fp);
    buf[n] = 0;
    fclose(fp);
    PdlSystem *sys = NULL;
    if (pdl_system_from_text(buf, &sys) != PDL_STATUS_OK) { puts(pdl_last_error()); return 1; }
    uint8_t flags[12];
    if (pdl_classify(sys, PDL_VARIANT_MINIMAL, "1/6", flags, pdl_system_len(sys)) != PDL_STATUS_OK) return 2;
    int count = 0;
    for (size_t i = 0; i < 12; i++) count += flags[i];
    size_t y;
    if (pdl_system_apply(sys, 99, &y) != PDL_STATUS_INVALID_ARGUMENT) return 3;
    printf("%s %zu %d\n", pdl_version(), pdl_system_len(sys), count);
    pdl_system_free(sys);
    return 0;
}
"#;
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let c_file = tmp.join("smoke.c");
    let bin = tmp.join("smoke");
    std::fs::write(&c_file, src).unwrap();
    let status = Command::new("cc")
        .arg(&c_file)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).arg(&data).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("{} 12 12", env!("CARGO_PKG_VERSION")));
}
