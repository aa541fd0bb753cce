use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gazeattn::ingest::write_stimulus;
use gazeattn::model::{BBox, StimulusDocument, TokenBox};
use gazeattn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ga_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn distribution(masses: &[f64]) -> *mut GaDistribution {
    let mut d = ptr::null_mut();
    let id = CString::new("doc").unwrap();
    assert_eq!(
        unsafe { ga_distribution_new(id.as_ptr(), masses.as_ptr(), masses.len(), &mut d) },
        GaStatus::Ok
    );
    d
}

#[test]
fn distributions_kl_and_entropy() {
    let h = distribution(&[1.0, 1.0]);
    let m = distribution(&[1.0, 3.0]);
    let mut kl = 0.0;
    assert_eq!(unsafe { ga_kl_divergence(h, m, 0.0, &mut kl) }, GaStatus::Ok);
    assert!((kl - 0.143841).abs() < 1e-6);
    assert_eq!(last_error(), "");

    let mut weights = [0.0; 2];
    assert_eq!(
        unsafe { ga_distribution_weights(m, weights.as_mut_ptr(), 2) },
        GaStatus::Ok
    );
    assert_eq!(weights, [0.25, 0.75]);
    assert_eq!(
        unsafe { ga_distribution_weights(m, weights.as_mut_ptr(), 1) },
        GaStatus::InvalidArgument
    );
    assert_eq!(unsafe { ga_distribution_len(m) }, 2);

    let mut nats = -1.0;
    assert_eq!(unsafe { ga_entropy(h, &mut nats) }, GaStatus::Ok);
    assert!((nats - 2f64.ln()).abs() < 1e-12);

    let a = distribution(&[1.0, 0.0]);
    let b = distribution(&[0.0, 1.0]);
    assert_eq!(
        unsafe { ga_kl_divergence(a, b, 0.0, &mut kl) },
        GaStatus::InfiniteDivergence
    );
    assert!(last_error().contains("epsilon"));
    assert_eq!(unsafe { ga_kl_divergence(a, b, 1e-8, &mut kl) }, GaStatus::Ok);
    assert!(kl.is_finite());
    let three = distribution(&[1.0, 1.0, 1.0]);
    assert_eq!(
        unsafe { ga_kl_divergence(h, three, 1e-8, &mut kl) },
        GaStatus::LengthMismatch
    );

    for d in [h, m, a, b, three] {
        unsafe { ga_distribution_free(d) };
    }
    unsafe { ga_distribution_free(ptr::null_mut()) };
}

#[test]
fn invalid_arguments_are_reported() {
    let mut d = ptr::null_mut();
    let id = CString::new("doc").unwrap();
    let zeros = [0.0, 0.0];
    assert_eq!(
        unsafe { ga_distribution_new(id.as_ptr(), zeros.as_ptr(), 2, &mut d) },
        GaStatus::InvalidArgument
    );
    assert!(d.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { ga_distribution_new(ptr::null(), zeros.as_ptr(), 2, &mut d) },
        GaStatus::NullPointer
    );
    assert_eq!(unsafe { ga_entropy(ptr::null(), &mut 0.0) }, GaStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { ga_distribution_new(bad.as_ptr().cast(), zeros.as_ptr(), 2, &mut d) },
        GaStatus::InvalidUtf8
    );
    assert_eq!(unsafe { ga_ptukey(3.0, 1, 10.0, &mut 0.0) }, GaStatus::InvalidArgument);
}

#[test]
fn spearman_and_ptukey() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [5.0, 4.0, 3.0, 2.0, 1.0];
    let (mut rho, mut p) = (0.0, 1.0);
    assert_eq!(
        unsafe { ga_spearman(x.as_ptr(), y.as_ptr(), 5, &mut rho, &mut p) },
        GaStatus::Ok
    );
    assert_eq!((rho, p), (-1.0, 0.0));
    let c = [2.0; 5];
    assert_eq!(
        unsafe { ga_spearman(x.as_ptr(), c.as_ptr(), 5, &mut rho, &mut p) },
        GaStatus::ConstantInput
    );
    assert_eq!(
        unsafe { ga_spearman(x.as_ptr(), y.as_ptr(), 2, &mut rho, &mut p) },
        GaStatus::TooFewSamples
    );

    let mut cdf = 0.0;
    assert_eq!(unsafe { ga_ptukey(3.877, 3, 10.0, &mut cdf) }, GaStatus::Ok);
    assert!((cdf - 0.95).abs() < 1e-4);
}

fn write_document(dir: &std::path::Path) -> PathBuf {
    let tokens = (0..4)
        .map(|i| TokenBox {
            token_id: i,
            text: "word".into(),
            sentence_index: 0,
            char_start: 5 * i,
            char_end: 5 * i + 4,
            bbox: BBox::new(50.0 * i as f64, 0.0, 50.0 * i as f64 + 40.0, 20.0),
        })
        .collect();
    let doc = StimulusDocument::from_tokens("page", tokens).unwrap();
    let path = dir.join("page.tsv");
    std::fs::write(&path, write_stimulus(&doc)).unwrap();
    path
}

#[test]
fn documents_and_hit_test() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(write_document(dir.path()).to_str().unwrap()).unwrap();
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { ga_document_load(path.as_ptr(), &mut doc) }, GaStatus::Ok);
    assert_eq!(unsafe { ga_document_len(doc) }, 4);

    let mut token = 0;
    for (x, y, snap, want) in [
        (60.0, 10.0, 0.0, 1),
        (40.0, 10.0, 0.0, -1),
        (40.0, 10.0, 3.0, 0),
        (45.0, 10.0, 5.0, 0),
        (500.0, 10.0, 3.0, -1),
    ] {
        assert_eq!(unsafe { ga_hit_test(doc, x, y, snap, &mut token) }, GaStatus::Ok);
        assert_eq!(token, want, "({x}, {y}) snap {snap}");
    }
    assert_eq!(
        unsafe { ga_hit_test(doc, f64::NAN, 0.0, 0.0, &mut token) },
        GaStatus::InvalidArgument
    );
    unsafe { ga_document_free(doc) };

    let missing = CString::new(dir.path().join("none.tsv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ga_document_load(missing.as_ptr(), &mut doc) }, GaStatus::Io);
    std::fs::write(dir.path().join("bad.tsv"), "token_id\ttext\n0\tx\n").unwrap();
    let bad = CString::new(dir.path().join("bad.tsv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ga_document_load(bad.as_ptr(), &mut doc) }, GaStatus::Parse);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ga_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gazeattn.h")).unwrap();
    for f in [
        "ga_last_error",
        "ga_version",
        "ga_distribution_new",
        "ga_distribution_free",
        "ga_distribution_weights",
        "ga_entropy",
        "ga_kl_divergence",
        "ga_spearman",
        "ga_ptukey",
        "ga_document_load",
        "ga_hit_test",
    ] {
        assert!(
            header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")),
            "{f} missing from header"
        );
    }
    assert!(header.contains("typedef struct GaDistribution GaDistribution;"));
    assert!(header.contains("GA_STATUS_INFINITE_DIVERGENCE = 7"));
}

/// Compiles a small C program against the header and the shared library.
#[test]
fn c_program_links_against_header() {
    let target = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = target.join(format!(
        "{}gazeattn_ffi{}",
        std::env::consts::DLL_PREFIX,
        std::env::consts::DLL_SUFFIX
    ));
    if !lib.is_file() {
        panic!("shared library not built at {}", lib.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "gazeattn.h"
int main(void) {
    double h[] = {1.0, 1.0}, m[] = {1.0, 3.0}, kl = -1.0;
    GaDistribution *a = NULL, *b = NULL;
    if (ga_distribution_new("d", h, 2, &a) != GA_STATUS_OK) return 1;
    if (ga_distribution_new("d", m, 2, &b) != GA_STATUS_OK) return 2;
    if (ga_kl_divergence(a, b, 0.0, &kl) != GA_STATUS_OK) return 3;
    ga_distribution_free(a);
    ga_distribution_free(b);
    printf("%.6f %s\n", kl, ga_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg("-L")
        .arg(&target)
        .arg("-lgazeattn_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).env("LD_LIBRARY_PATH", &target).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        format!("0.143841 {}\n", env!("CARGO_PKG_VERSION"))
    );
}
