//! Replays the checked-in fuzz seeds through every decoder on stable.

use std::path::Path;

use lindstab_core::glauber::parse_potential;
use lindstab_core::lattice::parse_geometry;
use lindstab_core::linalg::codec::{decode_lsop, encode_lsop, matrix_from_json};
use lindstab_core::model::parse_model;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn lsop_seeds_round_trip() {
    let mut accepted = 0;
    for (name, bytes) in seeds("decode_lsop") {
        if let Ok(m) = decode_lsop(&bytes) {
            assert_eq!(encode_lsop(&m).unwrap(), bytes, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
    assert!(decode_lsop(&seeds("decode_lsop").iter().find(|(n, _)| n == "truncated").unwrap().1).is_err());
}

#[test]
fn json_seeds_never_panic() {
    for (name, bytes) in seeds("matrix_json") {
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let parsed = matrix_from_json(&v);
        assert_eq!(parsed.is_ok(), name != "ragged", "{name}");
    }
    for (name, bytes) in seeds("parse_model") {
        assert_eq!(parse_model(&bytes).is_ok(), name != "malformed", "{name}");
    }
    for (name, bytes) in seeds("parse_potential") {
        parse_potential(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, bytes) in seeds("geometry") {
        assert_eq!(parse_geometry(&bytes).is_ok(), name != "bad_rank", "{name}");
    }
}
