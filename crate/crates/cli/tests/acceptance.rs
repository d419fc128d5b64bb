//! Acceptance suite: runs every committed experiment and checks all
//! eighteen criteria at their pinned tolerances, printing one line per
//! criterion. Run with `cargo test -p ccs-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ccs_cli::criteria::{evaluate, CriterionResult};
use ccs_cli::reproduce::{reproduce, ReproduceOptions};

fn read_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().to_string(),
                fs::read(&path).unwrap(),
            );
        }
    }
    out
}

#[test]
fn acceptance() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let opts = ReproduceOptions::default();

    let (bundle, mut results, written) = reproduce(dir_a.path(), &opts).expect("reproduce runs");
    assert!(
        written.len() >= 8,
        "expected a bundle of at least 8 report files, got {}",
        written.len()
    );

    // Criterion 17: a second reproduction is byte-identical.
    let (_, _, _) = reproduce(dir_b.path(), &opts).expect("second reproduce runs");
    let files_a = read_files(dir_a.path());
    let files_b = read_files(dir_b.path());
    let identical = files_a == files_b;
    let differing: Vec<&String> = files_a
        .iter()
        .filter(|(name, bytes)| files_b.get(*name) != Some(bytes))
        .map(|(name, _)| name)
        .collect();
    results.push(CriterionResult {
        id: 17,
        name: "two reproductions are byte-identical".to_string(),
        passed: identical && files_a.len() == files_b.len(),
        detail: if identical {
            format!("{} files compared", files_a.len())
        } else {
            format!("differing files: {differing:?}")
        },
    });
    results.sort_by_key(|c| c.id);

    let mut failed = Vec::new();
    for c in &results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  criterion {:>2}: {}: {}", c.id, c.name, c.detail);
        if !c.passed {
            failed.push(c.id);
        }
    }
    assert_eq!(results.len(), 18, "expected 18 criteria");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");

    // Sanity on the bundle shape itself.
    assert_eq!(bundle.scenarios.len(), 4);
    assert_eq!(bundle.strategies.len(), 4);
    assert_eq!(bundle.volatility.len(), 8);
    assert_eq!(bundle.pointer.len(), 2);

    // Re-evaluating the same bundle is stable.
    let again = evaluate(&bundle);
    assert!(again.iter().all(|c| c.passed));
}
