//! Runs the parser entry points over the checked-in fuzz seeds.

use std::path::PathBuf;

use gilbert::cli::files::{instance_to_json, parse_instance, parse_solution, solution_to_json};
use gilbert::cli::svg::render;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn instance_seeds() {
    let mut ok = 0;
    for (path, text) in seeds("instance_file") {
        if let Ok(inst) = parse_instance(&text) {
            let again = parse_instance(&instance_to_json(&inst)).unwrap();
            assert_eq!(instance_to_json(&again), instance_to_json(&inst), "{}", path.display());
            ok += 1;
        }
    }
    assert!(ok >= 3);
}

#[test]
fn solution_seeds() {
    let mut ok = 0;
    for (path, text) in seeds("solution_file") {
        if let Ok(sol) = parse_solution(&text) {
            assert_eq!(solution_to_json(&sol) + "\n", text, "{}", path.display());
            let _ = render(&sol);
            ok += 1;
        }
    }
    assert!(ok >= 3);
}
