//! Keeps the guide honest: every Rust snippet in book/src must appear
//! verbatim (modulo indentation) inside a doc comment in the crate, so
//! the chapters and the doc-tests cannot drift apart.

use std::fs;
use std::path::Path;

fn normalize(block: &str) -> String {
    block
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Concatenated doc-comment text of every src file, stripped of the
/// comment markers.
fn doc_corpus(src_dir: &Path) -> String {
    let mut out = String::new();
    for entry in fs::read_dir(src_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e == "rs").unwrap_or(false) {
            for line in fs::read_to_string(&path).unwrap().lines() {
                let t = line.trim_start();
                if let Some(rest) = t.strip_prefix("//!").or_else(|| t.strip_prefix("///")) {
                    out.push_str(rest.trim());
                    out.push('\n');
                }
            }
        }
    }
    out
}

#[test]
fn book_snippets_match_doc_tests() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let book_src = root.join("../../book/src");
    let corpus = normalize(&doc_corpus(&root.join("src")));
    let mut checked = 0;
    for entry in fs::read_dir(&book_src).unwrap() {
        let path = entry.unwrap().path();
        if !path.extension().map(|e| e == "md").unwrap_or(false) {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let mut in_block = false;
        let mut block = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("```") {
                if in_block {
                    let snippet = normalize(&block);
                    assert!(
                        corpus.contains(&snippet),
                        "snippet in {} has no matching doc-test:\n{snippet}",
                        path.display()
                    );
                    checked += 1;
                    block.clear();
                    in_block = false;
                } else if rest.trim() == "rust" {
                    in_block = true;
                }
            } else if in_block {
                block.push_str(line);
                block.push('\n');
            }
        }
    }
    assert!(checked >= 3, "expected at least three Rust snippets in the book");
}

#[test]
fn summary_lists_every_chapter() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let book_src = root.join("../../book/src");
    let summary = fs::read_to_string(book_src.join("SUMMARY.md")).unwrap();
    for entry in fs::read_dir(&book_src).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".md") && name != "SUMMARY.md" {
            assert!(summary.contains(&format!("({name})")), "{name} missing from SUMMARY.md");
        }
    }
}
