#![allow(dead_code)]

use std::path::PathBuf;

use violet_core::lang::{parse, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file")
}

pub fn corpus_program(name: &str) -> Program {
    parse(&corpus_source(name)).unwrap_or_else(|e| panic!("{name}: {}", e.render(name)))
}

/// Every `.cfs` file in the corpus, sorted by name.
pub fn corpus_files() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .expect("corpus dir")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cfs"))
        .collect();
    names.sort();
    names
}

pub mod oracle;

use violet_core::pipeline::{analyze, Analysis, AnalyzeOptions, SymbolicSource};

/// Analyze a corpus program with `target` and its related parameters symbolic.
pub fn analyze_target(name: &str, target: &str) -> Analysis {
    analyze_with(name, SymbolicSource::Target(target.to_string()), 100)
}

/// Analyze a corpus program with every configuration parameter symbolic.
pub fn analyze_all_configs(name: &str) -> Analysis {
    let p = corpus_program(name);
    let names = p.configs.iter().map(|c| c.name.clone()).collect();
    analyze_with(name, SymbolicSource::Explicit(names), 100)
}

pub fn analyze_with(name: &str, source: SymbolicSource, threshold: u32) -> Analysis {
    let p = corpus_program(name);
    let opts = AnalyzeOptions {
        software: name.trim_end_matches(".cfs").to_string(),
        source,
        config: Default::default(),
        budget: Default::default(),
        threshold,
    };
    analyze(&p, &opts).unwrap_or_else(|e| panic!("{name}: {e}"))
}
