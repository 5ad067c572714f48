use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;
use sha2::{Digest, Sha256};
use violet_core::analysis::{format_related_report, get_related_configs, parse_related_report};
use violet_core::checker::{
    check_default, check_evolution, check_update, check_workload_shift, CheckError, CheckReport, ConcreteConfig,
    Verdict,
};
use violet_core::impact::{compile_atom, ImpactModel, DEFAULT_THRESHOLD};
use violet_core::lang::{parse, Program};
use violet_core::pipeline::{analyze as run_pipeline, AnalyzeOptions, SymbolicSource};
use violet_core::symexec::Budget;
use violet_core::trace::{render_call_tree, TraceFile};

use crate::config::load_config;
use crate::exit;

pub const SYM_ENV: &str = "VIO_SYM_CONFIGS";

/// An error with a specific exit code.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn fail(code: u8, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| fail(exit::MALFORMED, format!("reading {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<(String, Program)> {
    let src = read(path)?;
    let p = parse(&src).map_err(|e| fail(exit::MALFORMED, e.render(&path.display().to_string())))?;
    Ok((src, p))
}

fn load_model(path: &Path) -> Result<ImpactModel> {
    ImpactModel::from_json(&read(path)?).map_err(|e| fail(exit::MALFORMED, format!("{}: {e}", path.display())))
}

fn load_cfg(path: &Path) -> Result<ConcreteConfig> {
    load_config(path).map_err(|e| fail(exit::MALFORMED, format!("{e:#}")))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn related(program: &Path, target: Option<&str>, output: Option<&Path>) -> Result<u8> {
    let (_, p) = load_program(program)?;
    let mut sets = get_related_configs(&p);
    if let Some(t) = target {
        let one = sets.remove(t).ok_or_else(|| anyhow::anyhow!("unknown configuration parameter `{t}`"))?;
        sets = BTreeMap::from([(t.to_string(), one)]);
    }
    write_out(output, &format_related_report(&sets))?;
    Ok(exit::OK)
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub program: PathBuf,
    /// Concrete values for configuration parameters (flat TOML table).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter to analyze; it and its related parameters become symbolic.
    #[arg(long, conflicts_with = "sym")]
    pub target: Option<String>,
    /// Comma-separated parameters to make symbolic. Overrides VIO_SYM_CONFIGS.
    #[arg(long, value_delimiter = ',')]
    pub sym: Vec<String>,
    /// Take the target's related parameters from this report instead of analyzing.
    #[arg(long, requires = "target")]
    pub related_file: Option<PathBuf>,
    /// Run directory.
    #[arg(long, default_value = "violet-out")]
    pub out: PathBuf,
    /// Relative cost difference, in percent, above which a pair is flagged.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = clap::value_parser!(u32).range(1..))]
    pub threshold: u32,
    #[arg(long)]
    pub max_states: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub max_latency: Option<u64>,
}

/// The symbolic set and a description of where it came from.
fn symbolic_source(args: &AnalyzeArgs) -> Result<(SymbolicSource, serde_json::Value)> {
    if let Some(t) = &args.target {
        if let Some(path) = &args.related_file {
            let sets = parse_related_report(&read(path)?).map_err(|e| fail(exit::MALFORMED, format!("{}: {e}", path.display())))?;
            let set = sets
                .get(t)
                .ok_or_else(|| anyhow::anyhow!("{} has no entry for `{t}`", path.display()))?;
            let mut names = vec![t.clone()];
            names.extend(set.related());
            let desc = json!({"kind": "related-file", "target": t, "path": path, "sha256": sha256_hex(read(path)?.as_bytes())});
            return Ok((SymbolicSource::Explicit(names), desc));
        }
        return Ok((SymbolicSource::Target(t.clone()), json!({"kind": "target", "target": t})));
    }
    if !args.sym.is_empty() {
        return Ok((SymbolicSource::Explicit(args.sym.clone()), json!({"kind": "flag", "names": args.sym})));
    }
    if let Ok(v) = std::env::var(SYM_ENV) {
        let names: Vec<String> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        if !names.is_empty() {
            return Ok((SymbolicSource::Explicit(names.clone()), json!({"kind": "env", "variable": SYM_ENV, "names": names})));
        }
    }
    bail!("nothing to analyze: pass --target or --sym, or set {SYM_ENV}")
}

pub fn analyze(args: &AnalyzeArgs) -> Result<u8> {
    let (src, p) = load_program(&args.program)?;
    let config = match &args.config {
        Some(path) => load_cfg(path)?,
        None => BTreeMap::new(),
    };
    let (source, source_desc) = symbolic_source(args)?;
    let mut budget = Budget::default();
    if let Some(n) = args.max_states {
        budget.max_states = n;
    }
    if let Some(n) = args.max_steps {
        budget.max_steps = n;
    }
    if let Some(n) = args.max_latency {
        budget.max_latency = n;
    }
    let software = args
        .program
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "program".into());
    let opts = AnalyzeOptions {
        software,
        source,
        config,
        budget,
        threshold: args.threshold,
    };
    let analysis = run_pipeline(&p, &opts)?;

    let out = &args.out;
    let traces_dir = out.join("traces");
    if traces_dir.exists() {
        fs::remove_dir_all(&traces_dir).with_context(|| format!("clearing {}", traces_dir.display()))?;
    }
    fs::create_dir_all(&traces_dir).with_context(|| format!("creating {}", traces_dir.display()))?;
    let mut outputs: Vec<(String, String)> = Vec::new();
    let mut emit = |rel: String, text: String| -> Result<()> {
        let path = out.join(&rel);
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        outputs.push((rel, sha256_hex(text.as_bytes())));
        Ok(())
    };
    emit("related.txt".into(), format_related_report(&get_related_configs(&p)))?;
    for tf in &analysis.trace_files {
        emit(format!("traces/state-{:04}.trace", tf.state), tf.render())?;
    }
    emit("model.json".into(), analysis.model.to_json())?;
    let table = analysis.model.report();
    emit("cost_table.txt".into(), table.clone())?;

    let config_desc = match &args.config {
        Some(path) => json!({"path": path, "sha256": sha256_hex(read(path)?.as_bytes())}),
        None => serde_json::Value::Null,
    };
    let manifest = json!({
        "tool": "violet",
        "version": env!("CARGO_PKG_VERSION"),
        "program": {"path": args.program, "sha256": sha256_hex(src.as_bytes())},
        "config": config_desc,
        "symbolic_source": source_desc,
        "symbolic": analysis.symbolic,
        "budget": {
            "max_states": budget.max_states,
            "max_steps": budget.max_steps,
            "max_latency": budget.max_latency,
        },
        "threshold": args.threshold,
        "exhausted": analysis.model.exhausted,
        "outputs": outputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out.join("manifest.json"), text)?;

    print!("{table}");
    if analysis.model.exhausted {
        eprintln!("violet: exploration budget exhausted; the model may be incomplete");
    }
    Ok(exit::OK)
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub model: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub mode: u8,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = clap::value_parser!(u32).range(1..))]
    pub threshold: u32,
    /// Configuration to check; the current configuration in mode 1.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mode 1: the updated configuration.
    #[arg(long)]
    pub new: Option<PathBuf>,
    /// Mode 3: model of the upgraded code.
    #[arg(long)]
    pub new_model: Option<PathBuf>,
    /// Mode 3: predicate of the previous workload, atoms joined by `&&`.
    #[arg(long, requires = "new_workload")]
    pub old_workload: Option<String>,
    /// Mode 3: predicate of the new workload.
    #[arg(long, requires = "old_workload")]
    pub new_workload: Option<String>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

fn workload(text: &str, model: &ImpactModel) -> Result<Vec<String>> {
    let vars = model.vars();
    let atoms: Vec<String> = text.split("&&").map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
    for a in &atoms {
        compile_atom(a, &vars).map_err(|e| fail(exit::MALFORMED, e.to_string()))?;
    }
    Ok(atoms)
}

/// Model defaults for the symbolic parameters, overlaid with `cfg`.
fn with_defaults(model: &ImpactModel, cfg: ConcreteConfig) -> ConcreteConfig {
    let mut out: ConcreteConfig = model
        .variables
        .iter()
        .filter_map(|v| Some((v.var.name.clone(), v.default.clone()?)))
        .collect();
    out.extend(cfg);
    out
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str, mode: u8) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| fail(exit::MALFORMED, format!("mode {mode} needs {flag}")))
}

pub fn check(args: &CheckArgs) -> Result<u8> {
    let model = load_model(&args.model)?;
    let t = args.threshold;
    let result: Result<CheckReport, CheckError> = match args.mode {
        1 => {
            let old = load_cfg(required(&args.config, "--config", 1)?)?;
            let new = load_cfg(required(&args.new, "--new", 1)?)?;
            check_update(&model, &old, &new, t)
        }
        2 => {
            let cfg = match &args.config {
                Some(p) => load_cfg(p)?,
                None => ConcreteConfig::new(),
            };
            check_default(&model, &with_defaults(&model, cfg), t)
        }
        _ => {
            let cfg = load_cfg(required(&args.config, "--config", 3)?)?;
            let shift = match (&args.old_workload, &args.new_workload) {
                (Some(a), Some(b)) => Some((workload(a, &model)?, workload(b, &model)?)),
                _ => None,
            };
            match (&args.new_model, &shift) {
                (Some(path), _) => {
                    let new_model = load_model(path)?;
                    let w = shift.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()));
                    check_evolution(&model, &new_model, &cfg, w, t)
                }
                (None, Some((a, b))) => check_workload_shift(&model, &cfg, a, b, t),
                (None, None) => {
                    return Err(fail(exit::MALFORMED, "mode 3 needs --new-model or --old-workload/--new-workload"))
                }
            }
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(e @ CheckError::NoMatchingRow(_)) => return Err(fail(exit::OUTSIDE, e.to_string())),
        Err(e @ CheckError::InvalidValue { .. }) => return Err(fail(exit::MALFORMED, e.to_string())),
        Err(e) => return Err(e.into()),
    };
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.render());
    }
    Ok(match report.verdict {
        Verdict::Ok => exit::OK,
        Verdict::Specious => exit::SPECIOUS,
    })
}

pub fn trace_dump(path: &Path) -> Result<u8> {
    let tf = TraceFile::parse(&read(path)?).map_err(|e| fail(exit::MALFORMED, format!("{}: {e}", path.display())))?;
    print!("{}", render_call_tree(&tf.to_state_trace()));
    Ok(exit::OK)
}
