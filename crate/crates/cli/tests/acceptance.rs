//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use violet_core::analysis::PostDominators;
use violet_core::checker::{
    check_code_upgrade, check_default, check_update, check_workload_shift, CheckReport, ConcreteConfig, Verdict,
};
use violet_core::impact::{compile_atom, find_suspicious_pairs, lcs_pairs, ImpactModel};
use violet_core::lang::{parse, BlockId, Cfg, Metric, Program, Value};
use violet_core::pipeline::{analyze, AnalyzeOptions, SymbolicSource};

const TABLE_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const PDOM_LIMIT: Duration = Duration::from_secs(30);
const CHECK_LIMIT: Duration = Duration::from_secs(1);
const PDOM_GRAPHS: usize = 100;
const PDOM_MAX_NODES: usize = 16;
const LCS_CASES: usize = 200;
const LCS_MAX_LEN: usize = 64;
const THRESHOLDS: [u32; 5] = [25, 50, 100, 200, 400];
/// Largest latency gap, in percent, for the logical-metric fixture.
const LATENCY_GAP_PCT: u64 = 10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_files() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cfs"))
        .collect();
    names.sort();
    names
}

fn program(name: &str) -> Program {
    parse(&fs::read_to_string(corpus_dir().join(name)).unwrap()).unwrap()
}

fn model_for(name: &str, source: SymbolicSource) -> ImpactModel {
    let opts = AnalyzeOptions {
        software: name.trim_end_matches(".cfs").into(),
        source,
        config: Default::default(),
        budget: Default::default(),
        threshold: 100,
    };
    analyze(&program(name), &opts).unwrap().model
}

fn violet(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_violet"))
        .args(args)
        .env_remove("VIO_SYM_CONFIGS")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn analyze_mimic(out: &Path) -> Result<(), String> {
    let prog = corpus_dir().join("autocommit.cfs");
    let (code, _) = violet(&["analyze", prog.to_str().unwrap(), "--target", "autocommit", "--out", out.to_str().unwrap()])?;
    if code != 0 {
        return Err(format!("analyze exited with {code}"));
    }
    Ok(())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cost_table() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    analyze_mimic(dir.path())?;
    let elapsed = t0.elapsed();
    let text = fs::read_to_string(dir.path().join("model.json")).map_err(|e| e.to_string())?;
    let m = ImpactModel::from_json(&text).map_err(|e| e.to_string())?;
    let expected: [(&[&str], u64); 4] = [
        (&["autocommit==true", "flush_at_trx_commit==1"], 2600),
        (&["autocommit==true", "flush_at_trx_commit==2"], 1700),
        (&["autocommit==true", "flush_at_trx_commit!=1", "flush_at_trx_commit!=2"], 1200),
        (&["autocommit==false"], 600),
    ];
    let constrained: Vec<_> = m.rows.iter().filter(|r| !r.config_constraint.is_empty()).collect();
    ensure(constrained.len() == 4, || format!("{} constrained rows", constrained.len()))?;
    for (row, (c, lat)) in constrained.iter().zip(expected) {
        ensure(row.config_constraint == c && row.cost.latency == lat, || {
            format!("row {:?} {} != {c:?} {lat}", row.config_constraint, row.cost.latency)
        })?;
    }
    for row in &constrained[..3] {
        ensure(row.input_predicate == ["sql_command==INSERT"], || format!("predicate {:?}", row.input_predicate))?;
    }
    let chain = m
        .diff(constrained[0].state, constrained[3].state)
        .map(|d| d.critical_chain.clone())
        .unwrap_or_default();
    ensure(chain.last().map(String::as_str) == Some("fil_flush"), || format!("critical chain {chain:?}"))?;
    ensure(elapsed < TABLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("4 rows, path {}, {elapsed:.2?}", chain.join("->")))
}

fn related_sets() -> Outcome {
    let prog = corpus_dir().join("autocommit.cfs");
    let (code, out) = violet(&["related", prog.to_str().unwrap(), "--target", "autocommit"])?;
    let want = "autocommit\tenabler:binlog_format\tinfluenced:flush_at_trx_commit\n";
    ensure(code == 0 && out == want, || format!("exit {code}, output {out:?}"))?;
    Ok("enabler {binlog_format}, influenced {flush_at_trx_commit}".into())
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut checked = Vec::new();
    for name in corpus_files() {
        let p = program(&name);
        if !oracle::oracle_eligible(&p) {
            continue;
        }
        oracle::oracle_check(&p).map_err(|e| format!("{name}: {e}"))?;
        checked.push(name);
    }
    let elapsed = t0.elapsed();
    ensure(!checked.is_empty(), || "no eligible program".into())?;
    ensure(elapsed < ORACLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{} programs, {elapsed:.2?}", checked.len()))
}

fn exit_path_avoiding(cfg: &Cfg, a: usize, b: usize) -> bool {
    let mut seen = vec![false; cfg.len()];
    let mut stack = vec![a];
    while let Some(x) = stack.pop() {
        if x == b || seen[x] {
            continue;
        }
        if x == Cfg::EXIT.0 {
            return true;
        }
        seen[x] = true;
        stack.extend(cfg.succs(BlockId(x)).iter().map(|s| s.0));
    }
    false
}

fn postdominance() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut queries = 0;
    for g in 0..PDOM_GRAPHS {
        let n = rng.gen_range(2..=PDOM_MAX_NODES);
        let mut edges = Vec::new();
        for a in (0..n).filter(|&a| a != Cfg::EXIT.0) {
            for _ in 0..rng.gen_range(0..=3) {
                let b = rng.gen_range(1..n);
                if !edges.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
        }
        let cfg = Cfg::from_edges(n, &edges);
        let pd = PostDominators::compute(&cfg);
        for a in 0..n {
            for b in 0..n {
                let want = a == b || !exit_path_avoiding(&cfg, a, b);
                ensure(pd.postdominates(BlockId(b), BlockId(a)) == want, || {
                    format!("graph {g}: does {b} postdominate {a}? expected {want}")
                })?;
                queries += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    ensure(elapsed < PDOM_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{PDOM_GRAPHS} graphs, {queries} node pairs, {elapsed:.2?}"))
}

fn call_chains() -> Outcome {
    let mut total = 0;
    for name in corpus_files() {
        let p = program(&name);
        let ex = oracle::explore_all(&p);
        let (agree, n) = oracle::parent_agreement(&ex);
        ensure(agree == n, || format!("{name}: {agree}/{n} parents agree"))?;
        total += n;
    }
    Ok(format!("{total}/{total} call records"))
}

fn lcs_dp(a: &[(u64, u64)], b: &[(u64, u64)]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn lcs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let records = |rng: &mut ChaCha8Rng| -> Vec<(u64, u64)> {
        let len = rng.gen_range(0..=LCS_MAX_LEN);
        (0..len).map(|_| (0x1000 + 4 * rng.gen_range(0..6u64), 0x1000 + 4 * rng.gen_range(0..4u64))).collect()
    };
    for case in 0..LCS_CASES {
        let a = records(&mut rng);
        let b = records(&mut rng);
        let pairs = lcs_pairs(&a, &b);
        let want = lcs_dp(&a, &b);
        ensure(pairs.len() == want, || format!("case {case}: {} != {want}", pairs.len()))?;
        ensure(pairs.iter().all(|&(i, j)| a[i] == b[j]), || format!("case {case}: unequal pair"))?;
    }
    Ok(format!("{LCS_CASES} pairs"))
}

fn threshold_nesting() -> Outcome {
    let mut models = 0;
    for name in corpus_files() {
        let p = program(&name);
        let names = p.configs.iter().map(|c| c.name.clone()).collect();
        let m = model_for(&name, SymbolicSource::Explicit(names));
        let related: BTreeSet<String> = m.related.iter().cloned().collect();
        let vars = m.vars();
        let mut prev: Option<BTreeSet<(usize, usize)>> = None;
        for t in THRESHOLDS {
            let cur: BTreeSet<(usize, usize)> = find_suspicious_pairs(&m.rows, t, &related, &vars)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|p| p.key())
                .collect();
            if let Some(p) = &prev {
                ensure(cur.is_subset(p), || format!("{name}: pairs at {t}% not within the previous set"))?;
            }
            prev = Some(cur);
        }
        models += 1;
    }
    Ok(format!("{models} models"))
}

fn cfg(items: &[(&str, Value)]) -> ConcreteConfig {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Run a check twice; it must be specious, identical both times, fast, and come
/// with a test case that satisfies the slow row's predicate.
fn scenario(
    label: &str,
    model: &ImpactModel,
    run: impl Fn() -> Result<CheckReport, violet_core::checker::CheckError>,
) -> Result<Duration, String> {
    let t0 = Instant::now();
    let r = run().map_err(|e| format!("{label}: {e}"))?;
    let elapsed = t0.elapsed();
    let again = run().map_err(|e| format!("{label}: {e}"))?;
    ensure(r.verdict == Verdict::Specious, || format!("{label}: verdict {}", r.verdict))?;
    ensure(r == again, || format!("{label}: verdict changed between runs"))?;
    ensure(elapsed < CHECK_LIMIT, || format!("{label}: took {elapsed:?}"))?;
    let vars = model.vars();
    let f = &r.findings[0];
    let asg: Vec<Option<Value>> = vars.iter().map(|v| f.test_case.get(&v.name).cloned()).collect();
    for atom in &f.slow.input_predicate {
        let e = compile_atom(atom, &vars).map_err(|e| e.to_string())?;
        ensure(e.eval(&asg) == Some(Value::Bool(true)), || format!("{label}: test case misses {atom}"))?;
    }
    Ok(elapsed)
}

fn checker_scenarios() -> Outcome {
    let target = |t: &str| SymbolicSource::Target(t.into());
    let mimic = model_for("autocommit.cfs", target("autocommit"));
    let upgraded = model_for("autocommit_v2.cfs", target("autocommit"));
    let poor = model_for("poor_default.cfs", target("flush_method"));
    let durable = cfg(&[("autocommit", Value::Bool(true)), ("flush_at_trx_commit", Value::Int(1))]);
    let off = cfg(&[("autocommit", Value::Bool(false))]);
    let fsync = cfg(&[("flush_method", Value::Enum("FSYNC".into()))]);
    let select = vec!["sql_command==SELECT".to_string()];
    let insert = vec!["sql_command==INSERT".to_string()];
    let mut worst = Duration::ZERO;
    worst = worst.max(scenario("update", &mimic, || check_update(&mimic, &off, &durable, 100))?);
    worst = worst.max(scenario("default", &poor, || check_default(&poor, &fsync, 100))?);
    worst = worst.max(scenario("upgrade", &upgraded, || {
        check_code_upgrade(&mimic, &upgraded, Some(&durable), 100)
    })?);
    worst = worst.max(scenario("workload", &mimic, || {
        check_workload_shift(&mimic, &durable, &select, &insert, 100)
    })?);
    Ok(format!("4 scenarios specious, slowest {worst:.2?}"))
}

fn logical_metric() -> Outcome {
    let m = model_for("c6_io.cfs", SymbolicSource::Target("buffered_io".into()));
    let row = |c: &str| m.rows.iter().find(|r| r.config_constraint == [c]).ok_or(format!("no row {c}"));
    let direct = row("buffered_io==false")?;
    let buffered = row("buffered_io==true")?;
    let (ls, lf) = (direct.cost.latency, buffered.cost.latency);
    ensure(ls.abs_diff(lf) * 100 < LATENCY_GAP_PCT * lf, || format!("latency {ls} vs {lf}"))?;
    let (is, if_) = (direct.cost.file_io_ops, buffered.cost.file_io_ops);
    ensure(is > 2 * if_, || format!("file_io_ops {is} vs {if_}"))?;
    let pair = m
        .pairs
        .iter()
        .find(|p| p.key() == (direct.state, buffered.state))
        .ok_or("pair not flagged")?;
    let metrics: Vec<Metric> = pair.triggered.iter().map(|r| r.metric).collect();
    ensure(metrics == [Metric::FileIoOps], || format!("triggered {metrics:?}"))?;
    Ok(format!("latency {ls} vs {lf}, file_io_ops {is} vs {if_}"))
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let a = TempDir::new().map_err(|e| e.to_string())?;
    let b = TempDir::new().map_err(|e| e.to_string())?;
    analyze_mimic(a.path())?;
    analyze_mimic(b.path())?;
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    for (k, v) in &sa {
        ensure(sb.get(k) == Some(v), || format!("{k} differs"))?;
    }
    ensure(sa.len() == sb.len(), || "file sets differ".into())?;
    Ok(format!("{} files identical", sa.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("cost table of the autocommit mimic", cost_table),
        ("related parameters of autocommit", related_sets),
        ("exploration equals brute-force enumeration", oracle_equivalence),
        ("postdominance equals path search", postdominance),
        ("reconstructed call parents equal the live stack", call_chains),
        ("LCS length equals the DP oracle", lcs_oracle),
        ("flagged pairs nest as the threshold grows", threshold_nesting),
        ("checker scenarios", checker_scenarios),
        ("logical-metric-only detection", logical_metric),
        ("byte-identical run directories", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into())) {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
