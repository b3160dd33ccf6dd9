//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! non-zero when any of them fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{adjacency, ensemble_shapley, floyd_warshall, metric_oracle, modularity_double_sum, random_graph, rng};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use tfmn::formats::{load_stopwords, read_corpus};
use tfmn::manifest::{list_files, RUN_MANIFEST, STAGE_MANIFEST};
use tfmn::{Parallel, Pipeline, Stage};
use tfmn_core::emotion::{null_model, z_scores, EmotionCounts, NullModel, PerEmotion, Sampling, Significance};
use tfmn_core::explain::{shap_feature_elimination, shap_row, EliminationSettings};
use tfmn_core::metrics::{detect_communities, modularity, CommunityMethod, MetricOptions, METRIC_COLUMNS};
use tfmn_core::ml::{cross_validate, fit, permutation_baseline, EnsembleConfig, Grid, Loss, Matrix, MaxFeatures};
use tfmn_core::stats::correlation_p_value;
use tfmn_core::{build_syntactic, parse_conllu, Emotion, EmotionLexicon, Graph, MetricVector, Stopwords, Transcript};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        ("graph metrics match brute force on 200 random graphs", graph_oracle),
        ("modularity of two bridged triangles", modularity_hand_case),
        ("edge rules", edge_rules),
        ("emotion null model", null_model_convergence),
        ("TreeSHAP exactness and local accuracy", tree_shap_exactness),
        ("ML sanity on planted network signal", ml_sanity),
        ("SHAP-guided elimination", elimination),
        ("determinism and fixture runtime", determinism),
        ("Pearson significance for r = 0.37, n = 232", pearson_significance),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn graph_oracle() -> Outcome {
    let t = Instant::now();
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = r.gen_range(2..=12);
        let p = r.gen_range(0.1..0.9);
        let g = random_graph(&mut r, n, p);
        for method in [CommunityMethod::Greedy, CommunityMethod::Louvain] {
            let mv = MetricVector::compute(&g, &MetricOptions { community: method, seed: i }).map_err(|e| e.to_string())?;
            let partition = detect_communities(&g, method, i).map_err(|e| e.to_string())?;
            for ((name, got), want) in METRIC_COLUMNS.iter().zip(mv.values()).zip(metric_oracle(&g, &partition)) {
                let d = (got - want).abs();
                ensure(d < 1e-9, || format!("graph {i} {method:?} {name}: {got} vs oracle {want}"))?;
                worst = worst.max(d);
            }
        }
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("22 metrics x 200 graphs x 2 community methods, max error {worst:.1e}"))
}

fn modularity_hand_case() -> Outcome {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
    let split = [0, 0, 0, 1, 1, 1];
    let q = modularity(&g, &split).map_err(|e| e.to_string())?;
    ensure((q - 5.0 / 14.0).abs() <= 1e-12, || format!("Q = {q}, expected 5/14"))?;
    let oracle = modularity_double_sum(&adjacency(&g), &split);
    ensure((oracle - 5.0 / 14.0).abs() <= 1e-12, || format!("double-sum oracle gives {oracle}"))?;
    let single = modularity(&g, &[0; 6]).map_err(|e| e.to_string())?;
    ensure(single == 0.0, || format!("single community Q = {single}"))?;
    for method in [CommunityMethod::Greedy, CommunityMethod::Louvain] {
        let mv = MetricVector::compute(&g, &MetricOptions { community: method, seed: 0 }).map_err(|e| e.to_string())?;
        ensure((mv.modularity - 5.0 / 14.0).abs() <= 1e-12, || format!("{method:?} finds Q = {}", mv.modularity))?;
    }
    Ok(format!("Q = {q:.15}, single community Q = 0"))
}

const SICK: &str = "# sent_id = sick-1
1\ttoday\ttoday\tNOUN\t_\t_\t3\tobl:tmod\t_\t_
2\tI\tI\tPRON\t_\t_\t3\tnsubj\t_\t_
3\tfeel\tfeel\tVERB\t_\t_\t0\troot\t_\t_
4\tso\tso\tADV\t_\t_\t5\tadvmod\t_\t_
5\tmuch\tmuch\tADV\t_\t_\t3\tadvmod\t_\t_
6\tvery\tvery\tADV\t_\t_\t5\tadvmod\t_\t_
7\t-\t-\tPUNCT\t_\t_\t8\tpunct\t_\t_
8\twell\twell\tINTJ\t_\t_\t3\tdiscourse\t_\t_
9\t,\t,\tPUNCT\t_\t_\t8\tpunct\t_\t_
10\tyou\tyou\tPRON\t_\t_\t11\tnsubj\t_\t_
11\tknow\tknow\tVERB\t_\t_\t3\tparataxis\t_\t_
12\t-\t-\tPUNCT\t_\t_\t11\tpunct\t_\t_
13\tsick\tsick\tADJ\t_\t_\t3\txcomp\t_\t_
14\t!\t!\tPUNCT\t_\t_\t3\tpunct\t_\t_

";

type EdgeSet = BTreeSet<(String, String)>;

fn edges(t: &Transcript, k: usize) -> EdgeSet {
    match build_syntactic(t, k) {
        Ok(g) => g.edges().map(|(a, b, _)| (a.to_string(), b.to_string())).collect(),
        Err(_) => BTreeSet::new(),
    }
}

/// Content-lemma pairs within `k` hops, from all-pairs tree distances.
fn oracle_edges(t: &Transcript, k: usize) -> EdgeSet {
    let mut out = BTreeSet::new();
    for s in &t.sentences {
        let n = s.tokens.len();
        let mut a = vec![vec![false; n]; n];
        for (i, tok) in s.tokens.iter().enumerate() {
            if tok.head > 0 {
                let h = tok.head as usize - 1;
                a[i][h] = true;
                a[h][i] = true;
            }
        }
        let d = floyd_warshall(&a);
        for i in 0..n {
            for j in i + 1..n {
                let (ti, tj) = (&s.tokens[i], &s.tokens[j]);
                if ti.is_content() && tj.is_content() && ti.lemma != tj.lemma && d[i][j].is_some_and(|x| x <= k) {
                    let (u, v) = if ti.lemma < tj.lemma { (&ti.lemma, &tj.lemma) } else { (&tj.lemma, &ti.lemma) };
                    out.insert((u.clone(), v.clone()));
                }
            }
        }
    }
    out
}

fn edge_rules() -> Outcome {
    let sw: Stopwords = ["so", "very", "you", "much"].into_iter().collect();
    let sick = parse_conllu(SICK.as_bytes(), &sw).map_err(|e| e.to_string())?.transcripts.remove(0);
    let pair = ("i".to_string(), "sick".to_string());
    ensure(!edges(&sick, 1).contains(&pair), || "I-sick linked at k = 1".into())?;
    ensure(edges(&sick, 2).contains(&pair) && edges(&sick, 4).contains(&pair), || "I-sick missing at k = 2 or 4".into())?;
    let g = build_syntactic(&sick, 4).map_err(|e| e.to_string())?;
    ensure(g.nodes().iter().all(|n| !["so", "very", "you", "much", "-", ",", "!"].contains(&n.as_str())), || {
        format!("stopword or punctuation node in {:?}", g.nodes())
    })?;

    let stopwords = load_stopwords(None).map_err(|e| e.to_string())?;
    let corpus = read_corpus(&support::fixtures().join("corpus"), &stopwords).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let cases = std::iter::once((&sick, &sw)).chain(corpus.transcripts.iter().map(|t| (t, &stopwords)));
    for (t, stopwords) in cases {
        let mut prev = BTreeSet::new();
        for k in 1..=6 {
            let e = edges(t, k);
            ensure(e == oracle_edges(t, k), || format!("{} k = {k}: edges differ from tree-distance oracle", t.transcript_id))?;
            ensure(prev.is_subset(&e), || format!("{} loses edges going to k = {k}", t.transcript_id))?;
            ensure(e.iter().all(|(a, b)| !stopwords.contains(a) && !stopwords.contains(b)), || {
                format!("{} has a stopword node", t.transcript_id)
            })?;
            prev = e;
            checked += 1;
        }
    }
    Ok(format!("I-sick linked from k = 2; {checked} edge sets monotone in k and equal to the oracle"))
}

fn tiny_lexicon() -> EmotionLexicon {
    use Emotion::*;
    EmotionLexicon::from_entries([
        ("calm", &[Trust, Joy][..]),
        ("gift", &[Joy, Surprise, Anticipation][..]),
        ("grief", &[Sadness][..]),
        ("rage", &[Anger, Disgust][..]),
        ("storm", &[Fear, Anger][..]),
        ("party", &[Joy][..]),
    ])
}

/// Mean and standard deviation of each emotion count over every m-subset.
fn exact_moments(lex: &EmotionLexicon, m: usize) -> ([f64; 8], [f64; 8]) {
    let pool = lex.emotion_bearing();
    let subsets: Vec<u32> = (0u32..1 << pool.len()).filter(|s| s.count_ones() as usize == m).collect();
    let w = 1.0 / subsets.len() as f64;
    let (mut mean, mut sq) = ([0.0; 8], [0.0; 8]);
    for s in &subsets {
        for e in Emotion::ALL {
            let c = (0..pool.len()).filter(|&i| s >> i & 1 == 1 && pool[i].contains(e)).count() as f64;
            mean[e as usize] += w * c;
            sq[e as usize] += w * c * c;
        }
    }
    (mean, std::array::from_fn(|e| (sq[e] - mean[e] * mean[e]).sqrt()))
}

fn fixed_null(mean: f64, sd: f64) -> NullModel {
    NullModel { m: 5, n_samples: 1000, seed: 0, mean: PerEmotion([mean; 8]), std: PerEmotion([sd; 8]) }
}

fn null_model_convergence() -> Outcome {
    let lex = tiny_lexicon();
    let n = 10_000;
    let mut worst = 0.0f64;
    for m in 1..=5 {
        let (mu, sd) = exact_moments(&lex, m);
        let null = null_model(m, &lex, n, 17 + m as u64, Sampling::WithoutReplacement).map_err(|e| e.to_string())?;
        for e in Emotion::ALL {
            let i = e as usize;
            let se = sd[i] / (n as f64).sqrt();
            let d = (null.mean[e] - mu[i]).abs();
            ensure(d <= 3.0 * se + 1e-12, || format!("m = {m} {e:?}: sampled mean {} vs exact {}", null.mean[e], mu[i]))?;
            if se > 0.0 {
                worst = worst.max(d / se);
            }
        }
    }

    let counts = EmotionCounts { counts: PerEmotion([3; 8]), m: 5 };
    let z = z_scores(&counts, &fixed_null(3.0, 1.5)).map_err(|e| e.to_string())?;
    ensure(z.z.iter().all(|(_, v)| v == 0.0), || "z != 0 when the count equals the null mean".into())?;
    let two = EmotionCounts { counts: PerEmotion([2; 8]), m: 5 };
    let under = z_scores(&two, &fixed_null(0.0, 2.0 / 1.95)).map_err(|e| e.to_string())?;
    let over = z_scores(&two, &fixed_null(0.0, 2.0 / 1.97)).map_err(|e| e.to_string())?;
    ensure(under.significance[Emotion::Joy] == Significance::None, || "z = 1.95 flagged".into())?;
    ensure(over.significance[Emotion::Joy] == Significance::Over, || "z = 1.97 not flagged".into())?;
    Ok(format!("sampled means within {worst:.2} standard errors of the hypergeometric values; z = 0 at the mean; flag flips between 1.95 and 1.97"))
}

fn shap_dataset(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| f64::from(r.gen_range(0..6u8)) / 2.0).collect()).collect();
    let y = rows.iter().map(|x| 2.0 * x[0] - x[p - 1] + x[0] * x[p / 2] + r.gen::<f64>()).collect();
    (Matrix::from_rows(&rows), y)
}

fn tree_shap_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut rows_checked = 0;
    for seed in 0..4 {
        for p in 1..=4 {
            let (x, y) = shap_dataset(seed, 40, p);
            let all: Vec<usize> = (0..x.rows()).collect();
            for depth in 1..=3 {
                let rfr = EnsembleConfig { max_depth: Some(depth), max_features: MaxFeatures::Sqrt, ..EnsembleConfig::rfr(4, seed) };
                let gbm = EnsembleConfig {
                    max_depth: Some(depth),
                    subsample: 0.75,
                    loss: Loss::Absolute,
                    ..EnsembleConfig::gbm(4, 0.3, seed)
                };
                for cfg in [rfr, gbm] {
                    let model = fit(&x, &y, &all, &cfg).map_err(|e| e.to_string())?;
                    for i in (0..x.rows()).step_by(4) {
                        let fast = shap_row(&model, x.row(i));
                        for (a, b) in fast.iter().zip(ensemble_shapley(&model, x.row(i))) {
                            worst = worst.max((a - b).abs());
                        }
                        rows_checked += 1;
                    }
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("largest gap to exhaustive coalitions {worst:e}"))?;

    // Every SHAP matrix written by a full fixture run.
    let out = fixture_run()?;
    let mut samples = 0;
    let mut gap = 0.0f64;
    for rel in list_files(&out.join("explain")).map_err(|e| e.to_string())? {
        if !rel.ends_with("shap.csv") {
            continue;
        }
        let mut rdr = csv::Reader::from_path(out.join("explain").join(&rel)).map_err(|e| e.to_string())?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let v: Vec<f64> = rec.iter().skip(1).map(|c| c.parse().unwrap_or(f64::NAN)).collect();
            let sum: f64 = v[1..].iter().sum();
            gap = gap.max((sum - v[0]).abs());
            samples += 1;
        }
    }
    ensure(samples > 0, || "no SHAP matrices in the fixture run".into())?;
    ensure(gap < 1e-6, || format!("local accuracy gap {gap:e}"))?;
    Ok(format!("{rows_checked} rows within {worst:.1e} of exhaustive Shapley; {samples} exported rows with local accuracy gap {gap:.1e}"))
}

fn gaussian(r: &mut impl Rng) -> f64 {
    let u: f64 = 1.0 - r.gen::<f64>();
    let v: f64 = r.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}

/// 232 random networks described by every metric; the target depends on
/// modularity and core number only.
fn network_dataset(seed: u64) -> Result<(Matrix, Vec<f64>, Vec<String>), String> {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    while rows.len() < 232 {
        let n = r.gen_range(10..=40);
        let p = r.gen_range(0.05..0.45);
        let g = random_graph(&mut r, n, p);
        let mv = MetricVector::compute(&g, &MetricOptions { community: CommunityMethod::Greedy, seed: rows.len() as u64 })
            .map_err(|e| e.to_string())?;
        rows.push(mv.values().to_vec());
    }
    let col = |name: &str| {
        let j = METRIC_COLUMNS.iter().position(|c| *c == name).expect("metric column");
        standardize(&rows.iter().map(|row| row[j]).collect::<Vec<_>>())
    };
    let (q, core) = (col("modularity"), col("core"));
    let y = q.iter().zip(&core).map(|(a, b)| a + 0.5 * b * b.abs() + 0.2 * gaussian(&mut r)).collect();
    ensure(rows.iter().flatten().all(|v| v.is_finite()), || "non-finite metric".into())?;
    Ok((Matrix::from_rows(&rows), y, METRIC_COLUMNS.iter().map(|c| c.to_string()).collect()))
}

fn ml_sanity() -> Outcome {
    let (x, y, names) = network_dataset(232)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for grid in [Grid::paper_rfr(), Grid::paper_gbm()] {
        let kind = grid.kind.name().to_uppercase();
        let configs = grid.configs(3);
        let rep = cross_validate(&x, &y, &names, &configs, 4, 11, &Parallel).map_err(|e| e.to_string())?;
        let perm = permutation_baseline(&x, &y, &names, &[rep.config], 4, 11, 50, &Parallel).map_err(|e| e.to_string())?;
        let quiet = perm.iter().filter(|p| p.report.p_value > 0.05).count();
        let rs: Vec<f64> = perm.iter().map(|p| p.report.pearson_r).collect();
        let spread = (rs.iter().map(|r| r * r).sum::<f64>() / rs.len() as f64).sqrt();
        ok &= rep.pearson_r > 0.9 && quiet >= 45;
        parts.push(format!(
            "{kind} r = {:.3} over {} configs, shuffled p > 0.05 in {quiet}/50 (rms shuffled r {spread:.3}, {:.3} expected for independent pairs)",
            rep.pearson_r,
            configs.len(),
            1.0 / ((y.len() - 1) as f64).sqrt()
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn planted(seed: u64, n: usize) -> (Matrix, Vec<f64>) {
    let mut r = rng(seed);
    let rows: Vec<[f64; 3]> = (0..n).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    let y = rows.iter().map(|x| 3.0 * x[0] + 2.0 * x[1] * x[1] + 0.1 * r.gen::<f64>()).collect();
    (Matrix::from_rows(&rows), y)
}

fn elimination() -> Outcome {
    let names: Vec<String> = ["signal", "weak_signal", "noise"].map(String::from).to_vec();
    let grid = [EnsembleConfig { max_depth: Some(4), ..EnsembleConfig::gbm(60, 0.2, 0) }];
    let mut correct = 0;
    for run in 0..20u64 {
        let (x, y) = planted(100 + run, 120);
        let settings = EliminationSettings { seed: run, ..EliminationSettings::default() };
        let out = shap_feature_elimination(&x, &y, &names, &grid, &settings, &Parallel).map_err(|e| e.to_string())?;
        if out.kept.contains(&0) && !out.kept.contains(&2) {
            correct += 1;
        }
    }
    ensure(correct >= 19, || format!("correct in {correct} of 20 runs"))?;
    Ok(format!("noise dropped and signal kept in {correct} of 20 runs"))
}

fn timed_fixture_run(dir: &Path) -> Result<Duration, String> {
    let t = Instant::now();
    Pipeline::new(support::fixture_config(dir, &[])).run_all().map_err(|e| e.to_string())?;
    Ok(t.elapsed())
}

/// The first full fixture run, shared between checks.
fn fixture_run() -> Result<&'static Path, String> {
    static RUN: OnceLock<Result<(PathBuf, Duration), String>> = OnceLock::new();
    let res = RUN.get_or_init(|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?.keep();
        timed_fixture_run(&dir).map(|t| (dir, t))
    });
    res.as_ref().map(|(p, _)| p.as_path()).map_err(Clone::clone)
}

fn manifests(out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = vec![RUN_MANIFEST.to_string()];
    files.extend(Stage::ALL.iter().map(|s| format!("{}/{STAGE_MANIFEST}", s.name())));
    files.into_iter().map(|f| fs::read(out.join(&f)).map(|b| (f.clone(), b)).map_err(|e| format!("{f}: {e}"))).collect()
}

fn determinism() -> Outcome {
    let first = fixture_run()?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let took = timed_fixture_run(second.path())?;
    let (a, b) = (manifests(first)?, manifests(second.path())?);
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    ensure(took < Duration::from_secs(300), || format!("fixture run took {took:?}"))?;
    Ok(format!("{} manifests byte-identical; fixture run {:.1} s", a.len(), took.as_secs_f64()))
}

fn pearson_significance() -> Outcome {
    let p = correlation_p_value(0.37, 232);
    let t = 0.37 * (230.0f64 / (1.0 - 0.37 * 0.37)).sqrt();
    let oracle = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 230.0).map_err(|e| e.to_string())?.cdf(t));
    ensure((p - oracle).abs() <= 1e-6 * oracle, || format!("p = {p:e}, Student t oracle {oracle:e}"))?;
    ensure(p < 0.01, || format!("p = {p:e}"))?;
    Ok(format!("p = {p:.3e} (oracle {oracle:.3e})"))
}
