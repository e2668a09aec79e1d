//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating criterion fails. The desk experiment is reported
//! for inspection; only its invariant checks gate.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Zipf};

use typical_core::metrics::{epsilon_values_after, ngram_diversity, rep_l, zipf_from_frequencies};
use typical_core::ngram::{Vocab, EOS};
use typical_core::strategies::MASS_TOLERANCE;
use typical_core::{
    apply_strategy, batch_generate, perplexity, truncate_nucleus, truncate_top_k, truncate_typical, CategoricalLogDist,
    LanguageModel, NGramModel, StrategyConfig, TokenId, TrainConfig, TruncatedDist,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Random distributions

/// Dirichlet draw via normalized Gamma variates.
fn dirichlet(rng: &mut ChaCha8Rng, v: usize, concentration: f64) -> Vec<f64> {
    let g = Gamma::new(concentration, 1.0).unwrap();
    loop {
        let x: Vec<f64> = (0..v).map(|_| g.sample(rng)).collect();
        let s: f64 = x.iter().sum();
        if s > 0.0 && x.iter().all(|&p| p > 0.0) {
            return x.into_iter().map(|p| p / s).collect();
        }
    }
}

/// Count-like distribution with many exact ties.
fn tied(rng: &mut ChaCha8Rng, v: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..v).map(|_| rng.random_range(1..5) as f64).collect();
    let s: f64 = c.iter().sum();
    c.into_iter().map(|x| x / s).collect()
}

fn random_dists(n: usize, seed: u64) -> Vec<CategoricalLogDist> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concentrations = [0.05, 0.3, 1.0, 5.0];
    (0..n)
        .map(|i| {
            let v = rng.random_range(2..=64);
            let p = if i % 10 == 9 {
                tied(&mut rng, v)
            } else {
                let c = concentrations[rng.random_range(0..concentrations.len())];
                dirichlet(&mut rng, v, c)
            };
            let logits: Vec<f64> = p.iter().map(|x| x.ln()).collect();
            CategoricalLogDist::log_normalize(&logits).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force selection oracles. Each decides membership token by token
// from the mass ranked strictly ahead of it, O(|V|^2).

fn probs_of(d: &CategoricalLogDist) -> Vec<f64> {
    d.log_probs().iter().map(|l| l.exp()).collect()
}

/// `ahead(i, j)`: token j is ranked strictly before token i.
fn select_by_mass_ahead(p: &[f64], threshold: f64, ahead: impl Fn(usize, usize) -> bool) -> Vec<TokenId> {
    if threshold >= 1.0 {
        return (0..p.len() as TokenId).collect();
    }
    (0..p.len())
        .filter(|&i| {
            let before: f64 = (0..p.len()).filter(|&j| ahead(i, j)).map(|j| p[j]).sum();
            before < threshold - MASS_TOLERANCE
        })
        .map(|i| i as TokenId)
        .collect()
}

fn oracle_top_k(p: &[f64], k: usize) -> Vec<TokenId> {
    (0..p.len())
        .filter(|&i| {
            let ahead = (0..p.len()).filter(|&j| p[j] > p[i] || (p[j] == p[i] && j < i)).count();
            ahead < k
        })
        .map(|i| i as TokenId)
        .collect()
}

fn oracle_nucleus(p: &[f64], n: f64) -> Vec<TokenId> {
    select_by_mass_ahead(p, n, |i, j| p[j] > p[i] || (p[j] == p[i] && j < i))
}

fn oracle_typical(lp: &[f64], tau: f64) -> Vec<TokenId> {
    let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let h: f64 = p.iter().zip(lp).map(|(&q, &l)| if q > 0.0 { -q * l } else { 0.0 }).sum();
    let key: Vec<f64> = lp.iter().map(|l| (h + l).abs()).collect();
    select_by_mass_ahead(&p, tau, |i, j| {
        key[j] < key[i] || (key[j] == key[i] && (p[j] > p[i] || (p[j] == p[i] && j < i)))
    })
}

fn sorted_support(t: &TruncatedDist) -> Vec<TokenId> {
    let mut s = t.support().to_vec();
    s.sort_unstable();
    s
}

fn check_renormalized(t: &TruncatedDist, p: &[f64]) -> Result<(), String> {
    let z: f64 = t.support().iter().map(|&y| p[y as usize]).sum();
    for (&y, &pi) in t.support().iter().zip(t.probs()) {
        ensure((pi - p[y as usize] / z).abs() <= 1e-12, || format!("π({y}) = {pi}, expected {}", p[y as usize] / z))?;
    }
    Ok(())
}

const GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const K_GRID: [usize; 8] = [1, 2, 3, 5, 10, 30, 64, 100];

fn truncation_oracle_equivalence() -> Check {
    let dists = random_dists(1000, 11);
    let start = Instant::now();
    let mut configs = 0usize;
    for (di, d) in dists.iter().enumerate() {
        let p = probs_of(d);
        for &k in &K_GRID {
            let t = truncate_top_k(d, k).map_err(|e| e.to_string())?;
            ensure(sorted_support(&t) == oracle_top_k(&p, k), || format!("dist {di}: top-k k={k} support mismatch"))?;
            check_renormalized(&t, &p)?;
            configs += 1;
        }
        for &x in &GRID {
            let t = truncate_nucleus(d, x).map_err(|e| e.to_string())?;
            ensure(sorted_support(&t) == oracle_nucleus(&p, x), || format!("dist {di}: nucleus n={x} support mismatch"))?;
            check_renormalized(&t, &p)?;
            let t = truncate_typical(d, x).map_err(|e| e.to_string())?;
            ensure(sorted_support(&t) == oracle_typical(d.log_probs(), x), || {
                format!("dist {di}: typical tau={x} support mismatch")
            })?;
            check_renormalized(&t, &p)?;
            configs += 2;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{} distributions, {configs} configurations, {secs:.2} s", dists.len()))
}

// ---------------------------------------------------------------------------

fn identity_limits() -> Check {
    let dists = random_dists(1000, 12);
    let mut worst = 0.0f64;
    for (di, d) in dists.iter().enumerate() {
        let p = probs_of(d);
        let v = d.vocab_size();
        let cfgs = [
            StrategyConfig::Typical { tau: 1.0 },
            StrategyConfig::Nucleus { n: 1.0 },
            StrategyConfig::TopK { k: v },
            StrategyConfig::TopK { k: v + 7 },
            StrategyConfig::Temperature { t: 1.0 },
            StrategyConfig::Ancestral,
        ];
        for cfg in cfgs {
            let t = apply_strategy(d, &cfg).map_err(|e| e.to_string())?;
            ensure(t.len() == v, || format!("dist {di}: {cfg} kept {} of {v}", t.len()))?;
            for (&y, &pi) in t.support().iter().zip(t.probs()) {
                worst = worst.max((pi - p[y as usize]).abs());
            }
        }
        let scaled = d.apply_temperature(1.0).map_err(|e| e.to_string())?;
        for (a, b) in scaled.log_probs().iter().zip(d.log_probs()) {
            worst = worst.max((a.exp() - b.exp()).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:e} over {} distributions", dists.len()))
}

// ---------------------------------------------------------------------------
// Synthetic corpus: pseudo-words with Zipfian unigrams and sparse preferred
// successors, one sentence per line.

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    const SYL: [&str; 24] = [
        "ka", "lo", "mi", "ne", "tu", "ra", "si", "po", "de", "ba", "gu", "fe", "zo", "yi", "wa", "he", "qu", "xo",
        "ja", "vi", "cu", "sa", "te", "ni",
    ];
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(1..=3);
        let w: String = (0..len).map(|_| SYL[rng.random_range(0..SYL.len())]).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn synthetic_corpus(seed: u64, target_bytes: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_words = 1500;
    let words = pseudo_words(&mut rng, n_words);
    let unigram = Zipf::new(n_words as f64, 1.1).unwrap();
    let succ_rank = Zipf::new(20.0, 1.3).unwrap();
    let successors: Vec<Vec<usize>> = (0..n_words)
        .map(|_| (0..20).map(|_| unigram.sample(&mut rng) as usize - 1).collect())
        .collect();

    let mut text = String::new();
    while text.len() < target_bytes {
        let mut w = unigram.sample(&mut rng) as usize - 1;
        let mut line = words[w].clone();
        let mut len = 1;
        while len < 3 || rng.random::<f64>() > 1.0 / 12.0 {
            w = if rng.random::<f64>() < 0.75 {
                successors[w][succ_rank.sample(&mut rng) as usize - 1]
            } else {
                unigram.sample(&mut rng) as usize - 1
            };
            line.push(' ');
            line.push_str(&words[w]);
            len += 1;
        }
        text.push_str(&line);
        text.push('\n');
    }
    text
}

// ---------------------------------------------------------------------------

fn epsilon_reduction() -> Check {
    let taus = [0.2, 0.5, 0.9, 0.95];
    let mut tested = 0;
    for (di, d) in random_dists(1000, 13).iter().enumerate() {
        let p = probs_of(d);
        let h = d.entropy();
        let eps: Vec<f64> = d.log_probs().iter().map(|l| (h + l).abs()).collect();
        let under_q: f64 = p.iter().zip(&eps).map(|(a, b)| a * b).sum();
        for tau in taus {
            let t = truncate_typical(d, tau).map_err(|e| e.to_string())?;
            let under_pi: f64 = t.support().iter().zip(t.probs()).map(|(&y, &pi)| pi * eps[y as usize]).sum();
            ensure(under_pi <= under_q + 1e-12, || {
                format!("dist {di} tau={tau}: E_pi = {under_pi} > E_q = {under_q}")
            })?;
            tested += 1;
        }
    }

    let model = NGramModel::train(synthetic_corpus(5, 300_000).lines(), TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let mean_eps = |cfg: StrategyConfig| -> Result<(f64, usize), String> {
        let (mut sum, mut n, mut round) = (0.0, 0usize, 0u64);
        while n < 10_000 {
            let prompts = vec![Vec::new(); 500];
            let records = batch_generate(&model, &cfg, &prompts, 200, 1_000_000 * round).map_err(|e| e.to_string())?;
            for r in &records {
                for t in &r.per_token {
                    sum += t.epsilon;
                    n += 1;
                }
            }
            round += 1;
        }
        Ok((sum / n as f64, n))
    };
    let (typ, n_typ) = mean_eps(StrategyConfig::Typical { tau: 0.95 })?;
    let (anc, n_anc) = mean_eps(StrategyConfig::Ancestral)?;
    ensure(typ <= anc + 1e-6, || format!("typical mean ε {typ:.6} > ancestral {anc:.6}"))?;
    Ok(format!(
        "{tested} distribution/tau pairs; generated mean ε typical(0.95) {typ:.6} over {n_typ} tokens <= ancestral {anc:.6} over {n_anc}"
    ))
}

// ---------------------------------------------------------------------------

fn near(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name}: got {got}, want {want} ± {tol}"))
}

fn hand_computed_values() -> Check {
    let d = CategoricalLogDist::from_probs(&[0.9, 0.05, 0.05]).map_err(|e| e.to_string())?;
    let t = truncate_typical(&d, 0.9).map_err(|e| e.to_string())?;
    ensure(t.support() == [0], || format!("typical support {:?}", t.support()))?;

    let rep = rep_l(&"a b a b a b".split(' ').collect::<Vec<_>>(), 2).map_err(|e| e.to_string())?;
    near("rep_2", rep, 0.8, 1e-12)?;

    let a4: Vec<&str> = "a a a a".split(' ').collect();
    near("diversity", ngram_diversity(&a4), 0.520833, 1e-6)?;

    let table: Vec<f64> = (1..=200).map(|r| 5000.0 * (r as f64).powf(-1.2)).collect();
    near("zipf", zipf_from_frequencies(&table).map_err(|e| e.to_string())?, 1.2, 1e-6)?;

    let words: Vec<String> = (0..97).map(|i| format!("w{i}")).collect();
    let uniform = NGramModel::untrained(Vocab::new(words).map_err(|e| e.to_string())?, TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let ids = uniform.encode_text("w3 w90 w3 w3 w17 w0");
    near("uniform perplexity", perplexity(&uniform, &ids).map_err(|e| e.to_string())?, 100.0, 1e-9)?;

    let cfg = TrainConfig {
        order: 2,
        lambdas: vec![0.0, 1.0],
        floor: 0.0,
        ..Default::default()
    };
    let bigram = NGramModel::train(["a a a a"], cfg).map_err(|e| e.to_string())?;
    let a = bigram.vocab().id("a");
    let eps = epsilon_values_after(&bigram, &[], &[a, a, a, a, EOS]).map_err(|e| e.to_string())?;
    let h = bigram.next_dist(&[a]).map_err(|e| e.to_string())?.entropy();
    near("toy H", h, 0.562335, 1e-6)?;
    for &e in &eps[1..4] {
        near("toy ε(a)", e, 0.274653, 1e-6)?;
    }
    near("toy ε(EOS)", eps[4], 0.823959, 1e-6)?;
    Ok("typical support, rep_2, diversity, zipf, uniform perplexity, toy ε values".into())
}

// ---------------------------------------------------------------------------

fn lm_contract() -> Check {
    let model = NGramModel::train(synthetic_corpus(6, 200_000).lines(), TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let v = model.vocab_size();
    let floor = model.floor() / v as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let contexts: Vec<Vec<TokenId>> = (0..100)
        .map(|_| {
            let len = rng.random_range(0..6);
            (0..len).map(|_| rng.random_range(0..v as TokenId)).collect()
        })
        .collect();
    let (mut worst_sum, mut worst_min) = (0.0f64, f64::INFINITY);
    for ctx in &contexts {
        let d = model.next_dist(ctx).map_err(|e| e.to_string())?;
        let p = probs_of(&d);
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        worst_min = worst_min.min(p.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    ensure(worst_sum <= 1e-9, || format!("sum deviates by {worst_sum:e}"))?;
    ensure(worst_min >= floor - 1e-12, || format!("min prob {worst_min:e} < α/|V| = {floor:e}"))?;

    let bytes = model.to_bytes();
    let back = NGramModel::from_bytes(&bytes).map_err(|e| e.to_string())?;
    ensure(back.to_bytes() == bytes, || "re-saved bytes differ".into())?;
    for ctx in &contexts {
        let x = model.next_dist(ctx).map_err(|e| e.to_string())?;
        let y = back.next_dist(ctx).map_err(|e| e.to_string())?;
        let same = x.log_probs().iter().zip(y.log_probs()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same, || format!("reloaded model differs at context {ctx:?}"))?;
    }
    Ok(format!("100 contexts, |sum-1| <= {worst_sum:.1e}, min prob {worst_min:.3e} >= {floor:.3e}, round trip bit-exact"))
}

// ---------------------------------------------------------------------------

fn typical_bin(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_typical"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    } else {
        Err(format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn token_ids(jsonl: &str) -> Vec<Vec<u64>> {
    jsonl
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["token_ids"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
        })
        .collect()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, synthetic_corpus(7, 50_000)).map_err(|e| e.to_string())?;
    let model = dir.path().join("m.lm");
    typical_bin(&["train", "--corpus", s(&corpus), "--out", s(&model)])?;

    let run = |name: &str, strategy: &[&str]| -> Result<String, String> {
        let out = dir.path().join(name);
        let mut args = vec!["generate", "--model", s(&model)];
        args.extend_from_slice(strategy);
        args.extend_from_slice(&["--prompt", "", "--num", "2", "--max-len", "50", "--seed", "7", "--out", s(&out)]);
        typical_bin(&args)?;
        std::fs::read_to_string(&out).map_err(|e| e.to_string())
    };
    let a = run("a.jsonl", &["--strategy", "typical", "--tau", "0.95"])?;
    let b = run("b.jsonl", &["--strategy", "typical", "--tau", "0.95"])?;
    ensure(a == b, || "typical JSONL differs between runs".into())?;

    let k1 = run("k1.jsonl", &["--strategy", "topk", "--k", "1"])?;
    let gr = run("greedy.jsonl", &["--strategy", "greedy"])?;
    ensure(token_ids(&k1) == token_ids(&gr), || "topk k=1 differs from greedy".into())?;
    Ok(format!("{} identical bytes across runs; topk k=1 == greedy", a.len()))
}

// ---------------------------------------------------------------------------

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn step_times(v: usize, steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<CategoricalLogDist> = (0..8)
        .map(|_| {
            let p = dirichlet(&mut rng, v, 0.5);
            CategoricalLogDist::log_normalize(&p.iter().map(|x| x.ln()).collect::<Vec<_>>()).unwrap()
        })
        .collect();
    (0..steps)
        .map(|i| {
            let start = Instant::now();
            let t = truncate_typical(&dists[i % dists.len()], 0.95).unwrap();
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(t);
            elapsed
        })
        .collect()
}

fn performance() -> Check {
    let med = median(step_times(50_000, 1000, 31)) * 1e3;
    ensure(med <= 5.0, || format!("median {med:.3} ms at |V|=50000"))?;

    let sizes = [1_000usize, 2_000, 4_000, 8_000, 16_000, 32_000, 64_000];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&v| ((v as f64).ln(), median(step_times(v, 200, v as u64)).ln()))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ensure(slope < 2.0, || format!("log-log scaling slope {slope:.3}"))?;
    Ok(format!("median {med:.3} ms at |V|=50000; scaling exponent {slope:.3} over 1k..64k"))
}

// ---------------------------------------------------------------------------

struct Row {
    label: String,
    values: Vec<f64>,
}

fn parse_table(tsv: &str) -> Vec<Row> {
    tsv.lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split('\t');
            let label = f.next().unwrap().to_owned();
            Row {
                label,
                values: f.map(|x| x.parse().unwrap()).collect(),
            }
        })
        .collect()
}

/// Generates and evaluates the four strategies on a ~1 MB synthetic corpus.
/// Prints the comparison table; gates only on determinism, metric ranges
/// and the ε ordering between typical and temperature 1.0 (ancestral).
fn desk_experiment() -> (Check, String) {
    let mut table = String::new();
    let result = (|| -> Check {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let corpus = synthetic_corpus(2022, 1_000_000);
        let lines: Vec<&str> = corpus.lines().collect();
        let held_out = lines.len() / 10;
        let train_g = dir.path().join("train_g.txt");
        let train_i = dir.path().join("train_i.txt");
        let reference = dir.path().join("reference.txt");
        let prompts = dir.path().join("prompts.txt");
        let body = &lines[held_out..];
        let (half_a, half_b) = body.split_at(body.len() / 2);
        let write = |p: &Path, ls: &[&str]| std::fs::write(p, ls.join("\n") + "\n").map_err(|e| e.to_string());
        write(&train_g, body)?;
        write(&train_i, half_b)?;
        let _ = half_a;
        write(&reference, &lines[..100])?;
        let prompt_lines: Vec<String> = lines[..100]
            .iter()
            .map(|l| l.split(' ').take(3).collect::<Vec<_>>().join(" "))
            .collect();
        write(&prompts, &prompt_lines.iter().map(String::as_str).collect::<Vec<_>>())?;

        let model_g = dir.path().join("g.lm");
        let model_i = dir.path().join("i.lm");
        typical_bin(&["train", "--corpus", s(&train_g), "--out", s(&model_g)])?;
        typical_bin(&["train", "--corpus", s(&train_i), "--out", s(&model_i), "--order", "2", "--lambdas", "0.3,0.7"])?;

        let compare = |out: &Path| {
            typical_bin(&[
                "compare",
                "--model-g",
                s(&model_g),
                "--model-i",
                s(&model_i),
                "--strategies",
                "typical:0.95,nucleus:0.95,topk:30,temperature:1.0",
                "--prompts",
                s(&prompts),
                "--num",
                "100",
                "--max-len",
                "200",
                "--seed",
                "2022",
                "--reference",
                s(&reference),
                "--out",
                s(out),
            ])
        };
        let out_a = dir.path().join("a.tsv");
        let out_b = dir.path().join("b.tsv");
        compare(&out_a)?;
        compare(&out_b)?;
        let tsv = std::fs::read_to_string(&out_a).map_err(|e| e.to_string())?;
        ensure(tsv == std::fs::read_to_string(&out_b).map_err(|e| e.to_string())?, || {
            "compare output differs between runs".into()
        })?;
        table = tsv.clone();

        // columns: ppl_g ppl_i rep zipf diversity eps_mean n_tokens
        let rows = parse_table(&tsv);
        for r in &rows {
            let v = &r.values;
            ensure(v[0] >= 1.0 && v[1] >= 1.0, || format!("{}: perplexity below 1", r.label))?;
            ensure((0.0..=1.0).contains(&v[2]), || format!("{}: rep out of range", r.label))?;
            ensure(v[3].is_finite(), || format!("{}: zipf not finite", r.label))?;
            ensure((0.0..=1.0).contains(&v[4]), || format!("{}: diversity out of range", r.label))?;
            ensure(v[5] >= 0.0, || format!("{}: negative ε", r.label))?;
        }
        let eps = |prefix: &str| rows.iter().find(|r| r.label.starts_with(prefix)).map(|r| r.values[5]).unwrap();
        let (typ, anc) = (eps("typical"), eps("temperature"));
        ensure(typ <= anc + 1e-6, || format!("typical ε {typ} > temperature(1.0) ε {anc}"))?;
        let rep = |prefix: &str| rows.iter().find(|r| r.label.starts_with(prefix)).map(|r| r.values[2]).unwrap();
        Ok(format!(
            "deterministic, metrics in range, ε typical {typ:.4} <= ancestral {anc:.4}; rep typical {:.4} / nucleus {:.4} / topk {:.4} / reference {:.4}",
            rep("typical"),
            rep("nucleus"),
            rep("topk"),
            rep("reference")
        ))
    })();
    (result, table)
}

// ---------------------------------------------------------------------------

fn run(name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS {name} ({secs:.1} s): {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL {name} ({secs:.1} s): {detail}");
            false
        }
    }
}

fn main() {
    // Arguments from the test runner (filters, --nocapture) are ignored.
    let mut ok = true;
    ok &= run("truncation_oracle_equivalence", truncation_oracle_equivalence);
    ok &= run("identity_limits", identity_limits);
    ok &= run("epsilon_reduction", epsilon_reduction);
    ok &= run("hand_computed_values", hand_computed_values);
    ok &= run("lm_contract", lm_contract);
    ok &= run("determinism", determinism);
    ok &= run("performance", performance);

    let mut table = String::new();
    ok &= run("desk_experiment_invariants", || {
        let (r, t) = desk_experiment();
        table = t;
        r
    });
    println!("REPORT published_tables: not reproducible at desk scale (needs fine-tuned large models and human ratings)");
    if !table.is_empty() {
        println!("REPORT desk_experiment table (synthetic ~1 MB corpus, 100 x 200-token continuations):");
        for line in table.lines() {
            println!("    {line}");
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
