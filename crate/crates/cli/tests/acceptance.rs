//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use newsprobe_cli::{run, Invocation, Stage};
use newsprobe_core::dataset::{stratified_split, LabeledExample, SplitName};
use newsprobe_core::evaluation::{compute_metrics, confusion};
use newsprobe_core::inference::{aggregate_prevalence, overall_rate};
use newsprobe_core::synthesis::{cosine_similarity, verify_pair, GateConfig};
use newsprobe_core::training::{
    early_stop_decision, head_forward, head_loss_gradient, lr_at, smooth_targets, smoothed_cross_entropy,
    ClassifierHead, StopDecision,
};
use newsprobe_core::{Article, Exact, OriginLabel, Prediction, RewriteResult, TrainConfig};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn label(i: usize) -> OriginLabel {
    OriginLabel::from_index(i).unwrap()
}

fn metrics_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.random_range(1..400);
        let skew: f64 = rng.random_range(0.0..1.0);
        let acc: f64 = rng.random_range(0.0..1.0);
        let pairs: Vec<(OriginLabel, OriginLabel)> = (0..n)
            .map(|_| {
                let truth = label(usize::from(rng.random_bool(skew)));
                let pred = if rng.random_bool(acc) { truth } else { truth.other() };
                (pred, truth)
            })
            .collect();
        for positive in OriginLabel::ALL {
            let cm = confusion(&pairs, positive).map_err(|e| e.to_string())?;
            let (mut tp, mut fp, mut fn_, mut hit) = (0i64, 0i64, 0i64, 0i64);
            for &(p, t) in &pairs {
                hit += i64::from(p == t);
                tp += i64::from(p == positive && t == positive);
                fp += i64::from(p == positive && t != positive);
                fn_ += i64::from(p != positive && t == positive);
            }
            let frac = |a: i64, b: i64| if b == 0 { Exact::from_integer(0) } else { Exact::new(a, b) };
            let prec = frac(tp, tp + fp);
            let rec = frac(tp, tp + fn_);
            let f1 = if tp == 0 { Exact::from_integer(0) } else { Exact::new(2 * tp, 2 * tp + fp + fn_) };
            let want = [frac(hit, n), prec, rec, f1];
            let exact = compute_metrics::<Exact>(&cm).map_err(|e| e.to_string())?;
            let got = [exact.accuracy, exact.precision, exact.recall, exact.f1];
            ensure(got == want, format!("case {case}: exact metrics {got:?} != tallies {want:?}"))?;
            let float = compute_metrics::<f64>(&cm).map_err(|e| e.to_string())?;
            let got = [float.accuracy, float.precision, float.recall, float.f1];
            for (g, w) in got.iter().zip(&want) {
                let w = *w.numer() as f64 / *w.denom() as f64;
                ensure((g - w).abs() <= 1e-12, format!("case {case}: f64 metric {g} vs {w}"))?;
            }
        }
    }
    Ok("1000 random matrices, both positive classes, exact and f64".into())
}

fn loss_and_gradient() -> Result<String, String> {
    let p = [0.05f64, 0.95];
    let floor = smoothed_cross_entropy(&p, &p).map_err(|e| e.to_string())?;
    let want = -(0.05f64 * 0.05f64.ln() + 0.95 * 0.95f64.ln());
    ensure((floor - want).abs() <= 1e-6, format!("floor {floor} vs {want}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for case in 0..200 {
        let mut v = || -> Vec<f64> { (0..8).map(|_| rng.random_range(-1.5..1.5)).collect() };
        let head = ClassifierHead::new([v(), v()], [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .map_err(|e| e.to_string())?;
        let pooled: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = smooth_targets::<f64>(rng.random_range(0..2), 0.1, 2).map_err(|e| e.to_string())?;
        let target = [t[0], t[1]];
        let loss = |head: &ClassifierHead<f64>| -> f64 {
            smoothed_cross_entropy(&head_forward(&pooled, head).unwrap(), &target).unwrap()
        };
        let g = head_loss_gradient(&pooled, &head, &target).map_err(|e| e.to_string())?;
        let mut check = |analytic: f64, numeric: f64, what: String| -> Result<(), String> {
            let scale = analytic.abs().max(numeric.abs());
            let err = (analytic - numeric).abs();
            if scale > 1e-8 {
                worst = worst.max(err / scale);
            }
            ensure(err <= 1e-4 * scale + 1e-10, format!("case {case} {what}: analytic {analytic} numeric {numeric}"))
        };
        for c in 0..2 {
            for j in 0..8 {
                let (mut up, mut down) = (head.clone(), head.clone());
                up.weight[c][j] += h;
                down.weight[c][j] -= h;
                check(g.weight[c][j], (loss(&up) - loss(&down)) / (2.0 * h), format!("w[{c}][{j}]"))?;
            }
            let (mut up, mut down) = (head.clone(), head.clone());
            up.bias[c] += h;
            down.bias[c] -= h;
            check(g.bias[c], (loss(&up) - loss(&down)) / (2.0 * h), format!("b[{c}]"))?;
        }
    }
    Ok(format!("floor {floor:.6}; 200 heads, worst relative error {worst:.1e}"))
}

fn examples(n_ai: usize, n_human: usize) -> Vec<LabeledExample> {
    (0..n_ai + n_human)
        .map(|i| LabeledExample {
            id: format!("e{i:05}"),
            text: format!("text {i}"),
            label: if i < n_ai { OriginLabel::AiRewritten } else { OriginLabel::HumanWritten },
            source: format!("s{}", i % 3),
            year: 2021,
        })
        .collect()
}

fn split_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n = rng.random_range(10..=5000);
        let share = if case % 2 == 0 { 0.5 } else { rng.random_range(0.05..0.95) };
        let n_ai = ((n as f64 * share).round() as usize).clamp(1, n - 1);
        let data = examples(n_ai, n - n_ai);
        let seed = rng.random();
        let b = stratified_split(&data, [0.8, 0.1, 0.1], seed).map_err(|e| format!("case {case} (n={n}): {e}"))?;
        let mut ids = BTreeSet::new();
        for name in SplitName::ALL {
            for e in b.get(name) {
                ensure(ids.insert(e.id.clone()), format!("case {case}: {} appears twice", e.id))?;
            }
        }
        ensure(ids.len() == n, format!("case {case}: {} of {n} examples assigned", ids.len()))?;
        for name in SplitName::ALL {
            let size = b.get(name).len();
            if size == 0 {
                continue;
            }
            for lab in OriginLabel::ALL {
                let overall = data.iter().filter(|e| e.label == lab).count() as f64 / n as f64;
                let here = b.class_count(name, lab) as f64 / size as f64;
                ensure(
                    (here - overall).abs() <= 1.0 / size as f64 + 1e-12,
                    format!("case {case}: {} {lab:?} share {here} vs {overall}", name.as_str()),
                )?;
            }
        }
    }
    let b = stratified_split(&examples(1800, 1800), [0.8, 0.1, 0.1], 42).map_err(|e| e.to_string())?;
    let sizes = [b.train.len(), b.validation.len(), b.test.len()];
    ensure(sizes == [2880, 360, 360], format!("3600 split into {sizes:?}"))?;
    Ok("200 random datasets; 3600 -> 2880/360/360".into())
}

fn schedule() -> Result<String, String> {
    let cfg = TrainConfig::default();
    let total = cfg.total_steps(2880);
    let s = newsprobe_core::Schedule64::new(total, cfg.warmup_ratio, cfg.learning_rate);
    ensure(cfg.effective_batch() == 16, "effective batch")?;
    ensure((total, s.warmup_steps) == (1080, 108), format!("total {total}, warmup {}", s.warmup_steps))?;
    ensure(s.lr_at(0) == 0.0, format!("lr_at(0) = {}", s.lr_at(0)))?;
    ensure(s.lr_at(108) == 2e-5, format!("lr_at(108) = {}", s.lr_at(108)))?;
    ensure(s.lr_at(1080) == 0.0, format!("lr_at(1080) = {}", s.lr_at(1080)))?;
    ensure(lr_at(1080, 1080, 0.1, 2e-5f64) == 0.0, "free lr_at at total")?;
    Ok("1080 total, 108 warmup, endpoints exact".into())
}

fn early_stopping() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10_000 {
        let len = rng.random_range(1..15);
        let levels = rng.random_range(2..8);
        let seq: Vec<f64> = (0..len).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let patience = rng.random_range(1..5);
        let (mut best, mut bad) = (f64::NEG_INFINITY, 0usize);
        for (i, &v) in seq.iter().enumerate() {
            if v > best {
                best = v;
                bad = 0;
            } else {
                bad += 1;
            }
            let want = if bad >= patience { StopDecision::Stop } else { StopDecision::Continue };
            let got = early_stop_decision(&seq[..=i], patience);
            ensure(got == want, format!("case {case}: {:?} patience {patience}: {got:?}", &seq[..=i]))?;
        }
    }
    Ok("10000 sequences, every prefix".into())
}

fn article(id: &str, body: &str) -> Article {
    Article {
        id: id.into(),
        source: "S".into(),
        published_at: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
        title: None,
        body: body.into(),
        origin: Some(OriginLabel::HumanWritten),
    }
}

fn synthesis_gates() -> Result<String, String> {
    let c = |a: &str, b: &str| cosine_similarity::<f64>(a, b).map_err(|e| e.to_string());
    ensure(c("haber metni burada", "haber metni burada")? == 1.0, "identity")?;
    ensure(c("a b c", "d e f")? == 0.0, "disjoint")?;
    let v = c("a a b", "a b b")?;
    ensure((v - 0.8).abs() <= 1e-9, format!("a a b / a b b = {v}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let original = article("x", "bir iki üç");
    let mut accepted = [0usize; 2];
    for case in 0..1000 {
        let result = RewriteResult {
            original_id: "x".into(),
            rewritten_text: "bir iki dört".into(),
            length_ratio: rng.random_range(0.5..1.6),
            cosine_similarity: rng.random_range(0.4..1.0),
            accepted: false,
            rejection_reasons: Vec::new(),
            provider_metadata: BTreeMap::new(),
        };
        let loose = GateConfig {
            min_length_ratio: rng.random_range(0.6..0.9),
            max_length_ratio: rng.random_range(1.1..1.4),
            min_cosine: rng.random_range(0.5..0.8),
        };
        let tight = GateConfig {
            min_length_ratio: loose.min_length_ratio + rng.random_range(0.0..0.1),
            max_length_ratio: loose.max_length_ratio - rng.random_range(0.0..0.1),
            min_cosine: loose.min_cosine + rng.random_range(0.0..0.15),
        };
        let a = verify_pair(&original, result.clone(), &loose).accepted;
        let b = verify_pair(&original, result, &tight).accepted;
        ensure(!b || a, format!("case {case}: accepted under tighter gates only"))?;
        accepted[0] += usize::from(a);
        accepted[1] += usize::from(b);
    }
    Ok(format!("hand cases exact; 1000 pairs, accepted {} loose / {} tight", accepted[0], accepted[1]))
}

/// (source, year, n, AI count, human %, AI %, mean confidence %)
const TABLE: [(&str, i32, usize, usize, &str, &str, &str); 12] = [
    ("Central", 2023, 300, 10, "96.7", "3.3", "96.5"),
    ("Central", 2024, 300, 10, "96.7", "3.3", "96.3"),
    ("Central", 2025, 300, 4, "98.7", "1.3", "96.5"),
    ("Central", 2026, 300, 8, "97.3", "2.7", "96.4"),
    ("Opposition", 2023, 300, 5, "98.3", "1.7", "96.4"),
    ("Opposition", 2024, 300, 5, "98.3", "1.7", "96.3"),
    ("Opposition", 2025, 300, 6, "98.0", "2.0", "96.5"),
    ("Opposition", 2026, 300, 6, "98.0", "2.0", "96.5"),
    ("Government", 2023, 275, 10, "96.4", "3.6", "96.4"),
    ("Government", 2024, 280, 7, "97.5", "2.5", "96.1"),
    ("Government", 2025, 285, 8, "97.2", "2.8", "96.2"),
    ("Government", 2026, 300, 8, "97.3", "2.7", "96.2"),
];

fn prevalence() -> Result<String, String> {
    let mut preds = Vec::new();
    for (source, year, n, ai, _, _, conf) in TABLE {
        let c: f64 = conf.parse::<f64>().unwrap() / 100.0;
        for k in 0..n {
            let probs = if k < ai { [1.0 - c, c] } else { [c, 1.0 - c] };
            preds.push(
                Prediction::from_probabilities(format!("{source}-{year}-{k}"), source, year, probs)
                    .map_err(|e| e.to_string())?,
            );
        }
    }
    let rows = aggregate_prevalence(&preds);
    ensure(rows.len() == 12, format!("{} rows", rows.len()))?;
    for (source, year, n, _, human, ai, conf) in TABLE {
        let r = rows
            .iter()
            .find(|r| r.source == source && r.year == year)
            .ok_or(format!("no row for {source} {year}"))?;
        let shown = [
            format!("{:.1}", r.pct_human),
            format!("{:.1}", r.pct_ai),
            format!("{:.1}", r.mean_confidence),
        ];
        ensure(r.n == n as u64, format!("{source} {year}: n {}", r.n))?;
        ensure(shown == [human, ai, conf], format!("{source} {year}: {shown:?} vs {:?}", [human, ai, conf]))?;
    }
    let overall = overall_rate(&rows).map_err(|e| e.to_string())?;
    ensure((2.3..=2.7).contains(&overall), format!("overall {overall}"))?;
    Ok(format!("36 cells reproduced; overall AI rate {overall:.3}%"))
}

fn toy_config() -> PathBuf {
    workspace_root().join("configs/toy.toml")
}

fn end_to_end() -> Result<String, String> {
    let started = Instant::now();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inv = Invocation {
        config: toy_config(),
        stage: Stage::Pipeline,
        seed: Some(42),
        out: Some(out.path().to_path_buf()),
        mock_rewriter: true,
    };
    run(&inv).map_err(|e| format!("{e:#}"))?;
    let read = |p: &str| fs::read_to_string(out.path().join(p)).map_err(|e| format!("{p}: {e}"));
    let json = |p: &str| -> Result<serde_json::Value, String> {
        serde_json::from_str(&read(p)?).map_err(|e| format!("{p}: {e}"))
    };

    let split = json("split/stage.json")?;
    let sizes = &split["summary"]["sizes"];
    ensure(split["summary"]["examples"] == 800, format!("examples {}", split["summary"]["examples"]))?;
    ensure(sizes["train"] == 640 && sizes["validation"] == 80 && sizes["test"] == 80, format!("sizes {sizes}"))?;

    let test = json("evaluate/test_metrics.json")?;
    let f1 = test["metrics"]["f1"].as_f64().ok_or("test f1 missing")?;

    let records: Vec<serde_json::Value> = read("train/metrics.jsonl")?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure(!records.is_empty() && records.len() <= 3, format!("{} epochs", records.len()))?;
    let best = records.iter().filter(|r| r["is_best"] == true).count();
    ensure(best == 1, format!("{best} epochs marked is_best"))?;
    let f1s: Vec<f64> = records.iter().map(|r| r["val_f1"].as_f64().unwrap()).collect();
    let final_best = f1s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut running = f64::NEG_INFINITY;
    let gaps: Vec<f64> = f1s
        .iter()
        .map(|&f| {
            running = running.max(f);
            final_best - running
        })
        .collect();
    ensure(gaps.windows(2).all(|w| w[1] <= w[0]), format!("gap not monotone: {gaps:?}"))?;
    ensure(*gaps.last().unwrap() == 0.0, "gap does not close")?;
    let ckpt = json("train/best/checkpoint.json")?;
    ensure(out.path().join("train/best/model.safetensors").is_file(), "no checkpoint weights")?;

    for ext in ["csv", "md", "json"] {
        let text = read(&format!("report/prevalence.{ext}"))?;
        ensure(text.contains("Anadolu Ekspres"), format!("prevalence.{ext} lacks a source row"))?;
    }
    let report = json("report/prevalence.json")?;
    ensure(report["checkpoint_fingerprint"] == ckpt["weights_sha256"], "report does not carry the checkpoint digest")?;

    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(3600), format!("took {:.0}s", elapsed.as_secs_f64()))?;
    ensure(f1 >= 0.90, format!("held-out F1 {f1:.4} below 0.90"))?;
    Ok(format!(
        "test F1 {f1:.4}, {} epochs, val F1 {f1s:?}, overall AI rate {:.1}%, {:.0}s",
        records.len(),
        report["overall_ai_rate"].as_f64().unwrap_or(f64::NAN),
        elapsed.as_secs_f64()
    ))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for stage in ["ingest", "clean", "synthesize", "split"] {
        for entry in fs::read_dir(dir.join(stage)).unwrap() {
            let path = entry.unwrap().path();
            let rel = path.strip_prefix(dir).unwrap().display().to_string();
            files.insert(rel, fs::read(&path).unwrap());
        }
    }
    files
}

fn determinism() -> Result<String, String> {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        for stage in [Stage::Ingest, Stage::Clean, Stage::Synthesize, Stage::Split] {
            let inv = Invocation {
                config: toy_config(),
                stage,
                seed: Some(42),
                out: Some(out.path().to_path_buf()),
                mock_rewriter: true,
            };
            run(&inv).map_err(|e| format!("{e:#}"))?;
        }
        runs.push(snapshot(out.path()));
    }
    ensure(runs[0].keys().eq(runs[1].keys()), "different file sets")?;
    for (name, bytes) in &runs[0] {
        ensure(&runs[1][name] == bytes, format!("{name} differs between runs"))?;
    }
    for needed in ["split/train.manifest.jsonl", "synthesize/rewrites.jsonl", "synthesize/rewritten.jsonl"] {
        ensure(runs[0].contains_key(needed), format!("{needed} missing"))?;
    }
    Ok(format!("{} files byte-identical across two runs", runs[0].len()))
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 9] = [
        ("metrics oracle", metrics_oracle, Duration::from_secs(5)),
        ("loss floor and gradient check", loss_and_gradient, Duration::from_secs(10)),
        ("split properties", split_properties, Duration::from_secs(30)),
        ("schedule", schedule, Duration::from_secs(1)),
        ("early stopping oracle", early_stopping, Duration::from_secs(5)),
        ("synthesis gates", synthesis_gates, Duration::from_secs(10)),
        ("prevalence reproduction", prevalence, Duration::from_secs(5)),
        ("desk-scale end-to-end", end_to_end, Duration::from_secs(3600)),
        ("determinism", determinism, Duration::from_secs(600)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if secs > *budget => Err(format!("{msg}; over the {}s budget", budget.as_secs())),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {}: PASS {name} ({:.2}s): {msg}", i + 1, secs.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({:.2}s): {msg}", i + 1, secs.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
