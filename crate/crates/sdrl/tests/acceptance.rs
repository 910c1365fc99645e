//! Acceptance suite: one verdict line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdicts show up in
//! `cargo test` output. Criteria that need MovieLens-latest-small look for
//! `ratings.csv` and `movies.csv` in `$SDRL_DATA_DIR/ml-latest-small` or
//! `$SDRL_DATA_DIR` and report BLOCKED when neither holds them. Only FAIL
//! makes the target exit non-zero.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sdrl::checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
use sdrl::commands::{self, PrepareInputs};
use sdrl::config::RunConfig;
use sdrl::export::read_embeddings;
use sdrl_core::data::{derive_user_category_preferences, CategoryMatrix, NodeFeatures};
use sdrl_core::eval::ablation::AblationTable;
use sdrl_core::eval::{ndcg_at_k, precision_recall_f1_at_k};
use sdrl_core::model::{
    encode_batch, loss_and_gradients, loss_components, Batch, Block, BlockLayout, EmbeddingSet, LossWeights,
    ModelInputs, ModelShape, SdrlParams, Side, Variant,
};
use sdrl_core::nn::ParamSet;
use sdrl_core::DenseMatrix;

enum Verdict {
    Pass(String),
    Fail(String),
    Blocked(String),
    /// Logged target that does not gate the suite.
    Soft(bool, String),
}

use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- toy models

struct Toy {
    features: NodeFeatures,
    categories: CategoryMatrix,
}

fn toy(r: &mut ChaCha20Rng, users: usize, items: usize, q: usize) -> Toy {
    let mut ratings = DenseMatrix::zeros(users, items);
    for u in 0..users {
        for i in 0..items {
            if r.gen_bool(0.5) {
                ratings.set(u, i, r.gen_range(1..=10) as f64 / 10.0);
            }
        }
    }
    let mut cats = DenseMatrix::zeros(items, q);
    for i in 0..items {
        cats.set(i, r.gen_range(0..q), 1.0);
        for c in 0..q {
            if r.gen_bool(0.3) {
                cats.set(i, c, 1.0);
            }
        }
    }
    let mut train = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if ratings.get(u, i) > 0.0 {
                train.push((u, i, ratings.get(u, i)));
            }
        }
    }
    let prefs = derive_user_category_preferences(train, users, &cats);
    Toy {
        features: NodeFeatures {
            items: ratings.transpose(),
            users: ratings,
        },
        categories: CategoryMatrix {
            vocabulary: (0..q).map(|c| format!("c{c}")).collect(),
            items: cats,
            users: prefs,
        },
    }
}

fn random_model(r: &mut ChaCha20Rng, toy: &Toy, variant: Variant, max_dim: usize, hidden: usize) -> SdrlParams {
    let dims = variant.active().map(|a| if a { r.gen_range(1..=max_dim) } else { 0 });
    let layout = BlockLayout::new(dims[0], dims[1], dims[2]).unwrap();
    let shape = ModelShape {
        user_dim: toy.features.users.cols(),
        item_dim: toy.features.items.cols(),
        hidden,
        num_categories: toy.categories.num_categories(),
    };
    let mut p = SdrlParams::init(layout, shape, r).unwrap();
    for t in p.tensors_mut() {
        let scale = r.gen_range(0.5..2.0);
        for v in t.values.iter_mut() {
            *v = *v * scale + r.gen_range(-0.1..0.1);
        }
    }
    p
}

// ---------------------------------------------------------------- criteria

fn gradients() -> Verdict {
    const STEP: f64 = 1e-5;
    const FLOOR: f64 = 1e-5;
    let started = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let q = r.gen_range(1..=4);
        let t = toy(&mut r, 3, 4, q);
        let variant = Variant::ALL[case % Variant::ALL.len()];
        let hidden = r.gen_range(1..=16);
        let params = random_model(&mut r, &t, variant, 5, hidden);
        let inputs = ModelInputs::new(&t.features, &t.categories);
        let batch = Batch {
            users: vec![0, 1, 2],
            items: vec![0, 1, 2, 3],
        };
        let w = LossWeights::default();
        let (_, grads) = loss_and_gradients(&params, &inputs, &batch, w).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.values.to_vec()).collect();
        let mut probe = params.clone();
        for (ti, g) in analytic.iter().enumerate() {
            for (i, &a) in g.iter().enumerate() {
                let x = probe.tensors()[ti].values[i];
                probe.tensors_mut()[ti].values[i] = x + STEP;
                let up = loss_components(&probe, &inputs, &batch, w).unwrap().total;
                probe.tensors_mut()[ti].values[i] = x - STEP;
                let down = loss_components(&probe, &inputs, &batch, w).unwrap().total;
                probe.tensors_mut()[ti].values[i] = x;
                let n = (up - down) / (2.0 * STEP);
                worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(FLOOR));
            }
        }
    }
    let took = started.elapsed();
    check(
        worst < 1e-4 && took < Duration::from_secs(60),
        format!("gradient check: worst relative error {worst:.2e} over 100 instances (limit 1e-4) in {took:.1?}"),
    )
}

fn brute_metrics(ranked: &[usize], relevant: &BTreeSet<usize>, k: usize) -> [f64; 4] {
    let mut hits = 0usize;
    let mut dcg = 0.0;
    for (pos, item) in ranked.iter().take(k).enumerate() {
        if relevant.contains(item) {
            hits += 1;
            dcg += 1.0 / ((pos + 2) as f64).log2();
        }
    }
    let idcg: f64 = (0..k.min(relevant.len())).map(|pos| 1.0 / ((pos + 2) as f64).log2()).sum();
    let p = hits as f64 / k as f64;
    let rc = hits as f64 / relevant.len() as f64;
    let f = if hits == 0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
    [p, rc, f, dcg / idcg]
}

fn metric_oracles() -> Verdict {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.gen_range(1..=20);
        let mut items: Vec<usize> = (0..n).collect();
        items.shuffle(&mut r);
        let ranked = &items[..r.gen_range(1..=n)];
        let mut relevant: BTreeSet<usize> = (0..n).filter(|_| r.gen_bool(0.3)).collect();
        relevant.insert(r.gen_range(0..n));
        let rel: Vec<usize> = relevant.iter().copied().collect();
        let k = r.gen_range(1..=20);
        let (p, rc, f) = precision_recall_f1_at_k(ranked, &rel, k).unwrap();
        let nd = ndcg_at_k(ranked, &rel, k).unwrap();
        for (got, want) in [p, rc, f, nd].into_iter().zip(brute_metrics(ranked, &relevant, k)) {
            worst = worst.max((got - want).abs());
        }
    }
    // ranked [a, b, c] against {a, c}
    let (p, rc, f) = precision_recall_f1_at_k(&[0, 1, 2], &[0, 2], 3).unwrap();
    let f1_case = (p - 2.0 / 3.0).abs() < 1e-15 && rc == 1.0 && (f - 0.8).abs() < 1e-15;
    let nd = ndcg_at_k(&[0, 1, 2], &[0, 2], 3).unwrap();
    let closed = 1.5 / (1.0 + 1.0 / 3f64.log2());
    let ndcg_case = (nd - closed).abs() < 1e-15 && (nd - 0.91972).abs() < 5e-6;
    check(
        worst <= 1e-12 && f1_case && ndcg_case,
        format!("metric oracles: worst deviation {worst:.1e} over 100 rankings; hand cases f1 {f} ndcg {nd:.5}"),
    )
}

fn preference_oracle() -> Verdict {
    let mut r = rng(103);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (nu, ni, q) = (r.gen_range(1..=10), r.gen_range(1..=10), r.gen_range(1..=5));
        let mut cats = DenseMatrix::zeros(ni, q);
        for i in 0..ni {
            for c in 0..q {
                if r.gen_bool(0.4) {
                    cats.set(i, c, 1.0);
                }
            }
        }
        let mut train = Vec::new();
        for u in 0..nu {
            for i in 0..ni {
                if r.gen_bool(0.5) {
                    train.push((u, i, r.gen_range(1..=10) as f64 / 10.0));
                }
            }
        }
        let got = derive_user_category_preferences(train.clone(), nu, &cats);
        for u in 0..nu {
            let raw: Vec<f64> = (0..q)
                .map(|c| train.iter().filter(|t| t.0 == u).map(|&(_, i, v)| v * cats.get(i, c)).sum())
                .collect();
            let top = raw.iter().cloned().fold(0.0, f64::max);
            for c in 0..q {
                let want = if top > 0.0 { raw[c] / top } else { 0.0 };
                worst = worst.max((got.get(u, c) - want).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("category preference oracle: worst deviation {worst:.1e} over 50 datasets"))
}

fn movielens_dir() -> Option<PathBuf> {
    let base = PathBuf::from(std::env::var_os(commands::DATA_DIR_ENV)?);
    [base.join("ml-latest-small"), base]
        .into_iter()
        .find(|d| d.join("ratings.csv").is_file() && d.join("movies.csv").is_file())
}

struct MovieLens {
    dir: tempfile::TempDir,
    prepare_log: Vec<String>,
    outcome: commands::PrepareOutcome,
}

fn prepare_movielens(raw: &Path) -> Result<MovieLens, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let inputs = PrepareInputs {
        data_dir: Some(raw.to_path_buf()),
        ratings: None,
        items: None,
        name: Some("ml-latest-small".into()),
    };
    let outcome = commands::prepare(&RunConfig::default(), &inputs, dir.path(), &mut |m| lines.push(m.to_string()))
        .map_err(|e| e.to_string())?;
    Ok(MovieLens {
        dir,
        prepare_log: lines,
        outcome,
    })
}

fn table_counts(ml: &MovieLens) -> Verdict {
    let raw = &ml.outcome.raw;
    let f = &ml.outcome.filtered;
    let got = [raw.users, raw.catalog_items, raw.ratings, raw.categories];
    for line in &ml.prepare_log {
        println!("    {line}");
    }
    check(
        got == [610, 9742, 100836, 18],
        format!(
            "dataset statistics: {} users, {} items, {} ratings, {} categories (want 610, 9742, 100836, 18); \
             after filtering {} users, {} items, {} ratings",
            got[0], got[1], got[2], got[3], f.users, f.items, f.ratings
        ),
    )
}

fn loss_descent(ml: &MovieLens) -> Verdict {
    let mut config = RunConfig::default();
    config.train.epochs = 50;
    let out = ml.dir.path().join("descent");
    let started = Instant::now();
    let outcome = match commands::train(&config, &ml.outcome.snapshot, &out, false, &mut |_| {}) {
        Ok(o) => o,
        Err(e) => return Fail(format!("loss descent: training failed: {e}")),
    };
    let took = started.elapsed();
    let (first, last) = (outcome.first.unwrap(), outcome.last.unwrap());
    let pairs = [
        ("total", first.total, last.total),
        ("recon", first.recon, last.recon),
        ("int", first.int, last.int),
        ("ext", first.ext, last.ext),
    ];
    let text: Vec<String> = pairs.iter().map(|(n, a, b)| format!("{n} {a:.4}->{b:.4}")).collect();
    check(
        pairs.iter().all(|(_, a, b)| b < a),
        format!("loss descent, epoch 1 vs epoch {}: {} in {took:.0?} (target < 30 min)", last.epoch, text.join(", ")),
    )
}

struct Sweep {
    f1_at_15: Vec<(Variant, f64)>,
    micro_f1: Vec<(Variant, f64)>,
}

fn run_sweep(ml: &MovieLens) -> Result<(Sweep, Duration), String> {
    let config = RunConfig::default();
    let out = ml.dir.path().join("sweep");
    let started = Instant::now();
    let table: AblationTable = commands::ablate(&config, &ml.outcome.snapshot, &out, &mut |m| println!("    {m}"))
        .map_err(|e| e.to_string())?;
    let mut sweep = Sweep {
        f1_at_15: Vec::new(),
        micro_f1: Vec::new(),
    };
    for s in &table.summaries {
        let Some((_, m)) = s.ranking.iter().find(|(k, _)| *k == 15) else {
            return Err("sweep K list lacks 15".into());
        };
        sweep.f1_at_15.push((s.cell.variant, m[2].mean));
        sweep.micro_f1.push((s.cell.variant, s.classification[2].mean));
    }
    Ok((sweep, started.elapsed()))
}

fn lookup(v: &[(Variant, f64)], want: Variant) -> f64 {
    v.iter().find(|(x, _)| *x == want).map_or(f64::NAN, |(_, m)| *m)
}

fn directional(s: &Sweep, took: Duration) -> Verdict {
    let (full, whole) = (lookup(&s.f1_at_15, Variant::Full), lookup(&s.f1_at_15, Variant::Whole));
    let base = lookup(&s.micro_f1, Variant::ExtOth);
    let with_int = [Variant::Full, Variant::IntExt, Variant::IntOth].map(|v| lookup(&s.micro_f1, v));
    check(
        full > whole && with_int.iter().all(|&m| m > base),
        format!(
            "ablation direction over 5 seeds: F1@15 sdrl {full:.4} vs whole {whole:.4}; micro-F1 sdrl/int+ext/int+oth \
             {:.4}/{:.4}/{:.4} vs ext+oth {base:.4} ({took:.0?})",
            with_int[0], with_int[1], with_int[2]
        ),
    )
}

fn banded(s: &Sweep) -> Verdict {
    let f1 = lookup(&s.f1_at_15, Variant::Full);
    let micro = lookup(&s.micro_f1, Variant::Full);
    Soft(
        (0.08..=0.14).contains(&f1) && micro >= 0.55,
        format!("absolute bands: sdrl F1@15 {f1:.4} (band 0.08-0.14), micro-F1 {micro:.4} (at least 0.55)"),
    )
}

fn block_isolation() -> Verdict {
    let mut r = rng(108);
    let mut checked = 0usize;
    for case in 0..60 {
        let t = toy(&mut r, 4, 5, 3);
        let variant = Variant::ALL[case % Variant::ALL.len()];
        let params = random_model(&mut r, &t, variant, 6, 6);
        let layout = params.layout;
        // internal, external, other in turn: each block held while the rest move
        for kept in Block::ALL.into_iter().filter(|&b| layout.is_active(b)) {
            let mut moved = params.clone();
            for sp in [&mut moved.user, &mut moved.item] {
                for b in Block::ALL.into_iter().filter(|&b| b != kept) {
                    if let Some(e) = &mut sp.encoders[b.index()] {
                        for l in [&mut e.hidden, &mut e.output] {
                            l.weight.as_mut_slice().iter_mut().for_each(|w| *w += r.gen_range(-1.0..1.0));
                            l.bias.iter_mut().for_each(|v| *v += r.gen_range(-1.0..1.0));
                        }
                    }
                }
            }
            for (side, x) in [(Side::User, &t.features.users), (Side::Item, &t.features.items)] {
                let before = encode_batch(&params, side, x).unwrap().columns(layout.range(kept));
                let after = encode_batch(&moved, side, x).unwrap().columns(layout.range(kept));
                let same = before.as_slice().iter().zip(after.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    return Fail(format!("block isolation: case {case} {variant}, {kept:?} block changed on {side:?} side"));
                }
                checked += 1;
            }
        }
    }
    Pass(format!("block isolation: {checked} block slices bit-identical under perturbation of the other encoders"))
}

struct ToyRun {
    dir: tempfile::TempDir,
}

fn toy_run() -> Result<ToyRun, String> {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap().to_string();
    let cfg = toy.join("toy.toml");
    let cfg = cfg.to_str().unwrap();
    let snap = format!("{out}/dataset.snap");
    let ckpt = format!("{out}/model.ckpt");
    let steps: [Vec<&str>; 3] = [
        vec!["prepare", "--input", toy.to_str().unwrap()],
        vec!["train", "--snapshot", &snap],
        vec!["evaluate", "--snapshot", &snap, "--checkpoint", &ckpt],
    ];
    for step in steps {
        let mut args = vec!["sdrl", "-q", "--config", cfg, "--seed", "5", "--out", &out];
        args.splice(1..1, step);
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let code = sdrl::cli::run(&args, &mut so, &mut se);
        if code != 0 {
            return Err(format!("`{}` exited {code}: {}", args.join(" "), String::from_utf8_lossy(&se)));
        }
    }
    Ok(ToyRun { dir })
}

fn determinism() -> (Verdict, Option<ToyRun>) {
    let (a, b) = match (toy_run(), toy_run()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (Fail(format!("determinism: {e}")), None),
    };
    let files = [commands::LOSSES_FILE, commands::RANKING_FILE, commands::CLASSIFICATION_FILE, commands::CHECKPOINT_FILE];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(a.dir.path().join(f)).ok() != fs::read(b.dir.path().join(f)).ok())
        .collect();
    let v = check(
        differing.is_empty(),
        format!(
            "determinism: two prepare+train+evaluate runs, {} byte-identical{}",
            files.join(", "),
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    );
    (v, Some(a))
}

fn round_trips(run: &ToyRun) -> Verdict {
    let dir = run.dir.path();
    let ckpt_path = dir.join(commands::CHECKPOINT_FILE);
    let bytes = fs::read(&ckpt_path).unwrap();
    let ckpt = load_checkpoint(&ckpt_path).unwrap();
    let copy = dir.join("copy.ckpt");
    save_checkpoint(&ckpt, &copy).unwrap();
    let reread = decode_checkpoint(&copy, &fs::read(&copy).unwrap()).unwrap();
    let bits = |p: &SdrlParams| -> Vec<u64> { p.tensors().iter().flat_map(|t| t.values.iter().map(|v| v.to_bits())).collect() };
    let ckpt_exact = encode_checkpoint(&ckpt) == bytes && fs::read(&copy).unwrap() == bytes && bits(&reread.params) == bits(&ckpt.params);

    let config = RunConfig::from_toml(&fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy/toy.toml")).unwrap()).unwrap();
    let snap = dir.join(commands::SNAPSHOT_FILE);
    let tsv = match commands::export(&config, &ckpt_path, &snap, dir) {
        Ok(p) => p,
        Err(e) => return Fail(format!("round trips: export failed: {e}")),
    };
    let table = read_embeddings(&tsv).unwrap();
    let snapshot = sdrl::snapshot::load_snapshot(&snap).unwrap();
    let emb = EmbeddingSet::compute(&ckpt.params, &NodeFeatures::build(&snapshot.data.dataset)).unwrap();
    let worst = [(&emb.users, &table.embeddings.users), (&emb.items, &table.embeddings.items)]
        .iter()
        .flat_map(|(a, b)| a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    let shapes = emb.users.shape() == table.embeddings.users.shape() && emb.items.shape() == table.embeddings.items.shape();
    let layout_ok = table.embeddings.layout == ckpt.params.layout;
    check(
        ckpt_exact && shapes && layout_ok && worst <= 1e-12,
        format!(
            "round trips: checkpoint {} ({} bytes); embedding TSV worst deviation {worst:.1e}, layout {}",
            if ckpt_exact { "bit-exact" } else { "differs" },
            bytes.len(),
            if layout_ok { "kept" } else { "lost" }
        ),
    )
}

fn main() {
    let mut verdicts: Vec<(u32, Verdict)> = Vec::new();
    let mut report = |n: u32, v: Verdict| {
        let (tag, text) = match &v {
            Pass(t) => ("PASS", t),
            Fail(t) => ("FAIL", t),
            Blocked(t) => ("BLOCKED", t),
            Soft(true, t) => ("PASS (soft)", t),
            Soft(false, t) => ("MISS (soft, not gating)", t),
        };
        println!("criterion {n:>2}: {tag}: {text}");
        verdicts.push((n, v));
    };

    report(1, gradients());
    report(2, metric_oracles());
    report(3, preference_oracle());

    match movielens_dir() {
        None => {
            let why = format!(
                "needs MovieLens-latest-small (ratings.csv, movies.csv) under ${0}/ml-latest-small or ${0}",
                commands::DATA_DIR_ENV
            );
            for n in 4..=7 {
                report(n, Blocked(why.clone()));
            }
        }
        Some(raw) => match prepare_movielens(&raw) {
            Err(e) => {
                for n in 4..=7 {
                    report(n, Fail(format!("prepare on {} failed: {e}", raw.display())));
                }
            }
            Ok(ml) => {
                report(4, table_counts(&ml));
                report(5, loss_descent(&ml));
                match run_sweep(&ml) {
                    Ok((s, took)) => {
                        report(6, directional(&s, took));
                        report(7, banded(&s));
                    }
                    Err(e) => {
                        report(6, Fail(format!("ablation sweep failed: {e}")));
                        report(7, Fail(format!("ablation sweep failed: {e}")));
                    }
                }
            }
        },
    }

    report(8, block_isolation());
    let (v, run) = determinism();
    report(9, v);
    match run {
        Some(run) => report(10, round_trips(&run)),
        None => report(10, Fail("round trips: no toy run to read back".into())),
    }

    let failed: Vec<u32> = verdicts.iter().filter(|(_, v)| matches!(v, Fail(_))).map(|(n, _)| *n).collect();
    let count = |f: fn(&Verdict) -> bool| verdicts.iter().filter(|(_, v)| f(v)).count();
    println!(
        "acceptance: {} passed, {} failed, {} blocked, {} soft targets missed",
        count(|v| matches!(v, Pass(_) | Soft(true, _))),
        failed.len(),
        count(|v| matches!(v, Blocked(_))),
        count(|v| matches!(v, Soft(false, _))),
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
