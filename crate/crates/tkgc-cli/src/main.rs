//! Command-line front end: mine rules, train, evaluate, predict, explain.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tkgc::checkpoint::Checkpoint;
use tkgc::eval::{eval_link, eval_time};
use tkgc::predict::{
    apply_gadgets_link, apply_gadgets_time, compute_psi_cache, explain_link, explain_time,
    fallback_interval, predict_interval, render_grounding, score_link, score_time, softmax_probs,
    LinkQuery, PsiCache, QueryContext, TimeQuery,
};
use tkgc::rules::{mine_ruleset, RuleSet};
use tkgc::scorer::GruForm;
use tkgc::stats::fit_statistics;
use tkgc::tkg::{
    build_time_vocab, build_walk_graph, load_dataset, Split, TimeInterval, TimeVocab, TkgDataset,
    WalkGraph,
};
use tkgc::train::{train, Task, TrainConfig};

#[derive(Parser)]
#[command(
    name = "tkgc",
    version,
    about = "Temporal KG completion with Allen-algebra rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Directory containing train.txt / valid.txt / test.txt
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Rule-set file produced by `mine`
    #[arg(long)]
    rules: PathBuf,
    /// Checkpoint produced by `train`
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset statistics
    Summary {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Mine temporal rules with PCA confidences and write them as TSV
    Mine {
        #[command(flatten)]
        data: DataArgs,
        /// Maximum rule body length
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        /// Drop rules with fewer groundings than this
        #[arg(long, default_value_t = 1)]
        min_support: u64,
        /// Output rule file
        #[arg(long)]
        out: PathBuf,
    },
    /// Train rule confidences and write the best-validation checkpoint
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        task: Task,
        /// Defaults to 5000 for link, 2000 for time
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// The cosine schedule never drops below lr times this fraction
        #[arg(long, default_value_t = 0.2)]
        lr_floor_frac: f64,
        /// Gadget ensembling coefficient (0 disables gadgets)
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Validate (and maybe checkpoint) every this many epochs
        #[arg(long, default_value_t = 25)]
        val_every: usize,
        /// Use the standard GRU candidate state (with the U_n weight)
        #[arg(long)]
        standard_gru: bool,
        /// Add gadget terms to the training-time scores too
        #[arg(long)]
        gadgets_in_train: bool,
        /// Output checkpoint path
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint: MRR/Hits for link, aeIOU for time
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        task: Task,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Answer queries, one output line per query
    Predict {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        task: Task,
        /// TSV query file: `s r t_b t_e` for link, `s r o` for time;
        /// defaults to the chosen split's queries
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
        /// How many ranked answers to print per link query
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Append rule groundings per query
        #[arg(long)]
        explain: bool,
    },
    /// Explain one query in full
    Explain {
        #[command(flatten)]
        model: ModelArgs,
        #[command(subcommand)]
        query: ExplainQuery,
    },
}

#[derive(Subcommand)]
enum ExplainQuery {
    /// Link query (s, r, ?, [t_b, t_e])
    Link {
        subject: String,
        relation: String,
        begin: i32,
        end: i32,
        /// Explain this candidate instead of the top-ranked one
        #[arg(long)]
        answer: Option<String>,
    },
    /// Time query (s, r, o, ?)
    Time {
        subject: String,
        relation: String,
        object: String,
    },
}

struct LoadedModel {
    dataset: TkgDataset,
    graph: WalkGraph,
    vocab: TimeVocab,
    rules: RuleSet,
    checkpoint: Checkpoint,
}

fn load_base(data: &Path) -> Result<(TkgDataset, WalkGraph, TimeVocab)> {
    let mut dataset = load_dataset(data).context("loading dataset")?;
    dataset.augment_inverses()?;
    let graph = build_walk_graph(&dataset)?;
    let vocab = build_time_vocab(&dataset)?;
    Ok((dataset, graph, vocab))
}

fn load_rules(dataset: &TkgDataset, path: &Path) -> Result<RuleSet> {
    let file = File::open(path).with_context(|| format!("opening rule file {}", path.display()))?;
    Ok(RuleSet::read_tsv(
        dataset,
        BufReader::new(file),
        &path.display().to_string(),
    )?)
}

fn load_model(args: &ModelArgs) -> Result<LoadedModel> {
    let (dataset, graph, vocab) = load_base(&args.data.data)?;
    let rules = load_rules(&dataset, &args.rules)?;
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    checkpoint.verify(&dataset, &rules)?;
    Ok(LoadedModel {
        dataset,
        graph,
        vocab,
        rules,
        checkpoint,
    })
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "valid" => Ok(Split::Valid),
        "test" => Ok(Split::Test),
        other => bail!("unknown split `{other}` (expected train, valid, or test)"),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Summary { data } => {
            let dataset = load_dataset(&data.data)?;
            print!("{}", dataset.summary());
        }
        Command::Mine {
            data,
            max_len,
            min_support,
            out,
        } => {
            let (dataset, graph, _) = load_base(&data.data)?;
            let rules = mine_ruleset(&dataset, &graph, max_len, min_support)?;
            let mut w = BufWriter::new(File::create(&out)?);
            rules.write_tsv(&dataset, &mut w)?;
            w.flush()?;
            eprintln!("mined {} rules -> {}", rules.len(), out.display());
        }
        Command::Train {
            data,
            rules,
            task,
            epochs,
            lr,
            lr_floor_frac,
            eta,
            dim,
            seed,
            val_every,
            standard_gru,
            gadgets_in_train,
            out,
        } => {
            let (dataset, graph, vocab) = load_base(&data.data)?;
            let ruleset = load_rules(&dataset, &rules)?;
            let mut cfg = TrainConfig::defaults(task);
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.lr = lr;
            cfg.lr_floor_frac = lr_floor_frac;
            cfg.eta = eta;
            cfg.dim = dim;
            cfg.seed = seed;
            cfg.val_every = val_every;
            cfg.gru_form = if standard_gru {
                GruForm::Standard
            } else {
                GruForm::Coupled
            };
            cfg.gadgets_in_train = gadgets_in_train;

            let stats = fit_statistics(&dataset, &vocab, eta);
            let outcome = train(&cfg, &dataset, &graph, &vocab, &ruleset, &stats)?;
            if let Some(best) = outcome.best_val {
                eprintln!("best validation metric: {best:.4}");
            }
            let ckpt = Checkpoint::new(cfg, &dataset, &ruleset, outcome.params, stats)?;
            ckpt.save(&out)?;
            eprintln!("checkpoint -> {}", out.display());
        }
        Command::Eval { model, task, split } => {
            let m = load_model(&model)?;
            let split = parse_split(&split)?;
            let ctx = QueryContext::new(
                &m.dataset,
                &m.graph,
                &m.vocab,
                &m.rules,
                &m.checkpoint.stats,
            );
            let psi =
                compute_psi_cache(&m.checkpoint.params, m.checkpoint.config.gru_form, &m.rules)?;
            match task {
                Task::Link => {
                    let r = eval_link(&ctx, &psi, split);
                    println!("{:<10} {:>10}", "Metric", "Value");
                    println!("{:<10} {:>10.4}", "MRR", r.mrr);
                    println!("{:<10} {:>10.4}", "Hits@1", r.hits1);
                    println!("{:<10} {:>10.4}", "Hits@10", r.hits10);
                    println!("{:<10} {:>10}", "Queries", r.queries);
                    println!();
                    println!("mrr\t{}", r.mrr);
                    println!("hits1\t{}", r.hits1);
                    println!("hits10\t{}", r.hits10);
                }
                Task::Time => {
                    let r = eval_time(&ctx, &psi, split);
                    println!("{:<10} {:>10}", "Metric", "Value");
                    println!("{:<10} {:>10.4}", "aeIOU", r.aeiou);
                    println!("{:<10} {:>10}", "Queries", r.queries);
                    println!("{:<10} {:>10}", "Fallbacks", r.fallback_queries);
                    println!();
                    println!("aeiou\t{}", r.aeiou);
                }
            }
        }
        Command::Predict {
            model,
            task,
            input,
            split,
            top,
            explain,
        } => {
            let m = load_model(&model)?;
            let ctx = QueryContext::new(
                &m.dataset,
                &m.graph,
                &m.vocab,
                &m.rules,
                &m.checkpoint.stats,
            );
            let psi =
                compute_psi_cache(&m.checkpoint.params, m.checkpoint.config.gru_form, &m.rules)?;
            match task {
                Task::Link => {
                    for q in link_queries(&m.dataset, input.as_deref(), &split)? {
                        predict_one_link(&ctx, &psi, &q, top, explain);
                    }
                }
                Task::Time => {
                    for q in time_queries(&m.dataset, input.as_deref(), &split)? {
                        predict_one_time(&ctx, &psi, &q, explain);
                    }
                }
            }
        }
        Command::Explain { model, query } => {
            let m = load_model(&model)?;
            let ctx = QueryContext::new(
                &m.dataset,
                &m.graph,
                &m.vocab,
                &m.rules,
                &m.checkpoint.stats,
            );
            let psi =
                compute_psi_cache(&m.checkpoint.params, m.checkpoint.config.gru_form, &m.rules)?;
            match query {
                ExplainQuery::Link {
                    subject,
                    relation,
                    begin,
                    end,
                    answer,
                } => {
                    let q = LinkQuery {
                        subject: m.dataset.entity_id(&subject)?,
                        relation: m.dataset.relation_id(&relation)?,
                        interval: TimeInterval::new(begin, end)?,
                    };
                    let mut table = score_link(&ctx, &psi, &q);
                    apply_gadgets_link(&ctx, &mut table, &q, &[]);
                    let answer = match answer {
                        Some(name) => m.dataset.entity_id(&name)?,
                        None => top_entity(&table.scores),
                    };
                    println!("Query: ({}, {}, ?, {})", subject, relation, q.interval);
                    println!("Answer: {}", m.dataset.entity_name(answer));
                    let expls = explain_link(&ctx, &table, &q, answer);
                    if expls.is_empty() {
                        println!("No rule grounds this answer.");
                    }
                    for e in expls {
                        let rule = &m.rules.get(e.rule_idx).rule;
                        println!(
                            "Rule (psi {:.4}, paths {}): {}",
                            e.psi,
                            e.weight,
                            rule.render(&m.dataset)
                        );
                        if let Some(g) = &e.grounding {
                            println!(
                                "  Groundings: {}",
                                render_grounding(&ctx, q.subject, Some(q.interval), g)
                            );
                        }
                    }
                }
                ExplainQuery::Time {
                    subject,
                    relation,
                    object,
                } => {
                    let q = TimeQuery {
                        subject: m.dataset.entity_id(&subject)?,
                        relation: m.dataset.relation_id(&relation)?,
                        object: m.dataset.entity_id(&object)?,
                    };
                    let (mut ts, mut te) = score_time(&ctx, &psi, &q);
                    apply_gadgets_time(&ctx, &mut ts, &mut te, &q, &[]);
                    println!("Query: ({subject}, {relation}, {object}, ?)");
                    if ts.is_all_zero() && te.is_all_zero() {
                        let t = fallback_interval(q.relation, &ctx.stats.relation_means, ctx.vocab);
                        println!("Answer: {t} (zero groundings; relation-mean fallback)");
                    } else {
                        let pb = softmax_probs(&ts.scores);
                        let pe = softmax_probs(&te.scores);
                        let t = predict_interval(&pb, &pe, ctx.vocab).expect("non-zero tables");
                        println!("Answer: {t}");
                        for (label, table, year) in [("start", &ts, t.start), ("end", &te, t.end)] {
                            for e in explain_time(&ctx, table, &q, year) {
                                let rule = &m.rules.get(e.rule_idx).rule;
                                println!(
                                    "Rule for {label} {year} (psi {:.4}, mass {:.4}): {}",
                                    e.psi,
                                    e.weight,
                                    rule.render(&m.dataset)
                                );
                                if let Some(g) = &e.grounding {
                                    println!(
                                        "  Groundings: {}",
                                        render_grounding(&ctx, q.subject, None, g)
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn top_entity(scores: &[f64]) -> tkgc::tkg::Entity {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    tkgc::tkg::Entity(best as u32)
}

fn link_queries(dataset: &TkgDataset, input: Option<&Path>, split: &str) -> Result<Vec<LinkQuery>> {
    match input {
        Some(path) => {
            let mut out = Vec::new();
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 4 {
                    bail!(
                        "{}:{}: link query needs `s r t_b t_e`",
                        path.display(),
                        i + 1
                    );
                }
                out.push(LinkQuery {
                    subject: dataset.entity_id(cols[0])?,
                    relation: dataset.relation_id(cols[1])?,
                    interval: TimeInterval::new(cols[2].trim().parse()?, cols[3].trim().parse()?)?,
                });
            }
            Ok(out)
        }
        None => Ok(dataset
            .split(parse_split(split)?)
            .iter()
            .map(|q| LinkQuery {
                subject: q.subject,
                relation: q.relation,
                interval: q.interval,
            })
            .collect()),
    }
}

fn time_queries(dataset: &TkgDataset, input: Option<&Path>, split: &str) -> Result<Vec<TimeQuery>> {
    match input {
        Some(path) => {
            let mut out = Vec::new();
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 3 {
                    bail!("{}:{}: time query needs `s r o`", path.display(), i + 1);
                }
                out.push(TimeQuery {
                    subject: dataset.entity_id(cols[0])?,
                    relation: dataset.relation_id(cols[1])?,
                    object: dataset.entity_id(cols[2])?,
                });
            }
            Ok(out)
        }
        None => {
            let mut seen = std::collections::HashSet::new();
            Ok(dataset
                .split(parse_split(split)?)
                .iter()
                .filter_map(|q| {
                    let tq = TimeQuery {
                        subject: q.subject,
                        relation: q.relation,
                        object: q.object,
                    };
                    seen.insert(tq).then_some(tq)
                })
                .collect())
        }
    }
}

fn predict_one_link(ctx: &QueryContext, psi: &PsiCache, q: &LinkQuery, top: usize, explain: bool) {
    let mut table = score_link(ctx, psi, q);
    apply_gadgets_link(ctx, &mut table, q, &[]);
    let probs = softmax_probs(&table.scores);
    let mut ranked: Vec<usize> = (0..probs.len()).collect();
    ranked.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let answers: Vec<String> = ranked
        .iter()
        .take(top)
        .map(|&i| {
            format!(
                "{}:{:.6}",
                ctx.dataset.entity_name(tkgc::tkg::Entity(i as u32)),
                probs[i]
            )
        })
        .collect();
    println!(
        "{}\t{}\t{}\t{}",
        ctx.dataset.entity_name(q.subject),
        ctx.dataset.relation_name(q.relation),
        q.interval,
        answers.join(" ")
    );
    if explain {
        let best = tkgc::tkg::Entity(ranked[0] as u32);
        for e in explain_link(ctx, &table, q, best).into_iter().take(3) {
            let rule = &ctx.rules.get(e.rule_idx).rule;
            println!(
                "  # psi {:.4} paths {}: {}",
                e.psi,
                e.weight,
                rule.render(ctx.dataset)
            );
            if let Some(g) = &e.grounding {
                println!(
                    "  #   {}",
                    render_grounding(ctx, q.subject, Some(q.interval), g)
                );
            }
        }
    }
}

fn predict_one_time(ctx: &QueryContext, psi: &PsiCache, q: &TimeQuery, explain: bool) {
    let (mut ts, mut te) = score_time(ctx, psi, q);
    apply_gadgets_time(ctx, &mut ts, &mut te, q, &[]);
    let (answer, detail) = if ts.is_all_zero() && te.is_all_zero() {
        let t = fallback_interval(q.relation, &ctx.stats.relation_means, ctx.vocab);
        (t, "fallback".to_string())
    } else {
        let pb = softmax_probs(&ts.scores);
        let pe = softmax_probs(&te.scores);
        let t = predict_interval(&pb, &pe, ctx.vocab).expect("non-zero tables");
        let detail = format!(
            "p_start={:.6} p_end={:.6}",
            pb[ctx.vocab.id_of(t.start).unwrap()],
            pe[ctx.vocab.id_of(t.end).unwrap()]
        );
        (t, detail)
    };
    println!(
        "{}\t{}\t{}\t{}\t{}",
        ctx.dataset.entity_name(q.subject),
        ctx.dataset.relation_name(q.relation),
        ctx.dataset.entity_name(q.object),
        answer,
        detail
    );
    if explain {
        for (label, table, year) in [("start", &ts, answer.start), ("end", &te, answer.end)] {
            for e in explain_time(ctx, table, q, year).into_iter().take(2) {
                let rule = &ctx.rules.get(e.rule_idx).rule;
                println!(
                    "  # {label} {year} psi {:.4} mass {:.4}: {}",
                    e.psi,
                    e.weight,
                    rule.render(ctx.dataset)
                );
                if let Some(g) = &e.grounding {
                    println!("  #   {}", render_grounding(ctx, q.subject, None, g));
                }
            }
        }
    }
}
