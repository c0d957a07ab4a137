use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use polylex::analysis::{
    ablate_cohesion, ablate_loanwords, ablate_numbers, gen_synthetic, lwi, lwi_table, mean_pair_lwi, run_pipeline,
    write_lwi, Baseline, PipelineConfig, SyntheticSpec,
};
use polylex::corpus::{loanword_exchange, mask_numbers, mix_corpora};
use polylex::embedding::train_with_threads;
use polylex::langid::estimate_partition;
use polylex::lexicon::{evaluate_pk, mine_lexicon, successful_at_1, Translator};
use polylex::xlingual::{
    document_embedding, nn_sample, read_id_map, retrieval_eval, translate_embedding, SamplePool, SeedDoc,
};
use polylex::{Corpus, GoldDictionary, Hyperparams, LanguagePartition, Lexicon32, Model, SeedSet, TranslationPairList};
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use crate::args::*;
use crate::error::CliError;
use crate::manifest::Run;

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cmd: &Command, threads: usize) -> Result<()> {
    let flags = serde_json::to_value(cmd).expect("flags serialize");
    let mut run = Run::new(cmd.name(), flags, threads);
    match cmd {
        Command::Preprocess(a) => preprocess(&mut run, a)?,
        Command::Mix(a) => mix(&mut run, a)?,
        Command::MaskNumbers(a) => mask(&mut run, a)?,
        Command::Exchange(a) => exchange(&mut run, a)?,
        Command::Train(a) => train(&mut run, a, threads)?,
        Command::Langid(a) => langid(&mut run, a)?,
        Command::Mine(a) => mine(&mut run, a)?,
        Command::Eval(a) => eval(&mut run, a)?,
        Command::TranslateDocs(a) => translate_docs(&mut run, a)?,
        Command::NnSample(a) => sample(&mut run, a)?,
        Command::RetrievalEval(a) => retrieval(&mut run, a)?,
        Command::Lwi(a) => lwi_cmd(&mut run, a)?,
        Command::Ablate(a) => ablate(&mut run, a, threads)?,
        Command::Synth(a) => synth(&mut run, a)?,
    }
    run.finish()
}

fn read_corpus(run: &mut Run, path: &Path) -> Result<Corpus> {
    Ok(Corpus::read(run.input(path)?)?)
}

fn read_json<T: DeserializeOwned>(run: &mut Run, path: &Path) -> Result<T> {
    let bytes = fs::read(run.input(path)?)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(run: &mut Run, path: &Path, text: &str) -> Result<()> {
    fs::write(run.output(path)?, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn sibling(model: &Path, ext: &str) -> Option<PathBuf> {
    let p = model.with_extension(ext);
    p.exists().then_some(p)
}

fn load_model(run: &mut Run, a: &ModelArgs) -> Result<Model> {
    let subwords = a.subwords.clone().or_else(|| sibling(&a.model, "plxs"));
    let counts = a.counts.clone().or_else(|| sibling(&a.model, "counts"));
    run.input(&a.model)?;
    for p in subwords.iter().chain(&counts) {
        run.input(p)?;
    }
    Ok(Model::load(&a.model, subwords.as_deref(), counts.as_deref())?)
}

fn load_translating(run: &mut Run, a: &TranslateArgs) -> Result<(Model, LanguagePartition)> {
    let m = load_model(run, &a.model)?;
    let part = LanguagePartition::read(run.input(&a.partition)?)?;
    Ok((m, part))
}

fn translator<'a>(m: &'a Model, part: &'a LanguagePartition, a: &TranslateArgs) -> Result<Translator<'a, f32>> {
    Ok(Translator::new(m, part, a.direction.clone(), a.min_target_freq)?)
}

fn preprocess(run: &mut Run, a: &PreprocessArgs) -> Result<()> {
    let c = Corpus::read_raw(run.input(&a.input)?)?;
    Ok(c.write(run.output(&a.out)?)?)
}

fn mix(run: &mut Run, a: &MixArgs) -> Result<()> {
    let x = read_corpus(run, &a.a)?;
    let y = read_corpus(run, &a.b)?;
    run.seed("mix", a.seed);
    Ok(mix_corpora(&x, &y, a.seed)?.write(run.output(&a.out)?)?)
}

fn mask(run: &mut Run, a: &MaskNumbersArgs) -> Result<()> {
    let c = read_corpus(run, &a.corpus)?;
    Ok(mask_numbers(&c, &a.mask)?.write(run.output(&a.out)?)?)
}

fn exchange(run: &mut Run, a: &ExchangeArgs) -> Result<()> {
    let c = read_corpus(run, &a.corpus)?;
    let pairs = TranslationPairList::read(run.input(&a.pairs)?)?;
    let part = LanguagePartition::read(run.input(&a.partition)?)?;
    run.seed("exchange", a.seed);
    let out = loanword_exchange(&c, &pairs, &part, a.seed);
    for w in out.warnings {
        run.warn(w);
    }
    let exchanged: usize = out.records.iter().map(|r| r.exchanged).sum();
    eprintln!(
        "{} pairs applied, {exchanged} occurrences exchanged each way",
        out.records.len()
    );
    Ok(out.corpus.write(run.output(&a.out)?)?)
}

fn train(run: &mut Run, a: &TrainArgs, threads: usize) -> Result<()> {
    let c = read_corpus(run, &a.corpus)?;
    let h = Hyperparams {
        dim: a.dim,
        min_n: a.min_n,
        max_n: a.max_n,
        epochs: a.epochs,
        window: a.window,
        negatives: a.negatives,
        min_count: a.min_count,
        learning_rate: a.lr,
        bucket_count: a.buckets,
        subsample_threshold: a.subsample,
        rng_seed: a.seed,
    };
    h.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    run.seed("train", a.seed);
    let m: Model = train_with_threads(&c, &h, threads)?;
    let (side, counts) = (a.out.with_extension("plxs"), a.out.with_extension("counts"));
    m.write_text(run.output(&a.out)?)?;
    m.write_sidecar(run.output(&side)?)?;
    m.write_counts(run.output(&counts)?)?;
    eprintln!("{} words, {} dimensions", m.vocab().len(), m.dim());
    Ok(())
}

fn langid(run: &mut Run, a: &LangidArgs) -> Result<()> {
    let m = load_model(run, &a.model)?;
    let seeds = SeedSet::read(run.input(&a.seeds)?)?;
    let part = estimate_partition(&m, &seeds, a.abstain)?;
    Ok(part.write(run.output(&a.out)?)?)
}

fn mine(run: &mut Run, a: &MineArgs) -> Result<()> {
    let (m, part) = load_translating(run, &a.tr)?;
    let tr = translator(&m, &part, &a.tr)?;
    run.seed("mine", a.seed);
    let lex = mine_lexicon(&tr, a.band, a.sample, a.tr.n, a.seed)?;
    for (w, why) in &lex.diagnostics {
        run.warn(format!("{w}: {why}"));
    }
    Ok(lex.write(run.output(&a.out)?)?)
}

fn eval(run: &mut Run, a: &EvalArgs) -> Result<()> {
    let lex = Lexicon32::read(run.input(&a.lexicon)?)?;
    let gold = GoldDictionary::read(run.input(&a.gold)?)?;
    let report = evaluate_pk(&lex, &gold, &a.ks.0, &a.dataset)?;
    let json = report.to_json() + "\n";
    print!("{json}");
    if let Some(out) = &a.out {
        write_text(run, out, &json)?;
    }
    if let Some(out) = &a.successful_out {
        successful_at_1(&lex, &gold).write(run.output(out)?)?;
    }
    Ok(())
}

fn pool(run: &mut Run, m: &Model, docs_path: &Path, embeddings: Option<&Path>) -> Result<SamplePool<f32>> {
    let docs = read_corpus(run, docs_path)?.documents;
    Ok(match embeddings {
        Some(p) => SamplePool::with_embeddings(&docs, run.input(p)?)?,
        None => SamplePool::build(m, &docs),
    })
}

fn translate_docs(run: &mut Run, a: &TranslateDocsArgs) -> Result<()> {
    let (m, part) = load_translating(run, &a.tr)?;
    let tr = translator(&m, &part, &a.tr)?;
    let docs = read_corpus(run, &a.docs)?.documents;
    run.seed("translate", a.seed);
    // each document gets its own derived seed, so output is thread-independent
    let embedded: Vec<Option<Vec<f32>>> = docs
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            translate_embedding(&tr, d, a.tr.n, a.policy, a.seed.wrapping_add(i as u64))
                .ok()
                .map(|e| e.vector)
        })
        .collect();
    let mut out = SamplePool::default();
    for (i, (d, e)) in docs.into_iter().zip(embedded).enumerate() {
        match e {
            Some(e) => {
                out.ids.push(i);
                out.documents.push(d);
                out.embeddings.push(e);
            }
            None => run.warn(format!("line {i}: untranslatable document")),
        }
    }
    Ok(out.write_embeddings(run.output(&a.out)?)?)
}

fn sample(run: &mut Run, a: &NnSampleArgs) -> Result<()> {
    let m = load_model(run, &a.model)?;
    let pool = pool(run, &m, &a.pool, a.pool_embeddings.as_deref())?;
    let seeds = read_corpus(run, &a.seed_docs)?;
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (id, d) in pool.ids.iter().zip(&pool.documents) {
        first_line.entry(d.to_line()).or_insert(*id);
    }
    let seeds = seeds
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let e = document_embedding(&m, d).map_err(|e| CliError::Data(format!("seed document {i}: {e}")))?;
            Ok(SeedDoc {
                embedding: e.vector,
                pool_id: first_line.get(&d.to_line()).copied(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let picked = nn_sample(&seeds, &pool, a.size)?;
    let by_id: BTreeMap<usize, &polylex::Document> = pool.ids.iter().copied().zip(&pool.documents).collect();
    let mut text = String::new();
    for id in picked {
        text.push_str(&format!("{id}\t{}\n", by_id[&id].to_line()));
    }
    write_text(run, &a.out, &text)
}

fn retrieval(run: &mut Run, a: &RetrievalEvalArgs) -> Result<()> {
    let (m, part) = load_translating(run, &a.tr)?;
    let tr = translator(&m, &part, &a.tr)?;
    let sources = read_corpus(run, &a.sources)?.documents;
    let pool = pool(run, &m, &a.pool, a.pool_embeddings.as_deref())?;
    let gold = read_id_map(run.input(&a.map)?)?;
    run.seed("retrieval", a.seed);
    let out = retrieval_eval(
        &tr, &sources, &pool, &gold, a.tr.n, a.policy, &a.ks.0, a.seed, &a.dataset,
    )?;
    if out.untranslatable > 0 {
        run.warn(format!(
            "{} source documents were untranslatable (counted as misses)",
            out.untranslatable
        ));
    }
    let json = out.report.to_json() + "\n";
    print!("{json}");
    write_text(run, &a.out, &json)
}

fn lwi_cmd(run: &mut Run, a: &LwiArgs) -> Result<()> {
    let c = read_corpus(run, &a.corpus)?;
    let part = LanguagePartition::read(run.input(&a.partition)?)?;
    let table = match &a.words {
        None => lwi_table(&c, &part, a.mode),
        Some(p) => {
            let text = fs::read_to_string(run.input(p)?)?;
            text.split_whitespace()
                .map(|w| Ok((w.to_string(), lwi(w, &c, &part, a.mode)?)))
                .collect::<Result<BTreeMap<_, _>>>()?
        }
    };
    write_lwi(table.values(), run.output(&a.out)?)?;
    if let Some(p) = &a.pairs {
        let pairs = TranslationPairList::read(run.input(p)?)?;
        let summary = match mean_pair_lwi(&table, &pairs) {
            Some((mean, n)) => serde_json::json!({ "mean_pair_lwi": mean, "pairs": n }),
            None => serde_json::json!({ "mean_pair_lwi": null, "pairs": 0 }),
        };
        println!("{summary}");
    }
    Ok(())
}

fn pipeline_config(
    run: &mut Run,
    a: &PipelineArgs,
    threads: usize,
) -> Result<(SeedSet, GoldDictionary, PipelineConfig)> {
    let seeds = SeedSet::read(run.input(&a.seeds)?)?;
    let gold = GoldDictionary::read(run.input(&a.gold)?)?;
    let mut cfg: PipelineConfig = match &a.config {
        Some(p) => read_json(run, p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.hyperparams.rng_seed = s;
        cfg.mining_seed = s;
    }
    cfg.threads = threads;
    run.seed("train", cfg.hyperparams.rng_seed);
    run.seed("mine", cfg.mining_seed);
    Ok((seeds, gold, cfg))
}

fn baseline(c: &Corpus, seeds: &SeedSet, gold: &GoldDictionary, cfg: &PipelineConfig) -> Result<Baseline> {
    let b = Baseline::from(run_pipeline(c, seeds, gold, cfg)?);
    eprintln!("baseline: {} successful pairs", b.successful.len());
    Ok(b)
}

fn emit(run: &mut Run, out: &Path, json: String) -> Result<()> {
    let json = json + "\n";
    print!("{json}");
    write_text(run, out, &json)
}

fn ablate(run: &mut Run, cmd: &AblateCommand, threads: usize) -> Result<()> {
    match cmd {
        AblateCommand::Numbers(a) => {
            let c = read_corpus(run, &a.corpus)?;
            let (seeds, gold, cfg) = pipeline_config(run, &a.pipeline, threads)?;
            let base = baseline(&c, &seeds, &gold, &cfg)?;
            let report = ablate_numbers(&c, &seeds, &base, &cfg, &a.mask)?;
            emit(run, &a.out, report.to_json())
        }
        AblateCommand::Loanwords(a) => {
            let c = read_corpus(run, &a.corpus)?;
            let (seeds, gold, cfg) = pipeline_config(run, &a.pipeline, threads)?;
            let pairs = a
                .pairs
                .as_deref()
                .map(|p| Ok::<_, CliError>(TranslationPairList::read(run.input(p)?)?))
                .transpose()?;
            run.seed("exchange", a.exchange_seed);
            let base = baseline(&c, &seeds, &gold, &cfg)?;
            let (report, warnings) = ablate_loanwords(&c, &seeds, &base, &cfg, pairs.as_ref(), a.exchange_seed)?;
            for w in warnings {
                run.warn(w);
            }
            emit(run, &a.out, report.to_json())
        }
        AblateCommand::Cohesion(a) => {
            let halves = [&a.a1, &a.a2, &a.b1, &a.b2]
                .into_iter()
                .map(|p| read_corpus(run, p))
                .collect::<Result<Vec<_>>>()?;
            let (seeds, gold, cfg) = pipeline_config(run, &a.pipeline, threads)?;
            run.seed("mix", a.mix_seed);
            let report = ablate_cohesion(
                [&halves[0], &halves[1]],
                [&halves[2], &halves[3]],
                &seeds,
                &gold,
                &cfg,
                a.mix_seed,
            )?;
            emit(run, &a.out, report.to_json())
        }
    }
}

fn synth(run: &mut Run, a: &SynthArgs) -> Result<()> {
    let mut spec: SyntheticSpec = match &a.spec {
        Some(p) => read_json(run, p)?,
        None => SyntheticSpec::default(),
    };
    if let Some(s) = a.seed {
        spec = spec.with_seed(s);
    }
    run.seed("lexicon", spec.lexicon_seed);
    run.seed("corpus", spec.rng_seed);
    let s = gen_synthetic(&spec)?;
    fs::create_dir_all(run.output(&a.out)?)?;
    s.write(&a.out)?;
    eprintln!(
        "{} documents, {} tokens, {} planted pairs",
        s.corpus.len(),
        s.corpus.token_count(),
        s.planted.len()
    );
    Ok(())
}
