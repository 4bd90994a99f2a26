mod args;
mod commands;
mod errors;
mod providers;
mod reports;

use clap::Parser;
use service_rag::config::{AppConfig, ConfigOverrides};

use args::{Cli, Command, EvalCommand};
use errors::CliError;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => Some(service_rag::config::load_config_file(path)?),
        None => None,
    };
    let mut overrides = ConfigOverrides {
        provider: cli.provider.map(Into::into),
        cache_dir: cli.cache_dir.clone(),
        out_dir: cli.out_dir.clone(),
        embedding_model: cli.embedding_model.clone(),
        chat_model: cli.chat_model.clone(),
        ..ConfigOverrides::default()
    };
    if let Command::Index { chunk_size, overlap, .. } = &cli.command {
        overrides.chunk_size_tokens = *chunk_size;
        overrides.overlap_tokens = *overlap;
    }
    let cfg = AppConfig::resolve(file, &overrides)?;
    match cli.command {
        Command::Ingest { corpus, format } => commands::ingest(&corpus, format),
        Command::Index { corpus, index_path, format, .. } => {
            commands::build_index(&cfg, &corpus, &index_path, format)
        }
        Command::Correct { input, output } => commands::correct(&cfg, &input, output.as_deref()),
        Command::Summarize { input, words, output } => {
            commands::summarize_cmd(&cfg, &input, words, output.as_deref())
        }
        Command::Ask { question, index, k } => {
            let k = resolve_k(k, &cfg)?;
            commands::ask(&cfg, &question, &index, k)
        }
        Command::Eval(EvalCommand::Correction { inputs, errors, seed }) => {
            commands::eval_correction_cmd(&cfg, &inputs, errors, seed)
        }
        Command::Eval(EvalCommand::Summaries { corpus, format, words, reading_wpm }) => {
            commands::eval_summaries_cmd(&cfg, &corpus, format, &words, reading_wpm)
        }
        Command::Eval(EvalCommand::Retrieval { index, queries, k_sweep }) => {
            commands::eval_retrieval_cmd(&cfg, &index, &queries, &k_sweep)
        }
        Command::Eval(EvalCommand::Answers { index, queries, k }) => {
            let k = resolve_k(k, &cfg)?;
            commands::eval_answers_cmd(&cfg, &index, &queries, k)
        }
        Command::Paraphrase { incident_id, corpus, format, n, output } => {
            commands::paraphrase(&cfg, &incident_id, &corpus, format, n.unwrap_or(10), output)
        }
    }
}

fn resolve_k(flag: Option<usize>, cfg: &AppConfig) -> Result<usize, CliError> {
    let k = flag.unwrap_or(cfg.k);
    if k == 0 {
        return Err(CliError::Usage("k must be at least 1".to_string()));
    }
    Ok(k)
}
