use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use service_rag::config::ProviderChoice;

#[derive(Debug, Parser)]
#[command(
    name = "service-rag",
    version,
    about = "Correction, summarization, and retrieval-augmented answers over a corpus of resolved service incidents",
    propagate_version = true
)]
pub struct Cli {
    /// TOML config file; flags override its values field by field
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Providers to use: remote HTTP endpoints or fully offline mocks [default: remote]
    #[arg(long, global = true, value_enum, value_name = "KIND")]
    pub provider: Option<ProviderArg>,

    /// Embedding cache directory [default: caching disabled]
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Directory for report files [default: reports]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Embedding model name [default: text-embedding-3-small]
    #[arg(long, global = true, value_name = "NAME")]
    pub embedding_model: Option<String>,

    /// Chat model name [default: gpt-3.5-turbo-0125]
    #[arg(long, global = true, value_name = "NAME")]
    pub chat_model: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Remote,
    Mock,
}

impl From<ProviderArg> for ProviderChoice {
    fn from(arg: ProviderArg) -> Self {
        match arg {
            ProviderArg::Remote => ProviderChoice::Remote,
            ProviderArg::Mock => ProviderChoice::Mock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// One JSON incident per line
    Jsonl,
    /// Directory of .txt transcripts
    TextDir,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and print a summary of its incidents
    Ingest {
        /// Corpus path: a JSONL file or a directory of .txt transcripts
        corpus: PathBuf,

        /// Corpus format [default: inferred, directory means text-dir]
        #[arg(long, value_enum, value_name = "FORMAT")]
        format: Option<FormatArg>,
    },

    /// Chunk and embed a corpus, then write a searchable index file
    Index {
        /// Corpus path: a JSONL file or a directory of .txt transcripts
        corpus: PathBuf,

        /// Index file to write
        #[arg(long = "index", value_name = "FILE")]
        index_path: PathBuf,

        /// Corpus format [default: inferred, directory means text-dir]
        #[arg(long, value_enum, value_name = "FORMAT")]
        format: Option<FormatArg>,

        /// Chunk size in tokens [default: 1000]
        #[arg(long, value_name = "N")]
        chunk_size: Option<usize>,

        /// Overlap between consecutive chunks in tokens [default: 20]
        #[arg(long, value_name = "N")]
        overlap: Option<usize>,
    },

    /// Fix spelling and grammar in a text file, preserving wording
    Correct {
        /// Input text file
        input: PathBuf,

        /// Write the corrected text here instead of stdout
        #[arg(long, short = 'o', value_name = "FILE")]
        output: Option<PathBuf>,
    },

    /// Summarize a text file to a target word count
    Summarize {
        /// Input text file
        input: PathBuf,

        /// Target summary length in words
        #[arg(long, value_name = "N")]
        words: usize,

        /// Write the summary here instead of stdout
        #[arg(long, short = 'o', value_name = "FILE")]
        output: Option<PathBuf>,
    },

    /// Answer a question from the indexed incident history
    Ask {
        /// The question to answer
        question: String,

        /// Index file built by the `index` command
        #[arg(long, value_name = "FILE")]
        index: PathBuf,

        /// Number of chunks to retrieve as context [default: 2]
        #[arg(long, value_name = "N")]
        k: Option<usize>,
    },

    /// Run an evaluation and write CSV, Markdown, and JSON reports
    #[command(subcommand)]
    Eval(EvalCommand),

    /// Reformulate an incident's request into synthetic test queries
    Paraphrase {
        /// Incident id to paraphrase
        incident_id: String,

        /// Corpus containing the incident
        #[arg(long, value_name = "PATH")]
        corpus: PathBuf,

        /// Corpus format [default: inferred, directory means text-dir]
        #[arg(long, value_enum, value_name = "FORMAT")]
        format: Option<FormatArg>,

        /// Number of reformulations to request [default: 10]
        #[arg(long, value_name = "N")]
        n: Option<usize>,

        /// Queries file to write [default: <out-dir>/queries_<incident>.jsonl]
        #[arg(long, short = 'o', value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Inject typos into reference texts, correct them, and score the round trip
    Correction {
        /// Reference text files, scored as one incident each
        #[arg(required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,

        /// Typos to inject per text [default: 5]
        #[arg(long, value_name = "N")]
        errors: Option<usize>,

        /// Base RNG seed; input file i is corrupted with seed+i [default: 1]
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
    },

    /// Summarize every corpus incident and score similarity and length
    Summaries {
        /// Corpus path: a JSONL file or a directory of .txt transcripts
        #[arg(long, value_name = "PATH")]
        corpus: PathBuf,

        /// Corpus format [default: inferred, directory means text-dir]
        #[arg(long, value_enum, value_name = "FORMAT")]
        format: Option<FormatArg>,

        /// Target lengths in words, comma separated [default: 100]
        #[arg(long, value_name = "N,N,...", value_delimiter = ',')]
        words: Vec<usize>,

        /// Reading speed for the time-saved estimate [default: 200]
        #[arg(long, value_name = "WPM")]
        reading_wpm: Option<f64>,
    },

    /// Score top-k retrieval against queries with known source incidents
    Retrieval {
        /// Index file built by the `index` command
        #[arg(long, value_name = "FILE")]
        index: PathBuf,

        /// Queries JSONL file: {"query_id", "text", "truth_incident_id"}
        #[arg(long, value_name = "FILE")]
        queries: PathBuf,

        /// k values to sweep, comma separated [default: the configured k]
        #[arg(long, value_name = "K,K,...", value_delimiter = ',')]
        k_sweep: Vec<usize>,
    },

    /// Answer each query and build the answer/incident distance matrix
    Answers {
        /// Index file built by the `index` command
        #[arg(long, value_name = "FILE")]
        index: PathBuf,

        /// Queries JSONL file: {"query_id", "text", "truth_incident_id"}
        #[arg(long, value_name = "FILE")]
        queries: PathBuf,

        /// Chunks retrieved per answer [default: 2]
        #[arg(long, value_name = "N")]
        k: Option<usize>,
    },
}
