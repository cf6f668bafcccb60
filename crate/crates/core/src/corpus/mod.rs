//! Raw article corpora: ingestion, cleaning, deduplication and statistics.

mod article;
mod clean;
mod dedup;
mod ingest;
mod stats;

pub use article::{Article, OriginLabel};
pub use clean::{clean_text, turkish_lowercase, Cleaner, CleaningConfig, DEFAULT_STOPWORDS};
pub use dedup::{body_key, deduplicate, DedupConfig};
pub use ingest::{
    ingest_articles, ingest_reader, write_articles, IngestFormat, IngestReport, Ingested,
    RecordError,
};
pub use stats::{word_count, word_count_stats, CorpusStats, SummaryStats};
