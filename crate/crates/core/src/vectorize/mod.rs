//! Model inputs: TFIDF vectors, precomputed sentence embeddings, and the
//! small lexical feature vectors consumed by the ranker.

mod embeddings;
mod features;
mod tfidf;

pub use embeddings::{
    load_embeddings, read_embeddings, write_embeddings, EmbeddingManifest, EmbeddingMatrix, EMB1_MAGIC, EMBEDDING_DIM,
    FIELD_DIM, N_FIELDS,
};
pub use features::{ranker_features, raw_ranker_features, RankerFeatures, StandardizationStats};
pub use tfidf::{tokenize, TfidfModel, DEFAULT_VOCAB_SIZE};
