//! Word embeddings from paper abstracts and per-author text features.

mod corpus;
mod embed;
mod skipgram;

pub use corpus::{doc_pairs, generate_pairs, tokenize, Corpus, CorpusOptions, Vocabulary};
pub use embed::{embed_all, embed_author};
pub use skipgram::{pair_loss_and_grad, train_skipgram, EmbeddingTable, PairGradient, SkipGramConfig, SkipGramStats};
