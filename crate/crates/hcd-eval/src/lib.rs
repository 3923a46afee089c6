//! File formats, run manifests and the `hcd-eval` command line for
//! [`hcd_core`].
//!
//! Readers and writers:
//!
//! * [`corpus_io`]: line-delimited JSON description corpora;
//! * [`emb1`]: the `EMB1` binary embedding format;
//! * [`wordvec`]: word vectors in the `<count> <dim>` text format;
//! * [`lexfile`]: term lists and `token<TAB>valence` sentiment lexicons;
//! * [`conllu`]: CoNLL-U dependency parses, round-tripping byte for byte;
//! * [`refcorpus`]: tagged (`word/TAG`) or plain reference corpora.
//!
//! [`output`] holds the CSV dialect, atomic writes and run manifests.

pub mod cli;
pub mod conllu;
pub mod corpus_io;
pub mod emb1;
pub mod lexfile;
pub mod output;
pub mod refcorpus;
pub mod report;
pub mod wordvec;
