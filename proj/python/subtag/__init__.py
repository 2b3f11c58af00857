"""Two-stage subject tagging: hash embeddings, a random-projection forest for
candidate retrieval, pairwise re-ranking, and recall@k evaluation."""

from ._subtag import (
    Document,
    EmbeddingMatrix,
    Error,
    FormatError,
    InputError,
    InvariantError,
    ProtocolError,
    Searcher,
    Subject,
    TransportError,
    build_forest,
    compare_runs,
    default_cutoffs,
    embed_texts,
    evaluate_run,
    exact_topk,
    generate_training_pairs,
    hash_embed,
    lexical_score,
    load_documents,
    load_forest,
    load_matrix,
    load_run,
    load_subjects,
    make_synthetic_corpus,
    parse_documents,
    parse_subjects,
    recall_at_k,
    render_document_text,
    render_subject_text,
    save_forest,
    save_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
