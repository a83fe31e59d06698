"""Multi-hop knowledge-graph question answering.

Verbalizes KG triples, retrieves them with token-level late-interaction
(MaxSim) scoring, iteratively distills the retrieved set against the
question's live entity frontier, formats reader inputs, and scores
predictions by exact match.
"""

from .corpus import MaskedExample, mask_text, mask_triple, mix_corpus
from .embedders import (
    Embedder,
    HashedTrigramEmbedder,
    OracleEmbedder,
    PrecomputedEmbedder,
    TokenMatrix,
)
from .entities import (
    EntityScanner,
    extract_bracketed,
    fallback_entity_scan,
    make_entity_set,
    triple_matches,
)
from .errors import KgqaError
from .harness import (
    ContextPipeline,
    EchoReader,
    EvalReport,
    GraphWalkReader,
    QAPair,
    Reader,
    ReaderInput,
    RemoteReader,
    evaluate,
    exact_match,
    format_input,
    generate_qa,
    graph_walk_answer,
    load_qa,
)
from .index import ScoredTriple, TripleIndex, build_index, load_index, maxsim_score, save_index, top_k
from .kg import (
    KnowledgeGraph,
    Triple,
    VerbalizedTriple,
    adjacency_lookup,
    entities_of,
    load_kg,
    parse_triples,
    save_kg,
    verbalize,
)
from .multihop import (
    HopRecord,
    RetrievalTrace,
    boost,
    distill,
    k_schedule,
    retrieve_context,
    update_entities,
)

__version__ = "0.1.0"
