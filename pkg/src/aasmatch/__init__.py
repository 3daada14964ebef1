"""Retrieve Asset Administration Shells similar to a query AAS.

SPARQL constraints narrow the repository; skip-gram embeddings trained on
RDF graph walks score what is left.
"""

__version__ = "0.1.0"

from .aas import AASDocument, parse_aas_json, validate
from .mapping import MappingRules, map_document, subgraph_of
from .matcher import CandidateSet, Hybrid, Threshold, TopK, cosine, euclidean, graph_vector, normalize_score, rank
from .ntriples import parse_ntriples, serialize_ntriples
from .rdf import IRI, BlankNode, Graph, Literal, Triple
from .skipgram import EmbeddingTable, Hyperparams, build_vocab, gradient_check, load_embeddings, train
from .sparql import eval_ask, eval_select, parse_query, prefilter
from .walks import WalkConfig, WalkCorpus, generate_walks
