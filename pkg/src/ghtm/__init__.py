"""Graph-based hybrid topic modeling.

Documents are embedded as TF-IDF weighted word vectors, refined by a graph
convolutional network over a cosine KNN document graph, and factorized with
NMF; topic words come from each topic's representative documents.
"""

from .config import PipelineConfig
from .corpus import Document, TokenizerConfig, Vocabulary, build_vocabulary, load_corpus, tokenize
from .factorize import TopicModel, absolute_transform, baseline_nmf_topics, extract_topic_words, nmf
from .gcn import GcnModel, TrainConfig, train
from .graph import build_knn_graph, normalize_adjacency, partition_graph
from .kernels import BACKEND
from .metrics import coherence_cv, coherence_npmi, evaluate_topics, irbo, rbo, topic_diversity
from .pipeline import RunReport, run_baseline, run_ghtm
from .vectorize import compute_counts, compute_tfidf, load_embeddings, project_documents

__version__ = "0.1.0"
