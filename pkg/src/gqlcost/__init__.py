"""Cost analysis and learned cost estimation for GraphQL queries."""
from .cost import CostConfig, response_complexity, static_bound
from .dataset import DatasetRecord, GeneratorConfig, generate_synthetic, label_records, load_jsonl
from .errors import GqlCostError
from .evaluation import compare, evaluate, mae, mutual_information, rank_features
from .features import Featurizer, GraphFeatureParams, summary_features
from .pipeline import StackedModel, estimate, train_stacked
from .query import load_typed_query, parse_query, print_query, validate
from .schema import parse_schema
from .simulator import SimConfig, SimCorpus, robustness_sweep, simulate, threshold_sweep

__version__ = "0.1.0"

__all__ = [
    "CostConfig", "DatasetRecord", "Featurizer", "GeneratorConfig", "GqlCostError",
    "GraphFeatureParams", "SimConfig", "SimCorpus", "StackedModel", "compare", "estimate",
    "evaluate", "generate_synthetic", "label_records", "load_jsonl", "load_typed_query", "mae",
    "mutual_information", "parse_query", "parse_schema", "print_query", "rank_features",
    "response_complexity", "robustness_sweep", "simulate", "static_bound", "summary_features",
    "threshold_sweep", "train_stacked", "validate",
]
