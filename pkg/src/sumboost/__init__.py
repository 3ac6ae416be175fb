"""Boosted LLM summaries as weak learners for tabular classification."""

from .boosting import EnsembleModel, TrainConfig, accept_weak_learner, boost, predict, train
from .cost import CostEstimate, estimate_cost, estimate_passes
from .dataset import TabularDataset, load_dataset, split
from .discretize import DatasetEncoder, Encoding, encode, fit
from .llm import LLMClient, MockProvider, OracleSpec, ResponseCache
from .sampling import ClusterSampler, cluster_sample, hac_cluster
from .summary import SummaryHypothesis, fit_summary, infer, map_answer, summarize
from .textualize import DataDescription, describe_dataset

__version__ = "0.1.0"

__all__ = [
    "ClusterSampler", "CostEstimate", "DataDescription", "DatasetEncoder", "Encoding", "EnsembleModel",
    "LLMClient", "MockProvider", "OracleSpec", "ResponseCache", "SummaryHypothesis", "TabularDataset",
    "TrainConfig", "accept_weak_learner", "boost", "cluster_sample", "describe_dataset", "encode",
    "estimate_cost", "estimate_passes", "fit", "fit_summary", "hac_cluster", "infer", "load_dataset",
    "map_answer", "predict", "split", "summarize", "train",
]
