"""Decodability audit: can an ex-ante feature vector tell aborted intents apart?"""
from .audit import (AUDIT_COLUMNS, DEFAULT_ALPHAS, DEFAULT_WEIGHTS, PARADIGMS, SWEEP_COLUMNS, ModelSettings,
                    audit_table, opacity_sweep, prepare, run_audit, train)
from .dataset import FEATURES, LabeledDataset, Standardizer, assemble_dataset, market_features, split_arrays
from .linear import ElasticNetLinear, ElasticNetLogistic, sigmoid
from .metrics import EvalReport, evaluate, evaluate_scores, pr_auc, pr_points, roc_auc, trapezoid
from .smote import SmoteResult, nearest_neighbors, smote, target_minority_count
from .trees import BalancedForest, Binner, Tree, WeightedBoostedTrees, build_tree

__all__ = [
    "AUDIT_COLUMNS", "DEFAULT_ALPHAS", "DEFAULT_WEIGHTS", "PARADIGMS", "SWEEP_COLUMNS", "ModelSettings",
    "audit_table", "opacity_sweep", "prepare", "run_audit", "train", "FEATURES", "LabeledDataset",
    "Standardizer", "assemble_dataset", "market_features", "split_arrays", "ElasticNetLinear",
    "ElasticNetLogistic", "sigmoid", "EvalReport", "evaluate", "evaluate_scores", "pr_auc", "pr_points",
    "roc_auc", "trapezoid", "SmoteResult", "nearest_neighbors", "smote", "target_minority_count",
    "BalancedForest", "Binner", "Tree", "WeightedBoostedTrees", "build_tree",
]
