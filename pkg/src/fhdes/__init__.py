"""Dynamic ensemble selection with fuzzy hyperboxes, plus KNN-based baselines."""
from .bench import ExperimentConfig, RunReport, emit_report, run_experiment, scalability_bench
from .data import Dataset, load_csv, make_dataset, normalize, stratified_split
from .engine import DesMode, DesModel, select, weighted_vote
from .hyperbox import Hyperbox, HyperboxSet, MembershipKind, fit_hyperboxes, membership
from .knn import KnnModel
from .linear import LinearClassifier, Pool, train_perceptron, train_pool
from .modelio import load_model, save_model

__version__ = "0.1.0"
