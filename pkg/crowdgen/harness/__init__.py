from .config import DataScale, ExperimentConfig, ExperimentSpec, config_hash, merge_config
from .ingest import export_windows, ingest_trajectories, read_samples, window_starts
from .render import render_svg, save_svg, world_to_viewport
from .export import export_results, load_reports
from .experiment import (Manifest, build_test_set, evaluate_policy, prepare_training, run_bidirectional,
                         run_experiment, simulate_expert, train_model)
from .repro import repro
