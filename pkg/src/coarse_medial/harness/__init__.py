"""Scenes, configuration, experiment pipeline, reports, figures and the CLI."""

from .config import ExperimentConfig, Lattice, CarlesonSettings, load_config
from .experiment import run_experiment
from .io import parse_points, write_points
from .report import Report
from .scenes import generate_scene
from .svg import render_svg
