"""Offline figure generation for gridskills run directories.

Consumes only the documented run-directory files (metrics.csv, rewards.csv,
final_skills.csv, env.txt); never imports the trainer.
"""

from .figures import (gaussian_smooth, plot_accuracy_per_step, plot_learning_curves,
                      plot_rewards, plot_skill_map, skill_occupancy)
from .io import RunSeries, SeedFrame, load_final_skills, load_run_series, load_walls

__version__ = "0.1.0"
