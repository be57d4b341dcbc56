"""Campaign runner and command-line interface."""
from .campaigns import Artifacts, TableRow, emit_figure_data, read_table, run_campaign
from .config import EXPERIMENTS, CampaignConfig, ConfigError, from_dict, load

__all__ = ["Artifacts", "TableRow", "emit_figure_data", "read_table", "run_campaign",
           "EXPERIMENTS", "CampaignConfig", "ConfigError", "from_dict", "load"]
