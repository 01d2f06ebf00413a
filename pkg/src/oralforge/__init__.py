"""oralforge: oral cavity reconstruction and surgery demonstration toolkit."""

__version__ = "0.1.0"
