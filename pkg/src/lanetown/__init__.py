"""Miniature-town lane following: simulator, vision pipeline, DQN, and tooling."""

__version__ = "0.1.0"
