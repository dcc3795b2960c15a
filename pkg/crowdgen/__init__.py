"""Crowd simulation benchmark for scenario generalization of imitation-learned steering policies."""
__version__ = '0.1.0'

from .errors import CrowdgenError, ValidationError
