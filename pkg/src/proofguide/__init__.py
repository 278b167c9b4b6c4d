"""Saturation theorem prover with a policy-guided given-clause loop and
reinforcement-learning training for an attention-based selection policy."""

__version__ = "0.1.0"
