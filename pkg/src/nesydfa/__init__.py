"""Differentiable automata (DeepDFA) with an LTLf compiler, symbol grounding and NRM agents."""

__version__ = "0.1.0"
