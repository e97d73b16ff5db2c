"""Toolkit for sound-symbolism experiments: pseudo-word generation,
semantic-dimension A/B evaluation of language models, and phoneme-level
attention-fraction analysis over serialized attention tensors."""

__version__ = "0.1.0"
