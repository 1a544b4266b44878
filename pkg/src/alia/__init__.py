"""Automated language-guided image augmentation.

Captions a training set, summarizes the captions into class-agnostic domain
descriptions with a language model, edits training images with text-conditioned
diffusion backends, filters failed edits, and assembles an augmented dataset
plus a training/evaluation harness.
"""

__version__ = "0.1.0"
