"""Track-scene synthesis, multiscale adversarial training and track-line evaluation."""

__version__ = "0.1.0"
