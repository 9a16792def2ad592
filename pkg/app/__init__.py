"""
IEST Emotion Classifier

Guess the emotion word somebody deleted from a tweet. Character CNN,
BiLSTM, max-pool, a small dense head, and a lot of seeds.
"""

__version__ = "1.0.0"
