"""Model service for the bug localization engine: serves /score and /embed
over HTTP/JSON and ships the training scripts that produce the models."""

__version__ = "0.1.0"
