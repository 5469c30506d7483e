"""Issue-report classification pipeline: data prep, fine-tune orchestration, evaluation."""

__version__ = "0.1.0"
