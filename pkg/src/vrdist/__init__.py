"""Virtual resource distillation: overheads, rates and quasi-probability sampling."""

__version__ = "0.1.0"
