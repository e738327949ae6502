"""ECG beat classification and interpretability toolkit for MIT-BIH style records."""

__version__ = "0.1.0"
