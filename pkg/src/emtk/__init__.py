"""emtk — parallel mining of sentiment polarity and emotions from technical text."""

__version__ = "0.1.0"
