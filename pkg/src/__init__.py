"""Clark theory on the bidisk: level sets, Clark measures, Clark unitaries and Taylor spectra."""

__version__ = "0.1.0"
