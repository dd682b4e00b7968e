"""Design toolkit for heralded single-photon sources in periodically poled crystals."""
__version__ = "0.1.0"
