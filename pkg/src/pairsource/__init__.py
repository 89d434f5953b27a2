"""Design and simulation toolkit for spectrally pure type-II PPKTP photon-pair sources."""

__version__ = "0.1.0"
