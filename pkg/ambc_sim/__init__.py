"""ambc-sim: Monte Carlo BER simulation for MIMO ambient backscatter links."""

__version__ = "0.2.0"
