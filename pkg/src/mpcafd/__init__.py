"""Multi-mode PCA fault detection for multivariate sensor streams.

One PCA submodel is fitted per operating condition. Conditions come from
categorical prior-knowledge tags (units running, climate, occupancy) and
are refined by seeded k-means. New samples are routed to the closest
condition and scored with Hotelling's T2, SPE and the combined index phi.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
